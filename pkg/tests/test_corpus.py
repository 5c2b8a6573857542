import json
from importlib import resources
from pathlib import Path

import pytest

from topiccorr.corpus import (
    ArchiveError,
    Corpus,
    DatasetManifest,
    ManifestError,
    ManifestRow,
    MonthBucket,
    Posting,
    PostingFormatError,
    SyntheticSpec,
    YearMonth,
    bucket_by_month,
    fetch_postings,
    generate_synthetic,
    load_postings,
    month_range,
    monthly_counts,
    validate_manifest,
    write_postings,
)

FIXTURES = Path(__file__).parent / "data"


def make_posting(pid, created, subreddit="sub", text="hello there"):
    return Posting(id=pid, subreddit=subreddit, created_utc=created, body=text)


# --------------------------------------------------------------------------
# months
# --------------------------------------------------------------------------

def test_yearmonth_parse_and_str_round_trip():
    ym = YearMonth.parse("2020-09")
    assert ym == YearMonth(2020, 9)
    assert str(ym) == "2020-09"
    assert str(YearMonth(2020, 1)) == "2020-01"


@pytest.mark.parametrize("text", ["2020-13", "2020-00", "2020", "abcd-ef"])
def test_yearmonth_parse_rejects_bad_input(text):
    with pytest.raises(ValueError):
        YearMonth.parse(text)


def test_yearmonth_next_rolls_over_december():
    assert YearMonth(2020, 12).next() == YearMonth(2021, 1)
    assert YearMonth(2020, 3).next() == YearMonth(2020, 4)


def test_yearmonth_epoch_round_trip():
    ym = YearMonth(2020, 6)
    assert YearMonth.of_epoch(ym.start_epoch()) == ym
    # the second before a month starts still belongs to the previous month
    assert YearMonth.of_epoch(ym.start_epoch() - 1) == YearMonth(2020, 5)


def test_yearmonth_orders_as_tuple():
    assert YearMonth(2019, 12) < YearMonth(2020, 1) < YearMonth(2020, 2)


def test_month_range_is_inclusive():
    months = month_range(YearMonth(2020, 11), YearMonth(2021, 2))
    assert [str(m) for m in months] == ["2020-11", "2020-12", "2021-01", "2021-02"]
    assert month_range(YearMonth(2020, 5), YearMonth(2020, 5)) == [YearMonth(2020, 5)]


def test_month_range_rejects_reversed_bounds():
    with pytest.raises(ValueError, match="after end"):
        month_range(YearMonth(2021, 1), YearMonth(2020, 12))


# --------------------------------------------------------------------------
# postings
# --------------------------------------------------------------------------

def test_posting_requires_id_timestamp_and_text():
    with pytest.raises(ValueError, match="id"):
        Posting(id="", subreddit="s", created_utc=1, body="x")
    with pytest.raises(ValueError, match="created_utc"):
        Posting(id="p", subreddit="s", created_utc=0, body="x")
    with pytest.raises(ValueError, match="empty"):
        Posting(id="p", subreddit="s", created_utc=1)


def test_posting_text_joins_title_and_body():
    p = Posting(id="p", subreddit="s", created_utc=1, title="dry cough", body="and fever")
    assert p.text == "dry cough and fever"
    assert p.month == YearMonth(1970, 1)


def test_corpus_rejects_duplicate_ids():
    a = make_posting("dup", 10)
    with pytest.raises(ValueError, match="duplicate posting id"):
        Corpus.of([a, make_posting("dup", 20)])


def test_postings_jsonl_round_trip(tmp_path):
    corpus = Corpus.of([
        Posting(id="p1", subreddit="s", created_utc=100, title="t1", body="b1"),
        Posting(id="p2", subreddit="s", created_utc=200, body="b2"),
    ])
    path = tmp_path / "postings.jsonl"
    write_postings(corpus, path)
    again = load_postings(path)
    assert again.postings == corpus.postings


def test_load_postings_names_malformed_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "subreddit": "s", "created_utc": 1, "title": "x"}\n{broken\n')
    with pytest.raises(PostingFormatError, match=r"bad\.jsonl:2"):
        load_postings(path)


def test_load_postings_requires_core_fields(tmp_path):
    path = tmp_path / "short.jsonl"
    path.write_text('{"id": "a", "title": "x"}\n')
    with pytest.raises(PostingFormatError, match="subreddit"):
        load_postings(path)


def test_load_postings_rejects_duplicate_id_with_line(tmp_path):
    path = tmp_path / "dup.jsonl"
    record = '{"id": "a", "subreddit": "s", "created_utc": 1, "title": "x"}\n'
    path.write_text(record + record)
    with pytest.raises(PostingFormatError, match=r"dup\.jsonl:2.*duplicate"):
        load_postings(path)


def test_load_postings_rejects_non_object_line(tmp_path):
    path = tmp_path / "arr.jsonl"
    path.write_text("[1, 2]\n")
    with pytest.raises(PostingFormatError, match="JSON object"):
        load_postings(path)


def test_load_postings_skips_blank_lines(tmp_path):
    path = tmp_path / "gaps.jsonl"
    path.write_text('\n{"id": "a", "subreddit": "s", "created_utc": 1, "title": "x"}\n\n')
    assert len(load_postings(path)) == 1


# --------------------------------------------------------------------------
# bucketing
# --------------------------------------------------------------------------

def test_bucket_boundary_last_second_of_month():
    feb = YearMonth(2020, 2).start_epoch()
    corpus = Corpus.of([
        make_posting("last-jan", feb - 1),
        make_posting("first-feb", feb),
    ])
    buckets = bucket_by_month(corpus, YearMonth(2020, 1), YearMonth(2020, 2))
    assert [p.id for p in buckets[0].postings] == ["last-jan"]
    assert [p.id for p in buckets[1].postings] == ["first-feb"]


def test_bucket_by_month_materializes_empty_months():
    corpus = Corpus.of([make_posting("p", YearMonth(2020, 1).start_epoch())])
    buckets = bucket_by_month(corpus, YearMonth(2020, 1), YearMonth(2020, 4))
    assert [b.key for b in buckets] == month_range(YearMonth(2020, 1), YearMonth(2020, 4))
    assert [len(b) for b in buckets] == [1, 0, 0, 0]


def test_bucket_by_month_drops_out_of_range():
    corpus = Corpus.of([
        make_posting("in", YearMonth(2020, 2).start_epoch()),
        make_posting("early", YearMonth(2019, 12).start_epoch()),
        make_posting("late", YearMonth(2020, 5).start_epoch()),
    ])
    buckets = bucket_by_month(corpus, YearMonth(2020, 1), YearMonth(2020, 3))
    assert sum(len(b) for b in buckets) == 1


def test_month_bucket_key():
    assert MonthBucket(2020, 7).key == YearMonth(2020, 7)


def test_monthly_counts():
    jan = YearMonth(2020, 1).start_epoch()
    feb = YearMonth(2020, 2).start_epoch()
    corpus = Corpus.of([make_posting("a", jan), make_posting("b", jan + 60),
                        make_posting("c", feb)])
    assert monthly_counts(corpus) == {YearMonth(2020, 1): 2, YearMonth(2020, 2): 1}


# --------------------------------------------------------------------------
# archive client
# --------------------------------------------------------------------------

def _fetch(endpoint, after=0, before=2**62, **kwargs):
    kwargs.setdefault("page_size", 2)
    kwargs.setdefault("min_interval", 0.0)
    kwargs.setdefault("backoff", 0.01)
    kwargs.setdefault("timeout", 5.0)
    return fetch_postings(endpoint, "testsub", "", after, before, **kwargs)


def _record(pid, created):
    return {"id": pid, "subreddit": "testsub", "created_utc": created, "title": f"post {pid}"}


def test_fetch_walks_pages(archive):
    endpoint, state = archive
    state.postings = [_record(f"p{i}", 1000 + i) for i in range(5)]
    corpus = _fetch(endpoint)
    assert [p.id for p in corpus] == ["p0", "p1", "p2", "p3", "p4"]
    # 2-per-page over 5 postings with a cursor overlap on each boundary
    assert len(state.requests) >= 3


def test_fetch_result_sorted_and_half_open(archive):
    endpoint, state = archive
    state.postings = [_record("a", 1000), _record("b", 2000), _record("c", 3000)]
    corpus = _fetch(endpoint, after=1000, before=3000, page_size=10)
    assert [p.id for p in corpus] == ["a", "b"]  # after inclusive, before exclusive


def test_fetch_empty_window(archive):
    endpoint, state = archive
    state.postings = [_record("a", 1000)]
    assert len(_fetch(endpoint, after=5000, before=6000)) == 0


def test_fetch_retries_after_server_error(archive):
    endpoint, state = archive
    state.postings = [_record("a", 1000)]
    state.scripted.append((500, b""))
    corpus = _fetch(endpoint, max_attempts=2)
    assert [p.id for p in corpus] == ["a"]
    assert len(state.requests) == 2


def test_fetch_gives_up_after_max_attempts(archive):
    endpoint, state = archive
    state.scripted.extend([(500, b"")] * 3)
    with pytest.raises(ArchiveError, match="HTTP 500 after 3 attempts"):
        _fetch(endpoint, max_attempts=3)


def test_fetch_rejects_body_without_data_list(archive):
    endpoint, state = archive
    state.scripted.append((200, b'{"rows": []}'))
    with pytest.raises(ArchiveError, match="no 'data' list"):
        _fetch(endpoint)


def test_fetch_rejects_non_json_body(archive):
    endpoint, state = archive
    state.scripted.append((200, b"<html>oops</html>"))
    with pytest.raises(ArchiveError, match="not JSON"):
        _fetch(endpoint)


def test_fetch_detects_stuck_pagination(archive):
    # a full page sharing one timestamp cannot advance the cursor
    endpoint, state = archive
    state.postings = [_record("a", 1000), _record("b", 1000)]
    with pytest.raises(ArchiveError, match="stuck"):
        _fetch(endpoint, page_size=2)


def test_fetch_validates_page_records(archive):
    endpoint, state = archive
    state.scripted.append((200, b'{"data": [{"id": "a"}]}'))
    with pytest.raises(PostingFormatError, match="subreddit"):
        _fetch(endpoint)


# --------------------------------------------------------------------------
# synthetic generator
# --------------------------------------------------------------------------

def _spec(**overrides):
    base = dict(
        num_topics=2, vocab_size=10, docs_per_month=8,
        months=(YearMonth(2020, 1), YearMonth(2020, 2)), doc_length=12,
    )
    base.update(overrides)
    return SyntheticSpec(**base)


def token_set(corpus):
    return {tok for p in corpus for tok in p.body.split(" ")}


def test_generate_synthetic_deterministic():
    a1, b1 = generate_synthetic(_spec(), seed=5)
    a2, b2 = generate_synthetic(_spec(), seed=5)
    assert a1.postings == a2.postings
    assert b1.postings == b2.postings
    a3, _ = generate_synthetic(_spec(), seed=6)
    assert a1.postings != a3.postings


def test_zero_overlap_streams_are_disjoint():
    a, b = generate_synthetic(_spec(vocab_overlap=0.0), seed=1)
    assert token_set(a).isdisjoint(token_set(b))


def test_full_overlap_streams_share_token_sets():
    a, b = generate_synthetic(_spec(vocab_overlap=1.0), seed=1)
    assert token_set(a) == token_set(b)
    # the coupling is per token, not just per vocabulary
    for pa, pb in zip(a, b):
        assert pa.body == pb.body
        assert pa.created_utc == pb.created_utc


def test_synthetic_counts_ids_and_names():
    a, b = generate_synthetic(_spec(), seed=2)
    assert len(a) == len(b) == 16  # docs_per_month x months
    assert a[0].id.startswith("a-2020-01-") and b[0].id.startswith("b-2020-01-")
    assert {p.subreddit for p in a} == {"stream-a"}
    assert {p.subreddit for p in b} == {"stream-b"}


def test_synthetic_timestamps_stay_inside_month():
    a, _ = generate_synthetic(_spec(), seed=3)
    for p in a:
        assert YearMonth.of_epoch(p.created_utc) == YearMonth.parse(p.id.split("-", 3)[1] + "-" + p.id.split("-", 3)[2])


def test_planted_keyword_lands_in_exact_document_count():
    spec = _spec(months=(YearMonth(2020, 1),), docs_per_month=500,
                 planted_keyword="zzzguard", planted_rate=0.3)
    a, b = generate_synthetic(spec, seed=9)
    hits = sum(1 for p in a if "zzzguard" in p.body.split(" "))
    assert hits == 150  # round(0.3 * 500), one replacement per chosen doc
    assert all("zzzguard" not in p.body for p in b)


def test_per_topic_overlap_and_word_tags():
    spec = _spec(num_topics=3, vocab_overlap=[1.0, 0.0, 0.0],
                 word_tag_a="anx", word_tag_b="ref")
    assert spec.topic_words(0, "a") == spec.topic_words(0, "b")
    assert set(spec.topic_words(1, "a")).isdisjoint(spec.topic_words(1, "b"))
    assert spec.topic_words(1, "a")[0] == "t1anx0"
    assert spec.topic_words(1, "b")[0] == "t1ref0"


def test_fractional_overlap_spreads_shared_slots():
    spec = _spec(vocab_size=4, vocab_overlap=0.5)
    # shared slots sit evenly across the ranking, not packed at the head
    assert spec.topic_words(0, "a") == ("t0a0", "t0shared1", "t0a2", "t0shared3")
    assert spec.topic_words(0, "b") == ("t0b0", "t0shared1", "t0b2", "t0shared3")


def test_synthetic_spec_validation():
    with pytest.raises(ValueError, match="outside"):
        _spec(vocab_overlap=1.5)
    with pytest.raises(ValueError, match="one value per topic"):
        _spec(vocab_overlap=[0.5]).overlaps()
    with pytest.raises(ValueError, match="one weight vector per month"):
        _spec(topic_mixture_schedule=((1.0, 1.0),))
    with pytest.raises(ValueError, match="one weight per topic"):
        _spec(topic_mixture_schedule=((1.0,), (1.0,)))
    with pytest.raises(ValueError, match="num_topics"):
        _spec(num_topics=0)
    with pytest.raises(ValueError, match="months"):
        _spec(months=())


def test_bundled_sample_postings_resource():
    text = resources.files("topiccorr.data").joinpath("sample_postings.jsonl").read_text("utf-8")
    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    assert len(records) == 12
    months = {YearMonth.of_epoch(r["created_utc"]) for r in records}
    assert len(months) == 10
    assert {r["subreddit"] for r in records} == {"healthanxiety", "virusnews"}


# --------------------------------------------------------------------------
# manifest validation
# --------------------------------------------------------------------------

def test_manifest_load_round_trip(tmp_path):
    path = tmp_path / "manifest.csv"
    path.write_text(
        "subreddit,lexicon,period_start,period_end,expected_count\n"
        "suba,lexb,2020-01,2020-03,10\n"
    )
    manifest = DatasetManifest.load(path)
    assert manifest.rows == (
        ManifestRow("suba", "lexb", YearMonth(2020, 1), YearMonth(2020, 3), 10),
    )


def test_manifest_rejects_wrong_header(tmp_path):
    path = tmp_path / "manifest.csv"
    path.write_text("subreddit,count\nx,1\n")
    with pytest.raises(ManifestError, match="header"):
        DatasetManifest.load(path)


def test_manifest_row_validation():
    with pytest.raises(ValueError, match="period_start after"):
        ManifestRow("s", "l", YearMonth(2020, 4), YearMonth(2020, 1), 5)
    with pytest.raises(ValueError, match="nonnegative"):
        ManifestRow("s", "l", YearMonth(2020, 1), YearMonth(2020, 1), -1)


def test_validate_manifest_sums_period_and_reports_delta():
    manifest = DatasetManifest((
        ManifestRow("s", "l", YearMonth(2020, 1), YearMonth(2020, 3), 596),
    ))
    stats = {("s", "l"): {YearMonth(2020, 1): 300, YearMonth(2020, 2): 200,
                          YearMonth(2020, 3): 95}}
    report = validate_manifest(stats, manifest)
    assert not report.passed
    assert report.checks[0].computed == 595
    assert report.checks[0].delta == -1

    stats[("s", "l")][YearMonth(2020, 3)] = 96
    assert validate_manifest(stats, manifest).passed


def test_validate_manifest_treats_missing_months_as_zero():
    manifest = DatasetManifest((
        ManifestRow("s", "l", YearMonth(2020, 1), YearMonth(2020, 2), 7),
    ))
    report = validate_manifest({("s", "l"): {YearMonth(2020, 1): 7}}, manifest)
    assert report.passed


def test_validate_manifest_rejects_unknown_corpus():
    manifest = DatasetManifest((
        ManifestRow("other", "l", YearMonth(2020, 1), YearMonth(2020, 1), 1),
    ))
    with pytest.raises(ManifestError, match="unknown corpus"):
        validate_manifest({("s", "l"): {}}, manifest)


def test_bundled_manifest_fixture_has_every_period_cell():
    manifest = DatasetManifest.load(FIXTURES / "table1_manifest.csv")
    assert len(manifest.rows) == 36
    keys = {(r.subreddit, r.lexicon_label) for r in manifest.rows}
    assert len(keys) == 12
    periods = {(str(r.period_start), str(r.period_end)) for r in manifest.rows}
    assert periods == {("2020-01", "2020-03"), ("2020-04", "2020-06"), ("2020-07", "2020-10")}
