"""Time-stamped posting corpora: loading, archive fetching, month bucketing,
manifest validation, and the coupled synthetic generator used by the test
oracles."""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np
import requests

logger = logging.getLogger(__name__)


class CorpusError(Exception):
    """Base class for corpus loading/fetching failures."""


class PostingFormatError(CorpusError):
    """A posting record violated the line-delimited JSON contract."""


class ArchiveError(CorpusError):
    """The archive endpoint failed or returned an unusable body."""


class ManifestError(CorpusError):
    """A manifest row references stats that were never computed."""


class YearMonth(NamedTuple):
    """A UTC calendar month, ordered and iterable as 'YYYY-MM'."""

    year: int
    month: int

    @classmethod
    def parse(cls, text: str) -> "YearMonth":
        year_s, _, month_s = text.partition("-")
        ym = cls(int(year_s), int(month_s))
        if not 1 <= ym.month <= 12:
            raise ValueError(f"month out of range in {text!r}")
        return ym

    @classmethod
    def of_epoch(cls, epoch_seconds: int) -> "YearMonth":
        dt = datetime.fromtimestamp(epoch_seconds, tz=timezone.utc)
        return cls(dt.year, dt.month)

    def next(self) -> "YearMonth":
        if self.month == 12:
            return YearMonth(self.year + 1, 1)
        return YearMonth(self.year, self.month + 1)

    def start_epoch(self) -> int:
        return int(datetime(self.year, self.month, 1, tzinfo=timezone.utc).timestamp())

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(start: YearMonth, end: YearMonth) -> list[YearMonth]:
    """All months from start to end inclusive."""
    if start > end:
        raise ValueError(f"month range start {start} after end {end}")
    months = [start]
    while months[-1] < end:
        months.append(months[-1].next())
    return months


@dataclass(frozen=True)
class Posting:
    """One forum posting; the unit of all downstream analysis."""

    id: str
    subreddit: str
    created_utc: int
    title: str = ""
    body: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("posting id must be nonempty")
        if self.created_utc <= 0:
            raise ValueError(f"posting {self.id}: created_utc must be positive")
        if not self.title and not self.body:
            raise ValueError(f"posting {self.id}: title and body both empty")

    @property
    def text(self) -> str:
        return self.title + " " + self.body

    @property
    def month(self) -> YearMonth:
        return YearMonth.of_epoch(self.created_utc)


@dataclass(frozen=True)
class Corpus:
    """Immutable collection of postings with unique ids."""

    postings: tuple[Posting, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for p in self.postings:
            if p.id in seen:
                raise ValueError(f"duplicate posting id {p.id!r}")
            seen.add(p.id)

    @classmethod
    def of(cls, postings: Iterable[Posting]) -> "Corpus":
        return cls(tuple(postings))

    def __len__(self) -> int:
        return len(self.postings)

    def __iter__(self) -> Iterator[Posting]:
        return iter(self.postings)

    def __getitem__(self, i: int) -> Posting:
        return self.postings[i]


@dataclass(frozen=True)
class MonthBucket:
    """Postings of one UTC calendar month, in input order."""

    year: int
    month: int
    postings: tuple[Posting, ...] = ()

    @property
    def key(self) -> YearMonth:
        return YearMonth(self.year, self.month)

    def __len__(self) -> int:
        return len(self.postings)


# --------------------------------------------------------------------------
# line-delimited JSON io
# --------------------------------------------------------------------------

_REQUIRED_FIELDS = ("id", "subreddit", "created_utc")


def _posting_from_record(record: dict, where: str) -> Posting:
    for name in _REQUIRED_FIELDS:
        if name not in record:
            raise PostingFormatError(f"{where}: missing required field {name!r}")
    title = record.get("title") or ""
    body = record.get("selftext") or ""
    try:
        return Posting(
            id=str(record["id"]),
            subreddit=str(record["subreddit"]),
            created_utc=int(record["created_utc"]),
            title=str(title),
            body=str(body),
        )
    except (TypeError, ValueError) as exc:
        raise PostingFormatError(f"{where}: {exc}") from exc


def load_postings(path) -> Corpus:
    """Read one posting per line from a JSONL file.

    Input fields are {"id", "subreddit", "created_utc", "title", "selftext"};
    "selftext" maps to the body. Malformed lines, missing fields and duplicate
    ids are errors that name the offending line.
    """
    postings: list[Posting] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PostingFormatError(f"{where}: malformed JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise PostingFormatError(f"{where}: expected a JSON object")
            posting = _posting_from_record(record, where)
            if posting.id in seen:
                raise PostingFormatError(f"{where}: duplicate posting id {posting.id!r}")
            seen.add(posting.id)
            postings.append(posting)
    return Corpus.of(postings)


def write_postings(corpus: Corpus, path) -> None:
    """Inverse of load_postings; round-trips valid corpora exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus:
            record = {
                "id": p.id,
                "subreddit": p.subreddit,
                "created_utc": p.created_utc,
                "title": p.title,
                "selftext": p.body,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# archive client
# --------------------------------------------------------------------------

_flight_registry_lock = threading.Lock()
_flight_locks: dict[tuple[str, str], threading.Lock] = {}


def _flight_lock(endpoint: str, subreddit: str) -> threading.Lock:
    with _flight_registry_lock:
        return _flight_locks.setdefault((endpoint, subreddit), threading.Lock())


def fetch_postings(
    endpoint: str,
    subreddit: str,
    query: str,
    after: int,
    before: int,
    page_size: int = 100,
    *,
    min_interval: float = 1.0,
    max_attempts: int = 3,
    backoff: float = 1.0,
    timeout: float = 30.0,
) -> Corpus:
    """Pull all postings with created_utc in [after, before) from a paginated
    JSON archive endpoint.

    The endpoint takes GET parameters subreddit, q, after, before, size and
    answers {"data": [posting, ...]} sorted ascending by created_utc. Pages
    are walked by advancing the after cursor to the last seen timestamp, with
    client-side id dedup to survive timestamp ties. Each HTTP request is
    retried up to max_attempts times with exponential backoff; min_interval
    seconds separate consecutive requests. Calls are single-flight per
    (endpoint, subreddit).
    """
    collected: dict[str, Posting] = {}
    cursor = after
    last_request = 0.0
    with _flight_lock(endpoint, subreddit):
        while True:
            wait = min_interval - (time.monotonic() - last_request)
            if wait > 0:
                time.sleep(wait)
            params = {
                "subreddit": subreddit,
                "q": query,
                "after": cursor,
                "before": before,
                "size": page_size,
            }
            body = _request_page(endpoint, params, max_attempts, backoff, timeout)
            last_request = time.monotonic()
            if "data" not in body or not isinstance(body["data"], list):
                raise ArchiveError(f"{endpoint}: response body has no 'data' list")
            fresh = 0
            page_max = cursor
            for i, record in enumerate(body["data"]):
                if not isinstance(record, dict):
                    raise ArchiveError(f"{endpoint}: malformed posting record at index {i}")
                posting = _posting_from_record(record, f"{endpoint} page record {i}")
                page_max = max(page_max, posting.created_utc)
                if posting.id not in collected:
                    collected[posting.id] = posting
                    fresh += 1
            if len(body["data"]) < page_size:
                break
            if fresh == 0:
                raise ArchiveError(
                    f"{endpoint}: pagination stuck at created_utc={cursor} "
                    f"(more than {page_size} postings share one timestamp?)"
                )
            cursor = page_max
    in_range = [p for p in collected.values() if after <= p.created_utc < before]
    in_range.sort(key=lambda p: p.created_utc)
    logger.info(
        "fetched %d postings from %s r/%s in [%d, %d)",
        len(in_range), endpoint, subreddit, after, before,
    )
    return Corpus.of(in_range)


def _request_page(endpoint, params, max_attempts, backoff, timeout) -> dict:
    delay = backoff
    for attempt in range(1, max_attempts + 1):
        try:
            resp = requests.get(endpoint, params=params, timeout=timeout)
            if resp.status_code == 200:
                try:
                    return resp.json()
                except ValueError as exc:
                    raise ArchiveError(f"{endpoint}: response body is not JSON") from exc
            failure = f"HTTP {resp.status_code}"
        except requests.RequestException as exc:
            failure = str(exc)
        if attempt == max_attempts:
            raise ArchiveError(f"{endpoint}: {failure} after {max_attempts} attempts")
        logger.warning("archive request failed (%s), retrying in %.1fs", failure, delay)
        time.sleep(delay)
        delay *= 2


# --------------------------------------------------------------------------
# month bucketing
# --------------------------------------------------------------------------

def bucket_by_month(corpus: Corpus, start: YearMonth, end: YearMonth) -> list[MonthBucket]:
    """Partition a corpus into one bucket per month of [start, end] inclusive.

    Empty months are materialized so series have uniform length; postings
    outside the range are dropped (count logged).
    """
    months = month_range(start, end)
    by_month: dict[YearMonth, list[Posting]] = {m: [] for m in months}
    dropped = 0
    for p in corpus:
        ym = p.month
        if ym in by_month:
            by_month[ym].append(p)
        else:
            dropped += 1
    if dropped:
        logger.info("bucket_by_month: dropped %d postings outside %s..%s", dropped, start, end)
    return [MonthBucket(m.year, m.month, tuple(by_month[m])) for m in months]


def monthly_counts(corpus: Corpus) -> dict[YearMonth, int]:
    counts: dict[YearMonth, int] = {}
    for p in corpus:
        counts[p.month] = counts.get(p.month, 0) + 1
    return counts


# --------------------------------------------------------------------------
# dataset manifest
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestRow:
    subreddit: str
    lexicon_label: str
    period_start: YearMonth
    period_end: YearMonth
    expected_count: int

    def __post_init__(self) -> None:
        if self.period_start > self.period_end:
            raise ValueError(f"manifest row {self.subreddit}/{self.lexicon_label}: period_start after period_end")
        if self.expected_count < 0:
            raise ValueError("expected_count must be nonnegative")


@dataclass(frozen=True)
class DatasetManifest:
    rows: tuple[ManifestRow, ...]

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        """Read the CSV format: subreddit,lexicon,period_start,period_end,expected_count."""
        import csv

        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            expected_header = ["subreddit", "lexicon", "period_start", "period_end", "expected_count"]
            if reader.fieldnames != expected_header:
                raise ManifestError(f"{path}: header must be {','.join(expected_header)}")
            for record in reader:
                rows.append(
                    ManifestRow(
                        subreddit=record["subreddit"],
                        lexicon_label=record["lexicon"],
                        period_start=YearMonth.parse(record["period_start"]),
                        period_end=YearMonth.parse(record["period_end"]),
                        expected_count=int(record["expected_count"]),
                    )
                )
        return cls(tuple(rows))


@dataclass(frozen=True)
class RowCheck:
    row: ManifestRow
    computed: int
    delta: int
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[RowCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


# computed counts keyed by (subreddit, lexicon_label), then by month
CorpusStats = Mapping[tuple[str, str], Mapping[YearMonth, int]]


def validate_manifest(corpus_stats: CorpusStats, manifest: DatasetManifest) -> ValidationReport:
    """Check computed per-month counts against expected period totals.

    Each row's computed value is the sum of monthly counts over its inclusive
    period, so the manifest may use any period granularity. A row whose
    (subreddit, lexicon) key has no computed stats is an error.
    """
    checks = []
    for row in manifest.rows:
        key = (row.subreddit, row.lexicon_label)
        if key not in corpus_stats:
            raise ManifestError(f"manifest row references unknown corpus {row.subreddit!r}/{row.lexicon_label!r}")
        months = corpus_stats[key]
        computed = sum(
            months.get(m, 0) for m in month_range(row.period_start, row.period_end)
        )
        delta = computed - row.expected_count
        checks.append(RowCheck(row=row, computed=computed, delta=delta, passed=delta == 0))
    report = ValidationReport(tuple(checks))
    logger.info(
        "manifest validation: %d/%d rows pass", sum(c.passed for c in report.checks), len(report.checks)
    )
    return report


# --------------------------------------------------------------------------
# synthetic corpora
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a coupled pair of streams with controllable topic-vocabulary
    overlap.

    Both streams realize the same latent token sequence: token j of topic t in
    stream A corresponds to token j of topic t in stream B, and round(overlap
    * vocab_size) latent indices per topic, spread evenly across the frequency
    ranking, share one surface word. overlap=0 therefore forces disjoint token
    sets and overlap=1 identical ones. vocab_overlap may be a scalar (every
    topic) or one value per topic.
    The mixture schedule gives the per-month Dirichlet weights over topics
    shared by both streams. planted_keyword, when set, replaces one token in
    exactly round(planted_rate * total_docs) stream-A documents.
    """

    num_topics: int
    vocab_size: int
    docs_per_month: int
    months: tuple[YearMonth, ...]
    doc_length: int
    vocab_overlap: float | Sequence[float] = 0.0
    topic_mixture_schedule: tuple[tuple[float, ...], ...] | None = None
    planted_keyword: str | None = None
    planted_rate: float = 0.0
    word_exponent: float = 0.7
    stream_a: str = "stream-a"
    stream_b: str = "stream-b"
    # surface-word tags let several generated streams share the "shared"
    # portion of a topic vocabulary while keeping their private portions
    # disjoint across generator invocations
    word_tag_a: str = "a"
    word_tag_b: str = "b"

    def __post_init__(self) -> None:
        if self.num_topics < 1:
            raise ValueError("num_topics must be >= 1")
        if self.vocab_size < 1 or self.doc_length < 1 or self.docs_per_month < 1:
            raise ValueError("vocab_size, doc_length, docs_per_month must be >= 1")
        if not self.months:
            raise ValueError("months must be nonempty")
        for rho in self.overlaps():
            if not 0.0 <= rho <= 1.0:
                raise ValueError(f"vocab_overlap {rho} outside [0, 1]")
        if self.topic_mixture_schedule is not None:
            if len(self.topic_mixture_schedule) != len(self.months):
                raise ValueError("topic_mixture_schedule must have one weight vector per month")
            for weights in self.topic_mixture_schedule:
                if len(weights) != self.num_topics:
                    raise ValueError("each schedule entry needs one weight per topic")
        if not 0.0 <= self.planted_rate <= 1.0:
            raise ValueError("planted_rate outside [0, 1]")

    def overlaps(self) -> tuple[float, ...]:
        if isinstance(self.vocab_overlap, (int, float)):
            return (float(self.vocab_overlap),) * self.num_topics
        rhos = tuple(float(r) for r in self.vocab_overlap)
        if len(rhos) != self.num_topics:
            raise ValueError("per-topic vocab_overlap needs one value per topic")
        return rhos

    def topic_words(self, topic: int, stream: str) -> tuple[str, ...]:
        """Surface words for one topic in stream 'a' or 'b', by latent index."""
        rho = self.overlaps()[topic]
        tag = self.word_tag_a if stream == "a" else self.word_tag_b
        n_shared = round(rho * self.vocab_size)
        # shared slots sit evenly across the frequency ranking, not just at
        # the head, so fractional overlap shares a fraction of the keywords
        words = []
        seen = 0
        for j in range(self.vocab_size):
            quota = (j + 1) * n_shared // self.vocab_size
            if quota > seen:
                words.append(f"t{topic}shared{j}")
                seen = quota
            else:
                words.append(f"t{topic}{tag}{j}")
        return tuple(words)


def generate_synthetic(spec: SyntheticSpec, seed: int) -> tuple[Corpus, Corpus]:
    """Generate the coupled stream pair; deterministic in (spec, seed)."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    K, V, L = spec.num_topics, spec.vocab_size, spec.doc_length

    lex_a = [spec.topic_words(t, "a") for t in range(K)]
    lex_b = [spec.topic_words(t, "b") for t in range(K)]

    # mildly Zipfian within-topic word distribution; exponent 0 gives uniform
    weights = (np.arange(1, V + 1, dtype=np.float64)) ** (-spec.word_exponent)
    word_cdf = np.cumsum(weights / weights.sum())
    word_cdf[-1] = 1.0

    docs_a: list[Posting] = []
    docs_b: list[Posting] = []
    month_span = 28 * 24 * 3600  # keep timestamps inside even the shortest month
    for mi, ym in enumerate(spec.months):
        if spec.topic_mixture_schedule is not None:
            alpha = np.asarray(spec.topic_mixture_schedule[mi], dtype=np.float64)
        else:
            alpha = np.ones(K)
        base_epoch = ym.start_epoch()
        step = max(1, month_span // spec.docs_per_month)
        for d in range(spec.docs_per_month):
            theta = rng.dirichlet(alpha)
            topics = rng.choice(K, size=L, p=theta)
            u = rng.random(L)
            word_idx = np.searchsorted(word_cdf, u, side="right")
            np.clip(word_idx, 0, V - 1, out=word_idx)
            created = base_epoch + d * step
            tokens_a = [lex_a[topics[i]][word_idx[i]] for i in range(L)]
            tokens_b = [lex_b[topics[i]][word_idx[i]] for i in range(L)]
            docs_a.append(
                Posting(id=f"a-{ym}-{d:05d}", subreddit=spec.stream_a,
                        created_utc=created, body=" ".join(tokens_a))
            )
            docs_b.append(
                Posting(id=f"b-{ym}-{d:05d}", subreddit=spec.stream_b,
                        created_utc=created, body=" ".join(tokens_b))
            )

    if spec.planted_keyword is not None and spec.planted_rate > 0:
        n_inject = round(spec.planted_rate * len(docs_a))
        chosen = rng.choice(len(docs_a), size=n_inject, replace=False)
        for di in sorted(int(i) for i in chosen):
            p = docs_a[di]
            tokens = p.body.split(" ")
            tokens[int(rng.integers(len(tokens)))] = spec.planted_keyword
            docs_a[di] = Posting(
                id=p.id, subreddit=p.subreddit, created_utc=p.created_utc,
                title=p.title, body=" ".join(tokens),
            )

    return Corpus.of(docs_a), Corpus.of(docs_b)
