"""End-to-end acceptance checks for the statistical core.

Each test prints one ``[PASS]``/``[FAIL]`` line with the measured quantity
before asserting, so a red run still reports how far off the bound it was.
The suite exercises only the native SGNS provider and the bundled synthetic
configuration; nothing here touches the network.
"""

import math
import random
import time
from collections import Counter
from importlib import resources
from itertools import product
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from topiccorr.corpus import (
    DatasetManifest,
    SyntheticSpec,
    YearMonth,
    generate_synthetic,
    month_range,
    validate_manifest,
)
from topiccorr.correlate import pair_correlation
from topiccorr.embed import topic_vector, train_sgns, tsne_reduce
from topiccorr.phrases import TokenDoc, apply_phrases, mine_phrases, tokenize_corpus
from topiccorr.pipeline import load_config, run_pipeline
from topiccorr.topicmodel import (
    gibbs_assignment_trace,
    select_k,
    top_keywords,
    train_lda,
)

DATA_DIR = Path(__file__).parent / "data"


def _verdict(ok: bool, name: str, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def _planted3_spec() -> SyntheticSpec:
    """Shared 3-topic corpus: 500 docs, disjoint 10-word topic vocabularies."""
    return SyntheticSpec(
        num_topics=3,
        vocab_size=30,
        docs_per_month=500,
        months=(YearMonth(2020, 1),),
        doc_length=50,
        vocab_overlap=0.0,
        topic_mixture_schedule=((0.15, 0.15, 0.15),),
        word_exponent=0.9,
    )


@pytest.fixture(scope="module")
def bundled_runs(tmp_path_factory):
    """Run the packaged synthetic configuration twice into separate out dirs."""
    root = tmp_path_factory.mktemp("bundled")
    cfg_path = root / "synth_config.json"
    cfg_path.write_text(
        resources.files("topiccorr.data").joinpath("synth_config.json").read_text("utf-8"),
        encoding="utf-8",
    )
    return [
        run_pipeline(load_config(cfg_path, out_override=str(root / name)))
        for name in ("run-one", "run-two")
    ]


def test_gibbs_sampler_matches_enumerated_posterior():
    # 2 docs x 2 tokens, V=3, K=2: 16 assignment states enumerate exactly.
    docs = [TokenDoc("d0", ("w0", "w1")), TokenDoc("d1", ("w1", "w2"))]
    alpha, beta, n_topics, n_vocab = 0.5, 0.5, 2, 3
    word = [0, 1, 1, 2]
    doc = [0, 0, 1, 1]

    log_joint = []
    for z in product(range(n_topics), repeat=4):
        n_kw = np.zeros((n_topics, n_vocab))
        n_k = np.zeros(n_topics)
        n_dk = np.zeros((2, n_topics))
        for i in range(4):
            n_kw[z[i], word[i]] += 1
            n_k[z[i]] += 1
            n_dk[doc[i], z[i]] += 1
        lp = 0.0
        for k in range(n_topics):
            lp += math.lgamma(n_vocab * beta) - math.lgamma(n_k[k] + n_vocab * beta)
            for w in range(n_vocab):
                lp += math.lgamma(n_kw[k, w] + beta) - math.lgamma(beta)
        for d in range(2):
            for k in range(n_topics):
                lp += math.lgamma(n_dk[d, k] + alpha) - math.lgamma(alpha)
        log_joint.append(lp)
    log_joint = np.array(log_joint)
    exact = np.exp(log_joint - log_joint.max())
    exact /= exact.sum()

    t0 = time.perf_counter()
    trace = gibbs_assignment_trace(
        docs, k=2, alpha=alpha, beta=beta, iterations=201_000, burn_in=1_000, seed=42
    )
    elapsed = time.perf_counter() - t0
    assert trace.shape == (200_000, 4)
    codes = trace[:, 0] * 8 + trace[:, 1] * 4 + trace[:, 2] * 2 + trace[:, 3]
    empirical = np.bincount(codes, minlength=16) / trace.shape[0]
    tv = 0.5 * np.abs(empirical - exact).sum()

    ok = tv <= 0.02 and elapsed < 30.0
    _verdict(
        ok,
        "gibbs_sampler_matches_enumerated_posterior",
        f"TV={tv:.4f} over 200000 sweeps (limit 0.02), {elapsed:.1f}s (limit 30s)",
    )
    assert tv <= 0.02
    assert elapsed < 30.0


def test_planted_topic_recovery():
    spec = _planted3_spec()
    corpus_a, _ = generate_synthetic(spec, seed=11)
    docs = tokenize_corpus(corpus_a)

    t0 = time.perf_counter()
    model = train_lda(docs, k=3, alpha=0.1, beta=0.01, iterations=300, burn_in=150, seed=100)
    planted = [{f"t{k}a{j}" for j in range(10)} for k in range(3)]
    learned = [set(top_keywords(model, t, 10).tokens) for t in range(3)]
    overlap = np.array([[len(t & p) / 10 for p in planted] for t in learned])
    rows, cols = linear_sum_assignment(-overlap)
    score = overlap[rows, cols].mean()
    elapsed = time.perf_counter() - t0

    ok = score >= 0.8 and elapsed < 60.0
    _verdict(
        ok,
        "planted_topic_recovery",
        f"Hungarian top-10 overlap={score:.3f} (floor 0.8), {elapsed:.1f}s (limit 60s)",
    )
    assert score >= 0.8
    assert elapsed < 60.0


def test_coherence_selects_planted_topic_count():
    spec = _planted3_spec()
    corpus_a, _ = generate_synthetic(spec, seed=11)
    docs = tokenize_corpus(corpus_a)

    wins: Counter[int] = Counter()
    picks = []
    t0 = time.perf_counter()
    for trial in range(10):
        seeds = tuple(100 * trial + j for j in range(5))
        k_best, _ = select_k(
            docs,
            k_grid=(2, 3, 4, 5, 6),
            alpha_rule=lambda k: 0.1,
            iterations=300,
            burn_in=150,
            seeds=seeds,
            k_top=10,
        )
        wins[k_best] += 1
        picks.append(k_best)
    elapsed = time.perf_counter() - t0

    ok = wins[3] >= 8 and elapsed < 600.0
    _verdict(
        ok,
        "coherence_selects_planted_topic_count",
        f"K=3 chosen {wins[3]}/10 (floor 8/10), picks={picks}, {elapsed:.0f}s (limit 600s)",
    )
    assert wins[3] >= 8
    assert elapsed < 600.0


def test_overlap_monotonicity_of_mean_scores():
    def score_for(rho: float) -> float:
        spec = SyntheticSpec(
            num_topics=3,
            vocab_size=25,
            docs_per_month=400,
            months=(YearMonth(2020, 1),),
            doc_length=40,
            vocab_overlap=rho,
            topic_mixture_schedule=((0.2, 0.2, 0.2),),
            word_exponent=0.8,
        )
        corpus_a, corpus_b = generate_synthetic(spec, seed=17)
        docs_a, docs_b = tokenize_corpus(corpus_a), tokenize_corpus(corpus_b)
        table = train_sgns(
            list(docs_a) + list(docs_b),
            dim=48,
            window=5,
            negatives=5,
            epochs=3,
            min_count=2,
            seed=300,
            source_label="synthetic",
        )
        sides = {}
        for name, docs, lda_seed in (("a", docs_a, 7), ("b", docs_b, 8)):
            model = train_lda(
                docs, k=3, alpha=0.5, beta=0.01, iterations=200, burn_in=100, seed=lda_seed
            )
            sides[name] = [
                topic_vector(top_keywords(model, t, 10), table, 10) for t in range(3)
            ]
        return pair_correlation(sides["a"], sides["b"], "mean")

    scores = {rho: score_for(rho) for rho in (0.0, 0.5, 1.0)}
    gap = scores[1.0] - scores[0.0]

    ok = scores[0.0] < scores[0.5] < scores[1.0] and gap >= 0.2
    _verdict(
        ok,
        "overlap_monotonicity_of_mean_scores",
        f"mean scores {scores[0.0]:.4f} < {scores[0.5]:.4f} < {scores[1.0]:.4f}, "
        f"gap={gap:.4f} (floor 0.2)",
    )
    assert scores[0.0] < scores[0.5] < scores[1.0]
    assert gap >= 0.2


def test_bundled_pair_peaks_in_month_nine(bundled_runs):
    series = bundled_runs[0].series
    peaks = {(s.pair, s.points[0].method): s.argmax_month() for s in series}
    methods = {method for _, method in peaks}

    ok = (
        len(peaks) == 6
        and methods == {"mean", "max-match"}
        and all(month == YearMonth(2020, 9) for month in peaks.values())
    )
    _verdict(
        ok,
        "bundled_pair_peaks_in_month_nine",
        f"argmax months {sorted(str(m) for m in set(peaks.values()))} "
        f"across {len(peaks)} series (3 pairs x 2 methods)",
    )
    assert len(peaks) == 6
    assert methods == {"mean", "max-match"}
    for key, month in peaks.items():
        assert month == YearMonth(2020, 9), key


def test_tsne_sanity():
    rng = np.random.default_rng(0)
    points = rng.normal(size=(20, 60))
    result = tsne_reduce(points, out_dim=2, perplexity=5.0, iterations=1000, seed=1)
    assert not result.passthrough

    kl_100 = result.kl_trace[99]
    kl_1000 = result.kl_trace[999]
    entropy_err = max(abs(h - math.log2(5.0)) for h in result.point_entropies)
    out = np.array([result.vectors[i] for i in range(20)])
    center = np.abs(out.mean(axis=0)).max()

    ok = kl_1000 <= kl_100 and entropy_err <= 1e-4 and center < 1e-6
    _verdict(
        ok,
        "tsne_sanity",
        f"KL@1000={kl_1000:.4f} <= KL@100={kl_100:.4f}, "
        f"entropy err={entropy_err:.2e} (limit 1e-4), center={center:.1e} (limit 1e-6)",
    )
    assert kl_1000 <= kl_100
    assert entropy_err <= 1e-4
    assert center < 1e-6


def test_repeat_runs_byte_identical(bundled_runs):
    out_one = Path(bundled_runs[0].out_dir)
    out_two = Path(bundled_runs[1].out_dir)
    csvs_one = sorted(p.relative_to(out_one) for p in out_one.rglob("*.csv"))
    csvs_two = sorted(p.relative_to(out_two) for p in out_two.rglob("*.csv"))
    assert csvs_one == csvs_two
    assert csvs_one, "expected CSV artifacts"

    mismatched = [
        str(rel)
        for rel in csvs_one
        if (out_one / rel).read_bytes() != (out_two / rel).read_bytes()
    ]

    ok = not mismatched
    _verdict(
        ok,
        "repeat_runs_byte_identical",
        f"{len(csvs_one)} CSV files compared, mismatches={mismatched or 'none'}",
    )
    assert not mismatched


def _spread_counts(manifest: DatasetManifest) -> dict:
    """Distribute each period total evenly over its months, remainder first."""
    stats: dict = {}
    for row in manifest.rows:
        months = list(month_range(row.period_start, row.period_end))
        base, rem = divmod(row.expected_count, len(months))
        bucket = stats.setdefault((row.subreddit, row.lexicon_label), {})
        for j, month in enumerate(months):
            bucket[month] = base + (rem if j == 0 else 0)
    return stats


def test_manifest_period_counts_validate_and_report_deltas():
    manifest = DatasetManifest.load(DATA_DIR / "table1_manifest.csv")
    assert len(manifest.rows) == 36
    cells = {
        (r.subreddit, r.lexicon_label, str(r.period_start), str(r.period_end)): r.expected_count
        for r in manifest.rows
    }
    assert cells[("depression", "coronavirus-glossary", "2020-07", "2020-10")] == 17250
    assert cells[("suicide", "coronavirus-glossary", "2020-01", "2020-03")] == 944

    stats = _spread_counts(manifest)
    clean = validate_manifest(stats, manifest)

    stats[("depression", "coronavirus-glossary")][YearMonth(2020, 8)] -= 1
    stats[("suicide", "coronavirus-glossary")][YearMonth(2020, 2)] += 2
    perturbed = validate_manifest(stats, manifest)
    failures = {
        (c.row.subreddit, c.row.lexicon_label, str(c.row.period_start)): c.delta
        for c in perturbed.checks
        if not c.passed
    }
    expected_failures = {
        ("depression", "coronavirus-glossary", "2020-07"): -1,
        ("suicide", "coronavirus-glossary", "2020-01"): 2,
    }

    ok = clean.passed and not perturbed.passed and failures == expected_failures
    _verdict(
        ok,
        "manifest_period_counts_validate_and_report_deltas",
        f"clean fixture passes all {len(clean.checks)} rows; "
        f"perturbed deltas {failures}",
    )
    assert clean.passed
    assert not perturbed.passed
    assert failures == expected_failures


def _brute_force_scores(docs, delta, threshold, pass_number):
    """Independent rescoring with plain dicts, mirroring the published formula."""
    uni: dict = {}
    pair_counts: dict = {}
    for doc in docs:
        for tok in doc.tokens:
            uni[tok] = uni.get(tok, 0) + 1
        for a, b in zip(doc.tokens, doc.tokens[1:]):
            pair_counts[(a, b)] = pair_counts.get((a, b), 0) + 1
    n_vocab = len(uni)
    out = {}
    for (a, b), count in pair_counts.items():
        if (a.count("_") + 1) + (b.count("_") + 1) > pass_number + 1:
            continue
        score = (count - delta) * n_vocab / (uni[a] * uni[b])
        if score >= threshold:
            out[(a, b)] = score
    return out


def test_phrase_scores_match_brute_force():
    # 50 docs x 20 tokens = 1000 tokens; every doc opens with a planted trigram
    # so the second pass has a real bigram-plus-word merge to score.
    rng = random.Random(73)
    alphabet = [f"tok{i:02d}" for i in range(12)]
    docs = [
        TokenDoc(
            f"doc{i:03d}",
            ("social", "distancing", "order", *rng.choices(alphabet, k=17)),
        )
        for i in range(50)
    ]
    assert sum(len(d.tokens) for d in docs) == 1000
    delta, threshold = 2.0, 0.05

    table_one = mine_phrases(docs, delta=delta, threshold=threshold, pass_number=1)
    brute_one = _brute_force_scores(docs, delta, threshold, pass_number=1)

    merged = [apply_phrases(d, table_one) for d in docs]
    table_two = mine_phrases(merged, delta=delta, threshold=threshold, pass_number=2)
    brute_two = _brute_force_scores(merged, delta, threshold, pass_number=2)

    ok = (
        table_one.entries == brute_one
        and table_two.entries == brute_two
        and len(table_one) > 0
        and len(table_two) > 0
    )
    _verdict(
        ok,
        "phrase_scores_match_brute_force",
        f"pass 1: {len(table_one)} pairs exact, pass 2: {len(table_two)} pairs exact "
        f"on a 1000-token corpus",
    )
    assert len(table_one) > 0
    assert len(table_two) > 0
    assert table_one.entries == brute_one
    assert table_two.entries == brute_two
