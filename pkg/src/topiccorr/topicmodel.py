"""LDA by collapsed Gibbs sampling, UMass/NPMI topic coherence, and
coherence-maximizing selection of the topic count."""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .phrases import TokenDoc

logger = logging.getLogger(__name__)

DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
DEFAULT_BURN_IN = 500
DEFAULT_K_TOP = 10
DEFAULT_K_GRID = (5, 10, 15, 20)
SAMPLE_THIN = 10  # counts are averaged over every 10th post-burn-in sweep


def default_alpha(k: int) -> float:
    """Symmetric document-topic smoothing, the 50/K heuristic."""
    return 50.0 / k


@dataclass(frozen=True)
class TopicSummary:
    """Ordered (token, probability) pairs describing one topic."""

    topic_id: int
    keywords: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        probs = [p for _, p in self.keywords]
        if any(not 0.0 < p < 1.0 for p in probs):
            raise ValueError("keyword probabilities must lie in (0, 1)")
        if any(probs[i] < probs[i + 1] for i in range(len(probs) - 1)):
            raise ValueError("keyword probabilities must be descending")
        tokens = [t for t, _ in self.keywords]
        if len(set(tokens)) != len(tokens):
            raise ValueError("keyword tokens must be distinct")

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.keywords)


@dataclass(frozen=True)
class LdaModel:
    """Collapsed-Gibbs LDA state.

    n_kw, n_k and n_dk hold the counts used to estimate phi: the average over
    sampled post-burn-in sweeps (hence float valued), satisfying the same
    conservation laws as any single sweep. phi[k][w] =
    (n_kw[k][w] + beta) / (n_k[k] + V * beta). Count matrices are None on
    models restored from disk, which persist only the fitted distribution.
    """

    k: int
    alpha: float
    beta: float
    vocab: tuple[str, ...]
    phi: np.ndarray
    seed: int
    iterations: int
    burn_in: int = 0
    n_kw: np.ndarray | None = None
    n_k: np.ndarray | None = None
    n_dk: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.phi.shape != (self.k, len(self.vocab)):
            raise ValueError("phi must be K x V")
        row_sums = self.phi.sum(axis=1)
        if not np.allclose(row_sums, 1.0, atol=1e-9):
            raise ValueError("phi rows must sum to 1")
        if self.n_kw is not None:
            if not np.allclose(self.n_kw.sum(axis=1), self.n_k, atol=1e-6):
                raise ValueError("n_k must equal the row sums of n_kw")

    def save(self, path, provenance: dict | None = None) -> None:
        artifact = {
            "k": self.k,
            "alpha": self.alpha,
            "beta": self.beta,
            "vocab": list(self.vocab),
            "phi": [[float(x) for x in row] for row in self.phi],
            "seed": self.seed,
            "iterations": self.iterations,
            "burn_in": self.burn_in,
        }
        if provenance is not None:
            artifact["provenance"] = provenance
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(artifact, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "LdaModel":
        with open(path, encoding="utf-8") as fh:
            artifact = json.load(fh)
        return cls(
            k=artifact["k"],
            alpha=artifact["alpha"],
            beta=artifact["beta"],
            vocab=tuple(artifact["vocab"]),
            phi=np.asarray(artifact["phi"], dtype=np.float64),
            seed=artifact["seed"],
            iterations=artifact["iterations"],
            burn_in=artifact.get("burn_in", 0),
        )


@njit(cache=True, nogil=True)
def _gibbs_sweep(word_ids, doc_ids, z, n_kw, n_k, n_dk, alpha, beta, uniforms, weights):
    """One full sweep in document order, tokens in position order.

    The conditional for token i is (n_dk[d][k] + alpha) * (n_kw[k][w] + beta)
    / (n_k[k] + V * beta) with token i excluded from all counts. Randomness
    comes in as pre-drawn uniforms so the sweep itself is pure arithmetic.
    """
    n_topics = n_kw.shape[0]
    vbeta = n_kw.shape[1] * beta
    for i in range(word_ids.shape[0]):
        w = word_ids[i]
        d = doc_ids[i]
        k_old = z[i]
        n_kw[k_old, w] -= 1
        n_k[k_old] -= 1
        n_dk[d, k_old] -= 1
        total = 0.0
        for k in range(n_topics):
            weight = (n_dk[d, k] + alpha) * (n_kw[k, w] + beta) / (n_k[k] + vbeta)
            weights[k] = weight
            total += weight
        target = uniforms[i] * total
        acc = 0.0
        k_new = n_topics - 1
        for k in range(n_topics):
            acc += weights[k]
            if target < acc:
                k_new = k
                break
        z[i] = k_new
        n_kw[k_new, w] += 1
        n_k[k_new] += 1
        n_dk[d, k_new] += 1


def _prepare(docs: Sequence[TokenDoc], k: int):
    if k < 1:
        raise ValueError("K must be >= 1")
    kept = [d for d in docs if len(d) > 0]
    if len(kept) < len(docs):
        logger.info("dropping %d empty documents before training", len(docs) - len(kept))
    if not kept:
        raise ValueError("no nonempty documents to train on")
    vocab = tuple(sorted({tok for d in kept for tok in d.tokens}))
    index = {tok: i for i, tok in enumerate(vocab)}
    word_ids = np.fromiter(
        (index[tok] for d in kept for tok in d.tokens), dtype=np.int32
    )
    doc_ids = np.fromiter(
        (di for di, d in enumerate(kept) for _ in d.tokens), dtype=np.int32
    )
    return kept, vocab, word_ids, doc_ids


def _init_counts(word_ids, doc_ids, z, k, n_docs, n_vocab):
    n_kw = np.zeros((k, n_vocab), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    np.add.at(n_kw, (z, word_ids), 1)
    np.add.at(n_k, z, 1)
    np.add.at(n_dk, (doc_ids, z), 1)
    return n_kw, n_k, n_dk


def train_lda(
    docs: Sequence[TokenDoc],
    k: int,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    iterations: int = DEFAULT_ITERATIONS,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
) -> LdaModel:
    """Train LDA with collapsed Gibbs sampling; deterministic in the seed.

    phi is estimated from counts averaged over every 10th post-burn-in sweep
    (the final sweep if none qualified). All randomness is drawn from
    numpy PCG64, so runs reproduce bit-for-bit.
    """
    kept, vocab, word_ids, doc_ids = _prepare(docs, k)
    if alpha is None:
        alpha = default_alpha(k)
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    rng = np.random.default_rng(np.random.PCG64(seed))
    z = rng.integers(0, k, size=word_ids.shape[0], dtype=np.int32)
    n_kw, n_k, n_dk = _init_counts(word_ids, doc_ids, z, k, len(kept), len(vocab))
    weights = np.empty(k, dtype=np.float64)

    acc_kw = np.zeros_like(n_kw, dtype=np.float64)
    acc_dk = np.zeros_like(n_dk, dtype=np.float64)
    n_samples = 0
    for sweep in range(1, iterations + 1):
        uniforms = rng.random(word_ids.shape[0])
        _gibbs_sweep(word_ids, doc_ids, z, n_kw, n_k, n_dk, alpha, beta, uniforms, weights)
        if sweep > burn_in and (sweep - burn_in) % SAMPLE_THIN == 0:
            acc_kw += n_kw
            acc_dk += n_dk
            n_samples += 1
    if n_samples == 0:
        acc_kw[:] = n_kw
        acc_dk[:] = n_dk
        n_samples = 1
    avg_kw = acc_kw / n_samples
    avg_dk = acc_dk / n_samples
    avg_k = avg_kw.sum(axis=1)
    phi = (avg_kw + beta) / (avg_k[:, None] + len(vocab) * beta)
    return LdaModel(
        k=k, alpha=alpha, beta=beta, vocab=vocab, phi=phi, seed=seed,
        iterations=iterations, burn_in=burn_in,
        n_kw=avg_kw, n_k=avg_k, n_dk=avg_dk,
    )


def gibbs_assignment_trace(
    docs: Sequence[TokenDoc],
    k: int,
    alpha: float,
    beta: float,
    iterations: int,
    burn_in: int,
    seed: int,
) -> np.ndarray:
    """Record the joint topic assignment after every post-burn-in sweep.

    Returns an (iterations - burn_in, n_tokens) uint8 array; meant for
    diagnostics on small instances, e.g. comparing the empirical assignment
    distribution against an enumerated posterior.
    """
    kept, vocab, word_ids, doc_ids = _prepare(docs, k)
    if k > 255:
        raise ValueError("assignment trace limited to K <= 255")
    rng = np.random.default_rng(np.random.PCG64(seed))
    z = rng.integers(0, k, size=word_ids.shape[0], dtype=np.int32)
    n_kw, n_k, n_dk = _init_counts(word_ids, doc_ids, z, k, len(kept), len(vocab))
    weights = np.empty(k, dtype=np.float64)
    trace = np.empty((max(0, iterations - burn_in), word_ids.shape[0]), dtype=np.uint8)
    for sweep in range(1, iterations + 1):
        uniforms = rng.random(word_ids.shape[0])
        _gibbs_sweep(word_ids, doc_ids, z, n_kw, n_k, n_dk, alpha, beta, uniforms, weights)
        if sweep > burn_in:
            trace[sweep - burn_in - 1] = z
    return trace


def top_keywords(model: LdaModel, topic: int, k_top: int = DEFAULT_K_TOP) -> TopicSummary:
    """The k_top highest-probability tokens of a topic; probability ties break
    lexicographically ascending; returns all V tokens when k_top > V."""
    if not 0 <= topic < model.k:
        raise ValueError(f"topic {topic} out of range for K={model.k}")
    row = model.phi[topic]
    ranked = sorted(zip(model.vocab, row), key=lambda kv: (-kv[1], kv[0]))
    take = min(k_top, len(model.vocab))
    return TopicSummary(
        topic_id=topic,
        keywords=tuple((tok, float(p)) for tok, p in ranked[:take]),
    )


def _document_frequencies(keywords: Sequence[str], docs: Sequence[TokenDoc]):
    kw = set(keywords)
    df: Counter[str] = Counter()
    codf: Counter[tuple[str, str]] = Counter()
    for doc in docs:
        present = kw.intersection(doc.tokens)
        for w in present:
            df[w] += 1
        ordered = sorted(present)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                codf[(a, b)] += 1
    return df, codf


def umass_coherence(summary: TopicSummary, docs: Sequence[TokenDoc]) -> float:
    """Sum over ordered keyword pairs of log((D(w_m, w_l) + 1) / D(w_l)),
    D the document frequency and D(.,.) the co-document frequency; 0 for
    fewer than two keywords."""
    words = summary.tokens
    if len(words) < 2:
        return 0.0
    df, codf = _document_frequencies(words, docs)
    for w in words:
        if df[w] == 0:
            raise ValueError(f"keyword {w!r} never occurs in the reference documents")
    score = 0.0
    for m in range(1, len(words)):
        for l in range(m):
            a, b = min(words[m], words[l]), max(words[m], words[l])
            score += math.log((codf[(a, b)] + 1) / df[words[l]])
    return score


def npmi_coherence(summary: TopicSummary, docs: Sequence[TokenDoc], window: int = 10) -> float:
    """Mean pairwise NPMI over the topic keywords with probabilities taken
    from boolean sliding windows; pairs never co-occurring score -1."""
    words = summary.tokens
    if len(words) < 2:
        return 0.0
    kw = set(words)
    occur: Counter[str] = Counter()
    cooccur: Counter[tuple[str, str]] = Counter()
    total = 0
    for doc in docs:
        n = len(doc.tokens)
        if n == 0:
            continue
        spans = range(max(1, n - window + 1))
        for s in spans:
            total += 1
            present = kw.intersection(doc.tokens[s : s + window])
            for w in present:
                occur[w] += 1
            ordered = sorted(present)
            for i, a in enumerate(ordered):
                for b in ordered[i + 1 :]:
                    cooccur[(a, b)] += 1
    for w in words:
        if occur[w] == 0:
            raise ValueError(f"keyword {w!r} never occurs in the reference documents")
    score = 0.0
    n_pairs = 0
    for m in range(1, len(words)):
        for l in range(m):
            a, b = min(words[m], words[l]), max(words[m], words[l])
            n_pairs += 1
            joint = cooccur[(a, b)]
            if joint == 0:
                score += -1.0
                continue
            if joint == total:
                # co-occurs in every window: -log(p_ab) = 0, limit is +1
                score += 1.0
                continue
            p_a = occur[a] / total
            p_b = occur[b] / total
            p_ab = joint / total
            score += math.log(p_ab / (p_a * p_b)) / -math.log(p_ab)
    return score / n_pairs


def mean_coherence(
    model: LdaModel,
    docs: Sequence[TokenDoc],
    k_top: int = DEFAULT_K_TOP,
    metric: str = "umass",
    window: int = 10,
) -> float:
    """Average coherence over all topics of a model."""
    scores = []
    for topic in range(model.k):
        summary = top_keywords(model, topic, k_top)
        if metric == "umass":
            scores.append(umass_coherence(summary, docs))
        elif metric == "npmi":
            scores.append(npmi_coherence(summary, docs, window=window))
        else:
            raise ValueError(f"unknown coherence metric {metric!r}")
    return float(np.mean(scores))


def select_k(
    docs: Sequence[TokenDoc],
    k_grid: Sequence[int] = DEFAULT_K_GRID,
    alpha_rule: Callable[[int], float] | None = None,
    beta: float = DEFAULT_BETA,
    iterations: int = DEFAULT_ITERATIONS,
    burn_in: int = DEFAULT_BURN_IN,
    seeds: Sequence[int] = (0,),
    k_top: int = DEFAULT_K_TOP,
    metric: str = "umass",
) -> tuple[int, LdaModel]:
    """Pick the topic count maximizing mean coherence across seeds.

    Every K in the grid is trained once per seed; the per-K score is the mean
    over seeds of the per-model mean topic coherence. Ties break toward the
    smaller K. Returns that K and its best-scoring seed's model.
    """
    if not k_grid:
        raise ValueError("k_grid must be nonempty")
    if not seeds:
        raise ValueError("seeds must be nonempty")
    alpha_of = alpha_rule if alpha_rule is not None else default_alpha
    best_k = None
    best_mean = -math.inf
    best_model = None
    for k in sorted(set(k_grid)):
        per_seed: list[tuple[float, LdaModel]] = []
        for seed in seeds:
            model = train_lda(
                docs, k, alpha=alpha_of(k), beta=beta,
                iterations=iterations, burn_in=burn_in, seed=seed,
            )
            per_seed.append((mean_coherence(model, docs, k_top, metric), model))
        k_mean = float(np.mean([s for s, _ in per_seed]))
        logger.info("select_k: K=%d mean %s coherence %.4f over %d seeds", k, metric, k_mean, len(seeds))
        if k_mean > best_mean:
            best_mean = k_mean
            best_k = k
            best_model = max(per_seed, key=lambda sm: sm[0])[1]
    assert best_k is not None and best_model is not None
    return best_k, best_model
