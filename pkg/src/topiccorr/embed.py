"""Keyword embeddings and topic-vector geometry.

Three providers feed the same EmbeddingTable abstraction: a native skip-gram
trainer, tables loaded from TSV files, and (indirectly) any external tool
that writes the TSV format. Topic vectors are keyword-vector concatenations,
reduced to a configurable dimension with exact t-SNE.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from .phrases import TokenDoc
from .topicmodel import TopicSummary

logger = logging.getLogger(__name__)

DEFAULT_DIM = 300
DEFAULT_WINDOW = 5
DEFAULT_NEGATIVES = 5
DEFAULT_EPOCHS = 5
DEFAULT_MIN_COUNT = 2
DEFAULT_LEARNING_RATE = 0.025
DEFAULT_OUT_DIM = 300
DEFAULT_TSNE_ITERATIONS = 1000
DEFAULT_TSNE_LEARNING_RATE = 100.0
TSNE_MIN_POINTS = 5
_MOMENTUM_EARLY = 0.5
_MOMENTUM_LATE = 0.8
_MOMENTUM_SWITCH = 250
_EPS = 1e-12


class TableFormatError(Exception):
    """An embedding table file violates the TSV format."""


@dataclass(frozen=True)
class EmbeddingTable:
    """Immutable token -> vector map with a uniform dimension."""

    dim: int
    vectors: Mapping[str, np.ndarray]
    source_label: str

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be positive")
        for token, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise ValueError(f"vector for {token!r} has length {vec.shape}, expected {self.dim}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"vector for {token!r} has non-finite components")

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[token]

    def __len__(self) -> int:
        return len(self.vectors)

    def tokens(self) -> list[str]:
        return sorted(self.vectors)


@dataclass(frozen=True)
class TopicVector:
    """Concatenated keyword embeddings for one topic.

    raw always has length k_top * dim; reduced is filled in after t-SNE.
    missing_keywords counts blocks that are zero because the keyword was
    out of vocabulary or the summary ran short of k_top.
    """

    topic_id: int
    raw: np.ndarray
    missing_keywords: int
    reduced: np.ndarray | None = None

    def active(self) -> np.ndarray:
        """The vector correlation should use: reduced when present, else raw."""
        return self.raw if self.reduced is None else self.reduced

    def with_reduced(self, reduced: np.ndarray) -> "TopicVector":
        return TopicVector(
            topic_id=self.topic_id, raw=self.raw,
            missing_keywords=self.missing_keywords, reduced=reduced,
        )


@njit(cache=True, nogil=True)
def _sgns_pass(centers, contexts, negatives, w_in, w_out, n_neg,
               lr0, lr_min, step0, total_steps):
    """Process (center, context) pairs in order with pre-drawn negatives.

    One gradient-ascent step per pair on
    log sigmoid(u_c . v_o) + sum_j log sigmoid(-u_c . v_nj);
    learning rate decays linearly over the whole schedule, floored at lr_min.
    """
    dim = w_in.shape[1]
    grad_c = np.empty(dim)
    for p in range(centers.shape[0]):
        lr = lr0 * (1.0 - (step0 + p) / total_steps)
        if lr < lr_min:
            lr = lr_min
        c = centers[p]
        for j in range(dim):
            grad_c[j] = 0.0
        for s in range(n_neg + 1):
            if s == 0:
                target = contexts[p]
                label = 1.0
            else:
                target = negatives[p * n_neg + (s - 1)]
                if target == contexts[p]:
                    continue
                label = 0.0
            dot = 0.0
            for j in range(dim):
                dot += w_in[c, j] * w_out[target, j]
            if dot > 30.0:
                dot = 30.0
            elif dot < -30.0:
                dot = -30.0
            g = (label - 1.0 / (1.0 + math.exp(-dot))) * lr
            for j in range(dim):
                grad_c[j] += g * w_out[target, j]
                w_out[target, j] += g * w_in[c, j]
        for j in range(dim):
            w_in[c, j] += grad_c[j]


def _pair_stream(doc_ids: list[np.ndarray], window: int) -> tuple[np.ndarray, np.ndarray]:
    """All (center, context) index pairs, document order, positions in order,
    offsets -window..window. The window is fixed, not sampled per position."""
    centers: list[int] = []
    contexts: list[int] = []
    for ids in doc_ids:
        n = len(ids)
        for i in range(n):
            lo = max(0, i - window)
            hi = min(n, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                centers.append(ids[i])
                contexts.append(ids[j])
    return (np.asarray(centers, dtype=np.int32),
            np.asarray(contexts, dtype=np.int32))


def train_sgns(
    docs: Sequence[TokenDoc],
    dim: int = DEFAULT_DIM,
    window: int = DEFAULT_WINDOW,
    negatives: int = DEFAULT_NEGATIVES,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    min_count: int = DEFAULT_MIN_COUNT,
    seed: int = 0,
    source_label: str = "sgns-native",
) -> EmbeddingTable:
    """Skip-gram with negative sampling, deterministic in the seed.

    Negatives come from the unigram^0.75 distribution. Tokens occurring fewer
    than min_count times are excluded before windowing. Input vectors start
    uniform in [-0.5/dim, 0.5/dim), output vectors at zero; the table holds
    the input vectors cast to float32.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if not docs:
        raise ValueError("docs must be nonempty")
    counts = Counter(tok for d in docs for tok in d.tokens)
    vocab = [t for t, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
             if counts[t] >= min_count]
    if not vocab:
        raise ValueError(f"vocabulary empty after min_count={min_count} filtering")
    index = {t: i for i, t in enumerate(vocab)}
    doc_ids = []
    for d in docs:
        ids = np.asarray([index[t] for t in d.tokens if t in index], dtype=np.int32)
        if len(ids) >= 2:
            doc_ids.append(ids)
    centers, contexts = _pair_stream(doc_ids, window)
    if len(centers) == 0:
        raise ValueError("no training pairs: every document shorter than 2 in-vocabulary tokens")

    noise = np.asarray([counts[t] for t in vocab], dtype=np.float64) ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    rng = np.random.default_rng(np.random.PCG64(seed))
    w_in = (rng.random((len(vocab), dim)) - 0.5) / dim
    w_out = np.zeros((len(vocab), dim))

    total_steps = len(centers) * epochs
    lr_min = learning_rate * 1e-4
    for epoch in range(epochs):
        draws = rng.random(len(centers) * negatives)
        negs = np.searchsorted(noise_cdf, draws).astype(np.int32)
        _sgns_pass(centers, contexts, negs, w_in, w_out, negatives,
                   learning_rate, lr_min, epoch * len(centers), total_steps)
    vectors = {t: w_in[i].astype(np.float32) for t, i in index.items()}
    return EmbeddingTable(dim=dim, vectors=vectors, source_label=source_label)


def write_table(table: EmbeddingTable, path) -> None:
    """TSV with a '#' header carrying dim and source label; components are
    32-bit floats' shortest round-trip decimals. Rows in sorted token order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# dim={table.dim} source={table.source_label}\n")
        for token in sorted(table.vectors):
            parts = [str(np.float32(x)) for x in table.vectors[token]]
            fh.write(token + "\t" + "\t".join(parts) + "\n")


def load_table(path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    dim: int | None = None
    source_label = "unknown"
    vectors: dict[str, np.ndarray] = {}
    for ln, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            for field in line[1:].split():
                key, _, value = field.partition("=")
                if key == "dim":
                    dim = int(value)
                elif key == "source":
                    source_label = value
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise TableFormatError(f"{path}:{ln}: expected token and components")
        token = fields[0]
        if token in vectors:
            raise TableFormatError(f"{path}:{ln}: duplicate token {token!r}")
        try:
            vec = np.asarray([np.float32(x) for x in fields[1:]], dtype=np.float32)
        except ValueError as exc:
            raise TableFormatError(f"{path}:{ln}: non-numeric component ({exc})") from None
        if dim is None:
            dim = len(vec)
        if len(vec) != dim:
            raise TableFormatError(
                f"{path}:{ln}: row {token!r} has {len(vec)} components, expected {dim}"
            )
        vectors[token] = vec
    if dim is None or not vectors:
        raise TableFormatError(f"{path}: no embedding rows")
    return EmbeddingTable(dim=dim, vectors=vectors, source_label=source_label)


def topic_vector(summary: TopicSummary, table: EmbeddingTable, k_top: int) -> TopicVector:
    """Concatenate the first k_top keyword vectors in summary order.

    Out-of-vocabulary keywords and tail padding (summaries shorter than
    k_top) contribute zero blocks, both counted in missing_keywords.
    """
    if k_top < 1:
        raise ValueError("k_top must be >= 1")
    raw = np.zeros(k_top * table.dim, dtype=np.float64)
    missing = 0
    keywords = summary.tokens[:k_top]
    for i, token in enumerate(keywords):
        if token in table:
            raw[i * table.dim : (i + 1) * table.dim] = table[token]
        else:
            missing += 1
    missing += k_top - len(keywords)
    return TopicVector(topic_id=summary.topic_id, raw=raw, missing_keywords=missing)


@dataclass(frozen=True)
class TsneResult:
    """Reduced vectors plus the diagnostics the reduction contract promises:
    a pass-through flag for small inputs, the per-iteration KL(P||Q) trace,
    and the per-point affinity entropies (bits) reached by bisection."""

    vectors: tuple[np.ndarray, ...]
    passthrough: bool
    kl_trace: tuple[float, ...]
    point_entropies: tuple[float, ...]


def default_perplexity(n: int) -> float:
    return float(min(5, (n - 1) // 3))


def _calibrate_affinities(sqdist: np.ndarray, perplexity: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-point Gaussian affinities with bandwidth found by bisection on the
    precision so the row entropy hits log2(perplexity) bits."""
    n = sqdist.shape[0]
    target = math.log2(perplexity)
    p = np.zeros((n, n))
    entropies = np.zeros(n)
    for i in range(n):
        d = np.delete(sqdist[i], i)
        beta, beta_lo, beta_hi = 1.0, -math.inf, math.inf
        h_bits = 0.0
        row = np.zeros(n - 1)
        for _ in range(200):
            row = np.exp(-d * beta)
            z = row.sum()
            if z <= 0:
                h_bits = 0.0
            else:
                # H = log Z + beta * E[d], converted from nats to bits
                h_bits = (math.log(z) + beta * float((d * row).sum()) / z) / math.log(2)
            if abs(h_bits - target) < 1e-7:
                break
            if h_bits > target:
                beta_lo = beta
                beta = beta * 2.0 if beta_hi == math.inf else (beta + beta_hi) / 2.0
            else:
                beta_hi = beta
                beta = beta / 2.0 if beta_lo == -math.inf else (beta + beta_lo) / 2.0
        z = row.sum()
        if z > 0:
            row = row / z
        p[i, :i] = row[:i]
        p[i, i + 1 :] = row[i:]
        entropies[i] = h_bits
    return p, entropies


def tsne_reduce(
    vectors: Sequence[np.ndarray] | np.ndarray,
    out_dim: int = DEFAULT_OUT_DIM,
    perplexity: float | None = None,
    iterations: int = DEFAULT_TSNE_ITERATIONS,
    learning_rate: float = DEFAULT_TSNE_LEARNING_RATE,
    seed: int = 0,
) -> TsneResult:
    """Exact t-SNE (full pairwise affinities, no tree approximation).

    Gradient descent with momentum 0.5 switching to 0.8 after iteration 250,
    no early exaggeration, output mean-centered every step. Inputs with
    fewer than 5 vectors pass through unchanged with the flag set.
    """
    x = np.asarray([np.asarray(v, dtype=np.float64) for v in vectors], dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("vectors must all have the same length")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input component")
    if out_dim < 1:
        raise ValueError("out_dim must be >= 1")
    n = x.shape[0]
    if n < TSNE_MIN_POINTS:
        return TsneResult(
            vectors=tuple(row.copy() for row in x),
            passthrough=True, kl_trace=(), point_entropies=(),
        )
    if perplexity is None:
        perplexity = default_perplexity(n)
    if not 1.0 <= perplexity <= n - 1:
        raise ValueError(f"perplexity must be in [1, {n - 1}], got {perplexity}")

    sq_norms = (x * x).sum(axis=1)
    sqdist = np.maximum(sq_norms[:, None] + sq_norms[None, :] - 2.0 * (x @ x.T), 0.0)
    p_cond, entropies = _calibrate_affinities(sqdist, perplexity)
    p = (p_cond + p_cond.T) / (2.0 * n)
    p = np.maximum(p, _EPS)

    rng = np.random.default_rng(np.random.PCG64(seed))
    y = rng.normal(0.0, 1e-4, size=(n, out_dim))
    velocity = np.zeros_like(y)
    kl_trace = []
    for it in range(iterations):
        ysq = (y * y).sum(axis=1)
        num = 1.0 / (1.0 + np.maximum(ysq[:, None] + ysq[None, :] - 2.0 * (y @ y.T), 0.0))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), _EPS)
        kl_trace.append(float((p * np.log(p / q)).sum()))
        w = (p - q) * num
        grad = 4.0 * (w.sum(axis=1)[:, None] * y - w @ y)
        momentum = _MOMENTUM_EARLY if it < _MOMENTUM_SWITCH else _MOMENTUM_LATE
        velocity = momentum * velocity - learning_rate * grad
        y = y + velocity
        y = y - y.mean(axis=0)
    return TsneResult(
        vectors=tuple(row.copy() for row in y),
        passthrough=False,
        kl_trace=tuple(kl_trace),
        point_entropies=tuple(float(h) for h in entropies),
    )


def reduce_topic_vectors(
    topic_vectors: Sequence[TopicVector],
    out_dim: int = DEFAULT_OUT_DIM,
    perplexity: float | None = None,
    iterations: int = DEFAULT_TSNE_ITERATIONS,
    learning_rate: float = DEFAULT_TSNE_LEARNING_RATE,
    seed: int = 0,
) -> tuple[list[TopicVector], bool]:
    """Reduce a batch of topic vectors jointly; returns (vectors, reduced?).

    On pass-through the inputs come back untouched so correlation falls back
    to the raw space.
    """
    if not topic_vectors:
        return [], False
    result = tsne_reduce(
        [tv.raw for tv in topic_vectors], out_dim=out_dim, perplexity=perplexity,
        iterations=iterations, learning_rate=learning_rate, seed=seed,
    )
    if result.passthrough:
        return list(topic_vectors), False
    return [tv.with_reduced(vec) for tv, vec in zip(topic_vectors, result.vectors)], True
