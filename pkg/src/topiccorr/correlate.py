"""Inter-topic similarity between two streams' monthly topic sets, and the
longitudinal series built from it."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .corpus import YearMonth, month_range
from .embed import TopicVector

logger = logging.getLogger(__name__)

METHODS = ("mean", "max-match")
SERIES_CSV_HEADER = ("month", "pair", "method", "space", "score",
                     "n_topics_a", "n_topics_b", "reason")


class EmptySideError(Exception):
    """One side of a pair has no usable topic vectors."""


class Cosine(NamedTuple):
    """Cosine similarity plus a flag for the zero-norm convention."""

    value: float
    degenerate: bool


def cosine(u: np.ndarray, v: np.ndarray) -> Cosine:
    """u.v / (|u||v|); 0 with the degenerate flag when either norm is 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return Cosine(0.0, True)
    return Cosine(float(np.dot(u, v) / (nu * nv)), False)


def _usable_vectors(topics: Sequence[TopicVector], side: str) -> list[np.ndarray]:
    # all-keywords-OOV topics have zero vectors; dropping them beats
    # letting them inject spurious zero similarities
    kept = []
    dropped = 0
    for tv in topics:
        vec = tv.active()
        if np.linalg.norm(vec) == 0.0:
            dropped += 1
        else:
            kept.append(vec)
    if dropped:
        logger.info("excluding %d all-zero topic vectors on side %s", dropped, side)
    return kept


def pair_correlation(
    topics_a: Sequence[TopicVector],
    topics_b: Sequence[TopicVector],
    method: str = "mean",
) -> float:
    """One similarity score for a topic-set pair.

    "mean" averages cosine over all |A| x |B| cross pairs; "max-match" is
    (mean over A of the best match in B + mean over B of the best match
    in A) / 2. Symmetric in its arguments either way.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if not topics_a or not topics_b:
        raise EmptySideError("empty topic list")
    vecs_a = _usable_vectors(topics_a, "a")
    vecs_b = _usable_vectors(topics_b, "b")
    if not vecs_a or not vecs_b:
        raise EmptySideError("all topic vectors degenerate")
    sims = np.empty((len(vecs_a), len(vecs_b)))
    for i, va in enumerate(vecs_a):
        for j, vb in enumerate(vecs_b):
            sims[i, j] = cosine(va, vb).value
    if method == "mean":
        return float(sims.mean())
    return float((sims.max(axis=1).mean() + sims.max(axis=0).mean()) / 2.0)


@dataclass(frozen=True)
class CorrelationPoint:
    pair: tuple[str, str]
    month: YearMonth
    method: str
    space: str
    n_topics_a: int
    n_topics_b: int
    score: float | None = None
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.space not in ("reduced", "raw"):
            raise ValueError(f"unknown space {self.space!r}")
        if self.score is not None:
            if not -1.0 - 1e-9 <= self.score <= 1.0 + 1e-9:
                raise ValueError(f"score {self.score} outside [-1, 1]")
            if self.n_topics_a < 1 or self.n_topics_b < 1:
                raise ValueError("present score requires topics on both sides")
        elif not self.reason:
            raise ValueError("absent score requires a reason")

    @property
    def present(self) -> bool:
        return self.score is not None


@dataclass(frozen=True)
class CorrelationSeries:
    """One point per month over a contiguous range, for one (pair, method)."""

    pair: tuple[str, str]
    points: tuple[CorrelationPoint, ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("series must contain at least one point")
        for prev, cur in zip(self.points, self.points[1:]):
            if cur.month != prev.month.next():
                raise ValueError(
                    f"months must be contiguous and increasing: {prev.month} then {cur.month}"
                )
        if any(p.pair != self.pair for p in self.points):
            raise ValueError("all points must belong to the series pair")

    @property
    def months(self) -> tuple[YearMonth, ...]:
        return tuple(p.month for p in self.points)

    def argmax_month(self) -> YearMonth | None:
        """Month of the highest present score; earliest wins ties; None when
        every point is absent."""
        best: CorrelationPoint | None = None
        for p in self.points:
            if p.present and (best is None or p.score > best.score):
                best = p
        return best.month if best is not None else None


def _month_space(topics_a: Sequence[TopicVector], topics_b: Sequence[TopicVector]) -> str:
    """A month scores in the reduced space only when every vector on both
    sides was reduced; pass-through months fall back to raw."""
    vectors = list(topics_a) + list(topics_b)
    if vectors and all(tv.reduced is not None for tv in vectors):
        return "reduced"
    return "raw"


def build_series(
    monthly_topics: Mapping[YearMonth, tuple[Sequence[TopicVector], Sequence[TopicVector]]],
    start: YearMonth,
    end: YearMonth,
    pair: tuple[str, str],
    method: str = "mean",
) -> CorrelationSeries:
    """Assemble the month-by-month similarity series over [start, end].

    Months missing from the map, or with an empty or fully degenerate side,
    become absent points carrying a reason and are skipped by argmax. Each
    point records whether it was scored on reduced or raw vectors.
    """
    points = []
    for month in month_range(start, end):
        sides = monthly_topics.get(month)
        topics_a, topics_b = sides if sides is not None else ((), ())
        n_a, n_b = len(topics_a), len(topics_b)
        space = _month_space(topics_a, topics_b)
        if n_a == 0 or n_b == 0:
            points.append(CorrelationPoint(
                pair=pair, month=month, method=method, space=space,
                n_topics_a=n_a, n_topics_b=n_b,
                reason="no topics: empty month",
            ))
            continue
        try:
            score = pair_correlation(topics_a, topics_b, method=method)
        except EmptySideError as exc:
            points.append(CorrelationPoint(
                pair=pair, month=month, method=method, space=space,
                n_topics_a=n_a, n_topics_b=n_b,
                reason=f"no topics: {exc}",
            ))
            continue
        points.append(CorrelationPoint(
            pair=pair, month=month, method=method, space=space,
            n_topics_a=n_a, n_topics_b=n_b,
            score=score,
        ))
    return CorrelationSeries(pair=pair, points=tuple(points))


def write_series_csv(series_list: Sequence[CorrelationSeries], path,
                     provenance: str | None = None) -> None:
    """month,pair,method,space,score,n_topics_a,n_topics_b,reason; absent
    scores serialize as an empty field plus their reason. An optional
    provenance string becomes a leading '#' comment line."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_CSV_HEADER)
        for series in series_list:
            for p in series.points:
                writer.writerow([
                    str(p.month),
                    f"{p.pair[0]}|{p.pair[1]}",
                    p.method,
                    p.space,
                    "" if p.score is None else repr(p.score),
                    p.n_topics_a,
                    p.n_topics_b,
                    p.reason or "",
                ])


def read_series_csv(path) -> list[CorrelationSeries]:
    """Inverse of write_series_csv; groups rows back into series by
    (pair, method) in file order."""
    groups: dict[tuple[tuple[str, str], str], list[CorrelationPoint]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        while header and header[0].startswith("#"):
            header = next(reader, None)
        if header != list(SERIES_CSV_HEADER):
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            month_s, pair_s, method, space, score_s, n_a, n_b, reason = row
            a, _, b = pair_s.partition("|")
            point = CorrelationPoint(
                pair=(a, b), month=YearMonth.parse(month_s), method=method,
                space=space, n_topics_a=int(n_a), n_topics_b=int(n_b),
                score=float(score_s) if score_s else None,
                reason=reason or None,
            )
            groups.setdefault(((a, b), method), []).append(point)
    return [CorrelationSeries(pair=pair, points=tuple(pts))
            for (pair, _), pts in groups.items()]
