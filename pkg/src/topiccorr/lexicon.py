"""Term lists and corpus cross-filtering by term presence."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .corpus import Corpus

logger = logging.getLogger(__name__)

# A word is a maximal run of [a-z0-9-]; hyphen is word-internal so "covid-19"
# is a single word.
_WORD_RE = re.compile(r"[a-z0-9-]+")
_WS_RE = re.compile(r"^\s+$")


class EmptyLexiconError(Exception):
    """No terms survived parsing."""


@dataclass(frozen=True)
class Lexicon:
    name: str
    terms: frozenset[str]

    def __post_init__(self) -> None:
        if not self.terms:
            raise EmptyLexiconError(f"lexicon {self.name!r} has no terms")
        for term in self.terms:
            if not term:
                raise ValueError(f"lexicon {self.name!r} contains an empty term")
            if len(term.split()) > 5:
                raise ValueError(f"lexicon {self.name!r}: term {term!r} longer than 5 words")

    def __len__(self) -> int:
        return len(self.terms)


def load_lexicon(path, name: str) -> Lexicon:
    """One term per line; '#' lines are comments, blanks ignored. Terms are
    lowercased, trimmed, whitespace-normalized and deduplicated."""
    terms: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            terms.add(" ".join(line.lower().split()))
    if not terms:
        raise EmptyLexiconError(f"lexicon file {path} contains no terms")
    return Lexicon(name=name, terms=frozenset(terms))


def contains_term(text: str, lexicon: Lexicon) -> bool:
    """True iff some lexicon term occurs in the text at word boundaries.

    Matching is case-insensitive. A multiword term matches only consecutive
    words separated by whitespace alone, so "dry, cough" does not contain
    "dry cough" but "dry  cough" does.
    """
    lowered = text.lower()
    spans = [(m.group(), m.start(), m.end()) for m in _WORD_RE.finditer(lowered)]
    if not spans:
        return False
    words = [s[0] for s in spans]
    single = {t for t in lexicon.terms if " " not in t}
    if single and not single.isdisjoint(words):
        return True
    for term in lexicon.terms:
        parts = term.split(" ")
        if len(parts) < 2:
            continue
        for i in range(len(words) - len(parts) + 1):
            if words[i : i + len(parts)] != parts:
                continue
            gaps_ok = all(
                _WS_RE.match(lowered[spans[j][2] : spans[j + 1][1]])
                for j in range(i, i + len(parts) - 1)
            )
            if gaps_ok:
                return True
    return False


def cross_filter(corpus: Corpus, lexicon: Lexicon) -> Corpus:
    """Retain exactly the postings whose text contains at least one lexicon
    term; order preserved, retention count logged."""
    kept = [p for p in corpus if contains_term(p.text, lexicon)]
    logger.info(
        "cross_filter[%s]: retained %d of %d postings", lexicon.name, len(kept), len(corpus)
    )
    return Corpus.of(kept)
