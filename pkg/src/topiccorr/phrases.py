"""Tokenization and collocation mining: frequent adjacent pairs are promoted
to underscore-joined bigram/trigram tokens over two passes."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources

from .corpus import Corpus

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9-]+")
_VALID_TOKEN_RE = re.compile(r"[a-z0-9\-_]+")
_DIGITS_RE = re.compile(r"[0-9]+")


def default_stopwords() -> frozenset[str]:
    """The embedded English stopword list; override via load_stopwords."""
    text = resources.files("topiccorr.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip().lower() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def load_stopwords(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        words = {line.strip().lower() for line in fh if line.strip() and not line.startswith("#")}
    return frozenset(words)


def tokenize(text: str, stopwords: frozenset[str]) -> list[str]:
    """Lowercase, split on anything outside [a-z0-9-], then drop stopwords,
    tokens shorter than 2 characters, and pure-digit tokens."""
    out = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) < 2 or tok in stopwords or _DIGITS_RE.fullmatch(tok):
            continue
        out.append(tok)
    return out


@dataclass(frozen=True)
class TokenDoc:
    posting_id: str
    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        for tok in self.tokens:
            if not tok or not _VALID_TOKEN_RE.fullmatch(tok):
                raise ValueError(f"doc {self.posting_id}: invalid token {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize_corpus(corpus: Corpus, stopwords: frozenset[str] | None = None) -> list[TokenDoc]:
    if stopwords is None:
        stopwords = default_stopwords()
    return [TokenDoc(p.id, tuple(tokenize(p.text, stopwords))) for p in corpus]


def write_token_docs(docs: list[TokenDoc], path) -> None:
    """One JSON object per line: {"id": ..., "tokens": [...]}."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.posting_id, "tokens": list(doc.tokens)},
                                sort_keys=True) + "\n")


def read_token_docs(path) -> list[TokenDoc]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                docs.append(TokenDoc(record["id"], tuple(record["tokens"])))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{ln}: bad token document ({exc})") from None
    return docs


@dataclass(frozen=True)
class PhraseTable:
    """Promoted adjacent pairs with their collocation scores."""

    pass_number: int
    entries: dict[tuple[str, str], float]
    delta: float
    threshold: float

    def __post_init__(self) -> None:
        if self.pass_number not in (1, 2):
            raise ValueError("pass_number must be 1 or 2")
        if self.delta < 0 or self.threshold <= 0:
            raise ValueError("delta must be >= 0 and threshold > 0")
        for pair, score in self.entries.items():
            if score < self.threshold:
                raise ValueError(f"entry {pair} scored {score} below threshold {self.threshold}")

    def __len__(self) -> int:
        return len(self.entries)

    def save(self, path) -> None:
        """TSV rows token_a<TAB>token_b<TAB>score, after one '#' metadata line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# pass={self.pass_number} delta={self.delta!r} threshold={self.threshold!r}\n")
            for (a, b), score in sorted(self.entries.items()):
                fh.write(f"{a}\t{b}\t{score!r}\n")

    @classmethod
    def load(cls, path) -> "PhraseTable":
        entries: dict[tuple[str, str], float] = {}
        pass_number, delta, threshold = 1, 0.0, 1.0
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    meta = dict(kv.split("=", 1) for kv in line[1:].split())
                    pass_number = int(meta.get("pass", 1))
                    delta = float(meta.get("delta", 0.0))
                    threshold = float(meta.get("threshold", 1.0))
                    continue
                a, b, score = line.split("\t")
                entries[(a, b)] = float(score)
        return cls(pass_number=pass_number, entries=entries, delta=delta, threshold=threshold)


def _span(token: str) -> int:
    """Number of original words a (possibly merged) token covers."""
    return token.count("_") + 1


def mine_phrases(
    docs: list[TokenDoc], delta: float, threshold: float, pass_number: int = 1
) -> PhraseTable:
    """Score adjacent token pairs and keep those worth merging.

    score(a, b) = (count(a, b) - delta) * N / (count(a) * count(b)) with
    count(a, b) the adjacent-pair frequency within documents (never across
    document boundaries), count(.) the unigram frequency and N the vocabulary
    size. Pairs scoring >= threshold are stored, except those whose merge
    would span more than pass_number + 1 original words, which caps two
    passes at trigram-depth tokens.
    """
    if not docs:
        raise ValueError("mine_phrases needs a nonempty document list")
    unigrams: Counter[str] = Counter()
    pairs: Counter[tuple[str, str]] = Counter()
    for doc in docs:
        unigrams.update(doc.tokens)
        pairs.update(zip(doc.tokens, doc.tokens[1:]))
    n_vocab = len(unigrams)
    entries: dict[tuple[str, str], float] = {}
    for (a, b), pair_count in pairs.items():
        if _span(a) + _span(b) > pass_number + 1:
            continue
        score = (pair_count - delta) * n_vocab / (unigrams[a] * unigrams[b])
        if score >= threshold:
            entries[(a, b)] = score
    logger.info(
        "mine_phrases pass %d: %d of %d pairs promoted (delta=%s threshold=%s)",
        pass_number, len(entries), len(pairs), delta, threshold,
    )
    return PhraseTable(pass_number=pass_number, entries=entries, delta=delta, threshold=threshold)


def apply_phrases(doc: TokenDoc, table: PhraseTable) -> TokenDoc:
    """Greedy left-to-right merge: a promoted (tokens[i], tokens[i+1]) becomes
    one underscore-joined token and scanning resumes after it."""
    tokens = doc.tokens
    merged: list[str] = []
    i = 0
    while i < len(tokens):
        if i + 1 < len(tokens) and (tokens[i], tokens[i + 1]) in table.entries:
            merged.append(tokens[i] + "_" + tokens[i + 1])
            i += 2
        else:
            merged.append(tokens[i])
            i += 1
    return TokenDoc(doc.posting_id, tuple(merged))


def promote_collocations(
    docs: list[TokenDoc], delta: float = 5.0, threshold: float = 10.0, passes: int = 2
) -> tuple[list[TokenDoc], list[PhraseTable]]:
    """Run the mine/apply cycle: pass 1 promotes bigrams, pass 2 over the
    rewritten documents yields trigram-depth tokens."""
    tables: list[PhraseTable] = []
    for pass_number in range(1, passes + 1):
        table = mine_phrases(docs, delta, threshold, pass_number=pass_number)
        docs = [apply_phrases(d, table) for d in docs]
        tables.append(table)
    return docs, tables
