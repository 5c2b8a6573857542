"""Keyword embedding export.

Each keyword is encoded alone (no sentence context), one forward pass per
keyword so no padding enters the computation; in single-threaded CPU mode
the written table is a pure function of (model weights, keyword, pooling).
Output is the TSV table format the topiccorr core reads: a ``#`` header
carrying dim and source label, then one tab-separated row per keyword with
32-bit float components in shortest round-trip decimal form, sorted by token.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .models import ExporterError, load_encoder

logger = logging.getLogger(__name__)

POOLINGS = ("mean-over-subtokens", "first-subtoken")

_LABEL_OK_RE = re.compile(r"[^A-Za-z0-9._-]+")


class EmptyKeywordListError(ExporterError):
    """The keyword file contained no keywords."""


@dataclass(frozen=True)
class ExportRequest:
    """One export job: which model, which keywords, how to pool, where to."""

    model: str
    keywords_path: str
    out_path: str
    pooling: str = "mean-over-subtokens"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pooling not in POOLINGS:
            raise ValueError(
                f"unknown pooling {self.pooling!r}; expected one of {', '.join(POOLINGS)}"
            )


def read_keywords(path) -> list[str]:
    """One keyword per line; '#' comments and blanks skipped, first occurrence
    wins on duplicates. Keywords with internal whitespace are rejected because
    the token column of the table format cannot carry them."""
    keywords: list[str] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            if any(ch.isspace() for ch in word):
                raise ValueError(f"{path}:{ln}: keyword {word!r} contains whitespace")
            if word not in seen:
                seen.add(word)
                keywords.append(word)
    if not keywords:
        raise EmptyKeywordListError(f"{path}: no keywords")
    return keywords


def _source_label(model_ref: str) -> str:
    name = Path(str(model_ref)).name or "transformer"
    cleaned = _LABEL_OK_RE.sub("-", name)
    return cleaned or "transformer"


def _encode_keyword(keyword: str, tokenizer, model, pooling: str) -> np.ndarray:
    # transformer vocabularies lack merged phrase tokens, so underscore-joined
    # phrases are split back into words before encoding
    text = keyword.replace("_", " ")
    enc = tokenizer(text, return_tensors="pt")
    ids = enc["input_ids"][0].tolist()
    # only structural positions are dropped; [UNK] is a real subtoken and pools
    structural = {tokenizer.cls_token_id, tokenizer.sep_token_id, tokenizer.pad_token_id}
    keep = torch.tensor([tid not in structural for tid in ids], dtype=torch.bool)
    if not bool(keep.any()):
        raise ExporterError(f"keyword {keyword!r} produced no subtokens")
    with torch.no_grad():
        hidden = model(**enc).last_hidden_state[0]
    subtokens = hidden[keep]
    pooled = subtokens.mean(dim=0) if pooling == "mean-over-subtokens" else subtokens[0]
    return pooled.numpy().astype(np.float32, copy=False)


def export_embeddings(request: ExportRequest) -> Path:
    """Encode every keyword and write the embedding table; returns its path."""
    keywords = read_keywords(request.keywords_path)
    tokenizer, model = load_encoder(request.model)
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    torch.manual_seed(request.seed)  # inference draws nothing, but pin it anyway
    try:
        vectors = {
            kw: _encode_keyword(kw, tokenizer, model, request.pooling) for kw in keywords
        }
    finally:
        torch.set_num_threads(n_threads)

    dim = int(model.config.hidden_size)
    out = Path(request.out_path)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# dim={dim} source={_source_label(request.model)}\n")
        for kw in sorted(vectors):
            parts = [str(np.float32(x)) for x in vectors[kw]]
            fh.write(kw + "\t" + "\t".join(parts) + "\n")
    logger.info(
        "exported %d keywords (dim=%d, pooling=%s) to %s",
        len(vectors), dim, request.pooling, out,
    )
    return out
