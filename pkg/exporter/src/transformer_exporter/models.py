"""Checkpoint loading helpers and a deterministic pocket-sized BERT factory.

The factory exists because offline environments cannot pull a hub model:
``build_tiny_checkpoint`` writes a seeded random-weight BERT plus a
character-level WordPiece tokenizer to a directory that every other entry
point accepts wherever a model identifier is expected.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from pathlib import Path

import torch
from tokenizers import Tokenizer, normalizers, pre_tokenizers, processors
from tokenizers.models import WordPiece
from transformers import (
    AutoModel,
    AutoTokenizer,
    BertConfig,
    BertModel,
    BertTokenizerFast,
)
from transformers.utils import logging as hf_logging

logger = logging.getLogger(__name__)

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")


class ExporterError(Exception):
    """Base class for this package's errors."""


class ModelLoadError(ExporterError):
    """A model identifier or checkpoint path could not be loaded."""


@contextmanager
def quiet_hf():
    """Suppress transformers progress bars and load-time chatter."""
    level = hf_logging.get_verbosity()
    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()
    try:
        yield
    finally:
        hf_logging.set_verbosity(level)


def char_wordpiece_tokenizer() -> BertTokenizerFast:
    """WordPiece over single characters of [a-z0-9-], so every keyword the
    core produces decomposes into subtokens instead of collapsing to [UNK]."""
    chars = [chr(c) for c in range(ord("a"), ord("z") + 1)] + list("0123456789-")
    vocab = list(SPECIAL_TOKENS) + chars + ["##" + c for c in chars]
    backend = Tokenizer(
        WordPiece(
            {token: i for i, token in enumerate(vocab)},
            unk_token="[UNK]",
            continuing_subword_prefix="##",
        )
    )
    backend.normalizer = normalizers.BertNormalizer(lowercase=True)
    backend.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    backend.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab.index("[CLS]")), ("[SEP]", vocab.index("[SEP]"))],
    )
    return BertTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )


def build_tiny_checkpoint(
    path,
    seed: int = 0,
    hidden_size: int = 32,
    num_layers: int = 2,
    num_heads: int = 2,
    intermediate_size: int = 64,
    max_positions: int = 64,
) -> Path:
    """Write a randomly initialized tiny BERT checkpoint to ``path``.

    Weights are a pure function of the seed and the architecture arguments,
    so two builds with the same inputs are interchangeable. The directory is
    a regular checkpoint: ``from_pretrained`` loads it like any hub model.
    """
    tokenizer = char_wordpiece_tokenizer()
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=intermediate_size,
        max_position_embeddings=max_positions,
        type_vocab_size=2,
        pad_token_id=tokenizer.pad_token_id,
    )
    torch.manual_seed(seed)
    model = BertModel(config)
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    with quiet_hf():
        model.save_pretrained(out)
        tokenizer.save_pretrained(out)
    logger.info(
        "wrote tiny checkpoint to %s (hidden=%d, layers=%d, seed=%d)",
        out, hidden_size, num_layers, seed,
    )
    return out


def load_encoder(model_ref) -> tuple:
    """Load (tokenizer, base encoder) from a model identifier or directory."""
    # from_pretrained failures span OSError, ValueError and hub-specific
    # types; collapse them all into the package's load error.
    try:
        with quiet_hf():
            tokenizer = AutoTokenizer.from_pretrained(model_ref)
            model = AutoModel.from_pretrained(model_ref)
    except Exception as exc:
        raise ModelLoadError(f"cannot load model {str(model_ref)!r}: {exc}") from exc
    model.eval()
    return tokenizer, model
