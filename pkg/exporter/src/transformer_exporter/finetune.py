"""Binary sequence-classification fine-tuning.

Corpora are plain text files, one posting per line; the positive file is
labeled 1 and the negative file 0. Every optimizer step sees a balanced
batch drawn half from each side, so class imbalance in the input files
never skews the gradient. The result is a regular checkpoint directory
that ``export_embeddings`` accepts as its model argument.
"""

from __future__ import annotations

import logging
import random
from pathlib import Path

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .models import ExporterError, ModelLoadError, quiet_hf

logger = logging.getLogger(__name__)


class DegenerateLabels(ExporterError):
    """Raised when either labeled side of the training union is empty."""


def read_corpus(path) -> list[str]:
    """One posting per line; blank lines skipped."""
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _load_classifier(model_ref, seed: int | None = None):
    try:
        with quiet_hf():
            tokenizer = AutoTokenizer.from_pretrained(model_ref)
            if seed is not None:
                torch.manual_seed(seed)  # seeds the freshly initialized head
            model = AutoModelForSequenceClassification.from_pretrained(
                model_ref, num_labels=2
            )
    except Exception as exc:
        raise ModelLoadError(f"cannot load model {str(model_ref)!r}: {exc}") from exc
    return tokenizer, model


def finetune_classifier(
    positive_path,
    negative_path,
    base_model,
    steps: int,
    out_dir,
    seed: int = 0,
    batch_size: int = 16,
    learning_rate: float = 5e-3,
    max_length: int = 64,
) -> Path:
    """Fine-tune a binary classifier and write its checkpoint to ``out_dir``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2")
    positives = read_corpus(positive_path)
    negatives = read_corpus(negative_path)
    if not positives or not negatives:
        raise DegenerateLabels(
            f"both corpora must be nonempty; got {len(positives)} positive and "
            f"{len(negatives)} negative documents"
        )

    tokenizer, model = _load_classifier(base_model, seed=seed)
    half = batch_size // 2
    labels = torch.tensor([1] * half + [0] * (batch_size - half))
    order = random.Random(seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate)
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    model.train()
    try:
        for step in range(steps):
            batch = order.choices(positives, k=half) + order.choices(
                negatives, k=batch_size - half
            )
            enc = tokenizer(
                batch,
                return_tensors="pt",
                padding=True,
                truncation=True,
                max_length=max_length,
            )
            loss = model(**enc, labels=labels).loss
            loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            if (step + 1) % 50 == 0 or step == 0:
                logger.info("step %d/%d: loss %.4f", step + 1, steps, loss.item())
    finally:
        torch.set_num_threads(n_threads)
    model.eval()

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with quiet_hf():
        model.save_pretrained(out)
        tokenizer.save_pretrained(out)
    logger.info("fine-tuned checkpoint written to %s after %d steps", out, steps)
    return out


def predict_labels(checkpoint, texts, max_length: int = 64, batch_size: int = 32) -> list[int]:
    """Label texts 0/1 with a fine-tuned checkpoint; order is preserved."""
    if not texts:
        return []
    tokenizer, model = _load_classifier(checkpoint)
    model.eval()
    predictions: list[int] = []
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        with torch.no_grad():
            for start in range(0, len(texts), batch_size):
                chunk = list(texts[start : start + batch_size])
                enc = tokenizer(
                    chunk,
                    return_tensors="pt",
                    padding=True,
                    truncation=True,
                    max_length=max_length,
                )
                predictions.extend(model(**enc).logits.argmax(dim=1).tolist())
    finally:
        torch.set_num_threads(n_threads)
    return predictions
