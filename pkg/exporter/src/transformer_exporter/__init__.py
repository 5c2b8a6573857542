"""Keyword embedding tables from transformer checkpoints.

The package turns a pre-trained or fine-tuned transformer into embedding
table files (TSV with a ``# dim=... source=...`` header) that the topiccorr
core loads directly, and can fine-tune a binary sequence classifier whose
checkpoint feeds straight back into the exporter.
"""

from .export import (
    POOLINGS,
    EmptyKeywordListError,
    ExportRequest,
    export_embeddings,
    read_keywords,
)
from .finetune import DegenerateLabels, finetune_classifier, predict_labels, read_corpus
from .models import ExporterError, ModelLoadError, build_tiny_checkpoint

__version__ = "0.1.0"

__all__ = [
    "DegenerateLabels",
    "EmptyKeywordListError",
    "ExportRequest",
    "ExporterError",
    "ModelLoadError",
    "POOLINGS",
    "build_tiny_checkpoint",
    "export_embeddings",
    "finetune_classifier",
    "predict_labels",
    "read_corpus",
    "read_keywords",
    "__version__",
]
