"""Shared run-configuration factory for pipeline and CLI tests."""

_SYNTH_BLOCK = {
    "num_topics": 2,
    "vocab_size": 12,
    "docs_per_month": 20,
    "doc_length": 15,
    "vocab_overlap": 0.6,
    "word_exponent": 0.7,
}


def tiny_config_doc(**overrides) -> dict:
    """A complete run configuration small enough for per-test pipeline runs.

    Both streams come from one coupled generator draw; K is fixed at 3 so the
    6 vectors per month clear the t-SNE minimum and the reduced space gets
    exercised.
    """
    doc = {
        "streams": {
            "north": {"source": {"synthetic": dict(_SYNTH_BLOCK), "stream": "a", "seed": 301}},
            "south": {"source": {"synthetic": dict(_SYNTH_BLOCK), "stream": "b", "seed": 301}},
        },
        "pairs": [["north", "south"]],
        "date_range": {"start": "2021-01", "end": "2021-03"},
        "phrases": {"delta": 5.0, "threshold": 10.0, "passes": 2},
        "lda": {"k_grid": [3], "alpha": 0.5, "iterations": 40, "burn_in": 20,
                "num_seeds": 1, "k_top": 6},
        "embedding": {"provider": "sgns", "dim": 12, "window": 3, "negatives": 3,
                      "epochs": 2, "min_count": 2},
        "tsne": {"out_dim": 8, "iterations": 120},
        "correlation": {"methods": ["mean", "max-match"]},
        "seed": 77,
        "output_dir": "out",
    }
    doc.update(overrides)
    return doc
