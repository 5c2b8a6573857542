"""Swap the native skip-gram table for a transformer keyword table.

The correlation stages consume embeddings only through the TSV table file
format, so any producer that writes that format plugs in. Here the
transformer-exporter package encodes the mined topic keywords with a tiny
offline checkpoint, the core loads the file, and the same topics get scored
in both vector spaces. Requires the exporter: pip install -e exporter
"""

import sys
import tempfile
from pathlib import Path

from topiccorr.corpus import SyntheticSpec, YearMonth, generate_synthetic
from topiccorr.correlate import pair_correlation
from topiccorr.embed import load_table, topic_vector, train_sgns
from topiccorr.phrases import tokenize_corpus
from topiccorr.topicmodel import top_keywords, train_lda

try:
    from transformer_exporter import ExportRequest, build_tiny_checkpoint, export_embeddings
except ImportError:
    print("transformer_exporter is not installed; run: pip install -e exporter")
    sys.exit(1)


def main() -> int:
    work = Path(tempfile.mkdtemp(prefix="table-swap-demo-"))
    spec = SyntheticSpec(
        num_topics=3,
        vocab_size=25,
        docs_per_month=300,
        months=(YearMonth(2020, 1),),
        doc_length=40,
        vocab_overlap=0.6,
        topic_mixture_schedule=((0.2, 0.2, 0.2),),
        word_exponent=0.8,
    )
    corpus_a, corpus_b = generate_synthetic(spec, seed=42)
    docs_a, docs_b = tokenize_corpus(corpus_a), tokenize_corpus(corpus_b)
    summaries = {}
    for name, docs, seed in (("A", docs_a, 7), ("B", docs_b, 8)):
        model = train_lda(docs, k=3, alpha=0.5, beta=0.01,
                          iterations=200, burn_in=100, seed=seed)
        summaries[name] = [top_keywords(model, t, 10) for t in range(3)]
    keywords = sorted({kw for side in summaries.values()
                       for summary in side for kw in summary.tokens})
    print(f"mined 3 topics per stream, {len(keywords)} distinct keywords")

    checkpoint = build_tiny_checkpoint(work / "tiny-bert", seed=0)
    keywords_file = work / "keywords.txt"
    keywords_file.write_text("\n".join(keywords) + "\n", encoding="utf-8")
    table_path = export_embeddings(ExportRequest(
        model=str(checkpoint),
        keywords_path=str(keywords_file),
        out_path=str(work / "transformer_table.tsv"),
    ))
    print(f"exported transformer table to {table_path}")
    print("equivalent CLI: txexport export --model", checkpoint.name,
          "--keywords keywords.txt --out transformer_table.tsv")

    tables = {
        "sgns": train_sgns(list(docs_a) + list(docs_b), dim=32, window=5,
                           negatives=5, epochs=3, min_count=2, seed=300),
        "transformer": load_table(table_path),
    }
    print(f"\nsame topics, two vector spaces:")
    for label, table in tables.items():
        sides = {
            name: [topic_vector(summary, table, 10) for summary in side]
            for name, side in summaries.items()
        }
        score = pair_correlation(sides["A"], sides["B"], "mean")
        print(f"  {label:12s} dim {table.dim:3d}  mean correlation {score:.3f}")
    print("\nabsolute scores differ across spaces; within one space, relative")
    print("movement across stream pairs and months is what the series tracks.")
    print("pipeline configs select the file route with:")
    print('  "embedding": {"provider": "table", "path": "transformer_table.tsv"}')
    return 0


if __name__ == "__main__":
    sys.exit(main())
