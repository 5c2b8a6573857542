"""Month-by-month topical correlation between two forum-posting streams.

The pipeline: cross-filter each stream by the other domain's lexicon, mine
collocations, fit a coherence-selected LDA model per month, embed topic
keywords, concatenate them into topic vectors, reduce with t-SNE, and score
inter-topic cosine similarity over time.
"""

__version__ = "0.1.0"

from .corpus import (
    ArchiveError,
    Corpus,
    CorpusError,
    DatasetManifest,
    ManifestError,
    MonthBucket,
    Posting,
    PostingFormatError,
    SyntheticSpec,
    ValidationReport,
    YearMonth,
    bucket_by_month,
    fetch_postings,
    generate_synthetic,
    load_postings,
    month_range,
    monthly_counts,
    validate_manifest,
    write_postings,
)
from .lexicon import EmptyLexiconError, Lexicon, contains_term, cross_filter, load_lexicon
from .phrases import (
    PhraseTable,
    TokenDoc,
    apply_phrases,
    mine_phrases,
    promote_collocations,
    tokenize,
    tokenize_corpus,
)
from .topicmodel import (
    LdaModel,
    TopicSummary,
    npmi_coherence,
    select_k,
    top_keywords,
    train_lda,
    umass_coherence,
)
from .embed import (
    EmbeddingTable,
    TopicVector,
    TsneResult,
    load_table,
    topic_vector,
    train_sgns,
    tsne_reduce,
    write_table,
)
from .correlate import (
    CorrelationPoint,
    CorrelationSeries,
    build_series,
    cosine,
    pair_correlation,
    read_series_csv,
    write_series_csv,
)
from .charts import render_chart
from .pipeline import ConfigError, RunConfig, derive_seed, load_config, run_pipeline

__all__ = [
    "ArchiveError", "ConfigError", "Corpus", "CorpusError", "CorrelationPoint",
    "CorrelationSeries", "DatasetManifest", "EmbeddingTable", "EmptyLexiconError",
    "LdaModel", "Lexicon", "ManifestError", "MonthBucket", "PhraseTable",
    "Posting", "PostingFormatError", "RunConfig", "SyntheticSpec", "TokenDoc",
    "TopicSummary", "TopicVector", "TsneResult", "ValidationReport", "YearMonth",
    "apply_phrases", "bucket_by_month", "build_series", "contains_term",
    "cosine", "cross_filter", "derive_seed", "fetch_postings",
    "generate_synthetic", "load_config", "load_lexicon", "load_postings",
    "load_table", "mine_phrases", "month_range", "monthly_counts",
    "npmi_coherence", "pair_correlation", "promote_collocations",
    "read_series_csv", "render_chart", "run_pipeline", "select_k",
    "tokenize", "tokenize_corpus", "top_keywords", "topic_vector",
    "train_lda", "train_sgns", "tsne_reduce", "umass_coherence",
    "validate_manifest", "write_postings", "write_series_csv", "write_table",
]
