"""End-to-end orchestration: a declarative JSON run configuration in; series
CSVs, topic dumps, model artifacts and charts out.

Every random operation is seeded by a stable derivation from the master seed,
so a rerun on the same config and inputs reproduces output bytes exactly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import charts, correlate, embed, phrases, topicmodel
from .corpus import (
    Corpus,
    Posting,
    SyntheticSpec,
    YearMonth,
    bucket_by_month,
    fetch_postings,
    generate_synthetic,
    load_postings,
    month_range,
)
from .lexicon import cross_filter, load_lexicon

logger = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "TOPICCORR_ARCHIVE_ENDPOINT"
_NAME_RE = re.compile(r"[A-Za-z0-9_-]+")


class ConfigError(Exception):
    """A run configuration failed validation; the message names the key."""


def derive_seed(master_seed: int, stage: str, *parts) -> int:
    """Stable 64-bit child seed for one pipeline stage.

    Hashes "master|stage|part|part|..." with blake2b so stages and months get
    independent streams without seed collisions; any stage-identifying fields
    (subreddit, month, K, replica index) go in parts.
    """
    material = "|".join([str(master_seed), stage, *(str(p) for p in parts)])
    digest = hashlib.blake2b(material.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StreamConfig:
    name: str
    source: dict
    lexicon_path: Path | None
    lexicon_label: str


@dataclass(frozen=True)
class PhraseParams:
    delta: float = 5.0
    threshold: float = 10.0
    passes: int = 2


@dataclass(frozen=True)
class LdaParams:
    k_grid: tuple[int, ...] = topicmodel.DEFAULT_K_GRID
    alpha: float | None = None  # None means the 50/K rule per candidate K
    beta: float = topicmodel.DEFAULT_BETA
    iterations: int = topicmodel.DEFAULT_ITERATIONS
    burn_in: int = topicmodel.DEFAULT_BURN_IN
    num_seeds: int = 1
    k_top: int = topicmodel.DEFAULT_K_TOP
    coherence: str = "umass"


@dataclass(frozen=True)
class TsneParams:
    out_dim: int = embed.DEFAULT_OUT_DIM
    perplexity: float | None = None
    iterations: int = embed.DEFAULT_TSNE_ITERATIONS
    learning_rate: float = embed.DEFAULT_TSNE_LEARNING_RATE


@dataclass(frozen=True)
class RunConfig:
    streams: tuple[StreamConfig, ...]
    pairs: tuple[tuple[str, str], ...]
    start: YearMonth
    end: YearMonth
    phrase_params: PhraseParams
    lda_params: LdaParams
    embedding: dict
    tsne_params: TsneParams
    methods: tuple[str, ...]
    output_dir: Path
    master_seed: int
    resolved: dict = field(repr=False, default_factory=dict)

    def stream(self, name: str) -> StreamConfig:
        for s in self.streams:
            if s.name == name:
                return s
        raise KeyError(name)

    def config_hash(self) -> str:
        """Hash of the resolved config minus the output directory, so moving
        the output does not change run identity."""
        material = {k: v for k, v in self.resolved.items() if k != "output_dir"}
        canon = json.dumps(material, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _check_source(source, context: str, base: Path) -> dict:
    if not isinstance(source, dict):
        raise ConfigError(f"{context}: source must be an object")
    kinds = [k for k in ("path", "endpoint", "synthetic") if k in source]
    if len(kinds) != 1:
        raise ConfigError(
            f"{context}: source needs exactly one of path/endpoint/synthetic, found {kinds}"
        )
    out = dict(source)
    if "path" in source:
        p = (base / source["path"]).resolve()
        if not p.is_file():
            raise ConfigError(f"{context}: source path {p} does not exist")
        out["path"] = str(p)
    elif "endpoint" in source:
        _require(source, "subreddit", context)
    else:
        block = source["synthetic"]
        if not isinstance(block, dict):
            raise ConfigError(f"{context}: synthetic block must be an object")
        for key in ("num_topics", "vocab_size", "docs_per_month", "doc_length"):
            _require(block, key, f"{context}.synthetic")
        if source.get("stream") not in ("a", "b"):
            raise ConfigError(f"{context}: synthetic source needs stream 'a' or 'b'")
        _require(source, "seed", context)
    return out


def load_config(path, seed_override: int | None = None,
                out_override: str | None = None) -> RunConfig:
    """Parse and validate a run configuration document.

    Relative paths resolve against the config file's directory. The returned
    object records the fully resolved document for provenance hashing.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    base = path.parent

    streams_raw = _require(raw, "streams", "config")
    if not isinstance(streams_raw, dict) or not streams_raw:
        raise ConfigError("config: 'streams' must be a nonempty object")
    streams = []
    resolved_streams = {}
    for name, entry in streams_raw.items():
        ctx = f"streams.{name}"
        if not _NAME_RE.fullmatch(name):
            raise ConfigError(f"{ctx}: stream names must match [A-Za-z0-9_-]+")
        if not isinstance(entry, dict):
            raise ConfigError(f"{ctx}: must be an object")
        source = _check_source(_require(entry, "source", ctx), ctx, base)
        lex_path = None
        if entry.get("filter_lexicon") is not None:
            lex_path = (base / entry["filter_lexicon"]).resolve()
            if not lex_path.is_file():
                raise ConfigError(f"{ctx}.filter_lexicon: {lex_path} does not exist")
        label = entry.get("lexicon_label", Path(entry["filter_lexicon"]).stem
                          if entry.get("filter_lexicon") else "none")
        streams.append(StreamConfig(name=name, source=source,
                                    lexicon_path=lex_path, lexicon_label=label))
        resolved_streams[name] = {
            "source": source,
            "filter_lexicon": str(lex_path) if lex_path else None,
            "lexicon_label": label,
        }
    names = {s.name for s in streams}

    pairs_raw = _require(raw, "pairs", "config")
    if not isinstance(pairs_raw, list) or not pairs_raw:
        raise ConfigError("config: 'pairs' must be a nonempty list")
    pairs = []
    for i, item in enumerate(pairs_raw):
        if (not isinstance(item, list) or len(item) != 2
                or not all(isinstance(x, str) for x in item)):
            raise ConfigError(f"pairs[{i}]: must be a [stream_a, stream_b] pair")
        a, b = item
        if a not in names or b not in names:
            raise ConfigError(f"pairs[{i}]: unknown stream in ({a!r}, {b!r})")
        if a == b:
            raise ConfigError(f"pairs[{i}]: a stream cannot pair with itself")
        pairs.append((a, b))

    dates = _require(raw, "date_range", "config")
    try:
        start = YearMonth.parse(_require(dates, "start", "date_range"))
        end = YearMonth.parse(_require(dates, "end", "date_range"))
    except ValueError as exc:
        raise ConfigError(f"date_range: {exc}") from None
    if end < start:
        raise ConfigError(f"date_range: end {end} precedes start {start}")

    pb = raw.get("phrases", {})
    phrase_params = PhraseParams(
        delta=float(pb.get("delta", 5.0)),
        threshold=float(pb.get("threshold", 10.0)),
        passes=int(pb.get("passes", 2)),
    )
    if phrase_params.passes < 0:
        raise ConfigError("phrases.passes must be >= 0")

    lb = raw.get("lda", {})
    k_grid = tuple(int(k) for k in lb.get("k_grid", topicmodel.DEFAULT_K_GRID))
    if not k_grid or any(k < 1 for k in k_grid):
        raise ConfigError("lda.k_grid must be a nonempty list of positive integers")
    lda_params = LdaParams(
        k_grid=k_grid,
        alpha=None if lb.get("alpha") is None else float(lb["alpha"]),
        beta=float(lb.get("beta", topicmodel.DEFAULT_BETA)),
        iterations=int(lb.get("iterations", topicmodel.DEFAULT_ITERATIONS)),
        burn_in=int(lb.get("burn_in", topicmodel.DEFAULT_BURN_IN)),
        num_seeds=int(lb.get("num_seeds", 1)),
        k_top=int(lb.get("k_top", topicmodel.DEFAULT_K_TOP)),
        coherence=lb.get("coherence", "umass"),
    )
    if lda_params.iterations < 1 or lda_params.burn_in < 0:
        raise ConfigError("lda.iterations must be >= 1 and lda.burn_in >= 0")
    if lda_params.num_seeds < 1:
        raise ConfigError("lda.num_seeds must be >= 1")
    if lda_params.coherence not in ("umass", "npmi"):
        raise ConfigError("lda.coherence must be 'umass' or 'npmi'")

    eb = _require(raw, "embedding", "config")
    if not isinstance(eb, dict):
        raise ConfigError("embedding: must be an object")
    provider = _require(eb, "provider", "embedding")
    embedding = dict(eb)
    if provider == "table":
        table_path = (base / _require(eb, "path", "embedding")).resolve()
        if not table_path.is_file():
            raise ConfigError(f"embedding.path: {table_path} does not exist")
        embedding["path"] = str(table_path)
    elif provider != "sgns":
        raise ConfigError(
            f"embedding.provider must be 'sgns' or 'table', got {provider!r}"
        )

    tb = raw.get("tsne", {})
    tsne_params = TsneParams(
        out_dim=int(tb.get("out_dim", embed.DEFAULT_OUT_DIM)),
        perplexity=None if tb.get("perplexity") is None else float(tb["perplexity"]),
        iterations=int(tb.get("iterations", embed.DEFAULT_TSNE_ITERATIONS)),
        learning_rate=float(tb.get("learning_rate", embed.DEFAULT_TSNE_LEARNING_RATE)),
    )
    if tsne_params.out_dim < 1 or tsne_params.iterations < 1:
        raise ConfigError("tsne.out_dim and tsne.iterations must be >= 1")

    methods = tuple(raw.get("correlation", {}).get("methods", ["mean"]))
    if not methods or len(set(methods)) != len(methods):
        raise ConfigError("correlation.methods must be a nonempty list without duplicates")
    for m in methods:
        if m not in correlate.METHODS:
            raise ConfigError(f"correlation.methods: unknown method {m!r}")

    master_seed = int(raw.get("seed", 0)) if seed_override is None else seed_override
    if master_seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    out_dir = Path(out_override) if out_override is not None else \
        (base / raw.get("output_dir", "out")).resolve()

    resolved = {
        "streams": resolved_streams,
        "pairs": [list(p) for p in pairs],
        "date_range": {"start": str(start), "end": str(end)},
        "phrases": vars(phrase_params).copy(),
        "lda": {**vars(lda_params), "k_grid": list(k_grid)},
        "embedding": embedding,
        "tsne": vars(tsne_params).copy(),
        "correlation": {"methods": list(methods)},
        "seed": master_seed,
        "output_dir": str(out_dir),
    }
    return RunConfig(
        streams=tuple(streams), pairs=tuple(pairs), start=start, end=end,
        phrase_params=phrase_params, lda_params=lda_params, embedding=embedding,
        tsne_params=tsne_params, methods=methods, output_dir=out_dir,
        master_seed=master_seed, resolved=resolved,
    )


# --------------------------------------------------------------------------
# source loading
# --------------------------------------------------------------------------

def _spec_from_block(block: dict, months: Sequence[YearMonth]) -> SyntheticSpec:
    schedule = block.get("mixture_schedule")
    if schedule is not None:
        schedule = tuple(tuple(float(w) for w in row) for row in schedule)
    overlap = block.get("vocab_overlap", 0.0)
    if isinstance(overlap, list):
        overlap = tuple(float(r) for r in overlap)
    return SyntheticSpec(
        num_topics=int(block["num_topics"]),
        vocab_size=int(block["vocab_size"]),
        docs_per_month=int(block["docs_per_month"]),
        months=tuple(months),
        doc_length=int(block["doc_length"]),
        vocab_overlap=overlap,
        topic_mixture_schedule=schedule,
        planted_keyword=block.get("planted_keyword"),
        planted_rate=float(block.get("planted_rate", 0.0)),
        word_exponent=float(block.get("word_exponent", 0.7)),
        word_tag_a=block.get("word_tag_a", "a"),
        word_tag_b=block.get("word_tag_b", "b"),
    )


def _rebind(corpus: Corpus, name: str) -> Corpus:
    return Corpus.of(
        Posting(id=p.id, subreddit=name, created_utc=p.created_utc,
                title=p.title, body=p.body)
        for p in corpus
    )


def load_stream_corpus(stream: StreamConfig, config: RunConfig,
                       synth_cache: dict | None = None) -> Corpus:
    """Materialize one stream from its configured source.

    Synthetic sources carry their own seed (data identity stays fixed under
    --seed overrides, which only steer the analysis stages); coupled A/B
    generator invocations are cached so both sides come from one draw.
    """
    source = stream.source
    if "path" in source:
        return load_postings(source["path"])
    if "endpoint" in source:
        endpoint = os.environ.get(ENDPOINT_ENV_VAR, source["endpoint"])
        return fetch_postings(
            endpoint=endpoint,
            subreddit=source["subreddit"],
            query=source.get("query", ""),
            after=config.start.start_epoch(),
            before=config.end.next().start_epoch(),
            page_size=int(source.get("page_size", 100)),
            min_interval=float(source.get("min_interval", 1.0)),
        )
    months = month_range(config.start, config.end)
    spec = _spec_from_block(source["synthetic"], months)
    cache_key = json.dumps(
        {"block": source["synthetic"], "seed": source["seed"]}, sort_keys=True
    )
    if synth_cache is not None and cache_key in synth_cache:
        pair = synth_cache[cache_key]
    else:
        pair = generate_synthetic(spec, seed=int(source["seed"]))
        if synth_cache is not None:
            synth_cache[cache_key] = pair
    corpus = pair[0] if source["stream"] == "a" else pair[1]
    return _rebind(corpus, stream.name)


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunArtifacts:
    out_dir: Path
    config_hash: str
    master_seed: int
    series: tuple[correlate.CorrelationSeries, ...]
    series_paths: tuple[Path, ...]
    combined_path: Path
    chart_paths: tuple[Path, ...]
    model_paths: tuple[Path, ...]
    topic_paths: tuple[Path, ...]
    table_path: Path | None


def _train_month(stream_name: str, month: YearMonth, docs: list[phrases.TokenDoc],
                 params: LdaParams, master_seed: int):
    """select_k for one (stream, month); None when the month has no usable
    documents."""
    if not docs or all(len(d) == 0 for d in docs):
        return None
    seeds = [derive_seed(master_seed, "lda", stream_name, month, i)
             for i in range(params.num_seeds)]
    alpha_rule = None if params.alpha is None else (lambda _k: params.alpha)
    try:
        k_best, model = topicmodel.select_k(
            docs, k_grid=params.k_grid, alpha_rule=alpha_rule, beta=params.beta,
            iterations=params.iterations, burn_in=params.burn_in, seeds=seeds,
            k_top=params.k_top, metric=params.coherence,
        )
    except ValueError as exc:
        logger.warning("skipping %s %s: %s", stream_name, month, exc)
        return None
    logger.info("%s %s: selected K=%d", stream_name, month, k_best)
    return model


def _provenance(config: RunConfig) -> str:
    return f"config={config.config_hash()} seed={config.master_seed}"


def run_pipeline(config: RunConfig, jobs: int = 1) -> RunArtifacts:
    """Execute filter -> bucket -> phrase-mine -> monthly LDA -> topic
    vectors -> t-SNE -> correlation series, writing all artifacts under the
    configured output directory."""
    out = config.output_dir
    months = month_range(config.start, config.end)
    for sub in ("models", "topics", "series", "charts", "tables", "phrases"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    provenance = _provenance(config)
    logger.info("run %s over %s..%s (%d streams, %d pairs)",
                provenance, config.start, config.end,
                len(config.streams), len(config.pairs))

    # ingest + cross-filter + bucket + tokenize + phrase-mine, per stream
    synth_cache: dict = {}
    stream_month_docs: dict[str, dict[YearMonth, list[phrases.TokenDoc]]] = {}
    stopwords = phrases.default_stopwords()
    for stream in config.streams:
        corpus = load_stream_corpus(stream, config, synth_cache)
        if stream.lexicon_path is not None:
            lex = load_lexicon(stream.lexicon_path, stream.lexicon_label)
            corpus = cross_filter(corpus, lex)
        buckets = bucket_by_month(corpus, config.start, config.end)
        month_docs = {
            b.key: phrases.tokenize_corpus(Corpus.of(b.postings), stopwords)
            for b in buckets
        }
        # collocation statistics pool the stream's whole range; merges are
        # then applied month by month
        all_docs = [d for m in months for d in month_docs[m]]
        if config.phrase_params.passes > 0 and any(len(d) for d in all_docs):
            tables = []
            docs_iter = all_docs
            for pass_number in range(1, config.phrase_params.passes + 1):
                table = phrases.mine_phrases(
                    docs_iter, config.phrase_params.delta,
                    config.phrase_params.threshold, pass_number=pass_number,
                )
                docs_iter = [phrases.apply_phrases(d, table) for d in docs_iter]
                tables.append(table)
                table.save(out / "phrases" / f"{stream.name}.pass{pass_number}.tsv")
            for m in months:
                rewritten = month_docs[m]
                for table in tables:
                    rewritten = [phrases.apply_phrases(d, table) for d in rewritten]
                month_docs[m] = rewritten
        stream_month_docs[stream.name] = month_docs

    # one embedding table per run
    if config.embedding["provider"] == "sgns":
        union = [d for s in config.streams
                 for m in months for d in stream_month_docs[s.name][m] if len(d)]
        table = embed.train_sgns(
            union,
            dim=int(config.embedding.get("dim", embed.DEFAULT_DIM)),
            window=int(config.embedding.get("window", embed.DEFAULT_WINDOW)),
            negatives=int(config.embedding.get("negatives", embed.DEFAULT_NEGATIVES)),
            epochs=int(config.embedding.get("epochs", embed.DEFAULT_EPOCHS)),
            learning_rate=float(config.embedding.get("learning_rate",
                                                     embed.DEFAULT_LEARNING_RATE)),
            min_count=int(config.embedding.get("min_count", embed.DEFAULT_MIN_COUNT)),
            seed=derive_seed(config.master_seed, "sgns"),
        )
        table_path = out / "tables" / "embeddings.tsv"
        embed.write_table(table, table_path)
    else:
        table_path = Path(config.embedding["path"])
        table = embed.load_table(table_path)
    logger.info("embedding table ready: %d tokens, dim %d (%s)",
                len(table), table.dim, table.source_label)

    # monthly topic models, optionally in parallel across (stream, month)
    tasks = [(s.name, m) for s in config.streams for m in months]
    models: dict[tuple[str, YearMonth], topicmodel.LdaModel | None] = {}
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {
                key: pool.submit(_train_month, key[0], key[1],
                                 stream_month_docs[key[0]][key[1]],
                                 config.lda_params, config.master_seed)
                for key in tasks
            }
            models = {key: fut.result() for key, fut in futures.items()}
    else:
        for name, m in tasks:
            models[(name, m)] = _train_month(
                name, m, stream_month_docs[name][m],
                config.lda_params, config.master_seed,
            )

    model_paths = []
    topic_paths = []
    summaries: dict[tuple[str, YearMonth], list[topicmodel.TopicSummary]] = {}
    for (name, m), model in sorted(models.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        if model is None:
            summaries[(name, m)] = []
            continue
        month_summaries = [
            topicmodel.top_keywords(model, t, config.lda_params.k_top)
            for t in range(model.k)
        ]
        summaries[(name, m)] = month_summaries
        mp = out / "models" / f"{name}-{m}.json"
        model.save(mp, provenance={"config": config.config_hash(),
                                   "seed": config.master_seed})
        model_paths.append(mp)
        tp = out / "topics" / f"{name}-{m}.json"
        _write_topics_json(tp, name, m, model.k, month_summaries, config)
        topic_paths.append(tp)

    # topic vectors and joint per-(pair, month) reduction
    raw_vectors = {
        key: [embed.topic_vector(s, table, config.lda_params.k_top) for s in val]
        for key, val in summaries.items()
    }
    series_list = []
    series_paths = []
    for a, b in config.pairs:
        monthly: dict[YearMonth, tuple[list, list]] = {}
        for m in months:
            va, vb = raw_vectors[(a, m)], raw_vectors[(b, m)]
            if va and vb:
                combined, reduced = embed.reduce_topic_vectors(
                    va + vb,
                    out_dim=config.tsne_params.out_dim,
                    perplexity=config.tsne_params.perplexity,
                    iterations=config.tsne_params.iterations,
                    learning_rate=config.tsne_params.learning_rate,
                    seed=derive_seed(config.master_seed, "tsne", a, b, m),
                )
                monthly[m] = (combined[: len(va)], combined[len(va):])
                if not reduced:
                    logger.info("pair %s|%s %s: %d vectors, t-SNE passed through",
                                a, b, m, len(va) + len(vb))
            else:
                monthly[m] = (va, vb)
        for method in config.methods:
            series = correlate.build_series(
                monthly, config.start, config.end, pair=(a, b), method=method,
            )
            series_list.append(series)
            sp = out / "series" / f"{a}__{b}.{method}.csv"
            correlate.write_series_csv([series], sp, provenance=provenance)
            series_paths.append(sp)

    combined_path = out / "series" / "combined.csv"
    correlate.write_series_csv(series_list, combined_path, provenance=provenance)

    chart_paths = []
    for method in config.methods:
        subset = [s for s in series_list if s.points[0].method == method]
        cp = out / "charts" / f"{method}.svg"
        charts.render_chart(subset, cp, title=f"monthly topical correlation ({method})",
                            provenance=provenance)
        chart_paths.append(cp)

    run_doc = {
        "config_hash": config.config_hash(),
        "seed": config.master_seed,
        "config": {k: v for k, v in config.resolved.items() if k != "output_dir"},
        "artifacts": sorted(
            str(p.relative_to(out))
            for p in [*series_paths, combined_path, *chart_paths,
                      *model_paths, *topic_paths]
        ),
    }
    (out / "run.json").write_text(
        json.dumps(run_doc, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    return RunArtifacts(
        out_dir=out, config_hash=config.config_hash(),
        master_seed=config.master_seed, series=tuple(series_list),
        series_paths=tuple(series_paths), combined_path=combined_path,
        chart_paths=tuple(chart_paths), model_paths=tuple(model_paths),
        topic_paths=tuple(topic_paths),
        table_path=table_path,
    )


def _write_topics_json(path, stream: str, month: YearMonth, k: int,
                       month_summaries, config: RunConfig) -> None:
    doc = {
        "stream": stream,
        "month": str(month),
        "k": k,
        "provenance": {"config": config.config_hash(), "seed": config.master_seed},
        "topics": [
            {"topic_id": s.topic_id,
             "keywords": [[t, p] for t, p in s.keywords]}
            for s in month_summaries
        ],
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_topics_json(path) -> list[topicmodel.TopicSummary]:
    """Read a monthly topics artifact back into summaries."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        topicmodel.TopicSummary(
            topic_id=t["topic_id"],
            keywords=tuple((tok, float(p)) for tok, p in t["keywords"]),
        )
        for t in doc["topics"]
    ]
