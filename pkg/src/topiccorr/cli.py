"""Command-line interface.

Each subcommand runs one pipeline stage on the previous stage's artifacts;
`report` chains them all from a run configuration. Exit codes: 0 success,
2 configuration problem, 3 data or IO failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, correlate, embed, phrases, topicmodel
from .corpus import (
    CorpusError,
    DatasetManifest,
    SyntheticSpec,
    YearMonth,
    fetch_postings,
    generate_synthetic,
    load_postings,
    month_range,
    monthly_counts,
    validate_manifest,
    write_postings,
)
from .embed import TableFormatError
from .lexicon import cross_filter, load_lexicon
from .pipeline import (
    ENDPOINT_ENV_VAR,
    ConfigError,
    derive_seed,
    load_config,
    load_topics_json,
    run_pipeline,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _parse_month(text: str) -> YearMonth:
    try:
        return YearMonth.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_k_grid(text: str) -> list[int]:
    try:
        grid = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad K grid {text!r}: expected comma-separated integers") from None
    if not grid or any(k < 1 for k in grid):
        raise ConfigError(f"bad K grid {text!r}: values must be >= 1")
    return grid


def cmd_ingest(args) -> int:
    corpus = load_postings(args.infile)
    write_postings(corpus, args.out)
    print(f"ingested {len(corpus)} postings -> {args.out}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV_VAR)
    if not endpoint:
        raise ConfigError(
            f"no archive endpoint: pass --endpoint or set {ENDPOINT_ENV_VAR}"
        )
    start = _parse_month(args.start)
    end = _parse_month(args.end)
    corpus = fetch_postings(
        endpoint=endpoint, subreddit=args.subreddit, query=args.query,
        after=start.start_epoch(), before=end.next().start_epoch(),
        page_size=args.page_size, min_interval=args.min_interval,
    )
    write_postings(corpus, args.out)
    print(f"fetched {len(corpus)} postings from r/{args.subreddit} -> {args.out}")
    return EXIT_OK


def cmd_filter(args) -> int:
    corpus = load_postings(args.infile)
    lex = load_lexicon(args.lexicon, args.name or Path(args.lexicon).stem)
    kept = cross_filter(corpus, lex)
    write_postings(kept, args.out)
    print(f"kept {len(kept)}/{len(corpus)} postings containing {lex.name!r} terms -> {args.out}")
    return EXIT_OK


def cmd_phrases(args) -> int:
    corpus = load_postings(args.infile)
    stopwords = phrases.load_stopwords(args.stopwords) if args.stopwords else None
    docs = phrases.tokenize_corpus(corpus, stopwords)
    docs, tables = phrases.promote_collocations(
        docs, delta=args.delta, threshold=args.threshold, passes=args.passes,
    )
    phrases.write_token_docs(docs, args.out)
    if args.tables_dir:
        Path(args.tables_dir).mkdir(parents=True, exist_ok=True)
        for table in tables:
            table.save(Path(args.tables_dir) / f"pass{table.pass_number}.tsv")
    merged = sum(len(t) for t in tables)
    print(f"tokenized {len(docs)} documents, {merged} collocations promoted -> {args.out}")
    return EXIT_OK


def cmd_topics(args) -> int:
    docs = phrases.read_token_docs(args.infile)
    seeds = [derive_seed(args.seed, "lda", i) for i in range(args.num_seeds)]
    alpha_rule = None if args.alpha is None else (lambda _k: args.alpha)
    k_best, model = topicmodel.select_k(
        docs, k_grid=_parse_k_grid(args.k_grid), alpha_rule=alpha_rule,
        beta=args.beta, iterations=args.iterations, burn_in=args.burn_in,
        seeds=seeds, k_top=args.k_top, metric=args.coherence,
    )
    model.save(args.model_out)
    summaries = [topicmodel.top_keywords(model, t, args.k_top) for t in range(model.k)]
    doc = {
        "k": k_best,
        "topics": [{"topic_id": s.topic_id, "keywords": [[t, p] for t, p in s.keywords]}
                   for s in summaries],
    }
    Path(args.topics_out).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    print(f"selected K={k_best} -> {args.model_out}, {args.topics_out}")
    return EXIT_OK


def cmd_embed(args) -> int:
    docs = phrases.read_token_docs(args.infile)
    table = embed.train_sgns(
        docs, dim=args.dim, window=args.window, negatives=args.negatives,
        epochs=args.epochs, learning_rate=args.learning_rate,
        min_count=args.min_count, seed=args.seed, source_label=args.label,
    )
    embed.write_table(table, args.out)
    print(f"trained {len(table)} vectors of dim {table.dim} -> {args.out}")
    return EXIT_OK


def cmd_correlate(args) -> int:
    table = embed.load_table(args.table)
    topics_a = load_topics_json(args.topics_a)
    topics_b = load_topics_json(args.topics_b)
    vecs_a = [embed.topic_vector(s, table, args.k_top) for s in topics_a]
    vecs_b = [embed.topic_vector(s, table, args.k_top) for s in topics_b]
    space = "raw"
    if args.reduce:
        combined, reduced = embed.reduce_topic_vectors(
            vecs_a + vecs_b, out_dim=args.out_dim, perplexity=args.perplexity,
            iterations=args.iterations, seed=args.seed,
        )
        if reduced:
            vecs_a, vecs_b = combined[: len(vecs_a)], combined[len(vecs_a):]
            space = "reduced"
    try:
        score = correlate.pair_correlation(vecs_a, vecs_b, method=args.method)
    except correlate.EmptySideError as exc:
        raise CorpusError(f"cannot correlate: {exc}") from None
    print(json.dumps({"score": score, "method": args.method, "space": space,
                      "n_topics_a": len(vecs_a), "n_topics_b": len(vecs_b)},
                     sort_keys=True))
    return EXIT_OK


def cmd_report(args) -> int:
    config = load_config(args.config, seed_override=args.seed, out_override=args.out)
    artifacts = run_pipeline(config, jobs=args.jobs)
    print(f"run {artifacts.config_hash} seed {artifacts.master_seed}: "
          f"{len(artifacts.series)} series -> {artifacts.out_dir}")
    for series in artifacts.series:
        peak = series.argmax_month()
        method = series.points[0].method
        print(f"  {series.pair[0]}|{series.pair[1]} ({method}): "
              f"peak month {peak if peak else 'n/a'}")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        block = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"bad synthetic spec {args.spec}: {exc}") from None
    months = month_range(_parse_month(args.start), _parse_month(args.end))
    schedule = block.get("mixture_schedule")
    overlap = block.get("vocab_overlap", 0.0)
    try:
        spec = SyntheticSpec(
            num_topics=int(block["num_topics"]),
            vocab_size=int(block["vocab_size"]),
            docs_per_month=int(block["docs_per_month"]),
            months=tuple(months),
            doc_length=int(block["doc_length"]),
            vocab_overlap=tuple(overlap) if isinstance(overlap, list) else float(overlap),
            topic_mixture_schedule=(
                tuple(tuple(float(w) for w in row) for row in schedule)
                if schedule is not None else None
            ),
            planted_keyword=block.get("planted_keyword"),
            planted_rate=float(block.get("planted_rate", 0.0)),
            word_exponent=float(block.get("word_exponent", 0.7)),
            stream_a=args.name_a,
            stream_b=args.name_b,
            word_tag_a=block.get("word_tag_a", "a"),
            word_tag_b=block.get("word_tag_b", "b"),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad synthetic spec {args.spec}: {exc}") from None
    corpus_a, corpus_b = generate_synthetic(spec, seed=args.seed)
    write_postings(corpus_a, args.out_a)
    write_postings(corpus_b, args.out_b)
    print(f"generated {len(corpus_a)} + {len(corpus_b)} postings -> {args.out_a}, {args.out_b}")
    return EXIT_OK


def cmd_validate(args) -> int:
    manifest = DatasetManifest.load(args.manifest)
    stats = {}
    for spec in args.corpus or []:
        parts = spec.split(":", 2)
        if len(parts) != 3:
            raise ConfigError(f"bad --corpus {spec!r}: expected SUBREDDIT:LEXICON:PATH")
        sub, label, path = parts
        stats[(sub, label)] = monthly_counts(load_postings(path))
    report = validate_manifest(stats, manifest)
    for check in report.checks:
        row = check.row
        status = "ok" if check.passed else f"MISMATCH delta={check.delta:+d}"
        print(f"{row.subreddit}/{row.lexicon_label} {row.period_start}..{row.period_end}: "
              f"expected {row.expected_count}, computed {check.computed} [{status}]")
    if not report.passed:
        print(f"{sum(not c.passed for c in report.checks)} of {len(report.checks)} rows mismatched")
        return EXIT_DATA
    print(f"all {len(report.checks)} manifest rows match")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topiccorr",
        description="Month-by-month topical correlation between two forum-posting streams.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true",
                        help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a postings JSONL file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fetch", help="pull postings from a paginated archive endpoint")
    p.add_argument("--endpoint", help=f"archive URL (default ${ENDPOINT_ENV_VAR})")
    p.add_argument("--subreddit", required=True)
    p.add_argument("--query", default="")
    p.add_argument("--start", required=True, help="first month, YYYY-MM")
    p.add_argument("--end", required=True, help="last month inclusive, YYYY-MM")
    p.add_argument("--page-size", type=int, default=100)
    p.add_argument("--min-interval", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("filter", help="keep postings containing lexicon terms")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--name", help="lexicon label (default: file stem)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("phrases", help="tokenize and promote collocations")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--stopwords", help="custom stopword list")
    p.add_argument("--delta", type=float, default=5.0)
    p.add_argument("--threshold", type=float, default=10.0)
    p.add_argument("--passes", type=int, default=2)
    p.add_argument("--tables-dir", help="where to save the phrase score tables")
    p.add_argument("--out", required=True, help="token documents JSONL")
    p.set_defaults(func=cmd_phrases)

    p = sub.add_parser("topics", help="train LDA with coherence-based K selection")
    p.add_argument("--in", dest="infile", required=True, help="token documents JSONL")
    p.add_argument("--k-grid", default="5,10,15,20")
    p.add_argument("--alpha", type=float, default=None, help="default: 50/K")
    p.add_argument("--beta", type=float, default=topicmodel.DEFAULT_BETA)
    p.add_argument("--iterations", type=int, default=topicmodel.DEFAULT_ITERATIONS)
    p.add_argument("--burn-in", type=int, default=topicmodel.DEFAULT_BURN_IN)
    p.add_argument("--num-seeds", type=int, default=1)
    p.add_argument("--k-top", type=int, default=topicmodel.DEFAULT_K_TOP)
    p.add_argument("--coherence", choices=("umass", "npmi"), default="umass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-out", required=True)
    p.add_argument("--topics-out", required=True)
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("embed", help="train skip-gram embeddings on token documents")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--dim", type=int, default=embed.DEFAULT_DIM)
    p.add_argument("--window", type=int, default=embed.DEFAULT_WINDOW)
    p.add_argument("--negatives", type=int, default=embed.DEFAULT_NEGATIVES)
    p.add_argument("--epochs", type=int, default=embed.DEFAULT_EPOCHS)
    p.add_argument("--learning-rate", type=float, default=embed.DEFAULT_LEARNING_RATE)
    p.add_argument("--min-count", type=int, default=embed.DEFAULT_MIN_COUNT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label", default="sgns-native")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("correlate", help="score one topic-set pair")
    p.add_argument("--topics-a", required=True)
    p.add_argument("--topics-b", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--method", choices=correlate.METHODS, default="mean")
    p.add_argument("--k-top", type=int, default=topicmodel.DEFAULT_K_TOP)
    p.add_argument("--reduce", action="store_true", help="reduce jointly before scoring")
    p.add_argument("--out-dim", type=int, default=embed.DEFAULT_OUT_DIM)
    p.add_argument("--perplexity", type=float, default=None)
    p.add_argument("--iterations", type=int, default=embed.DEFAULT_TSNE_ITERATIONS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="run the whole pipeline from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a coupled synthetic stream pair")
    p.add_argument("--spec", required=True, help="JSON generator parameters")
    p.add_argument("--start", required=True)
    p.add_argument("--end", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name-a", default="stream-a")
    p.add_argument("--name-b", default="stream-b")
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="check corpus counts against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--corpus", action="append",
                   help="SUBREDDIT:LEXICON:PATH, repeatable")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorpusError, TableFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
