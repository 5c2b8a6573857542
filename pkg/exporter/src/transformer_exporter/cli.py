"""Command-line interface.

Two subcommands: ``export`` writes a keyword embedding table from any
checkpoint, ``finetune`` trains the binary classifier first. When
``finetune`` is given no base model it builds the bundled tiny checkpoint,
so the full loop runs offline. Exit codes: 0 success, 2 usage problem,
3 data, model or IO failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import tempfile
from pathlib import Path

from . import __version__
from .export import POOLINGS, ExportRequest, export_embeddings
from .finetune import finetune_classifier
from .models import ExporterError, build_tiny_checkpoint

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


def _cmd_export(args) -> int:
    request = ExportRequest(
        model=args.model,
        keywords_path=args.keywords,
        out_path=args.out,
        pooling=args.pooling,
        seed=args.seed,
    )
    path = export_embeddings(request)
    header = path.read_text(encoding="utf-8").splitlines()[0]
    rows = sum(1 for line in path.read_text(encoding="utf-8").splitlines()[1:] if line)
    dim = dict(field.partition("=")[::2] for field in header[1:].split())["dim"]
    print(f"exported {rows} keywords (dim={dim}) to {path}")
    return EXIT_OK


def _cmd_finetune(args) -> int:
    with tempfile.TemporaryDirectory() as tmp:
        base = args.base
        if base is None:
            base = str(build_tiny_checkpoint(Path(tmp) / "base", seed=args.seed))
        path = finetune_classifier(
            args.pos, args.neg, base, args.steps, args.out, seed=args.seed
        )
    print(f"fine-tuned checkpoint written to {path} after {args.steps} steps")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="txexport",
        description="Export keyword embedding tables from transformer checkpoints.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--quiet", action="store_true", help="log warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    export = sub.add_parser("export", help="write a keyword embedding table")
    export.add_argument("--model", required=True, help="model identifier or checkpoint dir")
    export.add_argument("--keywords", required=True, help="keyword list file, one per line")
    export.add_argument("--pooling", choices=POOLINGS, default="mean-over-subtokens")
    export.add_argument("--out", required=True, help="output table path")
    export.add_argument("--seed", type=int, default=0)
    export.set_defaults(func=_cmd_export)

    finetune = sub.add_parser("finetune", help="fine-tune the binary classifier")
    finetune.add_argument("--pos", required=True, help="positive corpus, one posting per line")
    finetune.add_argument("--neg", required=True, help="negative corpus, one posting per line")
    finetune.add_argument(
        "--base",
        default=None,
        help="base checkpoint; omitted builds the bundled tiny model",
    )
    finetune.add_argument("--steps", type=int, default=200)
    finetune.add_argument("--out", required=True, help="checkpoint output directory")
    finetune.add_argument("--seed", type=int, default=0)
    finetune.set_defaults(func=_cmd_finetune)
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
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
