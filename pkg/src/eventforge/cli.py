"""Command-line entry point: ``eventforge run|<stage>|timeline``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .dates import parse_iso
from .emit import GraphLayout
from .identify import ConfigError
from .ingest import RegistryError
from .pipeline import STAGES, Context, StageError, run_pipeline
from .rdf import ParseError, parse_nquads
from .timeline import UnknownRootError, timeline_query
from .vocab import Namespaces

logger = logging.getLogger("eventforge")


def _add_config_args(p: argparse.ArgumentParser, out_required: bool = False) -> None:
    p.add_argument("--config", required=True, help="pipeline TOML file")
    p.add_argument("--out", required=out_required, help="output N-Quads path (overrides the config)")
    p.add_argument("--source", action="append", default=[], metavar="NAME=PATH",
                   help="override or add a source dump path; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eventforge", description="Build an event-centric temporal knowledge graph.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the whole pipeline, or resume it from a stage")
    _add_config_args(run, out_required=True)
    run.add_argument("--from", dest="start", choices=STAGES, default="ingest",
                     help="first stage to recompute; earlier stages load their checkpoints")
    run.add_argument("--dry-run", action="store_true", help="validate the configuration and exit")

    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run only the {stage} stage from earlier checkpoints")
        _add_config_args(sp)

    tl = sub.add_parser("timeline", help="list the dated sub-events of an event")
    tl.add_argument("--root", required=True, help="root event IRI, label or alias")
    tl.add_argument("--from", dest="start", help="window start (YYYY, YYYY-MM or YYYY-MM-DD)")
    tl.add_argument("--to", dest="end", help="window end")
    src = tl.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", help="N-Quads file produced by the pipeline")
    src.add_argument("--config", help="take the output path from this pipeline config")
    tl.add_argument("--base", help="base namespace of the output (default: from config or environment)")
    return parser


def _run(args: argparse.Namespace, start: str, stop: str) -> int:
    cfg = load_config(args.config, args.source, args.out)
    cfg.validate()
    if getattr(args, "dry_run", False):
        Context.build(cfg)
        print(f"config ok: {len(cfg.sources)} sources, output {cfg.output}")
        return 0
    state = run_pipeline(cfg, start, stop)
    if state.report is not None:
        sys.stdout.write(state.report.text())
    return 0


def _timeline(args: argparse.Namespace) -> int:
    if args.config:
        cfg = load_config(args.config)
        path, base = cfg.output, args.base or cfg.base
    else:
        path, base = Path(args.input), args.base
    layout = GraphLayout(Namespaces.from_env(base), {})
    start = parse_iso(args.start) if args.start else None
    end = parse_iso(args.end) if args.end else None
    errors: list[ParseError] = []
    with open(path, "rb") as fh:
        quads = [q for _, q in parse_nquads(fh, layout.fused, errors)]
    if errors:
        logger.warning("%s: %d unparseable lines ignored", path, len(errors))
    rows = timeline_query(quads, args.root, start, end, layout.fused, layout.extracted_from)
    for row in rows:
        print(f"{row.begin.isoformat()}\t{row.title}\t{', '.join(row.sources)}\t{row.iri}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "timeline":
            return _timeline(args)
        if args.command == "run":
            return _run(args, args.start, "stats")
        return _run(args, args.command, args.command)
    except (ConfigError, RegistryError) as exc:
        print(f"eventforge: configuration error: {exc}", file=sys.stderr)
        return 2
    except UnknownRootError as exc:
        print(f"eventforge: unknown root event: {exc.args[0]}", file=sys.stderr)
        return 3
    except (StageError, OSError, ValueError) as exc:
        print(f"eventforge: {exc}", file=sys.stderr)
        print("eventforge: checkpoints of completed stages are kept; fix the cause and resume with --from",
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
