"""Command-line entry points: compile lexicons, manage fixtures, run the service."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .ontology import LexiconError, compile_index, load_index, load_lexicon
from .records import generate_patients, ingest, write_fixture
from .recognizer import build_automaton, default_stoplist, load_stoplist
from .service import DEFAULT_PORT, ServiceConfig, create_app, packaged_lexicon_dir


def _load_any_lexicon(path: Path):
    return load_index(path) if path.is_file() else load_lexicon(path)


def _cmd_ontology_compile(args: argparse.Namespace) -> int:
    compile_index(args.lexicon_dir, args.out)
    lexicon = load_index(args.out)
    print(f"compiled {len(lexicon.concepts)} concepts -> {args.out}")
    return 0


def _cmd_record_generate(args: argparse.Namespace) -> int:
    lexicon = _load_any_lexicon(args.lexicon)
    out_dir = Path(args.out)
    docs = generate_patients(lexicon, seed=args.seed, count=args.patients)
    for doc in docs:
        write_fixture(doc, out_dir / f"{doc['patient_id']}.json")
    print(f"wrote {len(docs)} patient fixtures to {out_dir} (seed={args.seed})")
    return 0


def _cmd_record_ingest(args: argparse.Namespace) -> int:
    lexicon = _load_any_lexicon(args.lexicon)
    stoplist_path = args.lexicon / "stoplist.txt"
    if args.lexicon.is_dir() and stoplist_path.exists():
        stoplist = load_stoplist(stoplist_path, lexicon)
    else:
        stoplist = default_stoplist(lexicon)
    automaton = build_automaton(lexicon, stoplist)
    record = ingest(args.fixture, lexicon, automaton)
    print(
        f"{record.patient_id}: {len(record.labs)} lab results, "
        f"{len(record.notes)} prior notes, {len(record.entries)} record entries"
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    # Flags override environment only when given explicitly.
    overrides = {}
    if args.data_dir is not None:
        overrides["data_dir"] = Path(args.data_dir)
    if args.lexicon is not None:
        overrides["lexicon_path"] = Path(args.lexicon)
    if args.port is not None:
        overrides["port"] = args.port
    config = ServiceConfig.from_env(**overrides)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knowted")
    sub = parser.add_subparsers(dest="command", required=True)

    ontology = sub.add_parser("ontology", help="lexicon tooling")
    ontology_sub = ontology.add_subparsers(dest="subcommand", required=True)
    compile_p = ontology_sub.add_parser(
        "compile", help="compile a lexicon directory into one index file"
    )
    compile_p.add_argument("lexicon_dir", type=Path)
    compile_p.add_argument("--out", type=Path, required=True)
    compile_p.set_defaults(func=_cmd_ontology_compile)

    record = sub.add_parser("record", help="patient fixture tooling")
    record_sub = record.add_subparsers(dest="subcommand", required=True)

    generate_p = record_sub.add_parser(
        "generate", help="write seed-reproducible synthetic patient fixtures"
    )
    generate_p.add_argument("--seed", type=int, required=True)
    generate_p.add_argument("--patients", type=int, default=5)
    generate_p.add_argument("--out", type=Path, required=True)
    generate_p.add_argument("--lexicon", type=Path, default=packaged_lexicon_dir())
    generate_p.set_defaults(func=_cmd_record_generate)

    ingest_p = record_sub.add_parser(
        "ingest", help="validate one patient fixture and print a summary"
    )
    ingest_p.add_argument("fixture", type=Path)
    ingest_p.add_argument("--lexicon", type=Path, default=packaged_lexicon_dir())
    ingest_p.set_defaults(func=_cmd_record_ingest)

    serve = sub.add_parser("serve", help="run the note service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--lexicon", default=None)
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LexiconError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
