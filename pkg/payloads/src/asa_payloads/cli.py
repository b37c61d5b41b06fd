"""Emit fixture artifacts from the command line.

    asa-payloads script DIR [--n 10 100 1000] [--samples 500]
    asa-payloads corpus SCENARIO OUT.jsonl
"""

from __future__ import annotations

import argparse
import sys

from .corpora import SCENARIOS, UnknownScenario, corpus_bundle
from .scripts import provided_rw_payload


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asa-payloads",
                                     description="payload fixture generator")
    sub = parser.add_subparsers(dest="command", required=True)

    script = sub.add_parser("script", help="write the random-walk payload script")
    script.add_argument("dir", help="directory to write rw_payload.py into")
    script.add_argument("--n", nargs="+", type=int, default=[10, 100, 1000])
    script.add_argument("--samples", type=int, default=500)

    corpus = sub.add_parser("corpus", help="write a scenario corpus file")
    corpus.add_argument("scenario", choices=SCENARIOS)
    corpus.add_argument("out", help="corpus JSONL path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "script":
        path = provided_rw_payload(args.n, args.samples).write(args.dir)
        print(path)
        return 0
    try:
        print(corpus_bundle(args.scenario, args.out))
    except UnknownScenario as exc:
        print(f"error: unknown scenario {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
