"""Command line: ``densefree gen|verify|words``.

Exit status is 0 on success, 1 when verification finds a failure and 2 for
usage errors or unreadable input.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .errors import MalformedCertificate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_DIMS = {"stable": (2, 4, 32), "dense": (4, 16, 64)}
DEFAULT_RANK = {"stable": 2, "dense": 3}
DEFAULT_LEN = {"tree": 4, "stable": 4, "dense": 3}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _dims(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be T,C,R integers, got {text!r}") from None
    if len(parts) != 3 or min(parts) < 1:
        raise argparse.ArgumentTypeError("dims must be three positive integers T,C,R")
    return parts  # type: ignore[return-value]


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _natural(text: str) -> int:
    v = _positive(text) if text != "0" else 0
    return v


def _absorb(text: str) -> int | None:
    return None if text == "all" else _natural(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="densefree", description="Build and check certificates for dense free generator families.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="run a construction and write its certificate")
    gen.add_argument("module", choices=["tree", "stable", "dense"])
    gen.add_argument("--kind", choices=["set", "graph", "dlo", "eqrel"], default=None)
    gen.add_argument("--stages", type=_natural, default=5)
    gen.add_argument("--branching", type=_positive, default=2)
    gen.add_argument("--words-per-stage", type=_natural, default=2500)
    gen.add_argument("--density-size", type=_natural, default=2)
    gen.add_argument("--max-word-len", type=_positive, default=None)
    gen.add_argument("--absorb", type=_absorb, default=2, help="witness points added to the fragment per stage, or 'all'")
    gen.add_argument("--rank", type=_positive, default=None)
    gen.add_argument("--dims", type=_dims, default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="-", help="output file, '-' for stdout")

    ver = sub.add_parser("verify", help="re-check a certificate")
    ver.add_argument("file")
    ver.add_argument("--max-word-len", type=_positive, default=None)

    words = sub.add_parser("words", help="word utilities")
    wsub = words.add_subparsers(dest="wcmd", required=True, parser_class=_Parser)
    en = wsub.add_parser("enumerate", help="list reduced words in length-lex order")
    en.add_argument("--rank", type=_positive, default=2)
    en.add_argument("--max-word-len", type=_positive, default=2)
    return p


def _gen(args: argparse.Namespace) -> int:
    from .certificate import export_certificate
    from .runs import dense_run, stable_run
    from .structures import StructureKind, new_structure
    from .tree_construction import run_tree

    module = args.module
    max_len = args.max_word_len or DEFAULT_LEN[module]
    if module == "tree":
        kind = StructureKind.parse(args.kind or "graph")
        st = run_tree(
            new_structure(kind, args.seed),
            args.stages,
            args.branching,
            args.words_per_stage,
            args.density_size,
            max_len,
            args.absorb,
        )
        cert = export_certificate(st)
    else:
        if args.kind not in (None, "eqrel"):
            print(f"densefree: error: gen {module} runs on eqrel only", file=sys.stderr)
            return EXIT_USAGE
        dims = args.dims or DEFAULT_DIMS[module]
        rank = args.rank or DEFAULT_RANK[module]
        runner = stable_run if module == "stable" else dense_run
        cert = export_certificate(runner(args.seed, dims, rank, max_len))
    text = cert.dumps()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    s = cert.summary()
    print(
        f"{module}: {s['points']} points, {s['generators']} generators, "
        f"{s['killed_words']} killed words, {s['density_requirements']} density requirements",
        file=sys.stderr,
    )
    return EXIT_OK


def _verify(args: argparse.Namespace) -> int:
    from .certificate import load
    from .verify import verify

    try:
        cert = load(args.file)
        report = verify(cert, args.max_word_len)
    except OSError as e:
        print(f"densefree: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MalformedCertificate as e:
        print(f"densefree: malformed certificate: {e}", file=sys.stderr)
        return EXIT_USAGE
    for line in report.lines():
        print(line)
    for f in report.failures():
        print(f"FAIL {f}")
    return EXIT_OK if report.ok else EXIT_FAIL


def _words(args: argparse.Namespace) -> int:
    from .stable_construction import abstract_label
    from .words import iter_words

    labels = [abstract_label(j) for j in range(args.rank)]
    for w in iter_words(labels, args.max_word_len):
        print(" ".join(f"{x.label.index}{'+' if x.sign > 0 else '-'}" for x in w))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.cmd == "gen":
        return _gen(args)
    if args.cmd == "verify":
        return _verify(args)
    return _words(args)


if __name__ == "__main__":
    sys.exit(main())
