"""Command-line entry point: ``decstates <command> [options]``.

Exit status: 0 success, 1 usage error, 2 data or format error, 3 numeric
failure. Non-convergence of determinism enforcement is not an error; it is
reported as ``determinism_converged: false``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .compare import MatchSpec, Metric
from .core import DataError, DimensionMismatch, NumericError, ParameterError
from .density import DEFAULT_CUTOFF
from .graph import export_dot
from .pipelines import eca, even, image
from .pipelines.io import read_pgm, read_series, write_field_csv, write_pgm
from .pipelines.render import RANK, RAW, cells_image, render_field

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# provenance of each default, shown in --help
PUB = "published experiment setting"
DESIGN = "design choice"
PLUMB = "tool convenience"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _help(text: str, source: str) -> str:
    return f"{text} (default: %(default)s; source: {source})"


def _L_range(text: str):
    lo, sep, hi = text.partition("..")
    try:
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a range like 1..10") from None
    if not sep or lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError("expected a range like 1..10")
    return list(range(lo, hi + 1))


def _common(p):
    p.add_argument("--out-dir", type=Path, default=Path("."),
                   help=_help("directory for output files", PLUMB))
    p.add_argument("--workers", type=int, default=None,
                   help=_help("worker threads for kernel estimation; falls back to the "
                              "DECSTATES_WORKERS environment variable, then 1", DESIGN))


def _series_args(p):
    p.add_argument("--L", type=int, default=10, help=_help("past window length", PUB))
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.CHI_SQUARE.value,
                   help=_help("state match predicate", PUB))
    p.add_argument("--alpha", type=float, default=0.05,
                   help=_help("chi-square significance level for matching states", PUB))
    p.add_argument("--delta", type=float, default=0.05,
                   help=_help("distance threshold for the other metrics", DESIGN))
    p.add_argument("--theta", type=float, default=0.95,
                   help=_help("dominance threshold for ignoring spurious transitions", DESIGN))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="decstates", description="Causal and decisional state reconstruction.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("even-process", help="reconstruct a generated Even process")
    p.add_argument("--n", type=int, default=1_000_000, help=_help("series length", PUB))
    _series_args(p)
    p.add_argument("--seed", type=int, default=42, help=_help("random seed", PUB))
    p.add_argument("--trials", type=int, default=None,
                   help=_help("run the window sweep with this many trials per L", DESIGN))
    p.add_argument("--L-range", dest="L_range", type=_L_range, default=None,
                   help=_help("window lengths for the sweep, as a..b (implies --trials 30)",
                              PUB))
    _common(p)

    p = sub.add_parser("reconstruct", help="reconstruct a symbol series read from a file")
    p.add_argument("--input", type=Path, required=True, help="symbol series text file")
    _series_args(p)
    _common(p)

    p = sub.add_parser("ca-filter", help="light-cone complexity fields of a cellular automaton")
    p.add_argument("--rule", type=int, default=110, help=_help("elementary rule number", PUB))
    p.add_argument("--width", type=int, default=400, help=_help("cells per row", PUB))
    p.add_argument("--steps", type=int, default=300, help=_help("rows kept", PUB))
    p.add_argument("--drop", type=int, default=100, help=_help("transient rows dropped", PUB))
    p.add_argument("--past", type=int, default=6, help=_help("past cone depth", PUB))
    p.add_argument("--future", type=int, default=4, help=_help("future cone depth", PUB))
    p.add_argument("--seed", type=int, default=42, help=_help("random seed", PUB))
    p.add_argument("--render", choices=(RAW, RANK), default=RAW,
                   help=_help("field rendering", PUB))
    _common(p)

    p = sub.add_parser("image-filter", help="decisional complexity field of a greyscale image")
    p.add_argument("--input", type=Path, required=True, help="binary (P5) graymap")
    p.add_argument("--h", type=float, default=5.0, help=_help("kernel bandwidth", PUB))
    p.add_argument("--tau", type=float, default=15.0,
                   help=_help("free-error band of the utility", PUB))
    p.add_argument("--preprocess", choices=(image.NONE, image.SUBTRACT_MIN), default=image.NONE,
                   help=_help("neighbourhood preprocessing", DESIGN))
    p.add_argument("--metric", choices=[m.value for m in Metric if m is not Metric.CHI_SQUARE],
                   default=Metric.BHATTACHARYYA.value, help=_help("state match predicate", DESIGN))
    p.add_argument("--delta", type=float, default=0.05,
                   help=_help("distance threshold for matching states", DESIGN))
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF,
                   help=_help("kernel values below this are dropped", DESIGN))
    p.add_argument("--render", choices=(RAW, RANK), default=RANK,
                   help=_help("field rendering", PUB))
    _common(p)
    return ap


def _write(path: Path, text: str):
    path.write_text(text)


def _match(args) -> MatchSpec:
    metric = Metric(args.metric)
    return MatchSpec(metric, args.alpha if metric is Metric.CHI_SQUARE else args.delta)


def _run_series(series, alphabet, args, stem: str) -> str:
    res = even.reconstruct_series(series, args.L, args.alpha, args.theta, alphabet,
                                  match=_match(args))
    text = even.report(res)
    _write(args.out_dir / f"{stem}_L{args.L}_report.txt", text)
    _write(args.out_dir / f"{stem}_L{args.L}.dot", export_dot(res.graph, "epsilon_machine"))
    return text


def cmd_even(args) -> str:
    if args.n < 2:
        raise ParameterError("--n must be at least 2")
    if args.trials is not None or args.L_range is not None:
        trials = 30 if args.trials is None else args.trials
        Ls = args.L_range or [args.L]
        if trials < 1:
            raise ParameterError("--trials must be positive")
        rows = even.window_sweep(Ls, args.n, trials, args.seed, args.alpha, args.theta,
                                 _match(args))
        text = even.sweep_csv(rows)
        _write(args.out_dir / "even_sweep.csv", text)
        return text
    series, _ = even.gen_even_process(args.n, args.seed)
    return _run_series(series, (0, 1), args, "even")


def cmd_reconstruct(args) -> str:
    series, alphabet = read_series(args.input)
    return _run_series(series, alphabet, args, args.input.stem)


def cmd_ca(args) -> str:
    field = eca.run_eca(args.rule, args.width, args.steps, args.drop, args.seed)
    res = eca.ca_filter(field, args.past, args.future)
    out = args.out_dir
    stem = f"rule{args.rule}"
    write_pgm(out / f"{stem}_cells.pgm", cells_image(field.cells))
    r = res.reconstruction
    lines = [f"rule: {args.rule}", f"observations: {len(r.observations)}"]
    for measure, name in (("C", "statistical"), ("V", "iso_utility"), ("P", "iso_prediction")):
        f = res.complexity_field(measure)
        write_pgm(out / f"{stem}_{name}.pgm", render_field(f, args.render))
        write_field_csv(out / f"{stem}_{name}.csv", f)
    for m in "CDPV":
        lines.append(f"{m}_states: {r.partition(m).n_states}")
        lines.append(f"{m}_estimated_bits: {r.complexities[m]:.6f}")
    text = "\n".join(lines) + "\n"
    _write(out / f"{stem}_report.txt", text)
    return text


def cmd_image(args) -> str:
    img = read_pgm(args.input)
    res = image.image_filter(img, args.h, args.tau, args.preprocess, args.delta, args.cutoff,
                             Metric(args.metric))
    f = res.complexity_field("D")
    stem = args.input.stem
    write_field_csv(args.out_dir / f"{stem}_decisional.csv", f)
    write_pgm(args.out_dir / f"{stem}_decisional.pgm", render_field(f, args.render))
    r = res.reconstruction
    lines = [f"pixels: {len(r.observations)}"]
    for m in "CDPV":
        lines.append(f"{m}_states: {r.partition(m).n_states}")
        lines.append(f"{m}_estimated_bits: {r.complexities[m]:.6f}")
    text = "\n".join(lines) + "\n"
    _write(args.out_dir / f"{stem}_report.txt", text)
    return text


COMMANDS = {"even-process": cmd_even, "reconstruct": cmd_reconstruct,
            "ca-filter": cmd_ca, "image-filter": cmd_image}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers is not None:
        if args.workers < 1:
            print("decstates: --workers must be positive", file=sys.stderr)
            return EXIT_USAGE
        os.environ["DECSTATES_WORKERS"] = str(args.workers)
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        sys.stdout.write(COMMANDS[args.command](args))
    except ParameterError as e:
        print(f"decstates: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as e:
        print(f"decstates: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DimensionMismatch, OSError) as e:
        print(f"decstates: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
