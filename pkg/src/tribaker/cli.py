"""Command line: ``tribaker {sweep,render,spectrum,orbits}``.

Exit codes: 0 success, 2 configuration error, 3 near-defective spectrum,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import io as tio
from .classical import periodic_orbits, periodic_words
from .pipeline import PROFILES, ConfigError, RunConfig, render_distribution, run_sweep
from .quantum import Ordering, open_map
from .repeller import Kind
from .spectral import NearDefectiveSpectrumError, decompose
from .torus import PhaseGrid

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("tribaker")


def parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        sizes = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 128 or 128x96, got {text!r}")
    if len(sizes) == 1:
        sizes *= 2
    if len(sizes) != 2 or min(sizes) < 1:
        raise argparse.ArgumentTypeError(f"grid must look like 128 or 128x96, got {text!r}")
    return sizes[0], sizes[1]


def _common(p: argparse.ArgumentParser, multi: bool):
    nargs = "+" if multi else None
    p.add_argument("--n", type=int, nargs=nargs, help="Hilbert space dimension(s), multiples of 3")
    p.add_argument("--reflectivity", "-R", type=float, nargs=nargs, help="reflectivity value(s) in [0, 1]")
    p.add_argument("--ordering", choices=[o.value for o in Ordering], default=Ordering.UP.value,
                   help="where the opening projector sits (default UP)")
    p.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tribaker", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="sigma and mu over N and R")
    _common(sw, multi=True)
    sw.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    sw.add_argument("--subset", type=int, help="number j of longest-lived resonances (default 32)")
    sw.add_argument("--state", type=int, nargs="+", help="state indices i (default 6 10 16)")
    sw.add_argument("--grid", type=parse_grid, help="evaluation grid, e.g. 128 or 128x128")
    sw.add_argument("--kind", nargs="+", choices=[Kind.SCALED_HUSIMI.value, Kind.SCALED_LR.value])
    sw.add_argument("--samples", type=int)
    sw.add_argument("--workers", type=int)
    sw.add_argument("--images", action="store_true", help="also write grid files and heatmaps")

    rd = sub.add_parser("render", help="phase-space picture of one field")
    _common(rd, multi=False)
    rd.add_argument("--kind", choices=[k.value for k in Kind if k is not Kind.UNIFORM], default=Kind.LR.value)
    rd.add_argument("--state", type=int, default=1)
    rd.add_argument("--subset", type=int, default=32)
    rd.add_argument("--grid", type=parse_grid, default=(128, 128))
    rd.add_argument("--orbits", type=int, nargs="*", default=[], help="overlay periodic orbits of these periods")
    rd.add_argument("--no-png", action="store_true")

    sp = sub.add_parser("spectrum", help="export the resonance spectrum")
    _common(sp, multi=False)
    sp.add_argument("--eigenvectors", action="store_true", help="also write the binary eigenvector blob")

    ob = sub.add_parser("orbits", help="periodic orbit table of the closed map")
    ob.add_argument("--period", type=int, nargs="+", default=[1, 2])
    ob.add_argument("--out", type=Path, help="CSV file (default stdout)")
    return parser


def _sweep(args) -> int:
    overrides = dict(
        N_list=args.n, R_list=args.reflectivity, j_subset=args.subset, state_indices=args.state,
        grid=args.grid, kinds=args.kind, samples=args.samples, workers=args.workers,
        ordering=args.ordering, images=args.images or None,
        out=str(args.out) if args.out else f"runs/{args.profile}",
    )
    config = RunConfig.from_profile(args.profile, **overrides).validate()
    result = run_sweep(config)
    for f in result.failures:
        log.warning("cell failed: %s", f)
    print(f"{len(result.reports)} report rows, {len(result.failures)} failed cells -> {result.out}")
    return EXIT_NUMERIC if result.diagnostic else EXIT_OK


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError([f"--{n} is required" for n in missing])


def _render(args) -> int:
    _require(args, "n", "reflectivity")
    out = args.out or Path("runs/render")
    stem = out / f"{args.kind}_N{args.n}_R{args.reflectivity:g}_i{args.state}"
    try:
        r = render_distribution(args.n, args.reflectivity, args.kind, stem, i=args.state, j=args.subset,
                                grid=PhaseGrid(*args.grid), ordering=args.ordering,
                                orbit_periods=args.orbits, png=not args.no_png)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError([str(exc)]) from exc
    for f in r.files:
        print(f)
    return EXIT_OK


def _spectrum(args) -> int:
    _require(args, "n", "reflectivity")
    try:
        qmap = open_map(args.n, args.reflectivity, args.ordering)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    res = decompose(qmap)
    out = args.out or Path("runs/spectrum")
    out.mkdir(parents=True, exist_ok=True)
    stem = f"spectrum_N{args.n}_R{args.reflectivity:g}"
    print(tio.write_spectrum_csv(res, out / f"{stem}.csv"))
    if args.eigenvectors:
        print(tio.write_eigenvectors(res, out / f"{stem}.tbe"))
    if res.null_dimension:
        print(f"{res.null_dimension} resonances at or near zero left unpaired")
    return EXIT_OK


def _orbits(args) -> int:
    rows = []
    for T in args.period:
        try:
            words = periodic_words(T)
        except ValueError as exc:
            raise ConfigError([str(exc)]) from exc
        for w, orbit in zip(words, periodic_orbits(T)):
            for k, x in enumerate(orbit):
                rows.append((T, "".join(map(str, w)), k, repr(x.q), repr(x.p)))
    header = ("period", "word", "point", "q", "p")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows([header, *rows])
        print(args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerows([header, *rows])
    return EXIT_OK


COMMANDS = {"sweep": _sweep, "render": _render, "spectrum": _spectrum, "orbits": _orbits}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except NearDefectiveSpectrumError as exc:
        print(f"numerical diagnostic: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
