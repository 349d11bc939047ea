"""Run configuration, the measure sweep on disk, and single-cell renders."""

from __future__ import annotations

import dataclasses
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as tio
from .classical import ReflectivityConfig, classical_repeller, periodic_orbits, weighted_density
from .measures import SCALED_KINDS, measure_sweep
from .quantum import Ordering, open_map
from .repeller import Kind, PhaseDistribution, PhaseSpace
from .spectral import decompose
from .torus import PhaseGrid

PROFILES = {
    "desk": dict(N_list=(48, 96, 192), R_list=(1.0, 0.1, 0.05, 0.0), grid=(128, 128)),
    "paper": dict(N_list=(384, 768, 1536, 3936), R_list=(1.0, 0.1, 0.05, 0.0), grid=(500, 500)),
}


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` lists every violated constraint."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    N_list: tuple[int, ...] = PROFILES["desk"]["N_list"]
    R_list: tuple[float, ...] = PROFILES["desk"]["R_list"]
    j_subset: int = 32
    state_indices: tuple[int, ...] = (6, 10, 16)
    grid: tuple[int, int] = PROFILES["desk"]["grid"]
    ordering: str = Ordering.UP.value
    kinds: tuple[str, ...] = tuple(k.value for k in SCALED_KINDS)
    samples: int = 1000
    bins: int = 50
    w_max: float = 6.0
    workers: int = 1
    images: bool = False
    out: str = "runs/sweep"

    @classmethod
    def from_profile(cls, name: str, **overrides) -> "RunConfig":
        if name not in PROFILES:
            raise ConfigError([f"unknown profile {name!r}; choose from {sorted(PROFILES)}"])
        return cls(**{**PROFILES[name], **{k: v for k, v in overrides.items() if v is not None}})

    def __post_init__(self):
        # normalize sequences so that equality and JSON round-trips are exact
        object.__setattr__(self, "N_list", tuple(int(n) for n in self.N_list))
        object.__setattr__(self, "R_list", tuple(float(r) for r in self.R_list))
        object.__setattr__(self, "state_indices", tuple(int(i) for i in self.state_indices))
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        object.__setattr__(self, "kinds", tuple(str(k) for k in self.kinds))

    def validate(self) -> "RunConfig":
        errors = []
        if not self.N_list:
            errors.append("N list is empty")
        for N in self.N_list:
            if N < 3 or N % 3:
                errors.append(f"N={N} is not a positive multiple of 3")
        if not self.R_list:
            errors.append("reflectivity list is empty")
        for R in self.R_list:
            if not (0.0 <= R <= 1.0):
                errors.append(f"reflectivity {R} outside [0, 1]")
        if self.j_subset < 1:
            errors.append(f"subset size {self.j_subset} must be positive")
        if self.N_list and self.j_subset > min(self.N_list):
            errors.append(f"subset size {self.j_subset} exceeds smallest N={min(self.N_list)}")
        if not self.state_indices:
            errors.append("no state indices")
        for i in self.state_indices:
            if not (1 <= i <= self.j_subset):
                errors.append(f"state index {i} outside [1, {self.j_subset}]")
        if len(self.grid) != 2 or min(self.grid) < 1:
            errors.append(f"grid {self.grid} must be two positive sizes")
        if self.ordering not in {o.value for o in Ordering}:
            errors.append(f"ordering {self.ordering!r} not in {[o.value for o in Ordering]}")
        for k in self.kinds:
            if k not in {s.value for s in SCALED_KINDS}:
                errors.append(f"kind {k!r} is not a scaled representation")
        if self.samples < 100:
            errors.append(f"samples {self.samples} < 100")
        if self.bins < 10:
            errors.append(f"bins {self.bins} < 10")
        if not self.w_max > 0:
            errors.append(f"w_max {self.w_max} must be positive")
        if self.workers < 1:
            errors.append(f"workers {self.workers} must be at least 1")
        if errors:
            raise ConfigError(errors)
        return self

    @property
    def phase_grid(self) -> PhaseGrid:
        return PhaseGrid(*self.grid)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError([f"unknown config keys {sorted(unknown)}"])
        return cls(**d)


def _versions() -> dict:
    import scipy

    return {"tribaker": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def write_manifest(out: Path, config: dict, files: list[Path], timings: dict, failures: list) -> Path:
    manifest = {
        "config": config,
        "versions": _versions(),
        "timings": timings,
        "files": {p.name: tio.sha256(p) for p in sorted(files)},
        "failures": failures,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def verify_manifest(out) -> list[str]:
    """Names of listed files that are missing or whose hash no longer matches."""
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    bad = []
    for name, digest in manifest["files"].items():
        p = out / name
        if not p.exists() or tio.sha256(p) != digest:
            bad.append(name)
    return bad


def load_manifest_config(out) -> RunConfig:
    manifest = json.loads((Path(out) / "manifest.json").read_text())
    return RunConfig.from_dict(manifest["config"])


@dataclass
class SweepResult:
    out: Path
    reports: list
    averages: list
    failures: list = field(default_factory=list)

    @property
    def diagnostic(self) -> bool:
        return any(f.diagnostic for f in self.failures)


def run_sweep(config: RunConfig) -> SweepResult:
    """Sigma/mu report for every cell, written with a manifest into ``config.out``.

    Files: ``report.csv`` (one row per N, R, kind, state), ``averages.csv``
    (mu of the Husimi average and the repeller per N, R) and
    ``manifest.json``. Reruns overwrite byte-identical CSVs.
    """
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    reports, averages, failures = measure_sweep(
        config.N_list, config.R_list, config.state_indices, config.j_subset, config.phase_grid,
        kinds=config.kinds, ordering=config.ordering, samples=config.samples, bins=config.bins,
        w_max=config.w_max, workers=config.workers,
    )
    t_measure = time.perf_counter() - t0
    files = [tio.write_report_csv(reports, out / "report.csv"), tio.write_report_csv(averages, out / "averages.csv")]
    if config.images:
        failed = {(f.N, f.R) for f in failures}
        for N in config.N_list:
            for R in config.R_list:
                if (N, R) in failed:
                    continue
                for kind in config.kinds:
                    for i in config.state_indices:
                        files.extend(render_distribution(
                            N, R, kind, out / f"{kind}_N{N}_R{R:g}_i{i}", i=i, j=config.j_subset,
                            grid=config.phase_grid, ordering=config.ordering,
                        ).files)
    timings = {"measure_s": round(t_measure, 3), "total_s": round(time.perf_counter() - t0, 3)}
    failure_log = [{"N": f.N, "R": f.R, "reason": f.reason, "diagnostic": f.diagnostic} for f in failures]
    write_manifest(out, config.to_dict(), files, timings, failure_log)
    return SweepResult(out, reports, averages, failures)


@dataclass
class RenderResult:
    distribution: PhaseDistribution
    files: list
    overlay: list


def build_distribution(N: int, R: float, kind: Kind | str, i: int = 1, j: int = 32, grid: PhaseGrid | None = None,
                       ordering: str = Ordering.UP.value, seed: int = 0) -> PhaseDistribution:
    kind = Kind(kind)
    grid = grid or PhaseGrid(128, 128)
    if kind is Kind.UNIFORM:
        raise ValueError("nothing to render for a uniform field")
    if kind is Kind.COHERENT:
        return PhaseSpace(N, grid).coherent_reference()
    if kind is Kind.CLASSICAL:
        return classical_distribution(R, grid, seed=seed)
    res = decompose(open_map(N, R, ordering))
    uses_j = kind in (Kind.HUSIMI_AVERAGE, Kind.REPELLER, Kind.SCALED_HUSIMI, Kind.SCALED_LR)
    if i > len(res) or (uses_j and j > len(res)):
        raise ValueError(f"only {len(res)} resolved resonances for N={N}, R={R}")
    ps = PhaseSpace(N, grid)
    if kind is Kind.HUSIMI_R:
        return ps.resonance_husimi(res, i, "right")
    if kind is Kind.HUSIMI_L:
        return ps.resonance_husimi(res, i, "left")
    if kind is Kind.LR:
        return ps.resonance_lr(res, i)
    if kind is Kind.HUSIMI_AVERAGE:
        return ps.husimi_average(res, j)
    if kind is Kind.REPELLER:
        return ps.quantum_repeller(res, j)
    if kind is Kind.SCALED_HUSIMI:
        return ps.scaled_husimi(res, i, j)
    return ps.scaled_lr(res, i, j)


def classical_distribution(R: float, grid: PhaseGrid, samples: int = 400_000, steps: int = 16, seed: int = 0):
    q, p, w = classical_repeller(ReflectivityConfig(R), samples, steps, seed)
    dens = weighted_density(q, p, w, grid.n_q, grid.n_p)
    return PhaseDistribution(grid, dens, Kind.CLASSICAL, dict(R=R, samples=samples, steps=steps, seed=seed))


def render_distribution(N: int, R: float, kind: Kind | str, stem, i: int = 1, j: int = 32,
                        grid: PhaseGrid | None = None, ordering: str = Ordering.UP.value,
                        orbit_periods=(), png: bool = True) -> RenderResult:
    """Write ``<stem>.tbg`` (grid container) and ``<stem>.png`` for one field.

    ``orbit_periods`` overlays the points of every periodic orbit of those
    periods as white rings.
    """
    dist = build_distribution(N, R, kind, i, j, grid, ordering)
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    overlay = [tuple(x) for T in orbit_periods for orbit in periodic_orbits(T) for x in orbit]
    # stems such as "LR_N96_R0.05_i3" contain dots, so never use with_suffix here
    files = [tio.write_grid(dist, stem.parent / f"{stem.name}.tbg")]
    if png:
        files.append(tio.write_png(dist, stem.parent / f"{stem.name}.png", overlay=overlay))
    return RenderResult(dist, files, overlay)
