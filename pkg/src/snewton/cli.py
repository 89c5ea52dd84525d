"""Command-line front end.

    snewton evolve --mass 2.09 --t-end 50 --output-dir out
    snewton bisect --bracket 1.0 1.5 --tol 0.05

Settings come from built-in defaults, then an optional ``key = value``
config file (``--config``), then flags. The effective configuration is
written to ``<output_dir>/manifest`` together with the results; passing
that file back through ``--config`` repeats the run.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, Optional, Sequence


from . import __version__
from .core import RadialGrid, gaussian_initial
from .errors import NumericalError, OutputError, SNError
from .evolve import EvolutionParams, evolve
from .experiments import (
    FateConfig,
    bisect_critical_mass,
    convergence_free_particle,
    convergence_poisson,
    manifest_entries,
    sweep_fates,
)
from .io import format_float, write_manifest, write_snapshot, write_timeseries
from .poisson import compute_potential
from .stationary import solve_groundstate

__all__ = ["COMMANDS", "RunConfig", "UsageError", "parse_config", "run", "main"]

log = logging.getLogger(__name__)

COMMANDS = ("evolve", "groundstate", "converge-poisson", "converge-free", "sweep", "bisect")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(SNError, ValueError):
    """Bad command line or config file; the message names the offending token."""


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one CLI run.

    Fields left as ``None`` take a command-specific default when the run
    starts (see :meth:`resolved`).
    """

    command: str
    mass: Optional[float] = None
    sigma: float = 1.0
    dr: Optional[float] = None
    n_points: Optional[int] = None
    dt_factor: Optional[float] = None
    absorber_amplitude: Optional[float] = None
    absorber_width: Optional[float] = None
    absorber_steepness: Optional[float] = None
    t_end: float = 10.0
    snapshot_interval: Optional[float] = None
    output_dir: str = "out"
    horizon: float = 20.0
    max_doublings: int = 7
    masses: Optional[tuple] = None
    bracket: tuple = (1.0, 1.5)
    tol: float = 0.05
    jobs: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"command: unknown command {self.command!r} (choose from {', '.join(COMMANDS)})")
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("command", "output_dir") or value is None:
                continue
            items = value if isinstance(value, tuple) else (value,)
            if f.name == "max_doublings":
                if value < 0:
                    raise UsageError(f"max_doublings: must be non-negative, got {value}")
                continue
            for item in items:
                if not (isinstance(item, (int, float)) and math.isfinite(item) and item > 0):
                    raise UsageError(f"{f.name}: must be positive, got {item}")
        if self.n_points is not None and self.n_points < 16:
            raise UsageError(f"n_points: must be at least 16, got {self.n_points}")
        if self.bracket is not None and (len(self.bracket) != 2 or not self.bracket[0] < self.bracket[1]):
            raise UsageError(f"bracket: need two increasing masses, got {self.bracket}")
        if self.command in ("evolve", "groundstate") and self.mass is None:
            raise UsageError(f"mass: required by the {self.command} command")
        if self.command == "sweep" and not self.masses:
            raise UsageError("masses: required by the sweep command")

    def resolved(self) -> "RunConfig":
        """Fill command-specific defaults for unset fields."""
        c = self
        if c.command in ("sweep", "bisect"):
            fate = FateConfig()
            return replace(
                c,
                dr=c.dr or fate.dr,
                n_points=c.n_points or int(round(fate.outer_radius / (c.dr or fate.dr))) + 1,
                dt_factor=c.dt_factor or fate.dt_factor,
                absorber_amplitude=c.absorber_amplitude or fate.absorber_amplitude,
                absorber_width=c.absorber_width or fate.absorber_width,
                absorber_steepness=c.absorber_steepness or (c.absorber_width or fate.absorber_width) / 4.0,
                snapshot_interval=c.snapshot_interval or fate.snapshot_interval,
            )
        if c.command == "groundstate":
            # ~400 points inside the 99% radius (about 9.95 / m^3), domain 3x that
            r99 = 9.95 * c.sigma / c.mass**3
            dr = c.dr or 2.0 ** math.floor(math.log2(r99 / 400.0))
            return replace(c, dr=dr, n_points=c.n_points or int(math.ceil(3.0 * r99 / dr)) + 1)
        if c.command == "converge-poisson":
            return replace(c, dr=c.dr or 1.0 / 128.0, n_points=c.n_points or int(round(8.0 / (c.dr or 1.0 / 128.0))) + 1)
        if c.command == "converge-free":
            dr = c.dr or 1.0 / 64.0
            return replace(
                c,
                dr=dr,
                n_points=c.n_points or int(round(16.0 / dr)) + 1,
                dt_factor=c.dt_factor or 0.1,
                snapshot_interval=c.snapshot_interval or 0.1,
            )
        dr = c.dr or 1.0 / 64.0
        width = c.absorber_width or 1.0
        return replace(
            c,
            dr=dr,
            n_points=c.n_points or int(round(16.0 / dr)) + 1,
            dt_factor=c.dt_factor or 0.1,
            absorber_amplitude=c.absorber_amplitude or 1.0,
            absorber_width=width,
            absorber_steepness=c.absorber_steepness or width / 4.0,
            snapshot_interval=c.snapshot_interval or 0.1,
        )

    @property
    def grid(self) -> RadialGrid:
        c = self.resolved()
        return RadialGrid(c.dr, c.n_points)

    def fate_config(self) -> FateConfig:
        c = self.resolved()
        return FateConfig(
            dr=c.dr,
            outer_radius=(c.n_points - 1) * c.dr,
            dt_factor=c.dt_factor,
            absorber_amplitude=c.absorber_amplitude,
            absorber_width=c.absorber_width,
            absorber_steepness=c.absorber_steepness,
            snapshot_interval=c.snapshot_interval,
            horizon=c.horizon,
            max_doublings=c.max_doublings,
        )

    def evolution_params(self) -> EvolutionParams:
        c = self.resolved()
        return EvolutionParams(
            dt_factor=c.dt_factor,
            absorber_amplitude=c.absorber_amplitude,
            absorber_width=c.absorber_width,
            absorber_steepness=c.absorber_steepness,
            t_end=c.t_end,
            snapshot_interval=c.snapshot_interval,
        )

    def manifest(self) -> dict:
        """Set fields as config-file entries."""
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}


def _float_list(text: str) -> tuple:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _flag_name(key: str) -> str:
    return "--" + key.replace("_", "-")


_CONVERTERS: dict[str, Callable[[str], object]] = {
    "command": str,
    "mass": float,
    "sigma": float,
    "dr": float,
    "n_points": int,
    "dt_factor": float,
    "absorber_amplitude": float,
    "absorber_width": float,
    "absorber_steepness": float,
    "t_end": float,
    "snapshot_interval": float,
    "output_dir": str,
    "horizon": float,
    "max_doublings": int,
    "masses": _float_list,
    "bracket": _float_list,
    "tol": float,
    "jobs": int,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)

    def exit(self, status=0, message=None):
        if status:
            raise UsageError(message or "usage error")
        if message:
            sys.stdout.write(message)
        raise SystemExit(status)


def _build_parser() -> _Parser:
    p = _Parser(prog="snewton", description="Radial Schrödinger-Newton solver and experiments.")
    p.add_argument("command", nargs="?", default=argparse.SUPPRESS, help=" | ".join(COMMANDS))
    p.add_argument("--config", default=None, help="key = value settings file (flags take precedence)")
    p.add_argument("--version", action="version", version=f"snewton {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    for key, conv in _CONVERTERS.items():
        if key == "command":
            continue
        kwargs = {"dest": key, "default": argparse.SUPPRESS, "metavar": key.upper()}
        if key in ("masses", "bracket"):
            kwargs.update(nargs="+", type=str)
        else:
            kwargs["type"] = str
        p.add_argument(_flag_name(key), **kwargs)
    return p


def _convert(key: str, raw) -> object:
    if isinstance(raw, list):
        raw = " ".join(raw)
    try:
        return _CONVERTERS[key](raw)
    except ValueError as exc:
        raise UsageError(f"{key}: cannot parse {raw!r} ({exc})") from None


def read_config_file(path) -> dict[str, object]:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    values: dict[str, object] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc.strerror or exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        if key not in _CONVERTERS:
            raise UsageError(f"{key}: unknown key in {path}:{lineno}")
        values[key] = _convert(key, value.strip())
    return values


def parse_config(argv: Sequence[str], config_file=None) -> RunConfig:
    """Merge defaults, the config file and flags into a validated :class:`RunConfig`."""
    ns = vars(_build_parser().parse_args(list(argv)))
    path = ns.pop("config", None) or config_file
    ns.pop("verbose", None)
    values = read_config_file(path) if path is not None else {}
    for key, raw in ns.items():
        values[key] = _convert(key, raw)
    if "command" not in values:
        raise UsageError("command: missing command (choose from " + ", ".join(COMMANDS) + ")")
    return RunConfig(**values)


# -- commands ------------------------------------------------------------------


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(x if isinstance(x, str) else format_float(x) for x in row) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _cmd_evolve(cfg: RunConfig, out: Path) -> dict:
    state = gaussian_initial(cfg.grid, cfg.mass, cfg.sigma)
    params = cfg.evolution_params()
    write_snapshot(state, compute_potential(state), out / "snapshot_initial.csv")
    final, records = evolve(state, params)
    write_timeseries(records, out / "timeseries.csv")
    write_snapshot(final, compute_potential(final), out / "snapshot_final.csv")
    last = records[-1]
    return {"final_t": last.t, "final_norm": last.norm, "final_energy_expectation": last.energy_expectation}


def _cmd_groundstate(cfg: RunConfig, out: Path) -> dict:
    gs = solve_groundstate(cfg.mass, cfg.grid)
    write_snapshot(gs.as_wave_state(), gs.potential(), out / "groundstate.csv")
    return {"energy": gs.E, "energy_coefficient": gs.E / cfg.mass**5, "node_count": gs.node_count}


def _cmd_converge_poisson(cfg: RunConfig, out: Path) -> dict:
    res = convergence_poisson([cfg.dr, cfg.dr / 2], m=cfg.mass or 1.0, sigma=cfg.sigma, outer_radius=8.0)
    rows = ((dr, x, e, s) for dr, xs, es, ss in zip(res.resolutions, res.x, res.errors, res.scaled) for x, e, s in zip(xs, es, ss))
    _write_rows(out / "poisson_convergence.csv", ("dr", "r", "rel_error", "scaled_error"), rows)
    return {"max_errors": tuple(float(e) for e in res.max_errors), "ratio": float(res.ratios[0])}


def _cmd_converge_free(cfg: RunConfig, out: Path) -> dict:
    res = convergence_free_particle(
        [cfg.dr, cfg.dr / 2],
        t_end=cfg.t_end,
        m=cfg.mass or 1.0,
        sigma=cfg.sigma,
        outer_radius=(cfg.n_points - 1) * cfg.dr,
        dt_factor=cfg.dt_factor,
        snapshot_interval=cfg.snapshot_interval,
    )
    rows = ((dr, t, e, s) for dr, ts, es, ss in zip(res.resolutions, res.x, res.errors, res.scaled) for t, e, s in zip(ts, es, ss))
    _write_rows(out / "free_convergence.csv", ("dr", "t", "l1_error", "scaled_error"), rows)
    return {"final_errors": tuple(float(e[-1]) for e in res.errors), "ratio": float(res.errors[0][-1] / res.errors[1][-1])}


_FATE_FIELDS = ("mass", "fate", "r_peak_max", "turnaround_time", "v_peak_final", "v_escape_final", "horizon", "first_expansion_time")


def _fate_rows(reports):
    for rep in reports:
        d = rep.as_dict()
        yield tuple("" if d[k] is None else d[k] for k in _FATE_FIELDS)


def _cmd_sweep(cfg: RunConfig, out: Path) -> dict:
    fate_cfg = cfg.fate_config()
    reports = sweep_fates(cfg.masses, fate_cfg, cfg.horizon, cfg.max_doublings, cfg.jobs)
    ordered = [reports[m] for m in sorted(reports)]
    _write_rows(out / "fates.csv", _FATE_FIELDS, _fate_rows(ordered))
    return {f"fate[{format_float(r.mass)}]": r.fate.value for r in ordered}


def _cmd_bisect(cfg: RunConfig, out: Path) -> dict:
    lo, hi = cfg.bracket
    res = bisect_critical_mass(lo, hi, cfg.tol, cfg.fate_config())
    _write_rows(out / "bisection.csv", _FATE_FIELDS, _fate_rows(res.reports))
    return {"interval": (res.lo, res.hi)}


_COMMAND_FUNCS = {
    "evolve": _cmd_evolve,
    "groundstate": _cmd_groundstate,
    "converge-poisson": _cmd_converge_poisson,
    "converge-free": _cmd_converge_free,
    "sweep": _cmd_sweep,
    "bisect": _cmd_bisect,
}


def run(cfg: RunConfig) -> dict:
    """Execute one configured command; returns the summary written to the manifest."""
    cfg = cfg.resolved()
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror or exc}") from exc
    summary = _COMMAND_FUNCS[cfg.command](cfg, out)
    settings = cfg.manifest()
    metadata = {k: v for k, v in manifest_entries(cfg.command).items() if k != "experiment"}
    metadata.update({f"result.{k}": v for k, v in summary.items()})
    write_manifest(settings, out / "manifest", metadata)
    return summary


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING)
    try:
        cfg = parse_config(argv)
        summary = run(cfg)
    except UsageError as exc:
        print(f"snewton: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"snewton: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OutputError as exc:
        print(f"snewton: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SNError, ValueError) as exc:
        print(f"snewton: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for key, value in summary.items():
        print(f"{key} = {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
