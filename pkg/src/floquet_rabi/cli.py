"""Command-line entry point.

    floquet-rabi fig {2a,2b,2c,3a,3b,3c,3d} [flags]
    floquet-rabi sweep --param eta_m --lo 0 --hi 1 --outputs quasienergies,mean_excitations
    floquet-rabi timeseries | quasienergies | selfcheck [flags]

Exit codes: 0 success, 1 configuration error, 2 solver error, 3 self-check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, SolverError
from .floquet import fold
from .hamiltonian import WAVEFORMS, ModelParams
from .observables import default_times, excitation_series
from .sweeps import (
    OUTPUTS,
    PRESET_POINTS,
    PRESETS,
    SweepSpec,
    locate_resonances,
    preset_spec,
    quasienergy_tracks,
    run_sweep,
    solve_with_escalation,
)

log = logging.getLogger("floquet_rabi")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_SELFCHECK = 0, 1, 2, 3
OUT_ENV = "FLOQUET_RABI_OUT"
TIME_POINTS = 2048

# flag name -> ModelParams field
PARAM_FLAGS = {
    "eta0": ("--eta0", float),
    "eta_m": ("--eta-m", float),
    "omega_m": ("--omega-m", float),
    "omega_a": ("--omega-a", float),
    "gamma": ("--gamma", float),
    "n_fock": ("--n-fock", int),
    "n_j": ("--n-j", int),
    "m_max": ("--m-max", int),
    "l_max": ("--l-max", int),
    "waveform": ("--waveform", str),
}
RUN_KEYS = {"out", "points", "workers", "seed"}
FILE_KEYS = {f.name for f in dataclasses.fields(ModelParams)} | RUN_KEYS


@dataclass
class RunConfig:
    """Fully resolved run configuration.

    Nothing draws random numbers, so ``seed`` is accepted and echoed but unused.
    """

    params: ModelParams
    command: str
    out: Path = Path(".")
    preset: str | None = None
    points: int | None = None
    workers: int = 1
    sweep_param: str | None = None
    lo: float | None = None
    hi: float | None = None
    outputs: tuple[str, ...] = ()
    seed: int | None = None
    verbose: bool = False

    def as_dict(self) -> dict:
        d = {
            "command": self.command,
            "preset": self.preset,
            "points": self.points,
            "workers": self.workers,
            "seed": self.seed,
            "params": self.params.as_dict(),
        }
        if self.command == "sweep":
            d.update(sweep_param=self.sweep_param, lo=self.lo, hi=self.hi, outputs=list(self.outputs))
        return d


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with parameter overrides")
    common.add_argument("--out", type=Path, help="output directory (env FLOQUET_RABI_OUT wins)")
    for name, (flag, typ) in PARAM_FLAGS.items():
        kwargs = {"dest": name, "type": typ, "default": None}
        if name == "waveform":
            kwargs["choices"] = WAVEFORMS
        common.add_argument(flag, **kwargs)
    common.add_argument("--points", type=int, default=None, help="sweep points or time samples")
    common.add_argument("--workers", type=int, default=None, help="parallel worker processes")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; nothing in the package draws random numbers")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="floquet-rabi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fig = sub.add_parser("fig", parents=[common], help="figure presets")
    fig.add_argument("preset", choices=sorted(PRESETS))
    sw = sub.add_parser("sweep", parents=[common], help="custom one-parameter sweep")
    sw.add_argument("--param", required=True, choices=["eta0", "eta_m", "omega_m"])
    sw.add_argument("--lo", type=float, required=True)
    sw.add_argument("--hi", type=float, required=True)
    sw.add_argument("--outputs", default="static_energies", help=f"comma list from {','.join(OUTPUTS)}")
    sub.add_parser("timeseries", parents=[common], help="excitation numbers versus time")
    sub.add_parser("quasienergies", parents=[common], help="Floquet spectrum at one point")
    sub.add_parser("selfcheck", parents=[common], help="run the invariant suite")
    return parser


def _load_config_file(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - FILE_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def parse_config(argv: Sequence[str] | None = None, env: dict | None = None) -> RunConfig:
    """Resolve defaults, preset, config file and flags (rightmost wins) into a :class:`RunConfig`."""
    env = os.environ if env is None else env
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            raise
        raise ConfigError("invalid command line") from None

    merged: dict = {f.name: f.default for f in dataclasses.fields(ModelParams)}
    run: dict = {"out": Path("."), "points": None, "workers": 1, "seed": None}
    preset = getattr(args, "preset", None)
    if preset is not None:
        merged.update(PRESETS[preset].get("base", {}))
    if args.config is not None:
        for key, value in _load_config_file(args.config).items():
            (run if key in RUN_KEYS else merged)[key] = value
    for name in PARAM_FLAGS:
        value = getattr(args, name)
        if value is not None:
            merged[name] = value
    for key in ("points", "workers", "out", "seed"):
        value = getattr(args, key)
        if value is not None:
            run[key] = value
    if env.get(OUT_ENV):
        run["out"] = env[OUT_ENV]

    try:
        params = ModelParams(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    points = run["points"]
    if points is not None and int(points) < 2:
        raise ConfigError("--points must be >= 2")
    workers = int(run["workers"])
    if workers < 1:
        raise ConfigError("--workers must be >= 1")

    cfg = RunConfig(
        params=params,
        command=args.command,
        out=Path(run["out"]),
        preset=preset,
        points=None if points is None else int(points),
        workers=workers,
    )
    if args.command == "sweep":
        outputs = tuple(o.strip() for o in args.outputs.split(",") if o.strip())
        bad = sorted(set(outputs) - set(OUTPUTS))
        if bad:
            raise ConfigError(f"unknown outputs: {', '.join(bad)}")
        if not args.lo < args.hi:
            raise ConfigError("--lo must be smaller than --hi")
        cfg.sweep_param, cfg.lo, cfg.hi, cfg.outputs = args.param, args.lo, args.hi, outputs
    cfg.seed, cfg.verbose = run["seed"], args.verbose
    return cfg


# --- CSV ------------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "nan" if math.isnan(v) else format(v, ".17g")
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence], cfg: RunConfig, notes: Sequence[str] = ()):
    header = [
        f"# floquet-rabi {__version__}",
        "# config: " + json.dumps(cfg.as_dict(), sort_keys=True),
        *[f"# {n}" for n in notes],
    ]
    body = [",".join(columns)] + [",".join(_fmt(v) for v in row) for row in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(header + body) + "\n")
    log.info("wrote %s", path)
    return path


def csv_body(path: Path) -> str:
    """CSV contents without the '#' header lines."""
    return "".join(line for line in Path(path).read_text().splitlines(True) if not line.startswith("#"))


def _padded(values, n):
    out = [float("nan")] * n
    if values is not None:
        for i, v in enumerate(values[:n]):
            out[i] = float(v)
    return out


def _failure_notes(result) -> list[str]:
    return [f"failed point {r.index} ({r.value:.17g}): {r.error}" for r in result.failures]


# --- commands -------------------------------------------------------------------------


def _sweep_tables(result, cfg: RunConfig, stem: str, column: str) -> list[Path]:
    n = cfg.params.n_j
    outs = result.spec.outputs
    notes = _failure_notes(result)
    written = []
    recs = result.records
    if "static_energies" in outs or "qrm_energies" in outs:
        cols = [column]
        if "static_energies" in outs:
            cols += [f"E_{j}" for j in range(n)]
        if "qrm_energies" in outs:
            cols += [f"Eqrm_{j}" for j in range(n)]
        rows = []
        for r in recs:
            row = [r.value]
            if "static_energies" in outs:
                row += _padded(r.static_energies, n)
            if "qrm_energies" in outs:
                row += _padded(r.qrm_energies, n)
            rows.append(row)
        name = f"{stem}.csv" if stem.startswith("fig2") else f"{stem}_energies.csv"
        written.append(write_csv(cfg.out / name, cols, rows, cfg, notes))
    if "quasienergies" in outs:
        cols = [column, "l_max"] + [f"eps_{a}" for a in range(n)] + ["E0_folded", "E1_folded"]
        rows = []
        for r in recs:
            folded = [float("nan")] * 2
            if r.static_energies is not None and r.params.omega_m > 0:
                folded = [fold(e, r.params.omega_m) for e in r.static_energies[:2]]
            rows.append([r.value, r.params.l_max] + _padded(r.quasienergies, n) + folded)
        written.append(write_csv(cfg.out / f"{stem}_quasienergies.csv", cols, rows, cfg, notes))
        written += _track_tables(result, cfg, stem, column)
    if "mean_excitations" in outs:
        rows = [[r.value, r.params.l_max, r.mean_cav, r.mean_tls] for r in recs]
        name = f"{stem}.csv" if stem.startswith("fig3") else f"{stem}_mean_excitations.csv"
        written.append(write_csv(cfg.out / name, [column, "l_max", "nbar_cav", "nbar_tls"], rows, cfg, notes))
        res = locate_resonances(result)
        rrows = [[x.observable, x.value, x.height, x.order, x.lower, x.upper, x.residual] for x in res]
        written.append(
            write_csv(cfg.out / f"{stem}_resonances.csv",
                      ["observable", column, "height", "n", "j", "k", "residual"], rrows, cfg)
        )
    if "timeseries" in outs:
        rows = []
        for r in recs:
            if r.series is None:
                continue
            T = r.params.period
            for t, a, b in zip(r.series.times, r.series.n_cav, r.series.n_tls):
                rows.append([r.value, t / T, a, b])
        written.append(
            write_csv(cfg.out / f"{stem}_timeseries.csv", [column, "t_over_T", "n_cav", "n_tls"], rows, cfg, notes)
        )
    return written


def _track_tables(result, cfg: RunConfig, stem: str, column: str) -> list[Path]:
    try:
        ts = quasienergy_tracks(result)
    except ValueError as exc:
        log.warning("no quasienergy tracks: %s", exc)
        return []
    trows = []
    for tr in ts.tracks:
        for idx, e in zip(tr.indices, tr.energies):
            trows.append([tr.track_id, result.grid[idx], e, tr.parity, idx in tr.wraps])
    breaks = [f"track break at point {i}: {msg}" for i, msg in ts.breaks]
    grows = [[g.track_a, g.track_b, g.value, g.gap, g.same_parity] for g in ts.gaps]
    return [
        write_csv(cfg.out / f"{stem}_tracks.csv", ["track", column, "eps", "parity", "wrapped"], trows, cfg, breaks),
        write_csv(cfg.out / f"{stem}_gaps.csv", ["track_a", "track_b", column, "gap", "same_parity"], grows, cfg),
    ]


def _timeseries(cfg: RunConfig, stem: str) -> list[Path]:
    p = cfg.params
    used, sol = solve_with_escalation(p)
    times = default_times(used, points=cfg.points or TIME_POINTS)
    series = excitation_series(sol, used, times)
    T = used.period
    rows = [[t / T, a, b] for t, a, b in zip(series.times, series.n_cav, series.n_tls)]
    notes = [
        f"mean_cav={_fmt(series.mean_cav)} mean_tls={_fmt(series.mean_tls)} t_ss_over_T={_fmt(series.t_ss / T)}",
        f"l_max_used={used.l_max}",
        *series.warnings,
    ]
    return [write_csv(cfg.out / f"{stem}.csv", ["t_over_T", "n_cav", "n_tls"], rows, cfg, notes)]


def _quasienergies(cfg: RunConfig) -> list[Path]:
    used, sol = solve_with_escalation(cfg.params)
    rows = []
    for a in range(sol.n_modes):
        parity = None if sol.parities is None else sol.parities[a]
        rows.append([a, sol.quasienergies[a], parity, sol.bz_copies[a], sol.edge_weights[a], sol.centroids[a]])
    notes = [f"l_max_used={used.l_max}"] + [f"E_{j}={_fmt(e)}" for j, e in enumerate(sol.basis.energies)]
    cols = ["alpha", "eps", "parity", "bz_copy", "edge_weight", "centroid"]
    return [write_csv(cfg.out / "quasienergies.csv", cols, rows, cfg, notes)]


def _selfcheck(cfg: RunConfig) -> tuple[list[Path], bool]:
    from .selfcheck import run_checks

    results = run_checks(cfg.params)
    ok = all(r.passed for r in results)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: residual={r.residual:.3e} tol={r.tolerance:.3e}")
    rows = [[r.name, r.residual, r.tolerance, r.passed] for r in results]
    path = write_csv(cfg.out / "selfcheck.csv", ["check", "residual", "tolerance", "passed"], rows, cfg)
    return [path], ok


def run(cfg: RunConfig) -> int:
    """Execute a resolved configuration; returns the process exit code."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.command == "fig":
            preset = PRESETS[cfg.preset]
            stem = f"fig{cfg.preset}"
            if preset["kind"] == "timeseries":
                written = _timeseries(cfg, stem)
            else:
                spec = preset_spec(cfg.preset, cfg.params, cfg.points or PRESET_POINTS, cfg.workers)
                written = _sweep_tables(run_sweep(spec), cfg, stem, spec.field_name)
        elif cfg.command == "sweep":
            spec = SweepSpec(
                parameter=cfg.sweep_param, lo=cfg.lo, hi=cfg.hi, points=cfg.points or PRESET_POINTS,
                base=cfg.params, outputs=cfg.outputs, workers=cfg.workers,
            )
            written = _sweep_tables(run_sweep(spec), cfg, "sweep", spec.field_name)
        elif cfg.command == "timeseries":
            written = _timeseries(cfg, "timeseries")
        elif cfg.command == "quasienergies":
            written = _quasienergies(cfg)
        elif cfg.command == "selfcheck":
            written, ok = _selfcheck(cfg)
            if not ok:
                return EXIT_SELFCHECK
        else:  # pragma: no cover - argparse restricts the choices
            raise ConfigError(f"unknown command {cfg.command}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error ({cfg.command} {cfg.preset or ''}, params={cfg.params}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for path in written:
        print(path)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if cfg.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
