"""Parameter sweeps, figure presets, quasienergy tracking and resonance assignment."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import __version__
from .errors import ConfigError, SolverError, TruncationError
from .floquet import FloquetSolution, build_sambe, circular_distance, dressed_basis_for, solve_floquet
from .hamiltonian import ModelParams, fourier_modes, qrm_hamiltonian
from .observables import default_times, excitation_series

log = logging.getLogger(__name__)

OUTPUTS = ("static_energies", "qrm_energies", "quasienergies", "mean_excitations", "timeseries")
PARAMETERS = {"eta0": "eta0", "eta_m": "eta_m", "etaM": "eta_m", "omega_m": "omega_m", "omegaM": "omega_m"}
MAX_FAILURE_FRACTION = 0.10
PRESET_POINTS = 201

PRESETS: dict[str, dict] = {
    "2a": dict(kind="sweep", parameter="eta0", lo=0.0, hi=1.0, base={"eta_m": 0.5},
               outputs=("static_energies", "qrm_energies")),
    "2b": dict(kind="sweep", parameter="eta_m", lo=0.0, hi=1.0, base={"eta0": 0.0},
               outputs=("static_energies", "qrm_energies")),
    "2c": dict(kind="sweep", parameter="eta_m", lo=0.0, hi=1.0, base={"eta0": 0.0, "omega_m": 0.5},
               outputs=("quasienergies", "static_energies")),
    "3a": dict(kind="timeseries", base={"eta0": 0.0, "eta_m": 0.2, "omega_m": 0.5, "gamma": 0.1}),
    "3b": dict(kind="timeseries", base={"eta0": 0.0, "eta_m": 0.5, "omega_m": 0.5, "gamma": 0.1}),
    "3c": dict(kind="sweep", parameter="eta_m", lo=0.0, hi=1.2, base={"eta0": 0.0, "omega_m": 0.5, "gamma": 0.1},
               outputs=("mean_excitations", "static_energies")),
    "3d": dict(kind="sweep", parameter="omega_m", lo=0.2, hi=2.0, base={"eta0": 0.0, "eta_m": 0.5, "gamma": 0.1},
               outputs=("mean_excitations", "static_energies")),
}


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep over ``linspace(lo, hi, points)``.

    The swept field of ``base`` is ignored.  Points whose sideband truncation is
    too small are retried with ``l_max`` raised by ``l_max_step`` up to
    ``l_max_cap``.
    """

    parameter: str
    lo: float
    hi: float
    points: int
    base: ModelParams = field(default_factory=ModelParams)
    outputs: tuple[str, ...] = ("static_energies",)
    workers: int = 1
    l_max_step: int = 4
    l_max_cap: int = 32

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ConfigError(f"cannot sweep {self.parameter!r}; choose from {sorted(set(PARAMETERS.values()))}")
        if not self.lo < self.hi:
            raise ConfigError("sweep range needs lo < hi")
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ConfigError(f"unknown sweep outputs: {sorted(unknown)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def field_name(self) -> str:
        return PARAMETERS[self.parameter]

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)

    def params_at(self, value: float) -> ModelParams:
        return self.base.replace(**{self.field_name: float(value)})


@dataclass(eq=False)
class PointRecord:
    index: int
    value: float
    params: ModelParams
    static_energies: np.ndarray | None = None
    parities: np.ndarray | None = None
    qrm_energies: np.ndarray | None = None
    floquet: FloquetSolution | None = None
    mean_cav: float | None = None
    mean_tls: float | None = None
    series: object | None = None
    error: str | None = None

    @property
    def quasienergies(self) -> np.ndarray | None:
        return None if self.floquet is None else self.floquet.quasienergies

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(eq=False)
class SweepResult:
    spec: SweepSpec
    grid: np.ndarray
    records: list[PointRecord]
    version: str = __version__

    @property
    def failures(self) -> list[PointRecord]:
        return [r for r in self.records if not r.ok]


class SweepError(SolverError):
    def __init__(self, message: str, result: SweepResult):
        super().__init__(message)
        self.result = result


def solve_with_escalation(p: ModelParams, l_max_step: int = 4, l_max_cap: int = 32):
    """Solve the Floquet problem, enlarging ``l_max`` on sideband truncation failures.

    Returns ``(params_used, solution)``.
    """
    basis = dressed_basis_for(p)
    modes = fourier_modes(p)
    projected = np.einsum("ai,mab,bj->mij", basis.states.conj(), modes, basis.states)
    current = p
    while True:
        try:
            K = build_sambe(current, basis, projected)
            return current, solve_floquet(K, current, basis)
        except TruncationError:
            nxt = current.l_max + l_max_step
            if l_max_step <= 0 or nxt > l_max_cap:
                raise
            log.info("retrying %s with l_max=%d", current, nxt)
            current = current.replace(l_max=nxt)


def evaluate_point(
    index: int,
    value: float,
    p: ModelParams,
    outputs: Sequence[str],
    l_max_step: int = 4,
    l_max_cap: int = 32,
) -> PointRecord:
    """Compute the requested outputs at one parameter point; solver errors are captured."""
    rec = PointRecord(index=index, value=float(value), params=p)
    try:
        if "static_energies" in outputs or "quasienergies" in outputs or "mean_excitations" in outputs:
            basis = dressed_basis_for(p)
            rec.static_energies = basis.energies
            rec.parities = basis.parities
        if "qrm_energies" in outputs:
            rec.qrm_energies = np.linalg.eigvalsh(qrm_hamiltonian(p))[: p.n_j]
        if {"quasienergies", "mean_excitations", "timeseries"} & set(outputs):
            used, sol = solve_with_escalation(p, l_max_step, l_max_cap)
            rec.params = used
            rec.floquet = sol
            if {"mean_excitations", "timeseries"} & set(outputs):
                series = excitation_series(sol, used, default_times(used))
                rec.mean_cav, rec.mean_tls = series.mean_cav, series.mean_tls
                if "timeseries" in outputs:
                    rec.series = series
            if "quasienergies" not in outputs and "timeseries" not in outputs:
                rec.floquet = _strip(sol)
    except (SolverError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _strip(sol: FloquetSolution) -> FloquetSolution:
    # keep quasienergies but drop the heavy sideband array
    from dataclasses import replace

    return replace(sol, sidebands=np.empty((0,)))


def _evaluate(args):
    return evaluate_point(*args)


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate every grid point; results are ordered by grid index whatever the worker count."""
    grid = spec.grid
    tasks = [
        (i, v, spec.params_at(v), tuple(spec.outputs), spec.l_max_step, spec.l_max_cap)
        for i, v in enumerate(grid)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * spec.workers))))
    else:
        records = [_evaluate(t) for t in tasks]
    result = SweepResult(spec=spec, grid=grid, records=records)
    failed = result.failures
    for r in failed:
        log.warning("point %d (%s=%.6g) failed: %s", r.index, spec.field_name, r.value, r.error)
    if len(failed) > MAX_FAILURE_FRACTION * len(records):
        raise SweepError(f"{len(failed)} of {len(records)} sweep points failed", result)
    return result


def preset_spec(name: str, base: ModelParams, points: int = PRESET_POINTS, workers: int = 1) -> SweepSpec:
    preset = PRESETS[name]
    if preset["kind"] != "sweep":
        raise ConfigError(f"preset {name} is a time series, not a sweep")
    return SweepSpec(
        parameter=preset["parameter"],
        lo=preset["lo"],
        hi=preset["hi"],
        points=points,
        base=base,
        outputs=preset["outputs"],
        workers=workers,
    )


# --- quasienergy tracking -------------------------------------------------------------


@dataclass
class Track:
    track_id: int
    indices: list[int] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    wraps: list[int] = field(default_factory=list)
    parity: float | None = None


@dataclass(frozen=True)
class Gap:
    track_a: int
    track_b: int
    index: int
    value: float
    gap: float
    same_parity: bool | None


@dataclass
class TrackSet:
    tracks: list[Track]
    gaps: list[Gap]
    breaks: list[tuple[int, str]]


def track_modes(
    grid: Sequence[float],
    energies: Sequence[np.ndarray],
    overlaps: Sequence[np.ndarray | None],
    period: float | None = None,
    parities: Sequence[np.ndarray | None] | None = None,
    min_overlap: float = 0.5,
    ambiguity: float = 0.05,
) -> TrackSet:
    """Connect modes across adjacent points by maximal overlap.

    Args:
        grid: swept parameter values.
        energies: per point, the mode energies.
        overlaps: ``overlaps[i]`` is ``|<prev_a|cur_b>|`` between points ``i-1``
            and ``i`` (``overlaps[0]`` is ignored).
        period: zone width for folded quasienergies, or ``None`` for plain energies.
        parities: optional per-mode symmetry labels, used to flag gap pairs.
        min_overlap: matches weaker than this end the track.
        ambiguity: if the runner-up candidate is within this of the best overlap the
            track is broken instead of guessed.

    Returns:
        Tracks, local separation minima between every pair of tracks, and breaks.
    """
    tracks: list[Track] = []
    breaks: list[tuple[int, str]] = []

    def new_track(i, b):
        tr = Track(track_id=len(tracks), parity=None if parities is None or parities[i] is None else float(parities[i][b]))
        tr.indices.append(i)
        tr.energies.append(float(energies[i][b]))
        tracks.append(tr)
        return tr.track_id

    active = {b: new_track(0, b) for b in range(len(energies[0]))}
    for i in range(1, len(energies)):
        O = np.abs(np.asarray(overlaps[i]))
        rows, cols = linear_sum_assignment(-O)
        nxt = {}
        for r, c in zip(rows, cols):
            best = O[r, c]
            others = np.concatenate((np.delete(O[r], c), np.delete(O[:, c], r)))
            runner = others.max() if others.size else 0.0
            if r not in active:
                continue
            if best < min_overlap or best - runner < ambiguity:
                breaks.append((i, f"mode {r}->{c}: overlap {best:.3f}, runner-up {runner:.3f}"))
                continue
            tid = active[r]
            tr = tracks[tid]
            e = float(energies[i][c])
            if period is not None and abs(e - tr.energies[-1]) > period / 2:
                tr.wraps.append(i)
            tr.indices.append(i)
            tr.energies.append(e)
            nxt[c] = tid
        for c in range(len(energies[i])):
            if c not in nxt:
                nxt[c] = new_track(i, c)
        active = nxt

    gaps = []
    for a in range(len(tracks)):
        for b in range(a + 1, len(tracks)):
            ta, tb = tracks[a], tracks[b]
            common = sorted(set(ta.indices) & set(tb.indices))
            if len(common) < 3:
                continue
            ea = dict(zip(ta.indices, ta.energies))
            eb = dict(zip(tb.indices, tb.energies))
            x = np.array([ea[k] for k in common])
            y = np.array([eb[k] for k in common])
            sep = circular_distance(x, y, period) if period is not None else np.abs(x - y)
            for k in range(1, len(common) - 1):
                contiguous = common[k - 1] == common[k] - 1 and common[k + 1] == common[k] + 1
                if contiguous and sep[k] < sep[k - 1] and sep[k] <= sep[k + 1]:
                    same = None if ta.parity is None or tb.parity is None else ta.parity == tb.parity
                    gaps.append(Gap(a, b, common[k], float(grid[common[k]]), float(sep[k]), same))
    return TrackSet(tracks=tracks, gaps=gaps, breaks=breaks)


def floquet_overlaps(prev: FloquetSolution, cur: FloquetSolution) -> np.ndarray:
    """``max_s |<a|shift_s b>|`` between extended eigenvectors of two solutions.

    Every relative harmonic shift ``s`` is tried.  Near an n-photon anticrossing a
    mode's sidebands split into clusters n harmonics apart, so the selected replica
    can move by more than one harmonic between neighbouring points.
    """
    def product(sol):
        return np.einsum("alj,dj->ald", sol.sidebands, sol.basis.states)

    A, B = product(prev), product(cur)
    # points solved with different l_max: zero-pad onto a common harmonic range
    L = max(A.shape[1], B.shape[1])
    A, B = (np.pad(X, ((0, 0), ((L - X.shape[1]) // 2,) * 2, (0, 0))) for X in (A, B))
    best = np.zeros((A.shape[0], B.shape[0]))
    for s in range(-(L - 1), L):
        if s >= 0:
            ov = np.einsum("ald,bld->ab", A[:, : L - s].conj(), B[:, s:])
        else:
            ov = np.einsum("ald,bld->ab", A[:, -s:].conj(), B[:, : L + s])
        best = np.maximum(best, np.abs(ov))
    return best


def quasienergy_tracks(result: SweepResult, **kwargs) -> TrackSet:
    """Continuous quasienergy curves for a sweep that computed ``quasienergies``."""
    recs = result.records
    usable = [r for r in recs if r.ok and r.floquet is not None and r.floquet.sidebands.ndim == 3]
    if len(usable) < 3:
        raise ValueError("quasienergy tracking needs at least three solved points")
    overlaps = [None]
    for prev, cur in zip(usable, usable[1:]):
        overlaps.append(floquet_overlaps(prev.floquet, cur.floquet))
    # all points of one sweep share the drive frequency unless omega_m itself is swept
    period = None if result.spec.field_name == "omega_m" else usable[0].floquet.omega_m
    ts = track_modes(
        [r.value for r in usable],
        [r.floquet.quasienergies for r in usable],
        overlaps,
        period=period,
        parities=[r.floquet.parities for r in usable],
        **kwargs,
    )
    # translate positions in ``usable`` back to grid indices
    for tr in ts.tracks:
        tr.indices = [usable[k].index for k in tr.indices]
        tr.wraps = [usable[k].index for k in tr.wraps]
    ts.gaps = [Gap(g.track_a, g.track_b, usable[g.index].index, g.value, g.gap, g.same_parity) for g in ts.gaps]
    ts.breaks = [(usable[k].index, msg) for k, msg in ts.breaks]
    return ts


# --- resonance assignment -------------------------------------------------------------


@dataclass(frozen=True)
class Resonance:
    observable: str
    index: int
    value: float
    height: float
    order: int
    lower: int
    upper: int
    residual: float


def local_maxima(y: np.ndarray, floor: float = 0.0) -> list[int]:
    """Interior indices that beat the left neighbour and are not beaten by the right one."""
    y = np.asarray(y, dtype=float)
    return [k for k in range(1, len(y) - 1) if y[k] > y[k - 1] and y[k] >= y[k + 1] and y[k] > floor]


def assign_transition(energies, parities, omega_m, sources=(0,), parity_filter=True):
    """Best ``(n, j, k, residual)`` minimising ``|E_k - E_j - n omega_m|`` with ``n >= 1``."""
    best = None
    for j in sources:
        for k in range(j + 1, len(energies)):
            if parity_filter and parities is not None and parities[k] != parities[j]:
                continue
            gap = energies[k] - energies[j]
            n = max(1, int(np.rint(gap / omega_m)))
            res = abs(gap - n * omega_m)
            if best is None or res < best[3]:
                best = (n, j, k, float(res))
    return best


def locate_resonances(
    result: SweepResult,
    sources: Sequence[int] = (0,),
    parity_filter: bool = True,
    rel_floor: float = 1e-3,
) -> list[Resonance]:
    """Assign multiphoton transitions to the peaks of the mean excitation numbers.

    For every local maximum of ``mean_cav`` and ``mean_tls`` above
    ``rel_floor * max``, the static (drive-renormalized) energies at that point are
    searched for the level pair and photon number ``n`` with the smallest detuning
    ``|E_k - E_j - n omega_m|``.  Only transitions out of ``sources`` (the initial
    dressed state by default) are considered and, with ``parity_filter``, only
    pairs of equal parity, since the drive conserves parity.
    """
    recs = [r for r in result.records if r.ok and r.mean_cav is not None and r.static_energies is not None]
    report = []
    for name in ("cav", "tls"):
        y = np.array([getattr(r, f"mean_{name}") for r in recs])
        if y.size < 3 or not np.any(y > 0):
            continue
        for k in local_maxima(y, floor=rel_floor * y.max()):
            r = recs[k]
            hit = assign_transition(r.static_energies, r.parities, r.params.omega_m, sources, parity_filter)
            if hit is None:
                continue
            n, j, kk, res = hit
            report.append(Resonance(name, r.index, r.value, float(y[k]), n, j, kk, res))
    return report
