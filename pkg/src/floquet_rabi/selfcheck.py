"""Invariant suite behind ``floquet-rabi selfcheck``.

Each check returns a measured residual and the tolerance it must meet.  The
checks run on the resolved parameters, switching off the drive or raising the
sideband cutoff only where an invariant is defined for that limit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import jv

from .errors import SolverError
from .floquet import (
    build_sambe,
    dressed_basis_for,
    initial_overlaps,
    monodromy,
    quasienergies_from_monodromy,
    set_distance,
    solve,
    solve_floquet,
)
from .hamiltonian import (
    ModelParams,
    fourier_mode_analytic,
    fourier_modes,
    fourier_modes_numeric,
    h_fqr,
    qrm_hamiltonian,
    resynthesize,
    static_hamiltonian,
)
from .observables import dressed_raising, excitation_series, off_diagonal_bound
from .operators import quadrature_spectrum

log = logging.getLogger(__name__)

NORM_CHECK_L_MAX_EXTRA = 16


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


def bare_energies(p: ModelParams, count: int) -> np.ndarray:
    """Lowest ``count`` eigenvalues of the uncoupled model, ``n omega_c -+ omega_a / 2``."""
    n = np.arange(p.n_fock) * p.omega_c
    return np.sort(np.concatenate((n - p.omega_a / 2, n + p.omega_a / 2)))[:count]


def bessel_tail_bound(p: ModelParams, extra: int = 200) -> float:
    """Spectral-norm bound on ``h(t)`` minus its truncated harmonic sum.

    Each dropped harmonic ``m`` contributes at most ``omega_a * max_x |J_m(2 x eta_M)|``
    over the eigenvalues ``x`` of the truncated quadrature, and ``+m`` and ``-m`` both
    appear.
    """
    z = 2 * p.eta_m * quadrature_spectrum(p.n_fock).eigenvalues
    m = np.arange(p.m_max + 1, p.m_max + 1 + extra)
    return float(2 * p.omega_a * np.max(np.abs(jv(m[:, None], z[None, :])), axis=1).sum())


def resynthesis_error(p: ModelParams, samples: int = 64, modes: np.ndarray | None = None) -> tuple[float, float]:
    """``(max relative max-norm error, min ||h(t)||_max)`` over ``samples`` times in one period."""
    modes = fourier_modes(p) if modes is None else modes
    worst, smallest = 0.0, np.inf
    for t in np.linspace(0.0, p.period, samples, endpoint=False):
        h = h_fqr(t, p)
        scale = np.max(np.abs(h))
        worst = max(worst, np.max(np.abs(h - resynthesize(modes, t, p))) / scale)
        smallest = min(smallest, scale)
    return float(worst), float(smallest)


def _bare_spectrum(p: ModelParams):
    q = p.replace(eta0=0.0, eta_m=0.0, omega_a=p.omega_c)
    w = np.linalg.eigvalsh(static_hamiltonian(q))[: q.n_j]
    return [CheckResult("bare spectrum n*omega_c -+ omega_a/2", float(np.max(np.abs(w - bare_energies(q, q.n_j)))), 1e-12)]


def _qrm_reduction(p: ModelParams):
    q = p.replace(eta_m=0.0)
    a = np.linalg.eigvalsh(static_hamiltonian(q))[: q.n_j]
    b = np.linalg.eigvalsh(qrm_hamiltonian(q))[: q.n_j]
    out = [CheckResult("static Hamiltonian equals Rabi Hamiltonian at eta_m=0", float(np.max(np.abs(a - b))), 1e-12)]
    sol = solve(q)
    folded = dressed_basis_for(q).energies
    out.append(CheckResult("undriven quasienergies equal folded energies",
                           set_distance(sol.quasienergies, folded, q.omega_m), 1e-9))
    return out


def _harmonics(p: ModelParams):
    modes = fourier_modes(p)
    mid = p.m_max
    defect = max(
        float(np.max(np.abs(modes[mid - m] - modes[mid + m].conj().T))) for m in range(0, min(20, p.m_max) + 1)
    )
    out = [CheckResult("harmonic Hermiticity H_-m = H_m^dagger", defect, 1e-10)]
    if p.waveform == "sine":
        err, scale = resynthesis_error(p, modes=modes)
        bound = bessel_tail_bound(p) / scale
        out.append(CheckResult(f"harmonic resynthesis within Bessel tail bound {bound:.2e}", err, max(1e-8, bound)))
        numeric = fourier_modes_numeric(p)
        diff = max(float(np.max(np.abs(numeric[mid + m] - fourier_mode_analytic(m, p)))) for m in range(-3, 4)
                   if abs(m) <= p.m_max)
        out.append(CheckResult("sampled harmonics match Bessel harmonics", diff, 1e-8))
    return out


def _floquet(p: ModelParams):
    basis = dressed_basis_for(p)
    out = [CheckResult("dressed basis orthonormality",
                       float(np.max(np.abs(basis.states.conj().T @ basis.states - np.eye(basis.n_j)))), 1e-10)]
    K = build_sambe(p, basis, fourier_modes(p))
    out.append(CheckResult("extended matrix Hermiticity", float(np.max(np.abs(K - K.conj().T))), 1e-10))
    sol = solve_floquet(K, p, basis)
    out.append(CheckResult("sideband edge weight", float(np.max(sol.edge_weights)), 1e-6))
    times = np.linspace(0.0, p.period, 257)
    modes = sol.modes_at(times)
    out.append(CheckResult("Floquet mode periodicity", float(np.max(np.abs(modes[-1] - modes[0]))), 1e-12))

    big = p.replace(l_max=p.l_max + NORM_CHECK_L_MAX_EXTRA)
    fine = solve(big)
    norms = np.linalg.norm(fine.modes_at(times), axis=1) ** 2
    out.append(CheckResult(f"Floquet mode norm is 1 pointwise (l_max={big.l_max})",
                           float(np.max(np.abs(norms - 1))), 1e-8))

    if p.eta_m != 0:
        U = monodromy(p, steps=4096, basis=basis)
        drift = float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))
        out.append(CheckResult("one-period propagator unitarity", drift, 1e-8))
        eps = quasienergies_from_monodromy(U, p)
        out.append(CheckResult("extended-space vs propagator quasienergies",
                               set_distance(sol.quasienergies, eps, p.omega_m), 1e-6))
    return out, sol


def _observables(p: ModelParams, sol):
    q = p.replace(eta_m=0.0)
    vac = excitation_series(solve(q), q)
    out = [CheckResult("vacuum stays empty without drive",
                       float(max(np.max(vac.n_cav), np.max(vac.n_tls))), 1e-10)]
    ground = 0.0
    for kind in ("cav", "tls"):
        ladder = dressed_raising(sol.basis, kind, p.n_fock)
        ground = max(ground, float(np.linalg.norm(ladder.plus[:, 0]) ** 2))
    out.append(CheckResult("dressed ground state has no excitations", ground, 0.0))

    series = excitation_series(sol, p)
    T = p.period
    per = int(round(T / (series.times[1] - series.times[0])))
    start = int(np.searchsorted(series.times, series.t_ss - 1e-9 * T))
    c = initial_overlaps(sol, np.eye(sol.basis.n_j)[0])
    for kind, values in (("cav", series.n_cav), ("tls", series.n_tls)):
        jump = np.max(np.abs(values[start + per:start + 2 * per + 1] - values[start:start + per + 1]))
        C = off_diagonal_bound(c, dressed_raising(sol.basis, kind, p.n_fock))
        tol = max(1e-6, float(np.exp(-p.gamma * series.t_ss) * C))
        out.append(CheckResult(f"{kind} periodicity after steady state", float(jump), tol))
    return out


def run_checks(p: ModelParams) -> list[CheckResult]:
    """Run every invariant for ``p``; solver failures are reported as failed checks."""
    stages: list[tuple[str, Callable]] = [
        ("bare spectrum", _bare_spectrum),
        ("Rabi reduction", _qrm_reduction),
        ("harmonics", _harmonics),
    ]
    results: list[CheckResult] = []
    for name, fn in stages:
        results += _guarded(name, fn, p)
    try:
        floquet_results, sol = _floquet(p)
        results += floquet_results
        results += _guarded("observables", lambda q: _observables(q, sol), p)
    except (SolverError, np.linalg.LinAlgError) as exc:
        log.error("Floquet checks failed: %s", exc)
        results.append(CheckResult(f"Floquet solve ({exc})", float("inf"), 0.0))
    return results


def _guarded(name: str, fn: Callable, p: ModelParams) -> list[CheckResult]:
    try:
        return fn(p)
    except (SolverError, np.linalg.LinAlgError) as exc:
        log.error("%s checks failed: %s", name, exc)
        return [CheckResult(f"{name} ({exc})", float("inf"), 0.0)]
