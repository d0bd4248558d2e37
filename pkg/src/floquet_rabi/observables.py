"""Real excitation numbers from dressed ladder operators.

Emission observables in ultrastrong coupling have to be built from
energy-ordered matrix elements of the system operator,

    s^+ = sum_{j < k} <j|S|k> |j><k|,     s^- = (s^+)^dagger,

so that the dressed ground state carries no detectable excitations.  The bare
cavity operator is the quadrature ``S_cav = a (1 + i) / sqrt(2) + h.c.`` and the
matter operator is ``S_tls = sigma_x``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .floquet import DressedBasis, FloquetSolution
from .hamiltonian import ModelParams, qrm_hamiltonian
from .operators import embed, fock_ladder, number_operator, pauli

log = logging.getLogger(__name__)

KINDS = ("cav", "tls")
IMAG_TOL = 1e-8
NEGATIVE_TOL = 1e-10
NORM_DEFICIT_WARN = 1e-3


def bare_system_operator(kind: str, n_fock: int) -> np.ndarray:
    """``S_cav`` or ``S_tls`` on the product space."""
    from .operators import BasisDescriptor

    basis = BasisDescriptor(n_fock)
    if kind == "cav":
        a = fock_ladder(basis) * (1 + 1j) / np.sqrt(2)
        return embed(np.eye(2, dtype=complex), a + a.conj().T, basis)
    if kind == "tls":
        return embed(pauli("x"), np.eye(n_fock, dtype=complex), basis)
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


@dataclass(frozen=True, eq=False)
class DressedLadder:
    kind: str
    plus: np.ndarray
    minus: np.ndarray

    @property
    def number(self) -> np.ndarray:
        """``s^- s^+``."""
        return self.minus @ self.plus


def dressed_raising(basis: DressedBasis, kind: str, n_fock: int) -> DressedLadder:
    """Strictly upper-triangular dressed ladder for ``kind`` in ``{"cav", "tls"}``."""
    S = basis.project(bare_system_operator(kind, n_fock))
    plus = np.triu(S, k=1)
    return DressedLadder(kind=kind, plus=plus, minus=plus.conj().T)


@dataclass(eq=False)
class ObservableSeries:
    """Excitation numbers on a uniform time grid, with one-period steady-state means."""

    times: np.ndarray
    n_cav: np.ndarray
    n_tls: np.ndarray
    mean_cav: float
    mean_tls: float
    t_ss: float
    warnings: list[str] = field(default_factory=list)


def default_times(p: ModelParams, periods: int = 8, points: int = 2048) -> np.ndarray:
    """``points`` samples over ``[0, periods * T)``; whole periods land on grid points."""
    return np.linspace(0.0, periods * p.period, points, endpoint=False)


def excitation_number(
    sol: FloquetSolution,
    c: np.ndarray,
    ladder: DressedLadder,
    p: ModelParams,
    times: np.ndarray,
    damped: bool = True,
) -> np.ndarray:
    """Damped expectation of ``s^- s^+`` along the Floquet evolution.

        N(t) = sum_{ab} c_a^* c_b e^{i (eps_a - eps_b) t - gamma t (1 - delta_ab)}
               <a(t)| s^- s^+ |b(t)>

    With ``damped=False`` only the diagonal (steady-state) terms are kept.
    Imaginary residues above 1e-8 raise :class:`SolverError`; negative values
    are clamped to zero (and logged when below -1e-10).
    """
    times = np.asarray(times, dtype=float)
    c = np.asarray(c, dtype=complex)
    modes = sol.modes_at(times)
    y = np.einsum("ij,tja->tia", ladder.plus, modes)
    gram = np.einsum("tia,tib->tab", y.conj(), y)
    n = c.size
    if damped:
        z = c[None, :] * np.exp(-1j * np.outer(times, sol.quasienergies))
        off = np.exp(-p.gamma * times)[:, None, None] * (1 - np.eye(n))[None] + np.eye(n)[None]
        values = np.einsum("ta,tab,tb->t", z.conj(), off * gram, z)
    else:
        diag = np.einsum("taa->ta", gram)
        values = diag @ (np.abs(c) ** 2)
    imag = np.max(np.abs(values.imag)) if values.size else 0.0
    if imag > IMAG_TOL:
        raise SolverError(f"excitation number has imaginary residue {imag:.2e}")
    real = values.real
    low = real.min() if real.size else 0.0
    if low < -NEGATIVE_TOL:
        log.warning("clamping negative %s excitation number %.3e", ladder.kind, low)
    return np.maximum(real, 0.0)


def steady_state_number(sol, c, ladder, p, times) -> np.ndarray:
    """Diagonal-only formula, valid once off-diagonal terms have decayed."""
    return excitation_number(sol, c, ladder, p, times, damped=False)


def period_average(times: np.ndarray, values: np.ndarray, p: ModelParams, t_ss: float | None = None) -> float:
    """``(1/T) int_{t_ss}^{t_ss + T} N dt`` by the trapezoid rule on the sampled series.

    Endpoints that fall between grid points are linearly interpolated.
    """
    T = p.period
    t_ss = 5 * T if t_ss is None else t_ss
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_end = t_ss + T
    span_tol = 1e-9 * T
    if times[0] > t_ss + span_tol or times[-1] < t_end - span_tol:
        raise ValueError(f"series covers [{times[0]:.4g}, {times[-1]:.4g}], need [{t_ss:.4g}, {t_end:.4g}]")
    inside = (times > t_ss + span_tol) & (times < t_end - span_tol)
    t = np.concatenate(([t_ss], times[inside], [t_end]))
    v = np.concatenate(([np.interp(t_ss, times, values)], values[inside], [np.interp(t_end, times, values)]))
    return float(np.trapezoid(v, t) / T)


def excitation_series(
    sol: FloquetSolution,
    p: ModelParams,
    times: np.ndarray | None = None,
    psi0: np.ndarray | None = None,
    t_ss: float | None = None,
) -> ObservableSeries:
    """Cavity and TLS excitation numbers starting from ``psi0`` (default: dressed ground state).

    The grid must reach at least ``t_ss + 2T`` (``t_ss`` defaults to ``5T``).
    """
    from .floquet import initial_overlaps

    basis = sol.basis
    if basis is None:
        raise ValueError("Floquet solution carries no dressed basis")
    T = p.period
    t_ss = 5 * T if t_ss is None else t_ss
    times = default_times(p) if times is None else np.asarray(times, dtype=float)
    if times[0] > 1e-12 or times[-1] < t_ss + 2 * T - T / 2048:
        raise ValueError(f"time grid must cover [0, t_ss + 2T] = [0, {t_ss + 2 * T:.4g}]")
    if psi0 is None:
        psi0 = np.zeros(basis.n_j, dtype=complex)
        psi0[0] = 1.0
    c = initial_overlaps(sol, psi0)
    warnings = []
    deficit = abs(1.0 - float(np.sum(np.abs(c) ** 2)))
    if deficit > NORM_DEFICIT_WARN:
        warnings.append(f"overlap normalization deficit {deficit:.2e}")
    n_cav = excitation_number(sol, c, dressed_raising(basis, "cav", p.n_fock), p, times)
    n_tls = excitation_number(sol, c, dressed_raising(basis, "tls", p.n_fock), p, times)
    return ObservableSeries(
        times=times,
        n_cav=n_cav,
        n_tls=n_tls,
        mean_cav=period_average(times, n_cav, p, t_ss),
        mean_tls=period_average(times, n_tls, p, t_ss),
        t_ss=t_ss,
        warnings=warnings,
    )


def off_diagonal_bound(c: np.ndarray, ladder: DressedLadder) -> float:
    """``sum_{a != b} |c_a c_b| * ||s^- s^+||``: scale of the transient off-diagonal terms."""
    a = np.abs(np.asarray(c))
    cross = a.sum() ** 2 - np.sum(a**2)
    return float(cross * np.linalg.norm(ladder.number, 2))


def virtual_photons(p: ModelParams) -> float:
    """``<0|a^dagger a|0>`` in the ground state of the undriven Rabi Hamiltonian."""
    _, vecs = np.linalg.eigh(qrm_hamiltonian(p))
    g = vecs[:, 0]
    nop = embed(np.eye(2, dtype=complex), number_operator(p.basis), p.basis)
    return float(np.real(np.vdot(g, nop @ g)))


def bare_photon_number(state: np.ndarray, p: ModelParams) -> float:
    """Naive ``<psi|a^dagger a|psi>`` for a product-space state."""
    nop = embed(np.eye(2, dtype=complex), number_operator(p.basis), p.basis)
    return float(np.real(np.vdot(state, nop @ state)))
