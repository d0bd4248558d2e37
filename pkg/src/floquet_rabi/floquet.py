"""Dressed basis, extended-space (Sambe) Floquet solver and a monodromy oracle.

Sign conventions: a Floquet mode is ``|alpha(t)> = sum_l e^{i l omega_m t} |alpha_l>``
and the extended matrix has blocks

    K[l, l'] = P^dagger H_{l - l'} P + l omega_m delta_{l l'},

with ``P`` the matrix whose columns are the dressed states.  Quasienergies are
folded into the half-open zone ``[-omega_m / 2, omega_m / 2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, SolverError, TruncationError
from .hamiltonian import ModelParams, fourier_modes, h_fqr, static_hamiltonian
from .operators import max_hermitian_defect, parity_diagonal

log = logging.getLogger(__name__)

ORTHONORMAL_TOL = 1e-10
RESIDUAL_TOL = 1e-9
EDGE_TOL = 1e-6
UNITARITY_TOL = 1e-8


def fold(x, omega_m: float):
    """Map energies into ``[-omega_m/2, omega_m/2)``; boundary values go to the left end."""
    x = np.asarray(x, dtype=float)
    y = x - omega_m * np.floor((x + omega_m / 2) / omega_m)
    # rounding can land exactly on the excluded right edge
    y = np.where(y >= omega_m / 2, y - omega_m, y)
    y = np.where(y < -omega_m / 2, -omega_m / 2, y)
    return float(y) if y.ndim == 0 else y


def circular_distance(a, b, omega_m: float):
    d = np.abs(np.asarray(a) - np.asarray(b)) % omega_m
    return np.minimum(d, omega_m - d)


def set_distance(a, b, omega_m: float) -> float:
    """Largest pairwise gap under the optimal one-to-one matching modulo ``omega_m``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"sets differ in size: {a.shape} vs {b.shape}")
    cost = circular_distance(a[:, None], b[None, :], omega_m)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if rows.size else 0.0


@dataclass(frozen=True, eq=False)
class DressedBasis:
    """Lowest ``n_j`` eigenpairs of the static Hamiltonian.

    ``states[:, j]`` is ``|j>`` in the product basis.  ``parities`` holds the
    eigenvalue (+1/-1) of ``sigma_z (-1)^{a^dagger a}`` for each state when the
    basis was built sector by sector, otherwise ``None``.
    """

    energies: np.ndarray
    states: np.ndarray
    parities: np.ndarray | None = None
    params_hash: str = ""

    @property
    def n_j(self) -> int:
        return self.energies.shape[0]

    def project(self, op: np.ndarray) -> np.ndarray:
        P = self.states
        return P.conj().T @ op @ P

    def to_product(self, vec: np.ndarray) -> np.ndarray:
        return self.states @ vec


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead)


def dressed_basis(
    H0: np.ndarray,
    n_j: int,
    parity: np.ndarray | None = None,
    params_hash: str = "",
) -> DressedBasis:
    """Diagonalize ``H0`` and keep the lowest ``n_j`` states.

    Args:
        H0: Hermitian static Hamiltonian on the product space.
        n_j: number of dressed states to retain.
        parity: optional diagonal (+1/-1 entries) of a symmetry commuting with
            ``H0``.  Each sector is diagonalized separately so every retained
            state carries a definite parity, even at exact level crossings.
        params_hash: identifier of the generating parameters.

    The phase of every eigenvector is fixed by making its largest-magnitude
    component real and positive.
    """
    H0 = np.asarray(H0)
    D = H0.shape[0]
    if max_hermitian_defect(H0) > 1e-10:
        raise ValueError("static Hamiltonian is not Hermitian")
    if not 1 <= n_j <= D:
        raise ConfigError(f"n_j = {n_j} must lie in [1, {D}]")
    try:
        if parity is None:
            energies, vecs = np.linalg.eigh(H0)
            labels = None
        else:
            parity = np.asarray(parity)
            e_parts, v_parts, l_parts = [], [], []
            for sign in (1.0, -1.0):
                idx = np.flatnonzero(parity == sign)
                if idx.size == 0:
                    continue
                w, v = np.linalg.eigh(H0[np.ix_(idx, idx)])
                full = np.zeros((D, idx.size), dtype=complex)
                full[idx] = v
                e_parts.append(w)
                v_parts.append(full)
                l_parts.append(np.full(idx.size, sign))
            energies = np.concatenate(e_parts)
            vecs = np.concatenate(v_parts, axis=1)
            labels = np.concatenate(l_parts)
            order = np.argsort(energies, kind="stable")
            energies, vecs, labels = energies[order], vecs[:, order], labels[order]
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"static eigensolve failed: {exc}") from exc

    energies = energies[:n_j].copy()
    vecs = _fix_phase(np.ascontiguousarray(vecs[:, :n_j], dtype=complex))
    gram = vecs.conj().T @ vecs
    if np.max(np.abs(gram - np.eye(n_j))) > ORTHONORMAL_TOL:
        raise SolverError("dressed states are not orthonormal")
    resid = np.linalg.norm(H0 @ vecs - vecs * energies, axis=0)
    if resid.max() > RESIDUAL_TOL * max(1.0, np.abs(energies).max()):
        raise SolverError(f"dressed-state residual {resid.max():.3e} too large")
    return DressedBasis(
        energies=energies,
        states=vecs,
        parities=None if labels is None else labels[:n_j].copy(),
        params_hash=params_hash,
    )


def dressed_basis_for(p: ModelParams) -> DressedBasis:
    """Dressed basis of ``H_0`` for ``p``, split by parity."""
    return dressed_basis(
        static_hamiltonian(p), p.n_j, parity=parity_diagonal(p.basis), params_hash=p.hamiltonian_key()
    )


def build_sambe(p: ModelParams, basis: DressedBasis, modes: np.ndarray) -> np.ndarray:
    """Assemble the Hermitian extended matrix of size ``n_j * (2 l_max + 1)``.

    ``modes`` is the stack from :func:`floquet_rabi.hamiltonian.fourier_modes`
    (product space) or an already projected stack of ``n_j x n_j`` blocks.
    Row index is ``(l + l_max) * n_j + j``.
    """
    if basis.params_hash and basis.params_hash != p.hamiltonian_key():
        raise ConfigError("dressed basis was built from different model parameters")
    m_max = (modes.shape[0] - 1) // 2
    n_j = basis.n_j
    if modes.shape[1] != n_j:
        P = basis.states
        modes = np.einsum("ai,mab,bj->mij", P.conj(), modes, P)
    L = 2 * p.l_max + 1
    K = np.zeros((L * n_j, L * n_j), dtype=complex)
    for i in range(L):
        for k in range(L):
            m = i - k
            if abs(m) <= m_max:
                K[i * n_j:(i + 1) * n_j, k * n_j:(k + 1) * n_j] = modes[m + m_max]
        l = i - p.l_max
        K[i * n_j:(i + 1) * n_j, i * n_j:(i + 1) * n_j] += l * p.omega_m * np.eye(n_j)
    return K


@dataclass(frozen=True, eq=False)
class FloquetSolution:
    """Quasienergies and sidebands of ``n_j`` Floquet modes.

    ``sidebands[alpha, i]`` is the dressed-basis block of the selected extended
    eigenvector at raw harmonic ``l = i - l_max``.  The selected eigenvalue is
    ``quasienergies[alpha] + bz_copies[alpha] * omega_m``; in the folded labelling
    that block is the sideband with harmonic ``l - bz_copies[alpha]``.
    """

    quasienergies: np.ndarray
    sidebands: np.ndarray
    bz_copies: np.ndarray
    edge_weights: np.ndarray
    centroids: np.ndarray
    parities: np.ndarray | None
    omega_m: float
    l_max: int
    basis: DressedBasis | None = field(default=None, repr=False)

    @property
    def n_modes(self) -> int:
        return self.quasienergies.shape[0]

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega_m

    def harmonics(self, alpha: int) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1) - self.bz_copies[alpha]

    def modes_at(self, times) -> np.ndarray:
        """Floquet modes on a time grid; shape ``(len(times), n_j, n_modes)``, columns = modes."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        raw = np.arange(-self.l_max, self.l_max + 1)
        wt = self.omega_m * times
        phase = np.exp(1j * np.outer(wt, raw))
        shift = np.exp(-1j * np.outer(wt, self.bz_copies))
        return np.einsum("tl,alc,ta->tca", phase, self.sidebands, shift)


def _resolve_degenerate(w, v, harmonic_of_row, tol):
    """Rotate exactly degenerate eigenvectors so they diagonalize the harmonic index."""
    start = 0
    n = w.size
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            block = v[:, start:stop]
            L = (block.conj().T * harmonic_of_row) @ block
            _, rot = np.linalg.eigh((L + L.conj().T) / 2)
            v[:, start:stop] = block @ rot
        start = stop
    return v


def solve_floquet(
    K: np.ndarray,
    p: ModelParams,
    basis: DressedBasis,
    edge_tol: float = EDGE_TOL,
    degeneracy_tol: float = 1e-9,
) -> FloquetSolution:
    """Diagonalize the extended matrix and pick one representative per Floquet family.

    Every physical mode appears in ``K`` as a ladder of replicas shifted by
    ``omega_m``.  Candidates are ranked by how close their sideband centroid is
    to ``l = 0`` (the replica furthest from the truncation edges); replicas of
    an already accepted mode are recognised by their shifted overlap and
    skipped.  The accepted eigenvalues are then folded into the first zone.
    Raises :class:`TruncationError` when a selected mode keeps more than
    ``edge_tol`` of its weight on ``|l| = l_max``.
    """
    n_j = basis.n_j
    L = 2 * p.l_max + 1
    if K.shape != (L * n_j, L * n_j):
        raise ConfigError(f"extended matrix shape {K.shape} inconsistent with n_j={n_j}, l_max={p.l_max}")
    if max_hermitian_defect(K) > 1e-10:
        raise SolverError("extended matrix is not Hermitian")
    omega = p.omega_m
    raw_l = np.arange(-p.l_max, p.l_max + 1)
    row_l = np.repeat(raw_l, n_j).astype(float)

    if basis.parities is not None:
        row_parity = np.tile(basis.parities, L)
        sectors = [np.flatnonzero(row_parity == s) for s in (1.0, -1.0)]
    else:
        row_parity = None
        sectors = [np.arange(L * n_j)]
    evals, evecs, sector_sign = [], [], []
    try:
        for sign, idx in zip((1.0, -1.0), sectors):
            if idx.size == 0:
                continue
            w, v = np.linalg.eigh(K[np.ix_(idx, idx)])
            v = _resolve_degenerate(w, v, row_l[idx], degeneracy_tol)
            full = np.zeros((L * n_j, w.size), dtype=complex)
            full[idx] = v
            evals.append(w)
            evecs.append(full)
            sector_sign.append(np.full(w.size, sign))
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"extended eigensolve failed: {exc}") from exc
    evals = np.concatenate(evals)
    evecs = np.concatenate(evecs, axis=1)
    signs = np.concatenate(sector_sign)

    blocks = evecs.reshape(L, n_j, -1)
    weight_l = np.sum(np.abs(blocks) ** 2, axis=1)
    centroid = raw_l @ weight_l
    edge = weight_l[0] + weight_l[-1]

    order = np.lexsort((np.arange(evals.size), edge, np.abs(centroid)))
    accepted: list[int] = []
    gate = 1e-4 * omega
    for i in order:
        is_replica = False
        for a in accepted:
            if signs[a] != signs[i]:
                continue
            k = int(np.rint((evals[i] - evals[a]) / omega))
            if abs(evals[i] - evals[a] - k * omega) > gate or abs(k) >= L:
                continue
            va, vi = blocks[:, :, a], blocks[:, :, i]
            if k >= 0:
                ov = np.vdot(va[: L - k], vi[k:])
            else:
                ov = np.vdot(va[-k:], vi[: L + k])
            if abs(ov) > 0.5:
                is_replica = True
                break
        if not is_replica:
            accepted.append(int(i))
            if len(accepted) == n_j:
                break
    if len(accepted) < n_j:
        raise TruncationError(
            f"found only {len(accepted)} distinct Floquet modes (need {n_j}); increase l_max={p.l_max}"
        )
    accepted = np.array(accepted)
    eps = fold(evals[accepted], omega)
    copies = np.rint((evals[accepted] - eps) / omega).astype(int)
    order = np.lexsort((accepted, eps))
    accepted, eps, copies = accepted[order], eps[order], copies[order]

    edge_sel = edge[accepted]
    if edge_sel.max() > edge_tol:
        raise TruncationError(
            f"sideband truncation insufficient: edge weight {edge_sel.max():.2e} > {edge_tol:.0e} "
            f"at l_max={p.l_max}"
        )
    sidebands = np.transpose(blocks[:, :, accepted], (2, 0, 1)).copy()
    return FloquetSolution(
        quasienergies=np.asarray(eps, dtype=float),
        sidebands=sidebands,
        bz_copies=copies,
        edge_weights=edge_sel.copy(),
        centroids=centroid[accepted].copy(),
        parities=None if row_parity is None else signs[accepted].copy(),
        omega_m=omega,
        l_max=p.l_max,
        basis=basis,
    )


def solve(p: ModelParams, edge_tol: float = EDGE_TOL) -> FloquetSolution:
    """Dressed basis, harmonics, extended matrix and mode selection for one parameter point."""
    basis = dressed_basis_for(p)
    K = build_sambe(p, basis, fourier_modes(p))
    return solve_floquet(K, p, basis, edge_tol=edge_tol)


def floquet_mode_at(sol: FloquetSolution, alpha: int, t: float) -> np.ndarray:
    """``|alpha(t)>`` in the dressed basis; periodic in ``t`` with the drive period."""
    if not 0 <= alpha < sol.n_modes:
        raise IndexError(f"mode index {alpha} outside [0, {sol.n_modes})")
    return sol.modes_at([t])[0, :, alpha]


def initial_overlaps(sol: FloquetSolution, psi0: np.ndarray) -> np.ndarray:
    """``c_alpha = <alpha(0)|psi0>`` for a dressed-basis initial state."""
    psi0 = np.asarray(psi0, dtype=complex)
    return sol.modes_at([0.0])[0].conj().T @ psi0


_CF4_NODES = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)
_CF4_WEIGHTS = ((3 - 2 * np.sqrt(3)) / 12, (3 + 2 * np.sqrt(3)) / 12)


def _unitary_step(H: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def monodromy(
    p: ModelParams,
    steps: int = 4096,
    basis: DressedBasis | None = None,
    method: str = "midpoint",
) -> np.ndarray:
    """One-period propagator ``U(T)`` as a time-ordered product of exact unitaries.

    Args:
        p: model parameters (the drive must be on, ``omega_m > 0``).
        steps: number of time steps per period (>= 256).
        basis: if given, ``H(t)`` is projected onto this dressed subspace first,
            which is the model the extended-space solver diagonalizes; otherwise
            the full product space is propagated.
        method: ``"midpoint"`` uses ``exp(-i H(t_k + dt/2) dt)`` per step
            (second order).  ``"cfm4"`` is the fourth-order commutator-free
            Magnus scheme with two exponentials at the Gauss-Legendre nodes.

    Raises:
        SolverError: if ``U^dagger U`` drifts from the identity by more than 1e-8.
    """
    steps = int(steps)
    if steps < 256:
        raise ConfigError(f"monodromy needs at least 256 steps, got {steps}")
    if method not in ("midpoint", "cfm4"):
        raise ConfigError(f"unknown propagation method {method!r}")
    T = p.period
    dt = T / steps
    P = None if basis is None else basis.states
    dim = p.basis.dim if P is None else P.shape[1]

    def ham(t):
        H = h_fqr(t, p)
        return H if P is None else P.conj().T @ H @ P

    U = np.eye(dim, dtype=complex)
    a1, a2 = _CF4_WEIGHTS
    c1, c2 = _CF4_NODES
    for k in range(steps):
        if method == "midpoint":
            U = _unitary_step(ham((k + 0.5) * dt), dt) @ U
        else:
            H1, H2 = ham((k + c1) * dt), ham((k + c2) * dt)
            U = _unitary_step(a1 * H1 + a2 * H2, dt) @ (_unitary_step(a2 * H1 + a1 * H2, dt) @ U)
    drift = np.max(np.abs(U.conj().T @ U - np.eye(dim)))
    if drift > UNITARITY_TOL:
        raise SolverError(f"propagator drifted from unitarity ({drift:.2e}); change the step count")
    return U


def quasienergies_from_monodromy(U: np.ndarray, p: ModelParams, return_vectors: bool = False):
    """Folded quasienergies ``fold(-theta / T)`` from the eigenphases of ``U(T)``, ascending."""
    drift = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if drift > UNITARITY_TOL:
        raise SolverError(f"input is not unitary ({drift:.2e})")
    lam, vecs = np.linalg.eig(U)
    eps = fold(-np.angle(lam) / p.period, p.omega_m)
    order = np.argsort(eps, kind="stable")
    if return_vectors:
        return eps[order], vecs[:, order]
    return eps[order]


def subspace_quasienergies(U_full: np.ndarray, basis: DressedBasis, p: ModelParams):
    """Quasienergies of the ``n_j`` full-space Floquet states with most dressed-subspace weight.

    Returns ``(quasienergies, weights)``, both ordered by quasienergy.
    """
    eps, vecs = quasienergies_from_monodromy(U_full, p, return_vectors=True)
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    weight = np.sum(np.abs(basis.states.conj().T @ vecs) ** 2, axis=0)
    keep = np.sort(np.argsort(-weight, kind="stable")[: basis.n_j])
    return eps[keep], weight[keep]
