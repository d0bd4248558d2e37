"""Time-periodic Coulomb-gauge Rabi Hamiltonian and its Fourier harmonics.

    H(t) = omega_c a^dagger a + (omega_a / 2) {sigma_z cos[c(t)] + sigma_y sin[c(t)]},
    c(t) = 2 (a + a^dagger) eta(t).

Every function of ``X = a + a^dagger`` is evaluated spectrally on the truncated
Fock space (see :mod:`floquet_rabi.operators`).  Energies are in units of
``omega_c`` and times in units of ``1 / omega_c``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .errors import ConfigError, UnsupportedWaveformError
from .operators import (
    BasisDescriptor,
    embed,
    number_operator,
    pauli,
    quadrature_spectrum,
)

WAVEFORMS = ("sine", "sawtooth", "tophat")
DEFAULT_NUMERIC_SAMPLES = {"sine": 512, "sawtooth": 4096, "tophat": 4096}


@dataclass(frozen=True)
class ModelParams:
    """Physical and truncation parameters of the modulated Rabi model.

    Defaults are the ones used for the driven sweeps: ``omega_a = omega_c = 1``,
    ``omega_m = 0.5``, ``eta0 = 0``, ``eta_m = 0.5``, ``gamma = 0.1``,
    16 dressed states and 20 harmonics / sidebands.
    """

    omega_c: float = 1.0
    omega_a: float = 1.0
    eta0: float = 0.0
    eta_m: float = 0.5
    omega_m: float = 0.5
    gamma: float = 0.1
    n_fock: int = 30
    n_j: int = 16
    m_max: int = 20
    l_max: int = 20
    waveform: str = "sine"

    def __post_init__(self):
        problems = []
        if not self.omega_c > 0:
            problems.append("omega_c must be > 0")
        if not self.omega_a >= 0:
            problems.append("omega_a must be >= 0")
        if self.eta_m != 0 and not self.omega_m > 0:
            problems.append("omega_m must be > 0 when eta_m != 0")
        if self.omega_m < 0:
            problems.append("omega_m must be >= 0")
        if not self.gamma >= 0:
            problems.append("gamma must be >= 0")
        for name in ("n_fock", "n_j", "m_max", "l_max"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                problems.append(f"{name} must be an integer")
        if self.n_fock < 2:
            problems.append("n_fock must be >= 2")
        if not 1 <= self.n_j <= 2 * self.n_fock:
            problems.append("n_j must lie in [1, 2 * n_fock]")
        if self.m_max < 0:
            problems.append("m_max must be >= 0")
        if self.l_max < 1:
            problems.append("l_max must be >= 1")
        if self.waveform not in WAVEFORMS:
            problems.append(f"waveform must be one of {WAVEFORMS}")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def period(self) -> float:
        if self.omega_m <= 0:
            raise ConfigError("undriven model (omega_m = 0) has no period")
        return 2 * np.pi / self.omega_m

    @property
    def basis(self) -> BasisDescriptor:
        return BasisDescriptor(self.n_fock)

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hamiltonian_key(self) -> str:
        """Digest of the fields that determine the static Hamiltonian and its modes."""
        fields = {k: v for k, v in self.as_dict().items() if k not in ("gamma", "l_max")}
        if self.waveform == "sine":
            # sine modes do not depend on the modulation frequency
            fields.pop("omega_m")
        blob = json.dumps(fields, sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:16]


def waveform_shape(phase: np.ndarray | float, kind: str) -> np.ndarray:
    """Zero-mean unit-amplitude periodic shape as a function of ``omega_m * t``."""
    frac = np.mod(np.asarray(phase, dtype=float) / (2 * np.pi), 1.0)
    if kind == "sine":
        return np.sin(np.asarray(phase, dtype=float))
    if kind == "sawtooth":
        return 2.0 * frac - 1.0
    if kind == "tophat":
        return np.where(frac < 0.5, 1.0, -1.0)
    raise ConfigError(f"unknown waveform {kind!r}")


def coupling_rate(t, p: ModelParams):
    """Normalized coupling ``eta(t) = eta0 + eta_m * shape(omega_m t)``."""
    value = p.eta0 + p.eta_m * waveform_shape(p.omega_m * np.asarray(t, dtype=float), p.waveform)
    return float(value) if np.ndim(value) == 0 else value


def _product_ops(p: ModelParams):
    basis = p.basis
    eye2 = np.eye(2, dtype=complex)
    photon = p.omega_c * embed(eye2, number_operator(basis), basis)
    return basis, photon


def _matter_term(p: ModelParams, eta: float) -> np.ndarray:
    spec = quadrature_spectrum(p.n_fock)
    basis = p.basis
    x = spec.eigenvalues
    cos_op = spec.apply_diag(np.cos(2 * eta * x))
    sin_op = spec.apply_diag(np.sin(2 * eta * x))
    return (p.omega_a / 2) * (
        embed(pauli("z"), cos_op, basis) + embed(pauli("y"), sin_op, basis)
    )


def h_fqr(t: float, p: ModelParams) -> np.ndarray:
    """Full time-dependent Hamiltonian on the product space at time ``t``."""
    _, photon = _product_ops(p)
    return photon + _matter_term(p, coupling_rate(t, p))


def qrm_hamiltonian(p: ModelParams) -> np.ndarray:
    """Undriven Rabi Hamiltonian with the coupling frozen at ``eta(0)``."""
    return h_fqr(0.0, p)


def fourier_mode_analytic(m: int, p: ModelParams) -> np.ndarray:
    """Harmonic ``H_m`` of the sine-modulated Hamiltonian via Anger-Jacobi.

    H_m = omega_c a^dagger a delta_{m0}
          + (omega_a / 2) {(sigma_z - i sigma_y)/2 e^{+2iX eta0}
                           + (-1)^m (sigma_z + i sigma_y)/2 e^{-2iX eta0}} J_m(2X eta_m)

    with the Bessel factor multiplying from the right.
    """
    if p.waveform != "sine":
        raise UnsupportedWaveformError(
            f"analytic Fourier modes exist only for the sine waveform "
            f"(got {p.waveform!r}); use fourier_mode_numeric"
        )
    m = int(m)
    if abs(m) > p.m_max:
        raise ConfigError(f"|m| = {abs(m)} exceeds m_max = {p.m_max}")
    basis, photon = _product_ops(p)
    spec = quadrature_spectrum(p.n_fock)
    x = spec.eigenvalues
    sz, sy = pauli("z"), pauli("y")
    raise_part = (sz - 1j * sy) / 2
    lower_part = (sz + 1j * sy) / 2
    e_plus = spec.apply_diag(np.exp(2j * p.eta0 * x))
    e_minus = spec.apply_diag(np.exp(-2j * p.eta0 * x))
    if p.eta_m == 0:
        bessel = np.eye(basis.n_fock, dtype=complex) if m == 0 else np.zeros((basis.n_fock,) * 2, complex)
    else:
        bessel = spec.apply_diag(jv(m, 2 * p.eta_m * x))
    braces = embed(raise_part, e_plus, basis) + (-1) ** m * embed(lower_part, e_minus, basis)
    eye2 = np.eye(2, dtype=complex)
    H = (p.omega_a / 2) * braces @ embed(eye2, bessel, basis)
    if m == 0:
        H = H + photon
    return H


def fourier_modes_numeric(p: ModelParams, samples: int | None = None) -> np.ndarray:
    """All harmonics ``|m| <= m_max`` by uniform sampling over one period.

    Returns an array of shape ``(2 * m_max + 1, D, D)``; entry ``m + m_max``
    holds ``(1/T) int_0^T H(t) e^{-i m omega_m t} dt``, evaluated as the discrete
    (trapezoid) transform over ``samples`` equally spaced times.  Because
    ``H(t)`` is linear in ``cos/sin(2 eta(t) X)``, the transform is taken on those
    scalar functions at every eigenvalue of ``X`` and reassembled; this equals
    the DFT of sampled ``h_fqr`` exactly.
    """
    if samples is None:
        samples = DEFAULT_NUMERIC_SAMPLES[p.waveform]
    samples = int(samples)
    if samples < 4 * (p.m_max + 1):
        raise ConfigError(
            f"{samples} samples alias harmonics up to m_max = {p.m_max}; "
            f"need at least {4 * (p.m_max + 1)}"
        )
    basis, photon = _product_ops(p)
    if p.eta_m != 0:
        T = p.period
    else:
        # constant coupling: any period gives the same (trivial) transform
        T = 2 * np.pi
    t = np.arange(samples) * (T / samples)
    eta = p.eta0 + p.eta_m * waveform_shape(2 * np.pi * t / T, p.waveform)
    spec = quadrature_spectrum(p.n_fock)
    arg = 2 * np.outer(eta, spec.eigenvalues)
    cos_hat = np.fft.fft(np.cos(arg), axis=0) / samples
    sin_hat = np.fft.fft(np.sin(arg), axis=0) / samples
    sz, sy = pauli("z"), pauli("y")
    out = np.empty((2 * p.m_max + 1, basis.dim, basis.dim), dtype=complex)
    for m in range(-p.m_max, p.m_max + 1):
        k = m % samples
        H = (p.omega_a / 2) * (
            embed(sz, spec.apply_diag(cos_hat[k]), basis)
            + embed(sy, spec.apply_diag(sin_hat[k]), basis)
        )
        if m == 0:
            H = H + photon
        out[m + p.m_max] = H
    return out


def fourier_mode_numeric(m: int, p: ModelParams, samples: int | None = None) -> np.ndarray:
    """Single harmonic from :func:`fourier_modes_numeric`; works for every waveform."""
    if abs(int(m)) > p.m_max:
        raise ConfigError(f"|m| = {abs(m)} exceeds m_max = {p.m_max}")
    return fourier_modes_numeric(p, samples)[int(m) + p.m_max]


def fourier_modes(p: ModelParams, samples: int | None = None) -> np.ndarray:
    """Harmonics ``m = -m_max .. m_max`` stacked along axis 0.

    Sine modulation uses the Bessel expansion; sawtooth and top-hat fall back to
    numeric sampling.
    """
    if p.waveform == "sine":
        return np.stack([fourier_mode_analytic(m, p) for m in range(-p.m_max, p.m_max + 1)])
    return fourier_modes_numeric(p, samples)


def static_hamiltonian(p: ModelParams, samples: int | None = None) -> np.ndarray:
    """Time-averaged Hamiltonian ``H_0`` (includes the drive-induced renormalization)."""
    if p.waveform == "sine":
        return fourier_mode_analytic(0, p)
    return fourier_modes_numeric(p.replace(m_max=0), samples)[0]


def resynthesize(modes: np.ndarray, t: float, p: ModelParams) -> np.ndarray:
    """Truncated series ``sum_m H_m e^{i m omega_m t}`` for a stack from :func:`fourier_modes`."""
    m_max = (modes.shape[0] - 1) // 2
    phases = np.exp(1j * np.arange(-m_max, m_max + 1) * p.omega_m * t)
    return np.tensordot(phases, modes, axes=1)
