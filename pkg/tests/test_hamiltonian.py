from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.special import jv

from floquet_rabi.errors import ConfigError, UnsupportedWaveformError
from floquet_rabi.hamiltonian import (
    ModelParams,
    coupling_rate,
    fourier_mode_analytic,
    fourier_mode_numeric,
    fourier_modes,
    fourier_modes_numeric,
    h_fqr,
    qrm_hamiltonian,
    static_hamiltonian,
    waveform_shape,
)
from floquet_rabi.operators import embed, number_operator, pauli, quadrature
from floquet_rabi.selfcheck import bessel_tail_bound, resynthesis_error

SMALL = dict(n_fock=12, n_j=8, m_max=8, l_max=8)


def product_ops(p):
    b = p.basis
    eye_f = np.eye(p.n_fock)
    return (
        embed(np.eye(2), number_operator(b), b),
        embed(np.eye(2), quadrature(b), b),
        embed(pauli("x"), eye_f, b),
        embed(pauli("y"), eye_f, b),
        embed(pauli("z"), eye_f, b),
    )


# --- parameters ----------------------------------------------------------------------


def test_defaults():
    p = ModelParams()
    assert (p.omega_c, p.omega_a, p.eta0, p.eta_m, p.omega_m, p.gamma) == (1, 1, 0, 0.5, 0.5, 0.1)
    assert (p.n_fock, p.n_j, p.m_max, p.l_max, p.waveform) == (30, 16, 20, 20, "sine")
    assert p.period == pytest.approx(4 * np.pi)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(omega_m=0.0),
        dict(omega_m=-1.0),
        dict(gamma=-0.1),
        dict(n_fock=1),
        dict(n_j=61),
        dict(n_j=0),
        dict(m_max=-1),
        dict(l_max=0),
        dict(waveform="square"),
        dict(omega_c=0.0),
        dict(n_fock=2.5),
    ],
)
def test_invalid_parameters_rejected(kwargs):
    with pytest.raises(ConfigError):
        ModelParams(**kwargs)


def test_all_problems_reported_together():
    with pytest.raises(ConfigError, match="gamma.*l_max|l_max.*gamma"):
        ModelParams(gamma=-1, l_max=0)


def test_undriven_needs_no_frequency():
    p = ModelParams(eta_m=0.0, omega_m=0.0)
    with pytest.raises(ConfigError):
        p.period


def test_hamiltonian_key_ignores_dissipation_and_sidebands():
    p = ModelParams()
    assert p.hamiltonian_key() == p.replace(gamma=0.3, l_max=28).hamiltonian_key()
    assert p.hamiltonian_key() != p.replace(eta_m=0.4).hamiltonian_key()
    # sine harmonics do not depend on the drive frequency, sampled ones do
    assert p.hamiltonian_key() == p.replace(omega_m=0.7).hamiltonian_key()
    saw = p.replace(waveform="sawtooth")
    assert saw.hamiltonian_key() != saw.replace(omega_m=0.7).hamiltonian_key()


# --- waveforms -----------------------------------------------------------------------


@given(kind=st.sampled_from(["sine", "sawtooth", "tophat"]), phase=st.floats(-50, 50), k=st.integers(-3, 3))
def test_waveform_periodic_and_bounded(kind, phase, k):
    a = waveform_shape(phase, kind)
    b = waveform_shape(phase + 2 * np.pi * k, kind)
    assert abs(a) <= 1 + 1e-12
    # discontinuous shapes may flip right at a jump because of rounding
    frac = (phase / (2 * np.pi)) % 1.0
    if kind == "sine" or min(frac, 1 - frac, abs(frac - 0.5)) > 1e-9:
        assert a == pytest.approx(b, abs=1e-9)


@pytest.mark.parametrize("kind", ["sine", "sawtooth", "tophat"])
def test_waveform_zero_mean(kind):
    phase = (np.arange(4096) + 0.5) * 2 * np.pi / 4096
    assert abs(np.mean(waveform_shape(phase, kind))) < 1e-12


def test_waveform_values():
    assert waveform_shape(np.pi / 2, "sine") == pytest.approx(1)
    assert waveform_shape(0.0, "sawtooth") == pytest.approx(-1)
    assert waveform_shape(np.pi, "sawtooth") == pytest.approx(0)
    assert waveform_shape(0.1, "tophat") == 1 and waveform_shape(np.pi + 0.1, "tophat") == -1
    with pytest.raises(ConfigError):
        waveform_shape(0.0, "triangle")


def test_coupling_rate():
    p = ModelParams(eta0=0.2, eta_m=0.3)
    assert coupling_rate(0.0, p) == pytest.approx(0.2)
    assert coupling_rate(p.period / 4, p) == pytest.approx(0.5)
    np.testing.assert_allclose(coupling_rate(np.array([0.0, p.period / 4]), p), [0.2, 0.5])


# --- time-dependent Hamiltonian ------------------------------------------------------


@given(t=st.floats(0, 30), eta0=st.floats(0, 1.5), eta_m=st.floats(0, 1.5))
def test_h_fqr_hermitian(t, eta0, eta_m):
    H = h_fqr(t, ModelParams(eta0=eta0, eta_m=eta_m, **SMALL))
    assert np.max(np.abs(H - H.conj().T)) < 1e-12


def test_zero_coupling_is_bare():
    p = ModelParams(eta0=0.0, eta_m=0.0, omega_a=0.7, **SMALL)
    N, _, _, _, sz = product_ops(p)
    np.testing.assert_allclose(h_fqr(1.3, p), N + 0.35 * sz, atol=1e-14)


@pytest.mark.parametrize("eta", [0.05, 0.3, 1.0])
def test_gauge_form_is_rotated_two_level_system(eta):
    # a^dagger a + (omega_a/2) U sigma_z U^dagger with U = exp(i eta X sigma_x), built with expm
    p = ModelParams(eta0=eta, eta_m=0.0, omega_a=1.3, **SMALL)
    N, X, sx, _, sz = product_ops(p)
    U = expm(1j * eta * X @ sx)
    np.testing.assert_allclose(qrm_hamiltonian(p), N + 0.65 * U @ sz @ U.conj().T, atol=1e-12)


def test_weak_coupling_derivative_is_dipole_term():
    p0 = ModelParams(eta0=0.0, eta_m=0.0, **SMALL)
    _, X, _, sy, _ = product_ops(p0)
    h = 1e-6
    deriv = (qrm_hamiltonian(p0.replace(eta0=h)) - qrm_hamiltonian(p0.replace(eta0=-h))) / (2 * h)
    np.testing.assert_allclose(deriv, p0.omega_a * X @ sy, atol=1e-6)


# --- Fourier harmonics ---------------------------------------------------------------


def test_harmonics_hermitian_pairs(defaults):
    modes = fourier_modes(defaults)
    mid = defaults.m_max
    for m in range(0, 21):
        assert np.max(np.abs(modes[mid - m] - modes[mid + m].conj().T)) <= 1e-10


@pytest.mark.parametrize("eta0", [0.0, 0.25])
def test_analytic_matches_sampled_harmonics(eta0):
    p = ModelParams(eta0=eta0)
    numeric = fourier_modes_numeric(p, samples=512)
    for m in range(-3, 4):
        assert np.max(np.abs(numeric[m + p.m_max] - fourier_mode_analytic(m, p))) < 1e-10


def test_static_part_is_time_average():
    # independent route: trapezoid average of the full Hamiltonian over one period
    p = ModelParams(eta0=0.1, eta_m=0.5, **SMALL)
    ts = np.linspace(0, p.period, 2048, endpoint=False)
    avg = sum(h_fqr(t, p) for t in ts) / len(ts)
    np.testing.assert_allclose(static_hamiltonian(p), avg, atol=1e-12)


def test_static_part_bessel_renormalization():
    p = ModelParams(eta0=0.0, eta_m=0.5, **SMALL)
    N, X, _, _, sz = product_ops(p)
    w, V = np.linalg.eigh(X)
    J0 = (V * jv(0, 2 * p.eta_m * w)) @ V.conj().T
    np.testing.assert_allclose(static_hamiltonian(p), N + 0.5 * sz @ J0, atol=1e-12)


def test_undriven_harmonics():
    p = ModelParams(eta0=0.3, eta_m=0.0)
    np.testing.assert_allclose(fourier_mode_analytic(0, p), qrm_hamiltonian(p), atol=1e-13)
    assert np.max(np.abs(fourier_mode_analytic(2, p))) == 0
    np.testing.assert_allclose(fourier_modes_numeric(p, 256)[p.m_max], qrm_hamiltonian(p), atol=1e-13)


def test_resynthesis_converges_with_harmonic_cutoff():
    errors = [resynthesis_error(ModelParams(m_max=m))[0] for m in (20, 22, 24, 26)]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert errors[-1] <= 1e-8


def test_resynthesis_within_bessel_tail_bound(defaults):
    err, scale = resynthesis_error(defaults)
    assert err <= bessel_tail_bound(defaults) / scale


@pytest.mark.parametrize("waveform", ["sine", "sawtooth", "tophat"])
def test_sampled_harmonics_equal_dft_of_full_hamiltonian(waveform):
    samples = 64
    p = ModelParams(waveform=waveform, eta0=0.1, eta_m=0.6, **SMALL)
    modes = fourier_modes_numeric(p, samples=samples)
    ts = np.arange(samples) * p.period / samples
    Hs = np.stack([h_fqr(t, p) for t in ts])
    for m in (-3, 0, 1, 8):
        dft = np.tensordot(np.exp(-1j * m * p.omega_m * ts), Hs, axes=1) / samples
        np.testing.assert_allclose(modes[m + p.m_max], dft, atol=1e-12)


def test_non_sine_needs_numeric_route():
    p = ModelParams(waveform="tophat")
    with pytest.raises(UnsupportedWaveformError):
        fourier_mode_analytic(1, p)
    assert isinstance(UnsupportedWaveformError("x"), ConfigError)
    H1 = fourier_mode_numeric(1, p)
    assert H1.shape == (p.basis.dim, p.basis.dim)


def test_harmonic_index_limits():
    p = ModelParams(m_max=4)
    with pytest.raises(ConfigError):
        fourier_mode_analytic(5, p)
    with pytest.raises(ConfigError):
        fourier_mode_numeric(-5, p)
    with pytest.raises(ConfigError):
        fourier_modes_numeric(p, samples=10)


def exact_sawtooth_harmonic(m, p):
    # eta(u) = eta0 + eta_m (2u - 1) on u in [0, 1): e^{i c eta(u)} integrates in closed form
    b = p.basis
    w, V = np.linalg.eigh(quadrature(b).real)

    def scalar(sign):
        a = sign * 4 * w * p.eta_m - 2 * np.pi * m
        safe = np.where(np.abs(a) < 1e-12, 1.0, a)
        integral = np.where(np.abs(a) < 1e-12, 1.0, (np.exp(1j * safe) - 1) / (1j * safe))
        return np.exp(sign * 2j * w * (p.eta0 - p.eta_m)) * integral

    plus, minus = scalar(+1), scalar(-1)
    cos_op = (V * ((plus + minus) / 2)) @ V.T
    sin_op = (V * ((plus - minus) / 2j)) @ V.T
    H = (p.omega_a / 2) * (embed(pauli("z"), cos_op, b) + embed(pauli("y"), sin_op, b))
    if m == 0:
        H = H + embed(np.eye(2), number_operator(b), b)
    return H


@pytest.mark.parametrize("m", [0, 1, -2])
def test_sawtooth_harmonics_converge_to_exact_integral(m):
    # sampling a discontinuous coupling converges at first order in the sample spacing
    p = ModelParams(waveform="sawtooth", eta0=0.1, eta_m=0.4, **SMALL)
    exact = exact_sawtooth_harmonic(m, p)
    err = [np.max(np.abs(fourier_mode_numeric(m, p, samples=n) - exact)) for n in (2048, 4096)]
    assert err[1] < 1e-3
    assert 1.8 < err[0] / err[1] < 2.2
