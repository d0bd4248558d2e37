from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floquet_rabi.errors import ConfigError
from floquet_rabi.floquet import solve
from floquet_rabi.hamiltonian import ModelParams
from floquet_rabi.sweeps import (
    PRESETS,
    PointRecord,
    SweepError,
    SweepResult,
    SweepSpec,
    assign_transition,
    evaluate_point,
    floquet_overlaps,
    local_maxima,
    locate_resonances,
    preset_spec,
    quasienergy_tracks,
    run_sweep,
    solve_with_escalation,
    track_modes,
)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec(parameter="gamma", lo=0, hi=1, points=3)
    with pytest.raises(ConfigError):
        SweepSpec(parameter="eta_m", lo=1, hi=1, points=3)
    with pytest.raises(ConfigError):
        SweepSpec(parameter="eta_m", lo=0, hi=1, points=1)
    with pytest.raises(ConfigError):
        SweepSpec(parameter="eta_m", lo=0, hi=1, points=3, outputs=("spectra",))
    with pytest.raises(ConfigError):
        SweepSpec(parameter="eta_m", lo=0, hi=1, points=3, workers=0)


def test_spec_grid_and_alias():
    spec = SweepSpec(parameter="etaM", lo=0.0, hi=1.0, points=5)
    assert spec.field_name == "eta_m"
    np.testing.assert_allclose(spec.grid, [0, 0.25, 0.5, 0.75, 1.0])
    assert spec.params_at(0.25).eta_m == 0.25


def test_presets():
    assert set(PRESETS) == {"2a", "2b", "2c", "3a", "3b", "3c", "3d"}
    spec = preset_spec("3c", ModelParams(eta0=0.3).replace(**PRESETS["3c"]["base"]), points=11)
    assert (spec.field_name, spec.lo, spec.hi, spec.points) == ("eta_m", 0.0, 1.2, 11)
    assert spec.base.eta0 == 0.0
    with pytest.raises(ConfigError):
        preset_spec("3a", ModelParams())


def test_static_sweep_records_in_grid_order():
    spec = SweepSpec(parameter="eta_m", lo=0.0, hi=0.6, points=4, outputs=("static_energies", "qrm_energies"))
    res = run_sweep(spec)
    assert [r.index for r in res.records] == [0, 1, 2, 3]
    np.testing.assert_allclose([r.value for r in res.records], spec.grid)
    # the Rabi energies ignore the modulation, the static ones do not
    np.testing.assert_allclose(res.records[0].static_energies, res.records[0].qrm_energies, atol=1e-12)
    np.testing.assert_allclose(res.records[3].qrm_energies, res.records[0].qrm_energies, atol=1e-12)
    assert not np.allclose(res.records[3].static_energies, res.records[0].static_energies)


def test_parallel_matches_serial():
    kw = dict(parameter="eta_m", lo=0.1, hi=0.5, points=5, outputs=("quasienergies", "mean_excitations"))
    serial = run_sweep(SweepSpec(**kw))
    parallel = run_sweep(SweepSpec(**kw, workers=2))
    for a, b in zip(serial.records, parallel.records):
        np.testing.assert_array_equal(a.quasienergies, b.quasienergies)
        assert a.mean_cav == b.mean_cav and a.mean_tls == b.mean_tls


def test_escalation_raises_sideband_cutoff():
    used, sol = solve_with_escalation(ModelParams(eta_m=1.2))
    assert used.l_max > 20
    assert sol.edge_weights.max() <= 1e-6
    assert sol.l_max == used.l_max


def test_failed_points_are_captured():
    rec = evaluate_point(0, 0.5, ModelParams(l_max=4), ("quasienergies",), l_max_step=0)
    assert not rec.ok and "TruncationError" in rec.error


def test_too_many_failures_raise_with_partial_result():
    spec = SweepSpec(
        parameter="eta_m", lo=0.4, hi=0.6, points=3, base=ModelParams(l_max=4),
        outputs=("quasienergies",), l_max_step=0,
    )
    with pytest.raises(SweepError) as info:
        run_sweep(spec)
    assert len(info.value.result.failures) == 3


# --- tracking on synthetic data ----------------------------------------------------


def test_tracks_follow_overlap_through_crossing():
    x = np.linspace(-1, 1, 10)
    energies = [np.sort([v, -v]) for v in x]
    # energy order swaps between the two middle points, overlaps keep identities
    overlaps = [None]
    for i in range(1, len(x)):
        swapped = (x[i - 1] < 0) != (x[i] < 0)
        overlaps.append(np.array([[0, 1], [1, 0]]) if swapped else np.eye(2))
    ts = track_modes(x, energies, overlaps)
    assert len(ts.tracks) == 2 and not ts.breaks
    # the track starting on the lower level ends on the upper one
    t0 = ts.tracks[0]
    assert t0.energies[0] == pytest.approx(-1) and t0.energies[-1] == pytest.approx(1)


def test_gap_detected_at_avoided_crossing():
    x = np.linspace(-1, 1, 21)
    delta = 0.05
    energies = [np.array([-np.hypot(v, delta), np.hypot(v, delta)]) for v in x]
    ts = track_modes(x, energies, [None] + [np.eye(2)] * 20, parities=[np.array([1.0, 1.0])] * 21)
    assert len(ts.gaps) == 1
    g = ts.gaps[0]
    assert g.value == pytest.approx(0.0, abs=1e-12)
    assert g.gap == pytest.approx(2 * delta)
    assert g.same_parity is True


def test_ambiguous_and_weak_matches_break_tracks():
    energies = [np.array([0.0, 1.0])] * 3
    overlaps = [None, np.full((2, 2), 0.7), np.eye(2) * 0.3]
    ts = track_modes([0, 1, 2], energies, overlaps)
    assert len(ts.breaks) == 4
    assert len(ts.tracks) == 6


def test_wraps_are_annotated():
    w = 1.0
    energies = [np.array([0.45]), np.array([-0.48])]
    ts = track_modes([0, 1], energies, [None, np.eye(1)], period=w)
    assert ts.tracks[0].wraps == [1]
    assert track_modes([0, 1], energies, [None, np.eye(1)]).tracks[0].wraps == []


@given(n=st.integers(2, 6), seed=st.integers(0, 10_000))
def test_tracking_recovers_random_permutations(n, seed):
    rng = np.random.default_rng(seed)
    perms = [rng.permutation(n) for _ in range(4)]
    labels = [np.arange(n)]
    overlaps = [None]
    for p in perms:
        # the mode labelled labels[-1][a] at the previous point sits at p[a] now
        O = np.zeros((n, n))
        O[np.arange(n), p] = 1.0
        overlaps.append(O)
        nxt = np.empty(n, dtype=int)
        nxt[p] = labels[-1]
        labels.append(nxt)
    energies = [lab.astype(float) for lab in labels]
    ts = track_modes(range(5), energies, overlaps)
    assert not ts.breaks
    for tr in ts.tracks:
        assert len(set(tr.energies)) == 1


def test_floquet_overlaps_self_and_shift(default_solution):
    O = floquet_overlaps(default_solution, default_solution)
    np.testing.assert_allclose(np.diag(O), 1, atol=1e-12)
    assert np.max(O - np.diag(np.diag(O))) < 0.5


def test_floquet_overlaps_across_sideband_cutoffs():
    a = solve(ModelParams(l_max=20))
    b = solve(ModelParams(l_max=24))
    O = floquet_overlaps(a, b)
    assert O.shape == (16, 16)
    assert np.all(np.max(O, axis=1) > 0.99)


def test_quasienergy_tracks_on_real_sweep():
    spec = SweepSpec(parameter="eta_m", lo=0.2, hi=0.3, points=11, outputs=("quasienergies",))
    ts = quasienergy_tracks(run_sweep(spec))
    assert not ts.breaks
    assert len(ts.tracks) == 16
    assert all(len(tr.indices) == 11 for tr in ts.tracks)


# --- resonance assignment -----------------------------------------------------------


def test_local_maxima():
    assert local_maxima([0, 1, 0, 2, 2, 1, 3]) == [1, 3]
    assert local_maxima([0, 1, 0, 5, 0], floor=2) == [3]
    assert local_maxima([1, 2]) == []


def test_assign_transition_prefers_smallest_detuning():
    E = np.array([0.0, 0.7, 1.01, 1.5])
    assert assign_transition(E, None, 0.5) == (3, 0, 3, pytest.approx(0.0))
    parities = np.array([1.0, 1.0, 1.0, -1.0])
    n, j, k, res = assign_transition(E, parities, 0.5)
    assert (n, j, k) == (2, 0, 2) and res == pytest.approx(0.01)
    n, j, k, _ = assign_transition(E, None, 0.5, sources=(1,))
    assert j == 1


def test_locate_resonances_on_synthetic_sweep():
    spec = SweepSpec(parameter="eta_m", lo=0.0, hi=1.0, points=5, outputs=("mean_excitations",))
    heights = [0.0, 0.2, 1.0, 0.3, 0.1]
    records = []
    for i, (v, h) in enumerate(zip(spec.grid, heights)):
        rec = PointRecord(index=i, value=v, params=ModelParams(eta_m=v))
        rec.static_energies = np.array([0.0, 0.49, 1.5, 2.2])
        rec.parities = np.ones(4)
        rec.mean_cav, rec.mean_tls = h, h / 10
        records.append(rec)
    found = locate_resonances(SweepResult(spec=spec, grid=spec.grid, records=records))
    assert {(r.observable, r.index) for r in found} == {("cav", 2), ("tls", 2)}
    r = found[0]
    assert (r.order, r.lower, r.upper) == (3, 0, 2) and r.residual == pytest.approx(0.0)
