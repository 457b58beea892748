import math

import numpy as np
import pytest

import golden_values as gv
from spinbeat import (IntegratorConfig, RotatingFrameParams, SampleAverageError,
                      SpinState, correlate, default_envelope_window,
                      detuning_profile, envelope, envelope_depression,
                      evolve_linear, sample_average, upsilon_eigenbasis)
from spinbeat.dynamics import UPSILON

DOWN = SpinState.down_down()


# ---------------------------------------------------------------- envelope

def test_envelope_constant_series():
    ts = np.linspace(0.0, 10.0, 101)
    env = envelope(ts, np.full(101, 2.5), window=1.0)
    assert np.array_equal(env.values, np.full(101, 2.5))
    assert env.method == "sliding_max"


def test_envelope_rectified_sine_saturates():
    omega = 3.0
    dt = 2 * math.pi / omega / 400.0
    ts = np.arange(0.0, 40 * math.pi / omega, dt)
    vals = np.abs(np.sin(omega * ts))
    env = envelope(ts, vals, window=4 * 2 * math.pi / omega)
    interior = (ts > ts[0] + 5.0) & (ts < ts[-1] - 5.0)
    assert np.abs(env.values[interior] - 1.0).max() < 1e-3


def test_envelope_rejections():
    with pytest.raises(ValueError, match="too short"):
        envelope([0.0, 1.0], [1.0, 2.0], window=1.0)
    ts = np.array([0.0, 1.0, 2.5, 3.0])
    with pytest.raises(ValueError, match="uniform"):
        envelope(ts, np.ones(4), window=2.0)
    with pytest.raises(ValueError, match="3 sample intervals"):
        envelope(np.arange(10.0), np.ones(10), window=2.0)


def test_envelope_translation_equivariance():
    rng = np.random.default_rng(5)
    ts = np.linspace(0.0, 20.0, 201)
    vals = rng.normal(size=201)
    a = envelope(ts, vals, window=1.5)
    b = envelope(ts + 37.0, vals, window=1.5)
    assert np.array_equal(a.values, b.values)


def test_envelope_scale_equivariance():
    rng = np.random.default_rng(6)
    ts = np.linspace(0.0, 20.0, 201)
    vals = rng.normal(size=201)
    a = envelope(ts, vals, window=1.5)
    b = envelope(ts, 3.0 * vals, window=1.5)
    assert np.allclose(b.values, 3.0 * a.values, atol=0.0, rtol=1e-15)


def test_envelope_tracks_the_beat(beat_traj, fig_grid):
    # oracle: the envelope's slow shape follows the closed-form beat
    env = envelope(fig_grid, beat_traj.m, gv.CORRELATION_WINDOW)
    beat = 1.0 - 0.8 * np.abs(np.sin(2 * 0.0025 * fig_grid))
    r = correlate(env, fig_grid, beat)
    assert r > 0.85


def test_default_envelope_window_value(rp_beat):
    # four periods of the fastest eigenfrequency of the run's parameters
    # (j included, hence slightly off the j = 0 value KAPPA1)
    kappa_max = float(np.abs(gv.EXACT_EIGENVALUES_BEAT).max())
    assert default_envelope_window(rp_beat) == pytest.approx(
        4 * 2 * math.pi / kappa_max, rel=1e-9)


# --------------------------------------------------------------- correlate

def test_correlate_identical_and_negated():
    ts = np.linspace(0.0, 10.0, 101)
    vals = np.sin(ts) + 2.0
    env = envelope(ts, vals, window=0.5)
    assert correlate(env, ts, env.values) == pytest.approx(1.0, abs=1e-12)
    assert correlate(env, ts, -env.values) == pytest.approx(-1.0, abs=1e-12)


def test_correlate_affine_invariance():
    rng = np.random.default_rng(8)
    ts = np.linspace(0.0, 10.0, 101)
    vals = rng.normal(size=101)
    env = envelope(ts, vals, window=0.5)
    other = rng.normal(size=101)
    r = correlate(env, ts, other)
    assert correlate(env, ts, 2.5 * other + 7.0) == pytest.approx(r, abs=1e-12)


def test_correlate_zero_variance_is_undefined():
    ts = np.linspace(0.0, 10.0, 101)
    env = envelope(ts, np.ones(101), window=0.5)
    assert math.isnan(correlate(env, ts, np.arange(101.0)))


def test_correlate_requires_overlap():
    ts = np.linspace(0.0, 10.0, 101)
    env = envelope(ts, np.ones(101), window=0.5)
    with pytest.raises(ValueError, match="overlap"):
        correlate(env, ts + 100.0, np.ones(101))


def test_fig2_correlation_golden(beat_traj, fig_grid):
    env = envelope(fig_grid, beat_traj.m, gv.CORRELATION_WINDOW)
    r = correlate(env, fig_grid, 1.0 - beat_traj.e)
    assert r == pytest.approx(gv.CORRELATION_VALUE, abs=1e-9)


# -------------------------------------------------------------- depression

def test_depression_identity_when_collapse_off(rp_beat):
    assert envelope_depression(rp_beat, DOWN, IntegratorConfig()) == 1.0


def test_depression_requires_beat():
    rp = RotatingFrameParams(nu=5.0, d=1.0, j=0.0, lam=10.0, eta=0.005)
    with pytest.raises(ValueError, match="j > 0"):
        envelope_depression(rp, DOWN)


def test_depression_golden_regression(depression):
    # the collapse term, phase-locked by the dynamics itself, suppresses the
    # entanglement and lifts the mid-period envelope: ratio above 1
    assert depression.ratio == pytest.approx(gv.DEPRESSION_RATIO, rel=0.01)
    assert depression.ratio > 1.0
    assert depression.trajectory_on.e.max() < depression.trajectory_off.e.max()


# ----------------------------------------------------------------- upsilon

def test_upsilon_identity_transform():
    rp_diag_like = RotatingFrameParams(nu=0.0, d=1.0, j=0.0, lam=0.0)
    # H = diag(0, 0, 1, -1): eigenvectors are basis vectors
    rep = upsilon_eigenbasis(rp_diag_like)
    assert np.allclose(np.abs(rep.upsilon_prime), np.abs(UPSILON), atol=1e-14)
    assert rep.antisymmetry_residual < 1e-14


def test_upsilon_antisymmetry_random_params():
    rng = np.random.default_rng(11)
    for _ in range(25):
        nu, d, lam = rng.uniform(0.5, 15.0, size=3)
        j = rng.uniform(0.0, 0.01)
        rp = RotatingFrameParams(nu=nu, d=d, j=j, lam=lam)
        rep = upsilon_eigenbasis(rp)
        assert rep.antisymmetry_residual < 1e-12


def test_upsilon_canonical_structure(rp_collapse):
    rep = upsilon_eigenbasis(rp_collapse)
    # slow pair first in the ordering
    assert np.abs(rep.eigenvalues[:2]).max() < 1.0
    assert np.abs(rep.eigenvalues[2:]).min() > 10.0
    # the slow-pair entry is actually the smallest off-diagonal element;
    # its dynamical weight comes from resonance, not magnitude
    assert rep.dominance_ratio == pytest.approx(gv.UPSILON_DOMINANCE, rel=1e-9)


# ------------------------------------------------------- detuning profiles

def test_profile_homogeneous_field():
    prof = detuning_profile(1e-6, 0.0, 2.675e8, 400.0, 5.0, 8)
    assert np.allclose(prof.nus, 5.0)
    assert prof.in_band_fraction(10.0) == 1.0
    assert prof.in_band_fraction(4.0) == 0.0


def test_profile_spread_scales_with_thickness():
    a = detuning_profile(1e-6, 100.0, 2.675e8, 400.0, 5.0, 16)
    b = detuning_profile(2e-6, 100.0, 2.675e8, 400.0, 5.0, 16)
    assert np.ptp(b.nus) == pytest.approx(2 * np.ptp(a.nus), rel=1e-12)


def test_profile_weights_and_affinity():
    prof = detuning_profile(1e-6, 100.0, 2.675e8, 400.0, 5.0, 32)
    assert prof.weights.sum() == pytest.approx(1.0, abs=1e-12)
    steps = np.diff(prof.nus)
    assert np.allclose(steps, steps[0], rtol=1e-9)


def test_profile_requires_two_nodes():
    with pytest.raises(ValueError, match="2 nodes"):
        detuning_profile(1e-6, 100.0, 2.675e8, 400.0, 5.0, 1)


def test_profile_micron_slab_fraction_reported():
    # micron slab in a 1 T/cm gradient: the band 1 <= nu <= 10 covers only a
    # small part of the slab under these unit conventions; the fraction is
    # reported, not asserted against any external figure
    prof = detuning_profile(1e-6, 100.0, 2.6752218708e8, 400.0, 5.0, 201)
    frac = prof.in_band_fraction(10.0)
    spread = np.ptp(prof.nus) * 201 / 200  # continuum width
    assert frac == pytest.approx(9.0 / spread, abs=2.0 / 201)
    assert 0.0 <= frac <= 1.0


# ---------------------------------------------------------- sample average

def test_sample_average_single_node_equals_direct(rp_beat):
    prof_type = detuning_profile(1e-6, 0.0, 2.675e8, 400.0, 5.0, 2)
    ts = np.linspace(0.0, 30.0, 128)
    avg = sample_average(prof_type, rp_beat, DOWN, ts, mode="linear")
    direct = evolve_linear(rp_beat, DOWN, ts)
    assert np.array_equal(avg.m, direct.m)
    assert np.array_equal(avg.e, direct.e)


def test_sample_average_matches_manual_average(rp_beat, t_e):
    prof = detuning_profile(1e-6, 50.0, 2.675e8, 2000.0, 5.0, 5)
    ts = np.linspace(0.0, t_e, 512)
    avg = sample_average(prof, rp_beat, DOWN, ts, mode="linear")
    manual_e = np.zeros_like(ts)
    from dataclasses import replace
    for w, nu in zip(prof.weights, prof.nus):
        manual_e += w * evolve_linear(replace(rp_beat, nu=float(nu)), DOWN, ts).e
    assert np.allclose(avg.e, manual_e, atol=1e-15)


def test_sample_average_dephasing_lowers_peak(rp_beat, t_e):
    # nodes spanning nu in about [1, 10]: the beat prefactor falls off with
    # detuning, so the slab-averaged peak sits below the single nu = 5 peak
    prof = detuning_profile(1e-6, 90.0, 2.675e8, 2407.5, 5.5, 9)
    assert prof.nus.min() >= 1.0 and prof.nus.max() <= 10.0
    ts = np.linspace(0.0, t_e, 1024)
    avg = sample_average(prof, rp_beat, DOWN, ts, mode="linear")
    single = evolve_linear(rp_beat, DOWN, ts)
    assert avg.e.max() < single.e.max() - 0.02


def test_sample_average_concurrent_matches_serial(rp_beat):
    prof = detuning_profile(1e-6, 50.0, 2.675e8, 2000.0, 5.0, 4)
    ts = np.linspace(0.0, 20.0, 64)
    serial = sample_average(prof, rp_beat, DOWN, ts, mode="linear")
    threaded = sample_average(prof, rp_beat, DOWN, ts, mode="linear", max_workers=4)
    assert np.array_equal(serial.m, threaded.m)
    assert np.array_equal(serial.e, threaded.e)


def test_sample_average_rejects_unknown_mode(rp_beat):
    prof = detuning_profile(1e-6, 0.0, 2.675e8, 400.0, 5.0, 2)
    with pytest.raises(ValueError, match="mode"):
        sample_average(prof, rp_beat, DOWN, [0.0, 1.0], mode="magic")


def test_sample_average_aggregates_failures():
    rp = RotatingFrameParams(nu=5.0, d=1.0, j=0.0025, lam=10.0, eta=1e15)
    prof = detuning_profile(1e-6, 0.0, 2.675e8, 400.0, 5.0, 3)
    with pytest.raises(SampleAverageError) as err:
        sample_average(prof, rp, SpinState.bell(), np.linspace(0.0, 1.0, 8),
                       IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12), mode="inl")
    assert [i for i, _ in err.value.failures] == [0, 1, 2]
