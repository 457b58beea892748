"""Acceptance suite: ten numbered criteria, one pass/fail line printed each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines for the
passing criteria too (pytest shows captured output only for failures by
default).

Two criteria are red by design rather than weakened:

* criterion 6 pins the determinant-phase plateau to +pi/2; the dynamics
  robustly selects -pi/2 (confirmed through the spectral propagator, the
  adaptive kernel, the frozen-phase propagator, and dense-matrix
  exponentials during development);
* criterion 7 requires the collapse term to depress the mid-period
  magnetization envelope (ratio < 1); with the determinant phase the
  equation itself selects, the collapse term suppresses the entanglement
  and *lifts* the envelope (ratio 1.456).  Freezing the phase factor at
  +pi/2, the mirror of the self-selected value, reproduces the expected
  depression (ratio 0.44), so the two red criteria share a single sign
  root cause.

The mirrored counterparts are asserted green in test_dynamics.py and
test_analysis.py, so the magnitude of every effect remains regression
guarded.
"""

import math

import numpy as np
import pytest

import golden_values as gv
from spinbeat import (PhysicalParams, RotatingFrameParams, SpinState,
                      entanglement, entanglement_period, evolve_linear,
                      local_unitary, stern_gerlach_time)
from spinbeat.analysis import correlate, envelope
from spinbeat.hamiltonian import (GAMMA_PROTON, build_hamiltonian, eigensystem,
                                  hamiltonian_matrix, perturbed_eigenvalues)

DOWN = SpinState.down_down()


def report(num, ok, detail):
    print(f"[acceptance] criterion {num:02d}: {'PASS' if ok else 'FAIL'} | {detail}")
    return ok


def test_criterion_01_beat_amplitude_and_return(beat_traj, fig_grid, t_e):
    i = int(np.argmax(beat_traj.e))
    e_max, t_peak = float(beat_traj.e[i]), float(fig_grid[i])
    near = np.abs(fig_grid - t_e) <= 5.0
    e_return = float(beat_traj.e[near].min())
    ok = (abs(e_max - 0.80) <= 0.05
          and abs(t_peak - math.pi / (4 * 0.0025)) <= 35.0
          and e_return < 0.05)
    assert report(1, ok, f"E max {e_max:.4f} at t {t_peak:.1f}; "
                         f"E near t_e {e_return:.4f}")


def test_criterion_02_first_order_spectrum_converges_quadratically():
    js = np.array([0.001, 0.002, 0.004])
    resid = []
    for j in js:
        rp = RotatingFrameParams(nu=5.0, d=1.0, j=float(j), lam=10.0)
        exact = eigensystem(build_hamiltonian(rp)).eigenvalues
        resid.append(np.abs(exact - perturbed_eigenvalues(rp)).max())
    slope = float(np.polyfit(np.log(js), np.log(resid), 1)[0])
    ok = abs(slope - 2.0) <= 0.3
    assert report(2, ok, f"log-log slope {slope:.3f} (target 2.0 +- 0.3)")


def test_criterion_03_symmetric_spectrum_against_quartic_oracle():
    es = eigensystem(hamiltonian_matrix(5.0, 1.0, 0.0, 10.0))
    s = 5.0 ** 2 + 10.0 ** 2 + 1.0 ** 2
    disc = math.sqrt(s * s - 4.0 * 25.0)
    k0 = math.sqrt((s - disc) / 2.0)
    k1 = math.sqrt((s + disc) / 2.0)
    dev = np.abs(es.eigenvalues - np.array([-k1, -k0, k0, k1])).max()
    ok = (dev < 1e-9 and abs(k0 - 0.4458) < 5e-4 and abs(k1 - 11.2161) < 5e-4)
    assert report(3, ok, f"kappa0 {k0:.6f}, kappa1 {k1:.6f}, "
                         f"oracle deviation {dev:.2e}")


def test_criterion_04_norm_conservation_with_collapse(depression):
    drift = depression.trajectory_on.max_norm_drift
    ok = drift < 1e-8
    assert report(4, ok, f"max |norm - 1| = {drift:.3e} over [0, t_e], eta = 2j")


def test_criterion_05_kernel_matches_spectral_propagator(depression):
    off = depression.trajectory_off
    ref = evolve_linear(off.params, DOWN, off.times)
    sup = float(np.abs(off.states - ref.states).max())
    ok = sup < 1e-8
    assert report(5, ok, f"sup-norm vs spectral over [0, t_e] = {sup:.3e}")


def test_criterion_06_determinant_phase_plateau(beat_traj, frozen_traj,
                                                fig_grid, t_e):
    target = math.pi / 2
    win = (fig_grid > 0.05 * t_e) & (fig_grid < 0.95 * t_e) & beat_traj.arg_det_valid
    dev_exact = float(np.abs(beat_traj.arg_det[win] - target).max())
    first = ((fig_grid > 0.05 * t_e) & (fig_grid <= 0.5 * t_e)
             & frozen_traj.arg_det_valid)
    dev_frozen = float(np.abs(frozen_traj.arg_det[first] - target).max())
    ok = dev_exact <= 0.3 and dev_frozen <= 0.3
    # the plateau exists and is tight, but at -pi/2: the mirror assertions
    # pass in test_dynamics.py with the same 0.3 bound
    assert report(6, ok, f"max dev from +pi/2: eta0 {dev_exact:.3f} rad, "
                         f"linearized 2j first half {dev_frozen:.3f} rad")


def test_criterion_07_envelope_depression(depression):
    ratio = depression.ratio
    ok = ratio < 1.0 and abs(ratio / gv.DEPRESSION_RATIO - 1.0) < 0.01
    # the measured effect is a mirror-signed lift (golden 1.456, regression
    # guarded in test_analysis.py); the depression as stated does not occur
    assert report(7, ok, f"mid-period envelope ratio = {ratio:.4f} "
                         f"(frozen first-run value {gv.DEPRESSION_RATIO:.4f})")


def test_criterion_08_envelope_tracks_disentanglement(beat_traj, fig_grid):
    env = envelope(fig_grid, beat_traj.m, gv.CORRELATION_WINDOW)
    r = correlate(env, fig_grid, 1.0 - beat_traj.e)
    ok = r > gv.CORRELATION_THRESHOLD
    assert report(8, ok, f"Pearson r = {r:.4f} "
                         f"(frozen threshold {gv.CORRELATION_THRESHOLD})")


def test_criterion_09_local_unitary_invariance():
    rng = np.random.default_rng(20260808)

    def su2():
        q = rng.normal(size=4)
        a, b, c, d = q / np.linalg.norm(q)
        return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]])

    worst = 0.0
    states = [SpinState.bell()]
    for _ in range(4):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        states.append(SpinState.from_vector(v / np.linalg.norm(v)))
    for _ in range(100):
        u1, u2 = su2(), su2()
        for s in states:
            worst = max(worst, abs(entanglement(local_unitary(s, u1, u2))
                                   - entanglement(s)))
    ok = worst < 1e-12
    assert report(9, ok, f"largest |E change| over 100 pairs = {worst:.2e}")


def test_criterion_10_time_scales():
    gamma1 = GAMMA_PROTON * (1.0 + 2e-5)
    p = PhysicalParams(B=1.0, b=1e-4, gamma1=gamma1, gamma2=GAMMA_PROTON,
                       omega_rf=0.5 * (gamma1 + GAMMA_PROTON), D=1e-9, grad=100.0)
    t_sg = stern_gerlach_time(p)
    t_beat = entanglement_period(1.0)
    ok = 0.01 <= t_sg <= 10.0 and abs(t_beat - 1.5707963267948966) < 1e-12
    assert report(10, ok, f"t_sg = {t_sg:.4f} s, beat period at 1/s = {t_beat:.6f} s")
