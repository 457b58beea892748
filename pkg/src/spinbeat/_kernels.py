"""Hot integration kernel with a numba backend and a pure-numpy fallback.

The only genuinely hot loop in the package is the adaptive Dormand-Prince
5(4) integration of the collapse equation

    dC/dt = -i H C + eta * e^{i arg det C} * Y * conj(C),

where H is the rotating-frame matrix, Y couples (c11, c22) antisymmetrically
and the nonlinear term is evaluated as zero whenever |det C| falls below a
threshold (the phase factor is indeterminate there).  A trajectory spans
hundreds of beat-period units while the step size tracks the fast
eigenfrequency, so a run takes 10^5..10^6 steps of 4-component arithmetic:
ideal numba territory, hopeless as vectorized numpy.

Backend selection happens at import time:

* default: compile with numba (``@njit(cache=True, nogil=True)``);
* ``SPINBEAT_NUMBA=0`` in the environment forces the interpreted
  pure-python/numpy path (same source, bit-compatible semantics);
* a missing numba install falls back the same way with a warning.

``build_integrator(use_numba)`` hands out a kernel for an explicit backend
regardless of the environment, which is what ``benchmarks/`` uses to time
the two paths against each other.

Samples are produced by the standard quartic dense-output interpolant of
the Dormand-Prince pair, evaluated at the requested grid times, so the
accept/reject step sequence is completely independent of the sampling grid.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_ENV_FLAG = "SPINBEAT_NUMBA"

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1

# Dormand-Prince 5(4) tableau (FSAL: row 7 of the stage matrix equals the
# fifth-order weights, so the last stage is next step's first).
_STAGE_TIMES = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_STAGES = np.zeros((7, 6))
_STAGES[1, :1] = [1 / 5]
_STAGES[2, :2] = [3 / 40, 9 / 40]
_STAGES[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_STAGES[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_STAGES[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_STAGES[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]

# fifth-order minus embedded fourth-order weights (local error estimator)
_ERR_WEIGHTS = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                         -17253 / 339200, 22 / 525, -1 / 40])

# quartic dense-output polynomial weights per stage
_DENSE = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _integrate_collapse_impl(y0, t_grid, nu, d, jc, lam, eta, eps_det,
                             rtol, atol, max_step, first_step):
    """Integrate the collapse equation from t = 0 over a sample grid.

    y0        : (4,) complex128, state at t = 0 (package basis order)
    t_grid    : (n,) float64, strictly increasing, t_grid[0] >= 0

    Returns (samples (n, 4) complex128, n_accepted, n_rejected, status,
    t_fail); on STATUS_STEP_UNDERFLOW the samples past t_fail are left as
    zeros.
    """
    h11 = jc - nu
    h22 = jc + nu
    h33 = d - jc
    h44 = -d - jc
    hl = 0.5 * lam
    tj = 2.0 * jc

    def rhs(c, out):
        s = hl * (c[0] + c[1])
        out[0] = -1j * (h11 * c[0] + hl * (c[2] + c[3]))
        out[1] = -1j * (h22 * c[1] + hl * (c[2] + c[3]))
        out[2] = -1j * (s + h33 * c[2] + tj * c[3])
        out[3] = -1j * (s + tj * c[2] + h44 * c[3])
        if eta != 0.0:
            det = c[0] * c[1] - c[2] * c[3]
            mag = abs(det)
            if mag >= eps_det:
                phase = det / mag
                out[0] += eta * phase * (-np.conj(c[1]))
                out[1] += eta * phase * np.conj(c[0])

    n_out = t_grid.shape[0]
    out = np.zeros((n_out, 4), dtype=np.complex128)
    k = np.zeros((7, 4), dtype=np.complex128)
    ytmp = np.zeros(4, dtype=np.complex128)
    y = y0.copy()

    t = 0.0
    t_end = t_grid[n_out - 1]
    idx = 0
    while idx < n_out and t_grid[idx] <= 0.0:
        for i in range(4):
            out[idx, i] = y[i]
        idx += 1

    n_acc = 0
    n_rej = 0
    status = STATUS_OK
    t_fail = 0.0
    h = min(first_step, max_step)
    rhs(y, k[0])
    rejected_last = False

    while idx < n_out:
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        elif h < 1e-14 * max(abs(t), 1.0):
            status = STATUS_STEP_UNDERFLOW
            t_fail = t
            break

        for s in range(1, 7):
            for i in range(4):
                acc = 0.0 + 0.0j
                for m in range(s):
                    acc += _STAGES[s, m] * k[m, i]
                ytmp[i] = y[i] + h * acc
            rhs(ytmp, k[s])
        # FSAL: after stage 7, ytmp holds the fifth-order y_new

        err_norm_sq = 0.0
        for i in range(4):
            e = 0.0 + 0.0j
            for m in range(7):
                e += _ERR_WEIGHTS[m] * k[m, i]
            scale = atol + rtol * max(abs(y[i]), abs(ytmp[i]))
            r = h * abs(e) / scale
            err_norm_sq += r * r
        err_norm = np.sqrt(err_norm_sq / 4.0)

        if err_norm <= 1.0:
            t_new = t_end if last else t + h
            while idx < n_out and (last or t_grid[idx] <= t_new):
                x = (t_grid[idx] - t) / h
                if x > 1.0:
                    x = 1.0
                elif x < 0.0:
                    x = 0.0
                x2 = x * x
                x3 = x2 * x
                x4 = x2 * x2
                for i in range(4):
                    acc = 0.0 + 0.0j
                    for m in range(7):
                        acc += k[m, i] * (_DENSE[m, 0] * x + _DENSE[m, 1] * x2
                                          + _DENSE[m, 2] * x3 + _DENSE[m, 3] * x4)
                    out[idx, i] = y[i] + h * acc
                idx += 1
            t = t_new
            for i in range(4):
                y[i] = ytmp[i]
                k[0, i] = k[6, i]
            n_acc += 1
            if err_norm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * err_norm ** -0.2)
            if rejected_last:
                factor = min(1.0, factor)
            h = min(h * factor, max_step)
            rejected_last = False
        else:
            n_rej += 1
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            rejected_last = True

    return out, n_acc, n_rej, status, t_fail


def _numba_requested() -> bool:
    return os.environ.get(_ENV_FLAG, "1").strip().lower() not in ("0", "false", "off", "no")


def _compile(fn):
    import numba

    return numba.njit(cache=True, nogil=True)(fn)


def build_integrator(use_numba: bool):
    """Kernel for an explicit backend, ignoring the environment flag."""
    if use_numba:
        return _compile(_integrate_collapse_impl)
    return _integrate_collapse_impl


if _numba_requested():
    try:
        integrate_collapse = _compile(_integrate_collapse_impl)
        BACKEND = "numba"
    except ImportError:
        warnings.warn("numba is not importable; using the pure-numpy kernel "
                      "(set SPINBEAT_NUMBA=0 to silence this)")
        integrate_collapse = _integrate_collapse_impl
        BACKEND = "numpy"
else:
    integrate_collapse = _integrate_collapse_impl
    BACKEND = "numpy"


def backend() -> str:
    """Active kernel backend, 'numba' or 'numpy'."""
    return BACKEND
