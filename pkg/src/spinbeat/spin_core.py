"""Two-spin states and their observables.

The joint state of the two proton spins is expanded over the product basis

    |1> = |up,up>,  |2> = |down,down>,  |3> = |up,down>,  |4> = |down,up>,

with complex amplitudes (c11, c22, c12, c21) in that order.  Everything
downstream (Hamiltonian matrices, the collapse coupling, trajectory state
vectors) uses this ordering.

Observables:

* entanglement      E = 2|det C| = 2|c11*c22 - c12*c21|, 0 for product
                    states, 1 for maximally entangled ones;
* transverse
  magnetization     M = sqrt(<Sx/2>^2 + <Sy/2>^2) with Sx, Sy the total-spin
                    Pauli matrices (sigma^(1) + sigma^(2)), built explicitly
                    as 4x4 matrices, M is the detectable NMR signal;
* det-phase         arg(det C) on the principal branch (-pi, pi], declared
                    invalid below a |det C| threshold where the phase is
                    indeterminate.

All functions here are pure; states are immutable value objects.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

#: below this |det C| the determinant phase is treated as indeterminate
EPS_DET_DEFAULT = 1e-12

#: tolerance for "normalized" preconditions on observable inputs
NORM_TOL_DEFAULT = 1e-6

_SQRT2 = np.sqrt(2.0)

# Single-spin Pauli matrices (up = (1, 0)).
_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_PAULI_Y = np.array([[0.0, -1j], [1j, 0.0]], dtype=complex)

# Map from this package's basis order (uu, dd, ud, du) to the plain kron
# order (uu, ud, du, dd): slot i holds kron index _PERM[i].
_PERM = np.array([0, 3, 1, 2])


def _to_package_order(m_kron: np.ndarray) -> np.ndarray:
    return m_kron[np.ix_(_PERM, _PERM)]


def _total_spin(pauli: np.ndarray) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    return _to_package_order(np.kron(pauli, eye) + np.kron(eye, pauli))


#: explicit 4x4 total-spin matrices in the (uu, dd, ud, du) basis
SIGMA_X_TOTAL = _total_spin(_PAULI_X)
SIGMA_Y_TOTAL = _total_spin(_PAULI_Y)


@dataclass(frozen=True)
class SpinState:
    """Four complex amplitudes over (|uu>, |dd>, |ud>, |du>).

    States are not forced to unit norm at construction: evolved states are
    expected to be normalized, and the observables that rely on it check
    rather than renormalize, so integrator drift stays visible.
    """

    c11: complex
    c22: complex
    c12: complex
    c21: complex

    @classmethod
    def from_vector(cls, v) -> "SpinState":
        v = np.asarray(v, dtype=complex)
        if v.shape != (4,):
            raise ValueError(f"state vector must have shape (4,), got {v.shape}")
        return cls(complex(v[0]), complex(v[1]), complex(v[2]), complex(v[3]))

    @classmethod
    def down_down(cls) -> "SpinState":
        return cls(0.0, 1.0, 0.0, 0.0)

    @classmethod
    def up_up(cls) -> "SpinState":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def bell(cls) -> "SpinState":
        """(|uu> + |dd>)/sqrt(2), maximally entangled."""
        return cls(1 / _SQRT2, 1 / _SQRT2, 0.0, 0.0)

    @classmethod
    def transverse(cls) -> "SpinState":
        """Both spins along +x: all four amplitudes 1/2."""
        return cls(0.5, 0.5, 0.5, 0.5)

    def as_vector(self) -> np.ndarray:
        return np.array([self.c11, self.c22, self.c12, self.c21], dtype=complex)

    def norm(self) -> float:
        return float(np.sqrt(abs(self.c11) ** 2 + abs(self.c22) ** 2
                             + abs(self.c12) ** 2 + abs(self.c21) ** 2))

    def det(self) -> complex:
        """det of the 2x2 amplitude matrix, c11*c22 - c12*c21."""
        return self.c11 * self.c22 - self.c12 * self.c21


@dataclass(frozen=True)
class ObservableSample:
    """Derived observables of one trajectory sample.

    ``arg_det`` is on the principal branch (-pi, pi] and only meaningful
    when ``arg_det_valid`` is set; it is forced to 0.0 otherwise.
    """

    t: float
    m: float
    e: float
    arg_det: float
    arg_det_valid: bool
    norm: float


def entanglement(s: SpinState) -> float:
    """E = 2|c11*c22 - c12*c21|; lies in [0, 1] for normalized states.

    The state does not need to be normalized, the value is computed on the
    amplitudes as given.
    """
    return 2.0 * abs(s.det())


def transverse_magnetization(s: SpinState, norm_tol: float = NORM_TOL_DEFAULT) -> float:
    """M = sqrt(<Sx/2>^2 + <Sy/2>^2) from the explicit total-spin matrices.

    Deliberately evaluated through the 4x4 matrices rather than a
    hand-reduced expression; the closed form lives in the test suite as an
    independent cross-check.

    Raises ValueError if the state norm deviates from 1 by more than
    ``norm_tol``.
    """
    n = s.norm()
    if abs(n - 1.0) > norm_tol:
        raise ValueError(f"state norm {n:.12g} deviates from 1 beyond {norm_tol}")
    v = s.as_vector()
    sx = np.real(np.vdot(v, SIGMA_X_TOTAL @ v)) / 2.0
    sy = np.real(np.vdot(v, SIGMA_Y_TOTAL @ v)) / 2.0
    return float(np.hypot(sx, sy))


def arg_det(s: SpinState, eps_det: float = EPS_DET_DEFAULT) -> tuple[float, bool]:
    """Principal-branch phase of det C with a validity flag.

    Returns (phase, True) when |det C| >= eps_det, else (0.0, False): the
    phase of a vanishing determinant is indeterminate, and consumers (the
    collapse term in particular) must switch off rather than guess.
    """
    if eps_det <= 0:
        raise ValueError("eps_det must be positive")
    d = s.det()
    if abs(d) < eps_det:
        return 0.0, False
    return cmath.phase(d), True


def local_unitary(s: SpinState, u1, u2, unitary_tol: float = 1e-10) -> SpinState:
    """Apply the one-particle transformation u1 (x) u2 to the state.

    Used by tests to probe invariances (det C is unchanged whenever
    det u1 = det u2 = 1); the simulator loop never calls this.

    Raises ValueError if either factor fails u @ u^dagger = I beyond
    ``unitary_tol``.
    """
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    for name, u in (("u1", u1), ("u2", u2)):
        if u.shape != (2, 2):
            raise ValueError(f"{name} must be 2x2, got {u.shape}")
        if np.abs(u @ u.conj().T - np.eye(2)).max() > unitary_tol:
            raise ValueError(f"{name} is not unitary within {unitary_tol}")
    u_full = _to_package_order(np.kron(u1, u2))
    return SpinState.from_vector(u_full @ s.as_vector())


def observable_arrays(states: np.ndarray, eps_det: float = EPS_DET_DEFAULT):
    """Vectorized observables for an (n, 4) block of state vectors.

    Returns (m, e, arg_det, arg_det_valid, norm) as 1-d arrays.  M uses the
    same explicit matrices as :func:`transverse_magnetization` (no norm gate
    here; trajectory construction checks norms separately).
    """
    states = np.asarray(states, dtype=complex)
    det = states[:, 0] * states[:, 1] - states[:, 2] * states[:, 3]
    e = 2.0 * np.abs(det)
    valid = np.abs(det) >= eps_det
    theta = np.where(valid, np.angle(det), 0.0)
    sx = np.real(np.einsum("ni,ij,nj->n", states.conj(), SIGMA_X_TOTAL, states)) / 2.0
    sy = np.real(np.einsum("ni,ij,nj->n", states.conj(), SIGMA_Y_TOTAL, states)) / 2.0
    m = np.hypot(sx, sy)
    norm = np.sqrt(np.sum(np.abs(states) ** 2, axis=1))
    return m, e, theta, valid, norm
