"""Rotating-frame Hamiltonian of the two-proton system.

Two protons with slightly different magneto-gyric ratios sit in a static
field B with a weak rf field b rotating at omega_rf.  In the frame
co-rotating with the rf field the spin Hamiltonian is governed by four
rates:

    nu  = wbar - omega_rf          detuning
    d   = (w1 - w2) / 2            chemical-shift half-difference
    j                              spin-spin (j-) coupling strength
    lam = (b / B) * wbar           rf coupling

with w1 = gamma1*B, w2 = gamma2*B, wbar = (w1 + w2)/2.  Everything is
expressed in units of d (so d = 1 in canonical runs), and one time unit
is 1/d.  In the (uu, dd, ud, du) basis of :mod:`spinbeat.spin_core` the
4x4 matrix is

    [ j - nu   0        lam/2    lam/2 ]
    [ 0        j + nu   lam/2    lam/2 ]
    [ lam/2    lam/2    d - j    2j    ]
    [ lam/2    lam/2    2j      -d - j ]

For j = 0 the spectrum is symmetric, {-k1, -k0, k0, k1} with
0 < k0 < k1, and the roots obey the quartic

    x^4 - (nu^2 + lam^2 + d^2) x^2 + nu^2 d^2 = 0.

A small j splits each pair; the low beat frequency 2j produced by the
split drives both the entanglement oscillation

    E(t) ~ (1 + nu^2/lam^2)^(-1) |sin(2jt)|,   period t_e = pi/(2j),

and the slow envelope of the transverse magnetization.

The eigensolver is a cyclic Jacobi iteration: for a fixed 4x4 real
symmetric problem it is compact, dependency-free, and converges
quadratically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

#: reduced Planck constant, J*s
HBAR = 1.054571817e-34

#: proton magneto-gyric ratio, rad s^-1 T^-1 (handy default for examples)
GAMMA_PROTON = 2.6752218708e8

#: dH/dj of the rotating-frame matrix (the j-coupling pattern)
J_COUPLING_PATTERN = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 2.0],
    [0.0, 0.0, 2.0, -1.0],
])


@dataclass(frozen=True)
class RotatingFrameParams:
    """Dimensionless rotating-frame rates, in units of d.

    ``eta`` is the strength of the collapse-type nonlinearity used by the
    dynamics module (0 switches it off).  Canonical runs have d = 1; the
    interesting regime is j << |nu| <~ lam, a mismatch only warns.
    """

    nu: float
    d: float = 1.0
    j: float = 0.0
    lam: float = 10.0
    eta: float = 0.0

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"d must be positive, got {self.d}")
        if self.j < 0:
            raise ValueError(f"j must be non-negative, got {self.j}")
        if self.lam < 0:
            raise ValueError(f"lam must be non-negative, got {self.lam}")
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")
        if (self.j > 0 and 10 * self.j > abs(self.nu)) or abs(self.nu) > 2 * self.lam:
            warnings.warn(
                f"parameters nu={self.nu}, j={self.j}, lam={self.lam} fall outside "
                "the canonical regime j << |nu| <~ lam; beating may be weak",
                stacklevel=2,
            )


@dataclass(frozen=True)
class PhysicalParams:
    """Lab-frame quantities, SI units.

    B, b          static / rf field magnitudes (T)
    gamma1/2      magneto-gyric ratios (rad s^-1 T^-1)
    omega_rf      rf angular frequency (rad/s)
    D             molecular diameter (m)
    grad          field gradient dB/dz (T/m); 0 means a homogeneous field
    """

    B: float
    b: float
    gamma1: float
    gamma2: float
    omega_rf: float
    D: float
    grad: float = 0.0

    def __post_init__(self):
        for name in ("B", "b", "gamma1", "gamma2", "omega_rf", "D"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.grad < 0:
            raise ValueError(f"grad must be non-negative, got {self.grad}")
        if self.b / self.B > 0.01:
            warnings.warn(
                f"b/B = {self.b / self.B:.3g} is not small; the rotating-frame "
                "reduction assumes b << B",
                stacklevel=2,
            )


@dataclass(frozen=True)
class EigenSystem:
    """Real spectral decomposition H = V diag(w) V^T.

    ``eigenvalues`` ascending, ``eigenvectors`` orthonormal columns in the
    same order, ``residual`` = max_k ||H v_k - w_k v_k||.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float


def hamiltonian_matrix(nu: float, d: float, j: float, lam: float) -> np.ndarray:
    """The raw 4x4 rotating-frame matrix; no parameter validation."""
    h = lam / 2.0
    return np.array([
        [j - nu, 0.0, h, h],
        [0.0, j + nu, h, h],
        [h, h, d - j, 2.0 * j],
        [h, h, 2.0 * j, -d - j],
    ])


def build_hamiltonian(rp: RotatingFrameParams) -> np.ndarray:
    """Rotating-frame Hamiltonian for validated parameters (real symmetric)."""
    return hamiltonian_matrix(rp.nu, rp.d, rp.j, rp.lam)


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 60):
    """Cyclic Jacobi diagonalization of a real symmetric matrix.

    Sweeps rotate away every off-diagonal pair until the off-diagonal
    Frobenius norm drops below ``tol`` (relative to max(1, ||A||_F)).
    Returns (eigenvalues ascending, eigenvector columns); eigenvector signs
    are canonicalized so the largest-magnitude component is positive.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    stop = tol * max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * sum(a[p, q] ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = a[p, k] = c * akp - s * akq
                    a[k, q] = a[q, k] = s * akp + c * akq
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    else:
        raise ArithmeticError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    for k in range(n):
        i = int(np.argmax(np.abs(v[:, k])))
        if v[i, k] < 0:
            v[:, k] = -v[:, k]
    return w, v


def eigensystem(h, herm_tol: float = 1e-12) -> EigenSystem:
    """Full spectral decomposition of a real symmetric 4x4 (or NxN) matrix.

    Rejects inputs that are not Hermitian within ``herm_tol`` (complex
    matrices are accepted only when their imaginary part is negligible; the
    rotating-frame matrix is real).
    """
    h = np.asarray(h)
    if np.iscomplexobj(h):
        if np.abs(h.imag).max() > herm_tol:
            raise ValueError("expected a real symmetric matrix, got complex entries")
        h = h.real
    if np.abs(h - h.T).max() > herm_tol:
        raise ValueError(f"matrix is not symmetric within {herm_tol}")
    h = 0.5 * (h + h.T)
    w, v = jacobi_eigh(h)
    residual = float(np.linalg.norm(h @ v - v * w, axis=0).max())
    scale = max(1.0, float(np.abs(w).max()))
    if residual > 1e-10 * scale or np.abs(v.T @ v - np.eye(h.shape[0])).max() > 1e-10:
        raise ArithmeticError("eigensolver failed its own residual check")
    return EigenSystem(eigenvalues=w, eigenvectors=v, residual=residual)


def perturbed_eigenvalues(rp: RotatingFrameParams) -> np.ndarray:
    """First-order-in-j eigenvalues, built on the j = 0 spectrum.

    Each j = 0 eigenvalue k with eigenvector v moves by j * (v^T P v) with
    P the j-coupling pattern; in the canonical regime the shift is close to
    -j for the +-k0 pair and +j for the +-k1 pair, so the k0 pair beats at
    frequency 2j.  Valid while j stays small against the j = 0 gaps;
    residual against the exact spectrum is O(j^2).

    Returns the four predictions sorted ascending.
    """
    es = eigensystem(hamiltonian_matrix(rp.nu, rp.d, 0.0, rp.lam))
    shifts = np.einsum("ik,ij,jk->k", es.eigenvectors, J_COUPLING_PATTERN, es.eigenvectors)
    return np.sort(es.eigenvalues + rp.j * shifts)


def entanglement_approx(rp: RotatingFrameParams, t):
    """Closed-form beat approximation E(t) = (1 + nu^2/lam^2)^-1 |sin(2jt)|.

    First order in j; assumes rp.j > 0 (for j = 0 it degenerates to 0).
    Accepts scalar or array times.
    """
    prefactor = rp.lam ** 2 / (rp.lam ** 2 + rp.nu ** 2)
    return prefactor * np.abs(np.sin(2.0 * rp.j * np.asarray(t, dtype=float)))


def entanglement_period(j: float) -> float:
    """Full beat period t_e = pi / (2j) of the entanglement oscillation."""
    if j <= 0:
        raise ValueError(f"j must be positive, got {j}")
    return math.pi / (2.0 * j)


def to_rotating_frame(p: PhysicalParams, j_phys: float = 0.0,
                      eta_phys: float = 0.0) -> RotatingFrameParams:
    """Convert lab quantities to dimensionless rotating-frame parameters.

    j and eta are not derivable from the field geometry, so they are passed
    in directly as physical angular rates (s^-1) and scaled like the rest.
    The output convention is d = 1, i.e. everything is divided by
    d_phys = |w1 - w2| / 2.

    Raises ValueError when gamma1*B == gamma2*B, which would make the unit
    scale collapse.
    """
    w1 = p.gamma1 * p.B
    w2 = p.gamma2 * p.B
    if w1 == w2:
        raise ValueError("gamma1*B == gamma2*B: chemical-shift scale d vanishes")
    wbar = 0.5 * (w1 + w2)
    d_phys = 0.5 * abs(w1 - w2)
    return RotatingFrameParams(
        nu=(wbar - p.omega_rf) / d_phys,
        d=1.0,
        j=j_phys / d_phys,
        lam=(p.b / p.B) * wbar / d_phys,
        eta=eta_phys / d_phys,
    )


def chemical_shift_scale(p: PhysicalParams) -> float:
    """d_phys = |gamma1 - gamma2| * B / 2 in rad/s, the unit of all rates."""
    d_phys = 0.5 * abs(p.gamma1 - p.gamma2) * p.B
    if d_phys == 0:
        raise ValueError("gamma1 == gamma2: chemical-shift scale d vanishes")
    return d_phys


def stern_gerlach_time(p: PhysicalParams) -> float:
    """Time for the field gradient to spatially resolve the spin branches.

    The separation rate is (mu * D / hbar) * dB/dz with mu the mean proton
    magnetic moment; for spin-1/2, mu = gamma_bar * hbar / 2, so hbar drops
    out and t_sg = 2 / (gamma_bar * D * grad).  A homogeneous field
    (grad = 0) never separates the branches and returns +inf.
    """
    gamma_bar = 0.5 * (p.gamma1 + p.gamma2)
    rate = 0.5 * gamma_bar * p.D * p.grad
    if rate == 0.0:
        return math.inf
    return 1.0 / rate


def timing_condition(rp: RotatingFrameParams, p: PhysicalParams) -> float:
    """Ratio t_e / t_sg in physical units.

    The interference window needs the beat period and the Stern-Gerlach
    separation time to be comparable; callers usually treat a ratio inside
    [0.1, 10] as "condition satisfied".  Requires rp.j > 0.
    """
    j_phys = rp.j * chemical_shift_scale(p)
    t_e = entanglement_period(j_phys)
    t_sg = stern_gerlach_time(p)
    if math.isinf(t_sg):
        return 0.0
    return t_e / t_sg
