"""Two-proton rotating-frame spin dynamics.

Simulates a j-coupled proton pair in the rotating frame, with and without a
determinant-phase collapse nonlinearity, and quantifies how the slow
entanglement beat shows up in (and depresses) the envelope of the
transverse magnetization.
"""

__version__ = "0.1.0"

from ._kernels import backend as kernel_backend
from .analysis import (AveragedSeries, DepressionResult, DetuningProfile,
                       EnvelopeSeries, SampleAverageError, UpsilonReport,
                       correlate, default_envelope_window, detuning_profile,
                       envelope, envelope_depression, sample_average,
                       upsilon_eigenbasis)
from .dynamics import (NORM_DRIFT_BOUND, UPSILON, IntegrationError,
                       IntegratorConfig, SelfConsistencyReport, Trajectory,
                       evolve_inl, evolve_linear, evolve_linearized,
                       self_consistency, trajectory_from_states)
from .hamiltonian import (EigenSystem, PhysicalParams, RotatingFrameParams,
                          build_hamiltonian, chemical_shift_scale, eigensystem,
                          entanglement_approx, entanglement_period,
                          hamiltonian_matrix, jacobi_eigh,
                          perturbed_eigenvalues, stern_gerlach_time,
                          timing_condition, to_rotating_frame)
from .spin_core import (EPS_DET_DEFAULT, ObservableSample, SpinState, arg_det,
                        entanglement, local_unitary, transverse_magnetization)

__all__ = [
    "AveragedSeries", "DepressionResult", "DetuningProfile", "EigenSystem",
    "EnvelopeSeries",
    "EPS_DET_DEFAULT", "IntegrationError", "IntegratorConfig",
    "NORM_DRIFT_BOUND", "ObservableSample", "PhysicalParams",
    "RotatingFrameParams", "SampleAverageError", "SelfConsistencyReport",
    "SpinState", "Trajectory", "UPSILON", "UpsilonReport", "arg_det",
    "build_hamiltonian", "chemical_shift_scale", "correlate",
    "default_envelope_window", "detuning_profile", "eigensystem",
    "entanglement", "entanglement_approx", "entanglement_period", "envelope",
    "envelope_depression", "evolve_inl", "evolve_linear", "evolve_linearized",
    "hamiltonian_matrix", "jacobi_eigh", "kernel_backend", "local_unitary",
    "perturbed_eigenvalues", "sample_average", "self_consistency",
    "stern_gerlach_time", "timing_condition", "to_rotating_frame",
    "trajectory_from_states", "transverse_magnetization",
    "__version__",
]
