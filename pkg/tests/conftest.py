"""Shared fixtures.  The expensive nonlinear runs are session-scoped: the
collapse term pins the initially factorized state to the det C = 0 manifold
for the first couple of time units, and resolving that switching chatter at
the default tolerances costs most of the suite's runtime, so each full-span
run happens exactly once.
"""

import numpy as np
import pytest

from spinbeat import (IntegratorConfig, RotatingFrameParams, SpinState,
                      entanglement_period, evolve_linear, evolve_linearized)
from spinbeat.analysis import envelope_depression

BEAT_J = 0.0025


@pytest.fixture(scope="session")
def rp_beat():
    return RotatingFrameParams(nu=5.0, d=1.0, j=BEAT_J, lam=10.0, eta=0.0)


@pytest.fixture(scope="session")
def rp_collapse():
    return RotatingFrameParams(nu=5.0, d=1.0, j=BEAT_J, lam=10.0, eta=2 * BEAT_J)


@pytest.fixture(scope="session")
def t_e():
    return entanglement_period(BEAT_J)


@pytest.fixture(scope="session")
def fig_grid(t_e):
    return np.linspace(0.0, 1.2 * t_e, 4096)


@pytest.fixture(scope="session")
def beat_traj(rp_beat, fig_grid):
    """Exact (spectral) run of the canonical beat scenario, eta = 0."""
    return evolve_linear(rp_beat, SpinState.down_down(), fig_grid)


@pytest.fixture(scope="session")
def frozen_traj(rp_collapse, fig_grid):
    """Frozen-phase run at eta = 2j, phase at the +pi/2 default."""
    return evolve_linearized(rp_collapse, SpinState.down_down(), fig_grid)


@pytest.fixture(scope="session")
def depression(rp_collapse):
    """Full nonlinear depression measurement; both trajectories retained."""
    return envelope_depression(rp_collapse, SpinState.down_down(),
                               IntegratorConfig(), details=True)
