"""Scenario runner: config files in, deterministic CSV and reports out.

Config files are flat ``key = value`` text ('#' starts a comment line).
Physical quantities carry their unit in the key name (grad_T_per_m,
omega_rf_rad_per_s, ...); rotating-frame rates (nu, d, j, lambda, eta) and
times are dimensionless simulation units (d = 1, one time unit = 1/d).

Keys by mode:

  every mode      mode, out, rel_tol, abs_tol, max_step, eps_det,
                  sample_interval (integrator-side grid spacing used by the
                  envelope pipeline), n_samples or sample_interval_out (the
                  output grid; exclusive)
  linear / inl /
  linearized      nu, lambda (required), d, j, eta, state, t_max (required);
                  linearized also frozen_phase_rad
  figure          figure_id in {1, 2, 3, 4}; physics parameters are fixed
                  by the figure (nu=5, d=1, lambda=10, j in {0, 0.0025},
                  eta in {0, 0.005}, state down-down) and may not be
                  overridden; grid keys are allowed
  sweep           d, j, lambda, eta plus slab_thickness_m,
                  slab_grad_T_per_m, slab_gamma_bar_rad_per_s_per_T,
                  slab_d_phys_rad_per_s, slab_center_nu, slab_n_nodes,
                  evolver (linear | inl | linearized), t_max, grid keys
  state=explicit  c11_re, c11_im, c22_re, c22_im, c12_re, c12_im,
                  c21_re, c21_im
  optional block  B_T, b_T, gamma1_rad_per_s_per_T, gamma2_rad_per_s_per_T,
                  omega_rf_rad_per_s, molecular_diameter_m, grad_T_per_m
                  (enables separation-time and timing-ratio constants)

Subcommands: ``run <config>``, ``figure --id N [--out DIR]``,
``constants <config>``, ``sweep <config>``.  Exit codes: 0 success,
2 config error, 3 numerical failure.

CSV columns (17 significant digits, LF line endings, bitwise reproducible
for a given config and kernel backend):

  t, c11_re, c11_im, c22_re, c22_im, c12_re, c12_im, c21_re, c21_im,
  norm, m, e, arg_det, arg_det_valid
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__, _kernels
from .analysis import (correlate, default_envelope_window, detuning_profile,
                       envelope, envelope_depression, sample_average)
from .dynamics import (IntegrationError, IntegratorConfig, Trajectory,
                       evolve_inl, evolve_linear, evolve_linearized,
                       self_consistency)
from .hamiltonian import (PhysicalParams, RotatingFrameParams,
                          chemical_shift_scale, entanglement_period,
                          eigensystem, hamiltonian_matrix,
                          perturbed_eigenvalues, stern_gerlach_time,
                          timing_condition)
from .spin_core import SpinState


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field '{field_name}': {message}")
        self.field = field_name


_MODES = ("linear", "inl", "linearized", "figure", "sweep")
_STATE_NAMES = ("down-down", "up-up", "bell", "transverse", "explicit")

_NAMED_STATES = {
    "down-down": SpinState.down_down,
    "up-up": SpinState.up_up,
    "bell": SpinState.bell,
    "transverse": SpinState.transverse,
}

#: the canonical figure parameter sets (nu=5, d=1, lam=10; down-down start)
FIGURE_PARAMS = {
    1: RotatingFrameParams(nu=5.0, d=1.0, j=0.0, lam=10.0, eta=0.0),
    2: RotatingFrameParams(nu=5.0, d=1.0, j=0.0025, lam=10.0, eta=0.0),
    3: RotatingFrameParams(nu=5.0, d=1.0, j=0.0025, lam=10.0, eta=0.005),
    4: RotatingFrameParams(nu=5.0, d=1.0, j=0.0025, lam=10.0, eta=0.005),
}

#: all figures share the j = 0.0025 time axis: 1.2 beat periods
FIGURE_T_MAX = 1.2 * entanglement_period(0.0025)
FIGURE_N_SAMPLES = 4096

_CSV_HEADER = ("t,c11_re,c11_im,c22_re,c22_im,c12_re,c12_im,c21_re,c21_im,"
               "norm,m,e,arg_det,arg_det_valid")


@dataclass(frozen=True)
class SlabSpec:
    """Sweep-mode slab geometry plus the per-node evolver choice."""

    thickness_m: float
    grad_T_per_m: float
    gamma_bar: float
    d_phys: float
    center_nu: float
    n_nodes: int
    evolver: str = "linear"


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    out_dir: str = "spinbeat_out"
    figure_id: int | None = None
    params: RotatingFrameParams | None = None
    state_name: str = "down-down"
    state: SpinState = field(default_factory=SpinState.down_down)
    t_max: float | None = None
    n_samples: int | None = None
    sample_interval: float | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    frozen_phase: float = math.pi / 2
    physical: PhysicalParams | None = None
    slab: SlabSpec | None = None


@dataclass
class RunManifest:
    """Receipt of a run: resolved config, artifacts, derived constants.

    ``partial`` is set when a numerical failure stopped the scenario early;
    ``error`` then carries the failure description and ``artifacts`` lists
    whatever was completed before the failure.
    """

    config_echo: str
    artifacts: list[str]
    constants: dict
    tool_version: str = __version__
    kernel_backend: str = field(default_factory=_kernels.backend)
    duration_s: float = 0.0
    integrator_stats: dict | None = None
    partial: bool = False
    error: str | None = None

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, default=_json_default)
            fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# ---------------------------------------------------------------- parsing

def _parse_kv(text: str) -> dict[str, str]:
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(line.split()[0], f"line {lineno} is not 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key in kv:
            raise ConfigError(key, f"duplicate key at line {lineno}")
        if not value:
            raise ConfigError(key, f"empty value at line {lineno}")
        kv[key] = value
    return kv


def _pop_float(kv, key, default=None, required=False):
    if key not in kv:
        if required:
            raise ConfigError(key, "required key is missing")
        return default
    raw = kv.pop(key)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(key, f"not a number: {raw!r}") from None


def _pop_int(kv, key, default=None, required=False):
    if key not in kv:
        if required:
            raise ConfigError(key, "required key is missing")
        return default
    raw = kv.pop(key)
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(key, f"not an integer: {raw!r}") from None


def _pop_str(kv, key, default=None, required=False, choices=None):
    if key not in kv:
        if required:
            raise ConfigError(key, "required key is missing")
        return default
    val = kv.pop(key)
    if choices is not None and val not in choices:
        raise ConfigError(key, f"must be one of {choices}, got {val!r}")
    return val


def _pop_state(kv) -> tuple[str, SpinState]:
    name = _pop_str(kv, "state", default="down-down", choices=_STATE_NAMES)
    if name != "explicit":
        return name, _NAMED_STATES[name]()
    amps = {}
    for comp in ("c11", "c22", "c12", "c21"):
        re = _pop_float(kv, f"{comp}_re", required=True)
        im = _pop_float(kv, f"{comp}_im", default=0.0)
        amps[comp] = complex(re, im)
    state = SpinState(**amps)
    if abs(state.norm() - 1.0) > 1e-8:
        raise ConfigError("state", f"explicit state norm is {state.norm():.12g}, not 1")
    return name, state


def _pop_integrator(kv) -> IntegratorConfig:
    defaults = IntegratorConfig()
    try:
        return IntegratorConfig(
            rel_tol=_pop_float(kv, "rel_tol", defaults.rel_tol),
            abs_tol=_pop_float(kv, "abs_tol", defaults.abs_tol),
            max_step=_pop_float(kv, "max_step", defaults.max_step),
            eps_det=_pop_float(kv, "eps_det", defaults.eps_det),
            sample_interval=_pop_float(kv, "sample_interval", defaults.sample_interval))
    except ValueError as exc:
        raise ConfigError("integrator", str(exc)) from None


def _pop_physical(kv) -> PhysicalParams | None:
    keys = ("B_T", "b_T", "gamma1_rad_per_s_per_T", "gamma2_rad_per_s_per_T",
            "omega_rf_rad_per_s", "molecular_diameter_m")
    present = [k for k in keys if k in kv]
    if not present and "grad_T_per_m" not in kv:
        return None
    if len(present) != len(keys):
        missing = sorted(set(keys) - set(present))
        raise ConfigError(missing[0], "physical-parameter block is incomplete")
    try:
        return PhysicalParams(
            B=_pop_float(kv, "B_T"), b=_pop_float(kv, "b_T"),
            gamma1=_pop_float(kv, "gamma1_rad_per_s_per_T"),
            gamma2=_pop_float(kv, "gamma2_rad_per_s_per_T"),
            omega_rf=_pop_float(kv, "omega_rf_rad_per_s"),
            D=_pop_float(kv, "molecular_diameter_m"),
            grad=_pop_float(kv, "grad_T_per_m", default=0.0))
    except ValueError as exc:
        raise ConfigError("B_T", str(exc)) from None


def _pop_params(kv, require_nu=True) -> RotatingFrameParams:
    try:
        return RotatingFrameParams(
            nu=_pop_float(kv, "nu", required=require_nu, default=0.0),
            d=_pop_float(kv, "d", default=1.0),
            j=_pop_float(kv, "j", default=0.0),
            lam=_pop_float(kv, "lambda", required=True),
            eta=_pop_float(kv, "eta", default=0.0))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("nu", str(exc)) from None


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse and validate a key = value config; unknown keys are errors."""
    kv = _parse_kv(text)
    mode = _pop_str(kv, "mode", required=True, choices=_MODES)
    out_dir = _pop_str(kv, "out", default="spinbeat_out")
    integrator = _pop_integrator(kv)
    physical = _pop_physical(kv)

    figure_id = None
    params = None
    slab = None
    state_name, state = "down-down", SpinState.down_down()
    t_max = None
    n_samples = _pop_int(kv, "n_samples")
    sample_interval = _pop_float(kv, "sample_interval_out")
    frozen_phase = math.pi / 2

    if mode == "figure":
        figure_id = _pop_int(kv, "figure_id", required=True)
        if figure_id not in FIGURE_PARAMS:
            raise ConfigError("figure_id", f"must be 1..4, got {figure_id}")
        for k in ("nu", "d", "j", "lambda", "eta", "state", "frozen_phase_rad"):
            if k in kv:
                raise ConfigError(k, "figure mode fixes the physics parameters")
        t_max = _pop_float(kv, "t_max", default=FIGURE_T_MAX)
        if n_samples is None and sample_interval is None:
            n_samples = FIGURE_N_SAMPLES
    elif mode == "sweep":
        params = _pop_params(kv, require_nu=False)
        state_name, state = _pop_state(kv)
        t_max = _pop_float(kv, "t_max", required=True)
        slab = SlabSpec(
            thickness_m=_pop_float(kv, "slab_thickness_m", required=True),
            grad_T_per_m=_pop_float(kv, "slab_grad_T_per_m", required=True),
            gamma_bar=_pop_float(kv, "slab_gamma_bar_rad_per_s_per_T", required=True),
            d_phys=_pop_float(kv, "slab_d_phys_rad_per_s", required=True),
            center_nu=_pop_float(kv, "slab_center_nu", required=True),
            n_nodes=_pop_int(kv, "slab_n_nodes", required=True),
            evolver=_pop_str(kv, "evolver", default="linear",
                             choices=("linear", "inl", "linearized")))
        params = replace(params, nu=slab.center_nu)
    else:
        params = _pop_params(kv)
        state_name, state = _pop_state(kv)
        t_max = _pop_float(kv, "t_max", required=True)
        if mode == "linearized":
            frozen_phase = _pop_float(kv, "frozen_phase_rad", default=math.pi / 2)

    if t_max is not None and t_max <= 0:
        raise ConfigError("t_max", f"must be positive, got {t_max}")
    if n_samples is not None and sample_interval is not None:
        raise ConfigError("n_samples", "give n_samples or sample_interval_out, not both")
    if n_samples is None and sample_interval is None:
        n_samples = 4096
    if n_samples is not None and n_samples < 2:
        raise ConfigError("n_samples", f"must be >= 2, got {n_samples}")
    if sample_interval is not None and sample_interval <= 0:
        raise ConfigError("sample_interval_out", "must be positive")

    if kv:
        raise ConfigError(sorted(kv)[0], "unknown key")

    return ScenarioConfig(mode=mode, out_dir=out_dir, figure_id=figure_id,
                          params=params, state_name=state_name, state=state,
                          t_max=t_max, n_samples=n_samples,
                          sample_interval=sample_interval, integrator=integrator,
                          frozen_phase=frozen_phase, physical=physical, slab=slab)


def parse_config_file(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def config_text(config: ScenarioConfig) -> str:
    """Canonical serialization; re-parses to an equal ScenarioConfig."""
    lines = [f"mode = {config.mode}", f"out = {config.out_dir}"]
    if config.figure_id is not None:
        lines.append(f"figure_id = {config.figure_id}")
    if config.mode not in ("figure",) and config.params is not None:
        p = config.params
        lines += [f"nu = {_fmt(p.nu)}", f"d = {_fmt(p.d)}", f"j = {_fmt(p.j)}",
                  f"lambda = {_fmt(p.lam)}", f"eta = {_fmt(p.eta)}"]
    if config.mode not in ("figure",):
        lines.append(f"state = {config.state_name}")
        if config.state_name == "explicit":
            s = config.state
            for comp in ("c11", "c22", "c12", "c21"):
                z = getattr(s, comp)
                lines += [f"{comp}_re = {_fmt(z.real)}", f"{comp}_im = {_fmt(z.imag)}"]
    if config.t_max is not None:
        lines.append(f"t_max = {_fmt(config.t_max)}")
    if config.n_samples is not None:
        lines.append(f"n_samples = {config.n_samples}")
    if config.sample_interval is not None:
        lines.append(f"sample_interval_out = {_fmt(config.sample_interval)}")
    ic = config.integrator
    lines += [f"rel_tol = {_fmt(ic.rel_tol)}", f"abs_tol = {_fmt(ic.abs_tol)}",
              f"max_step = {_fmt(ic.max_step)}", f"eps_det = {_fmt(ic.eps_det)}",
              f"sample_interval = {_fmt(ic.sample_interval)}"]
    if config.mode == "linearized":
        lines.append(f"frozen_phase_rad = {_fmt(config.frozen_phase)}")
    if config.physical is not None:
        ph = config.physical
        lines += [f"B_T = {_fmt(ph.B)}", f"b_T = {_fmt(ph.b)}",
                  f"gamma1_rad_per_s_per_T = {_fmt(ph.gamma1)}",
                  f"gamma2_rad_per_s_per_T = {_fmt(ph.gamma2)}",
                  f"omega_rf_rad_per_s = {_fmt(ph.omega_rf)}",
                  f"molecular_diameter_m = {_fmt(ph.D)}",
                  f"grad_T_per_m = {_fmt(ph.grad)}"]
    if config.slab is not None:
        sl = config.slab
        lines += [f"slab_thickness_m = {_fmt(sl.thickness_m)}",
                  f"slab_grad_T_per_m = {_fmt(sl.grad_T_per_m)}",
                  f"slab_gamma_bar_rad_per_s_per_T = {_fmt(sl.gamma_bar)}",
                  f"slab_d_phys_rad_per_s = {_fmt(sl.d_phys)}",
                  f"slab_center_nu = {_fmt(sl.center_nu)}",
                  f"slab_n_nodes = {sl.n_nodes}",
                  f"evolver = {sl.evolver}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- running

def _time_grid(config: ScenarioConfig) -> np.ndarray:
    if config.sample_interval is not None:
        n = int(math.floor(config.t_max / config.sample_interval)) + 1
        if n < 2:
            raise ConfigError("sample_interval_out", "fewer than 2 samples fit in t_max")
        return np.arange(n) * config.sample_interval
    return np.linspace(0.0, config.t_max, config.n_samples)


def write_trajectory_csv(path: str, traj: Trajectory) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CSV_HEADER + "\n")
        for i in range(len(traj)):
            c = traj.states[i]
            cols = [traj.times[i]]
            for a in c:
                cols += [a.real, a.imag]
            cols += [traj.norm[i], traj.m[i], traj.e[i], traj.arg_det[i]]
            fh.write(",".join(_fmt(x) for x in cols))
            fh.write(f",{int(traj.arg_det_valid[i])}\n")


def _scalar_constants(rp: RotatingFrameParams,
                      physical: PhysicalParams | None) -> dict:
    es0 = eigensystem(hamiltonian_matrix(rp.nu, rp.d, 0.0, rp.lam))
    kappa0, kappa1 = float(es0.eigenvalues[2]), float(es0.eigenvalues[3])
    consts = {
        "kappa0": kappa0,
        "kappa1": kappa1,
        "eigenvalues_exact": [float(x) for x in
                              eigensystem(hamiltonian_matrix(rp.nu, rp.d, rp.j, rp.lam)).eigenvalues],
        "eigenvalues_first_order": [float(x) for x in perturbed_eigenvalues(rp)],
        "beat_prefactor": rp.lam ** 2 / (rp.lam ** 2 + rp.nu ** 2),
        "t_e": entanglement_period(rp.j) if rp.j > 0 else None,
    }
    if physical is not None:
        t_sg = stern_gerlach_time(physical)
        consts["d_phys_rad_per_s"] = chemical_shift_scale(physical)
        consts["t_sg_s"] = None if math.isinf(t_sg) else t_sg
        if rp.j > 0:
            consts["t_e_s"] = entanglement_period(rp.j * chemical_shift_scale(physical))
            consts["timing_ratio"] = timing_condition(rp, physical)
    return consts


def _summary_traj_lines(tag: str, traj: Trajectory) -> list[str]:
    i_peak = int(np.argmax(traj.e))
    lines = [
        f"[{tag}] samples = {len(traj)}, method = {traj.method}",
        f"[{tag}] max E = {traj.e[i_peak]:.6f} at t = {traj.times[i_peak]:.3f}",
        f"[{tag}] final E = {traj.e[-1]:.6f}, max M = {traj.m.max():.6f}",
        f"[{tag}] max |norm - 1| = {traj.max_norm_drift:.3e}",
    ]
    if traj.n_accepted:
        lines.append(f"[{tag}] steps accepted/rejected = {traj.n_accepted}/{traj.n_rejected}")
    return lines


def _run_figure(config: ScenarioConfig, out_dir: str):
    fid = config.figure_id
    rp = FIGURE_PARAMS[fid]
    grid = _time_grid(config)
    s0 = SpinState.down_down()
    cfg = config.integrator
    artifacts: list[str] = []
    lines: list[str] = []
    stats = None

    if fid in (1, 2):
        traj = evolve_linear(rp, s0, grid)
        path = os.path.join(out_dir, "trajectory.csv")
        write_trajectory_csv(path, traj)
        artifacts.append(path)
        lines += _summary_traj_lines(f"figure{fid}", traj)
        if fid == 2:
            env = envelope(traj.times, traj.m, default_envelope_window(rp))
            r = correlate(env, traj.times, 1.0 - traj.e)
            lines.append(f"[figure2] corr(envelope(M), 1 - E) = {r:.6f}")
    elif fid == 3:
        exact = evolve_linear(replace(rp, eta=0.0), s0, grid)
        frozen = evolve_linearized(rp, s0, grid)
        p_exact = os.path.join(out_dir, "trajectory_exact.csv")
        p_frozen = os.path.join(out_dir, "trajectory_linearized.csv")
        write_trajectory_csv(p_exact, exact)
        write_trajectory_csv(p_frozen, frozen)
        artifacts += [p_exact, p_frozen]
        for tag, traj in (("eta0-exact", exact), ("eta2j-linearized", frozen)):
            rep = self_consistency(traj)
            lines += [
                f"[{tag}] arg det C deviation from pi/2: "
                f"first half max = {rep.max_dev_first_half:.4f} rad, "
                f"second half max = {rep.max_dev_second_half:.4f} rad",
                f"[{tag}] first-half bound {rep.bound} rad: "
                f"{'pass' if rep.first_half_pass else 'FAIL'}",
            ]
    else:  # figure 4
        traj = evolve_inl(rp, s0, grid, cfg)
        path = os.path.join(out_dir, "trajectory.csv")
        write_trajectory_csv(path, traj)
        artifacts.append(path)
        stats = {"accepted": traj.n_accepted, "rejected": traj.n_rejected}
        lines += _summary_traj_lines("figure4", traj)
        ratio = envelope_depression(rp, s0, cfg)
        lines.append(f"[figure4] envelope depression ratio (middle fifth) = {ratio:.6f}")

    return rp, artifacts, lines, stats


def _run_sweep(config: ScenarioConfig, out_dir: str):
    sl = config.slab
    profile = detuning_profile(sl.thickness_m, sl.grad_T_per_m, sl.gamma_bar,
                               sl.d_phys, sl.center_nu, sl.n_nodes)
    grid = _time_grid(config)
    avg = sample_average(profile, config.params, config.state, grid,
                         config.integrator, mode=sl.evolver,
                         max_workers=min(sl.n_nodes, os.cpu_count() or 1))
    path = os.path.join(out_dir, "averaged.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,m_avg,e_avg\n")
        for i in range(len(avg.times)):
            fh.write(f"{_fmt(avg.times[i])},{_fmt(avg.m[i])},{_fmt(avg.e[i])}\n")
    frac = profile.in_band_fraction(config.params.lam)
    lines = [
        f"[sweep] evolver = {sl.evolver}, nodes = {sl.n_nodes}",
        "[sweep] node detunings (d-units): "
        + ", ".join(f"{x:.6g}" for x in profile.nus),
        f"[sweep] fraction of slab with 1 <= nu <= lambda: {frac:.4f}",
        "[sweep] note: the in-band fraction is reported, not asserted; it is",
        "[sweep] sensitive to the assumed unit conventions for the slab offsets",
        f"[sweep] peak averaged E = {avg.e.max():.6f}",
    ]
    return [path], lines


def run(config: ScenarioConfig) -> RunManifest:
    """Execute a scenario, write artifacts, return the manifest.

    A numerical failure still leaves a manifest behind, flagged partial
    with the error recorded, before the exception propagates.
    """
    started = time.monotonic()
    out_dir = config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    rp = FIGURE_PARAMS[config.figure_id] if config.mode == "figure" else config.params
    artifacts: list[str] = []
    lines: list[str] = []
    stats = None

    try:
        if config.mode == "figure":
            rp, artifacts, lines, stats = _run_figure(config, out_dir)
        elif config.mode == "sweep":
            artifacts, lines = _run_sweep(config, out_dir)
        else:
            grid = _time_grid(config)
            if config.mode == "linear":
                traj = evolve_linear(rp, config.state, grid)
            elif config.mode == "inl":
                traj = evolve_inl(rp, config.state, grid, config.integrator)
                stats = {"accepted": traj.n_accepted, "rejected": traj.n_rejected}
            else:
                traj = evolve_linearized(rp, config.state, grid, config.frozen_phase)
            path = os.path.join(out_dir, "trajectory.csv")
            write_trajectory_csv(path, traj)
            artifacts.append(path)
            lines += _summary_traj_lines(config.mode, traj)
    except (IntegrationError, ArithmeticError, RuntimeError, ValueError) as exc:
        manifest = RunManifest(config_echo=config_text(config),
                               artifacts=artifacts,
                               constants=_scalar_constants(rp, config.physical),
                               duration_s=time.monotonic() - started,
                               partial=True, error=str(exc))
        manifest.write(os.path.join(out_dir, "manifest.json"))
        raise

    consts = _scalar_constants(rp, config.physical)
    summary_path = os.path.join(out_dir, "summary.txt")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"scenario: {config.mode}"
                 + (f" (figure {config.figure_id})" if config.figure_id else "") + "\n")
        fh.write(f"params: nu={rp.nu:g} d={rp.d:g} j={rp.j:g} "
                 f"lambda={rp.lam:g} eta={rp.eta:g}\n")
        for key in ("kappa0", "kappa1", "beat_prefactor", "t_e"):
            val = consts[key]
            fh.write(f"{key} = {'inf' if val is None else f'{val:.12g}'}\n")
        for line in lines:
            fh.write(line + "\n")
    artifacts.append(summary_path)

    manifest = RunManifest(config_echo=config_text(config), artifacts=artifacts,
                           constants=consts, duration_s=time.monotonic() - started,
                           integrator_stats=stats)
    for path in artifacts:
        if not (os.path.isfile(path) and os.path.getsize(path) > 0):
            raise RuntimeError(f"artifact missing or empty: {path}")
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest


def report_constants(config: ScenarioConfig, stream=None) -> RunManifest:
    """Print the derived constants for a config without running anything."""
    stream = stream or sys.stdout
    if config.mode == "figure":
        rp = FIGURE_PARAMS[config.figure_id]
    else:
        rp = config.params
    consts = _scalar_constants(rp, config.physical)
    print(f"params: nu={rp.nu:g} d={rp.d:g} j={rp.j:g} lambda={rp.lam:g} "
          f"eta={rp.eta:g}", file=stream)
    print(f"kappa0 = {consts['kappa0']:.12g}", file=stream)
    print(f"kappa1 = {consts['kappa1']:.12g}", file=stream)
    print("exact eigenvalues      = "
          + ", ".join(f"{x:.12g}" for x in consts["eigenvalues_exact"]), file=stream)
    print("first-order eigenvalues = "
          + ", ".join(f"{x:.12g}" for x in consts["eigenvalues_first_order"]), file=stream)
    print(f"beat prefactor (1 + nu^2/lambda^2)^-1 = {consts['beat_prefactor']:.12g}",
          file=stream)
    t_e = consts["t_e"]
    print(f"t_e = {'inf (j = 0)' if t_e is None else f'{t_e:.12g}'}", file=stream)
    if config.physical is not None:
        print(f"d_phys = {consts['d_phys_rad_per_s']:.12g} rad/s", file=stream)
        t_sg = consts["t_sg_s"]
        print(f"t_sg = {'inf (grad = 0)' if t_sg is None else f'{t_sg:.12g} s'}",
              file=stream)
        if "timing_ratio" in consts:
            print(f"t_e = {consts['t_e_s']:.12g} s", file=stream)
            print(f"timing ratio t_e/t_sg = {consts['timing_ratio']:.12g}", file=stream)
    return RunManifest(config_echo=config_text(config), artifacts=[], constants=consts)


# ------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinbeat",
        description="Two-proton rotating-frame spin dynamics scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config file")
    p_run.add_argument("config")

    p_fig = sub.add_parser("figure", help="reproduce one of the canonical figures")
    p_fig.add_argument("--id", type=int, required=True, choices=(1, 2, 3, 4))
    p_fig.add_argument("--out", default=None)

    p_const = sub.add_parser("constants", help="print derived constants for a config")
    p_const.add_argument("config")

    p_sweep = sub.add_parser("sweep", help="run a detuning sweep config")
    p_sweep.add_argument("config")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "figure":
            out = args.out if args.out is not None else f"figure{args.id}_out"
            config = ScenarioConfig(mode="figure", figure_id=args.id, out_dir=out,
                                    t_max=FIGURE_T_MAX, n_samples=FIGURE_N_SAMPLES)
            manifest = run(config)
        elif args.command == "constants":
            report_constants(parse_config_file(args.config))
            return 0
        else:
            config = parse_config_file(args.config)
            if args.command == "sweep" and config.mode != "sweep":
                raise ConfigError("mode", "the sweep subcommand needs mode = sweep")
            manifest = run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for path in manifest.artifacts:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
