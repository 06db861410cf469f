"""Deterministic closed-loop time-domain simulation.

The interconnection: the road displacement and the control signal add in the
plant's single input channel (the potentiometer path folds the road into the
same B column that the control drives), so

    dx/dt = A x + B (road(t) + u + w)        w: process noise
    y      = C x (+ v)                        v: measurement noise

For the dynamic output-feedback controller the loop closes on the measured
output; the integral-action controller feeds back true plant states and an
output-error integrator, with measurement noise applied only to the reported
output.  Noise is held piecewise constant over each step, drawn from a
generator seeded by the run configuration and scaled by 1/sqrt(dt) so its
intensity is step-size invariant; a fixed seed reproduces the trace bit for
bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SimulationDiverged
from .synthesis import LQG_DYNAMIC, LQI_STATIC, Compensator, NoiseModel, integral_augmented
from .plant import StateSpace

DIVERGENCE_NORM = 1e6

ROAD_SHAPES = ("half_sine_bump", "step", "zero")


# ---------------------------------------------------------------------------
# Road profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoadProfile:
    """Deterministic road disturbance: half-sine bump, step, or zero."""

    shape: str = "half_sine_bump"
    amplitude: float = 0.1
    start: float = 1.0
    duration: float = 6.0

    def __post_init__(self):
        if self.shape not in ROAD_SHAPES:
            raise ValueError(f"road.shape must be one of {ROAD_SHAPES}, got {self.shape!r}")
        if not math.isfinite(self.amplitude):
            raise ValueError("road.amplitude must be finite")
        if self.start < 0:
            raise ValueError("road.start must be >= 0")
        if self.shape == "half_sine_bump" and self.duration <= 0:
            raise ValueError("road.duration must be > 0 for a bump")

    @classmethod
    def zero(cls) -> "RoadProfile":
        return cls(shape="zero", amplitude=0.0, start=0.0, duration=1.0)


def road_value(profile: RoadProfile, t: float) -> float:
    """Road displacement in meters at time ``t >= 0``.

    The bump is ``amplitude * sin(pi (t - start)/duration)`` inside
    [start, start + duration] and zero outside, hence continuous at both
    edges.
    """
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    if profile.shape == "zero":
        return 0.0
    if profile.shape == "step":
        return profile.amplitude if t >= profile.start else 0.0
    if profile.start <= t <= profile.start + profile.duration:
        return profile.amplitude * math.sin(
            math.pi * (t - profile.start) / profile.duration
        )
    return 0.0


# ---------------------------------------------------------------------------
# Simulation configuration and trace
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings.

    ``initial_state`` is the plant state at t = 0 (zeros when None);
    controller states always start at zero.
    """

    dt: float = 1e-3
    t_final: float = 10.0
    seed: int = 0
    noise_on: bool = False
    initial_state: tuple = ()

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("sim.dt must be > 0")
        if self.t_final < self.dt:
            raise ValueError("sim.t_final must be >= sim.dt")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("sim.seed must fit in 64 bits")
        object.__setattr__(self, "initial_state",
                           tuple(float(v) for v in self.initial_state))

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_final / self.dt + 1e-12))


@dataclass(frozen=True)
class SimTrace:
    """Uniformly sampled closed-loop record.

    ``y`` is the measured output (noisy when noise is on); ``y_true`` is the
    noise-free body-travel channel C x.  ``controller_states`` is None for
    the open loop.
    """

    t: np.ndarray
    road: np.ndarray
    states: np.ndarray
    y: np.ndarray
    y_true: np.ndarray
    u: np.ndarray
    controller_states: np.ndarray | None = None

    def __len__(self) -> int:
        return self.t.size


def peak_body_travel(trace: SimTrace) -> float:
    """Largest |body travel| over the trace, on the noise-free channel."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    return float(np.max(np.abs(trace.y_true)))


# ---------------------------------------------------------------------------
# Integrators
# ---------------------------------------------------------------------------

def integrate_rk4(derivative, x0, dt: float, t_final: float):
    """Classical fixed-step RK4 for ``dx/dt = f(t, x)``.

    Returns ``(t, X)`` with ``X[k]`` the state at ``t[k] = k dt``.
    Raises ``SimulationDiverged`` when a non-finite state appears.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    n_steps = int(math.floor(t_final / dt + 1e-12))
    t = np.arange(n_steps + 1) * dt
    out = np.empty((n_steps + 1, x.size))
    out[0] = x
    for k in range(n_steps):
        tk = k * dt
        k1 = derivative(tk, x)
        k2 = derivative(tk + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = derivative(tk + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = derivative(tk + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise SimulationDiverged(
                f"non-finite state at t = {tk + dt:.6g}", time=tk + dt
            )
        out[k + 1] = x
    return t, out


# ---------------------------------------------------------------------------
# Closed-loop simulation
# ---------------------------------------------------------------------------

def simulate_closed_loop(
    plant: StateSpace,
    comp: Compensator | None,
    profile: RoadProfile,
    nm: NoiseModel | None,
    cfg: SimConfig,
    reference: float = 0.0,
) -> SimTrace:
    """Integrate the plant / controller interconnection over [0, t_final].

    ``comp`` may be None for the open loop (u = 0).  ``reference`` is the
    tracking command for the integral-action controller and must be zero
    otherwise.  When ``cfg.noise_on``, per-step process and measurement
    noise of intensities Xi and Theta (scaled by 1/sqrt(dt)) are injected
    from a generator seeded with ``cfg.seed``.
    """
    if not plant.is_siso:
        raise DimensionError("closed-loop simulation implemented for SISO plants")
    if float(plant.d[0, 0]) != 0.0:
        raise DimensionError("plant feedthrough must be zero (strictly proper loop)")
    n = plant.n_states
    kind = comp.kind if comp is not None else None
    if reference != 0.0 and kind != LQI_STATIC:
        raise ValueError("a nonzero reference needs the integral-action controller")
    if cfg.noise_on and nm is None:
        raise ValueError("noise_on requires a noise model")

    a = plant.a
    b = plant.b[:, 0]
    c = plant.c[0]

    x0 = np.zeros(n)
    if cfg.initial_state:
        if len(cfg.initial_state) != n:
            raise DimensionError(
                f"initial state has {len(cfg.initial_state)} entries, expected {n}"
            )
        x0 = np.array(cfg.initial_state, dtype=float)

    if kind == LQG_DYNAMIC:
        a_c, b_c = comp.a_c, comp.b_c[:, 0]
        c_c, d_c = comp.c_c[0], float(comp.d_c[0, 0])
        if comp.a_c.shape[0] != comp.b_c.shape[0] or comp.c_c.shape[1] != comp.a_c.shape[0]:
            raise DimensionError("compensator realization dimensions are inconsistent")
        n_c = a_c.shape[0]
    elif kind == LQI_STATIC:
        if comp.k.shape[1] != n + 1:
            raise DimensionError(
                f"gain row has {comp.k.shape[1]} entries, expected {n + 1}"
            )
        k_x = comp.k[0, :n]
        k_i = float(comp.k[0, n])
        n_c = 1
    else:
        n_c = 0

    n_steps = cfg.n_steps
    dt = cfg.dt
    rng = np.random.default_rng(int(cfg.seed))
    if cfg.noise_on:
        # Draw order is fixed (process first, then measurement) so traces
        # are reproducible; one measurement sample per recorded point.
        w_proc = rng.standard_normal(n_steps) * math.sqrt(float(nm.xi[0, 0]) / dt)
        v_meas = rng.standard_normal(n_steps + 1) * math.sqrt(float(nm.theta[0, 0]) / dt)
    else:
        w_proc = np.zeros(n_steps)
        v_meas = np.zeros(n_steps + 1)

    t_grid = np.arange(n_steps + 1) * dt
    road = np.array([road_value(profile, tk) for tk in t_grid])
    states = np.empty((n_steps + 1, n))
    ctrl_states = np.empty((n_steps + 1, n_c)) if n_c else None
    y_true = np.empty(n_steps + 1)
    y_meas = np.empty(n_steps + 1)
    u_rec = np.empty(n_steps + 1)

    z = np.concatenate([x0, np.zeros(n_c)])

    def control(zk, v):
        """Control value for the current augmented state and noise sample."""
        if kind == LQG_DYNAMIC:
            ym = c @ zk[:n] + v
            return -(c_c @ zk[n:] + d_c * ym)
        if kind == LQI_STATIC:
            return -(k_x @ zk[:n] + k_i * zk[n])
        return 0.0

    for k in range(n_steps + 1):
        xk = z[:n]
        states[k] = xk
        if ctrl_states is not None:
            ctrl_states[k] = z[n:]
        y_true[k] = c @ xk
        y_meas[k] = y_true[k] + v_meas[k]
        u_rec[k] = control(z, v_meas[k])

        norm = float(np.linalg.norm(z))
        if not math.isfinite(norm) or norm > DIVERGENCE_NORM:
            raise SimulationDiverged(
                f"state norm {norm:.3e} exceeded {DIVERGENCE_NORM:.0e} "
                f"at t = {t_grid[k]:.6g}",
                time=float(t_grid[k]),
            )
        if k == n_steps:
            break

        wk = w_proc[k]
        vk = v_meas[k]

        def deriv(tk, zk):
            x = zk[:n]
            u = control(zk, vk)
            dx = a @ x + b * (road_value(profile, tk) + u + wk)
            if kind == LQG_DYNAMIC:
                ym = c @ x + vk
                dxc = a_c @ zk[n:] + b_c * ym
                return np.concatenate([dx, dxc])
            if kind == LQI_STATIC:
                return np.concatenate([dx, [reference - c @ x]])
            return dx

        tk = t_grid[k]
        k1 = deriv(tk, z)
        k2 = deriv(tk + 0.5 * dt, z + 0.5 * dt * k1)
        k3 = deriv(tk + 0.5 * dt, z + 0.5 * dt * k2)
        k4 = deriv(tk + dt, z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return SimTrace(
        t=t_grid,
        road=road,
        states=states,
        y=y_meas,
        y_true=y_true,
        u=u_rec,
        controller_states=ctrl_states,
    )


# ---------------------------------------------------------------------------
# Loop analysis
# ---------------------------------------------------------------------------

def closed_loop_matrix(plant: StateSpace, comp: Compensator | None) -> np.ndarray:
    """Autonomous system matrix of the full loop (plant and controller states).

    Dynamic output feedback gives the (n + n_c) block matrix

        [[A - B D_c C, -B C_c],
         [B_c C,        A_c  ]]

    the integral controller gives ``A_aug - B_aug K``, and the open loop is
    just A.
    """
    if comp is None:
        return plant.a.copy()
    if comp.kind == LQG_DYNAMIC:
        if comp.b_c.shape[1] != plant.n_outputs or comp.c_c.shape[0] != plant.n_inputs:
            raise DimensionError("compensator does not match the plant's I/O")
        top = np.hstack([plant.a - plant.b @ comp.d_c @ plant.c,
                         -plant.b @ comp.c_c])
        bottom = np.hstack([comp.b_c @ plant.c, comp.a_c])
        return np.vstack([top, bottom])
    a_aug, b_aug = integral_augmented(plant)
    if comp.k.shape[1] != a_aug.shape[0]:
        raise DimensionError(
            f"gain row has {comp.k.shape[1]} entries, expected {a_aug.shape[0]}"
        )
    return a_aug - b_aug @ comp.k
