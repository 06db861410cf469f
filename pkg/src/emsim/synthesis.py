"""LQR, Kalman, LQG and LQI synthesis plus quadratic cost evaluation.

All gains come from the stabilizing Riccati solution in
:mod:`emsim.numerics`.  The two controller flavours produced here:

* ``build_lqg`` assembles the standard output-feedback compensator
  (state estimator plus state feedback, valid by the separation principle);
  the loop convention is negative feedback, ``u = -(C_c x_c + D_c y)``.
* ``lqi_gain`` designs a static gain on the plant augmented with an output
  integrator ``dx_i/dt = r - y``, applied as ``u = -K [x; x_i]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DimensionError, WeightError
from .numerics import as_matrix, is_pd, is_psd, require_symmetric
from .plant import StateSpace


# ---------------------------------------------------------------------------
# Weight containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LqWeights:
    """Quadratic cost weights: state Q (PSD), input R (PD), cross N_c.

    The composite block [[Q, N_c], [N_c^T, R]] must be PSD so the cost is
    bounded below.
    """

    q: np.ndarray
    r: np.ndarray
    n_c: np.ndarray | None = None

    def __post_init__(self):
        q = require_symmetric(as_matrix(self.q, "Q"), "Q")
        r = require_symmetric(as_matrix(self.r, "R"), "R")
        n_c = self.n_c
        if n_c is None:
            n_c = np.zeros((q.shape[0], r.shape[0]))
        n_c = as_matrix(n_c, "N_c")
        if n_c.shape != (q.shape[0], r.shape[0]):
            raise DimensionError(
                f"N_c has shape {n_c.shape}, expected {(q.shape[0], r.shape[0])}"
            )
        if not is_psd(q):
            raise WeightError("Q must be positive semidefinite")
        if not is_pd(r):
            raise WeightError("R must be positive definite")
        block = np.block([[q, n_c], [n_c.T, r]])
        if not is_psd(block):
            raise WeightError("[[Q, N_c], [N_c^T, R]] must be positive semidefinite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "n_c", n_c)

    def __eq__(self, other):
        if not isinstance(other, LqWeights):
            return NotImplemented
        return (np.array_equal(self.q, other.q)
                and np.array_equal(self.r, other.r)
                and np.array_equal(self.n_c, other.n_c))

    @property
    def n_states(self) -> int:
        return self.q.shape[0]


@dataclass(frozen=True)
class NoiseModel:
    """White-noise intensities: process Xi (PSD), measurement Theta (PD).

    The process noise enters the plant through the input channel B, so a
    scalar Xi types consistently for the SISO plant.
    """

    xi: np.ndarray
    theta: np.ndarray
    n_f: np.ndarray | None = None

    def __post_init__(self):
        xi = require_symmetric(as_matrix(self.xi, "Xi"), "Xi")
        theta = require_symmetric(as_matrix(self.theta, "Theta"), "Theta")
        n_f = self.n_f
        if n_f is None:
            n_f = np.zeros((xi.shape[0], theta.shape[0]))
        n_f = as_matrix(n_f, "N_f")
        if n_f.shape != (xi.shape[0], theta.shape[0]):
            raise DimensionError(
                f"N_f has shape {n_f.shape}, expected {(xi.shape[0], theta.shape[0])}"
            )
        if not is_psd(xi):
            raise WeightError("Xi must be positive semidefinite")
        if not is_pd(theta):
            raise WeightError("Theta must be positive definite")
        block = np.block([[xi, n_f], [n_f.T, theta]])
        if not is_psd(block):
            raise WeightError("[[Xi, N_f], [N_f^T, Theta]] must be positive semidefinite")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "n_f", n_f)

    def __eq__(self, other):
        if not isinstance(other, NoiseModel):
            return NotImplemented
        return (np.array_equal(self.xi, other.xi)
                and np.array_equal(self.theta, other.theta)
                and np.array_equal(self.n_f, other.n_f))


# ---------------------------------------------------------------------------
# Compensator container
# ---------------------------------------------------------------------------

LQG_DYNAMIC = "lqg_dynamic"
LQI_STATIC = "lqi_static"


@dataclass(frozen=True)
class Compensator:
    """A synthesized controller, applied with negative feedback.

    ``lqg_dynamic``: LTI realization (a_c, b_c, c_c, d_c) driven by the
    measurement y, with ``u = -(C_c x_c + D_c y)``.

    ``lqi_static``: gain row ``k`` of width n+1 over [plant states,
    integrator], with ``u = -k [x; x_i]`` and ``dx_i/dt = r - y``.
    """

    kind: str
    a_c: np.ndarray | None = None
    b_c: np.ndarray | None = None
    c_c: np.ndarray | None = None
    d_c: np.ndarray | None = None
    k: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == LQG_DYNAMIC:
            if any(v is None for v in (self.a_c, self.b_c, self.c_c, self.d_c)):
                raise ValueError("lqg_dynamic requires a_c, b_c, c_c, d_c")
        elif self.kind == LQI_STATIC:
            if self.k is None:
                raise ValueError("lqi_static requires a gain row k")
            k = as_matrix(self.k, "k")
            if k.shape[0] != 1:
                raise DimensionError(f"k must be a row, got shape {k.shape}")
            object.__setattr__(self, "k", k)
        else:
            raise ValueError(f"unknown compensator kind {self.kind!r}")

    @property
    def order(self) -> int:
        """Number of internal controller states (the integrator counts as 1)."""
        return self.a_c.shape[0] if self.kind == LQG_DYNAMIC else 1


# ---------------------------------------------------------------------------
# Gain synthesis
# ---------------------------------------------------------------------------

def lqr_gain(ss: StateSpace, w: LqWeights) -> np.ndarray:
    """Optimal state-feedback gain ``K = R^{-1}(B^T P + N_c^T)``.

    ``A - B K`` is Hurwitz by the stabilizing-solution construction.
    """
    if w.n_states != ss.n_states:
        raise DimensionError(
            f"weights sized {w.n_states}, plant has {ss.n_states} states"
        )
    p = numerics.solve_care(ss.a, ss.b, w.q, w.r, w.n_c)
    return np.linalg.solve(w.r, ss.b.T @ p + w.n_c.T)


def kalman_gain(ss: StateSpace, nm: NoiseModel) -> np.ndarray:
    """Steady-state estimator gain ``K_f = (P_f C^T + B N_f) Theta^{-1}``.

    Solves the filter Riccati equation as the dual regulator problem on
    (A^T, C^T) with effective state intensity ``B Xi B^T`` (process noise
    enters through the input channel).  ``A - K_f C`` is Hurwitz.
    """
    q_eff = ss.b @ nm.xi @ ss.b.T
    n_eff = ss.b @ nm.n_f
    p_f = numerics.solve_care(ss.a.T, ss.c.T, q_eff, nm.theta, n_eff)
    return np.linalg.solve(nm.theta, ss.c @ p_f + n_eff.T).T


def build_lqg(ss: StateSpace, k_c: np.ndarray, k_f: np.ndarray) -> Compensator:
    """Assemble the output-feedback compensator from the two gains.

        A_c = A - K_f C - B K_C + K_f D K_C
        B_c = K_f,  C_c = K_C,  D_c = 0

    The compensator order equals the plant order.
    """
    k_c = as_matrix(k_c, "K_C")
    k_f = as_matrix(k_f, "K_f")
    n = ss.n_states
    if k_c.shape != (ss.n_inputs, n):
        raise DimensionError(f"K_C has shape {k_c.shape}, expected {(ss.n_inputs, n)}")
    if k_f.shape != (n, ss.n_outputs):
        raise DimensionError(f"K_f has shape {k_f.shape}, expected {(n, ss.n_outputs)}")
    a_c = ss.a - k_f @ ss.c - ss.b @ k_c + k_f @ ss.d @ k_c
    return Compensator(
        kind=LQG_DYNAMIC,
        a_c=a_c,
        b_c=k_f.copy(),
        c_c=k_c.copy(),
        d_c=np.zeros((ss.n_inputs, ss.n_outputs)),
    )


def integral_augmented(ss: StateSpace) -> tuple[np.ndarray, np.ndarray]:
    """(A_aug, B_aug) for the plant extended with ``dx_i/dt = r - y``.

        A_aug = [[A, 0], [-C, 0]],   B_aug = [B; 0]
    """
    if not ss.is_siso:
        raise DimensionError("integral augmentation implemented for SISO plants")
    n = ss.n_states
    a_aug = np.zeros((n + 1, n + 1))
    a_aug[:n, :n] = ss.a
    a_aug[n, :n] = -ss.c[0]
    b_aug = np.vstack([ss.b, np.zeros((1, 1))])
    return a_aug, b_aug


def lqi_gain(ss: StateSpace, w: LqWeights) -> Compensator:
    """Integral-action tracking gain for a SISO plant.

    ``w`` weights the augmented state [x; x_i], so it must be sized n+1;
    its cross term ``n_c`` is the (n+1) x 1 state-input cross weight.
    Returns a static compensator with ``A_aug - B_aug K`` Hurwitz.
    """
    a_aug, b_aug = integral_augmented(ss)
    if w.n_states != ss.n_states + 1:
        raise DimensionError(
            f"augmented weights sized {w.n_states}, expected {ss.n_states + 1}"
        )
    p = numerics.solve_care(a_aug, b_aug, w.q, w.r, w.n_c)
    k = np.linalg.solve(w.r, b_aug.T @ p + w.n_c.T)
    return Compensator(kind=LQI_STATIC, k=k)


# ---------------------------------------------------------------------------
# Cost evaluation
# ---------------------------------------------------------------------------

def lqg_cost(trace, w: LqWeights) -> float:
    """Time-averaged quadratic cost of a simulated trace.

        (1/T) integral ( x^T Q x + 2 x^T N_c u + u^T R u ) dt

    evaluated with the trapezoid rule over the trace samples; a finite-
    horizon estimator of the steady-state cost rate.
    """
    t = np.asarray(trace.t, dtype=float)
    x = np.asarray(trace.states, dtype=float)
    u = np.asarray(trace.u, dtype=float).reshape(len(t), -1)
    if t.size < 2:
        raise ValueError("cost evaluation needs at least two samples")
    if x.shape[0] != t.size or u.shape[0] != t.size:
        raise DimensionError("trace state and input series must align with t")
    if x.shape[1] != w.n_states:
        raise DimensionError(
            f"trace has {x.shape[1]} states, weights expect {w.n_states}"
        )
    integrand = (
        np.einsum("ki,ij,kj->k", x, w.q, x)
        + 2.0 * np.einsum("ki,ij,kj->k", x, w.n_c, u)
        + np.einsum("ki,ij,kj->k", u, w.r, u)
    )
    horizon = t[-1] - t[0]
    return float(np.trapezoid(integrand, t) / horizon)
