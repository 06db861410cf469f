"""Quarter-vehicle electromagnetic suspension plant model.

The physical picture: a vehicle body of mass ``m`` rides on an electromagnet
levitated at gap ``x`` with coil current ``i``.  A potentiometer (source
voltage ``E``, track length ``D``) converts road displacement into a voltage
that drives the RL coil circuit, so the road disturbance and the control
voltage share the plant's single input channel.

Model layers:

* coil circuit  ``di/dt = u/L - (R/L) i``  (first-order lag, pole at -R/L)
* electromagnet force law ``f_m = (k/2) (i/x)^2`` (from the stored-energy
  derivation of an inductance varying as 1/x)
* body motion, linearized about the operating point ``(x0, i0)``

The linear model is authoritative for everything downstream.  Its magnetic
stiffness entries are

    A[1,0] = -2 k i0^2 / (m x0^3)      A[1,2] = +2 k i0 / (m x0^2)

and ``nonlinear_derivative`` implements the acceleration law whose Taylor
expansion reproduces exactly these entries, namely
``dv/dt = g + (k/m)(i/x)^2``.  Note two quirks inherited from the reference
design, both reported rather than repaired:

* the force-balance reading ``m dv/dt = mg - f_m`` would disagree with the
  linear model in both the sign and a factor of two of the magnetic term,
  so the force law is kept only for the equilibrium-residual diagnostic;
* the stated operating point is far from force balance
  (``f_m(x0, i0) ~ 1e-3 N`` against ``m g ~ 9.81 N``), which is why the
  open loop is marginally oscillatory (poles at roughly -50 and +/- 0.371j)
  instead of unstable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .numerics import as_matrix, eig, require_square

PHYSICAL_STATE_LABELS = ("gap", "velocity", "current")


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantParams:
    """Physical constants and the linearization operating point.

    Units: kg, ohm, henry, ampere, meter, volt, N m^2/A^2, m/s^2.
    The optional ``mu0`` / ``n_turns`` / ``a_pole`` triple is kept only to
    cross-check ``k_em = mu0 * n_turns^2 * a_pole / 2``.
    """

    m: float = 1.0
    r_coil: float = 10.0
    l_coil: float = 0.2
    i0: float = 0.8
    x0: float = 0.03
    k_em: float = 2.9e-6
    e_pot: float = 5.0
    d_pot: float = 0.13
    g: float = 9.81
    mu0: float | None = None
    n_turns: float | None = None
    a_pole: float | None = None

    def __post_init__(self):
        for name in ("m", "r_coil", "l_coil", "x0", "d_pot", "e_pot", "k_em"):
            if not getattr(self, name) > 0:
                raise ValueError(f"plant.{name} must be > 0")
        if self.i0 < 0:
            raise ValueError("plant.i0 must be >= 0")
        derivation = (self.mu0, self.n_turns, self.a_pole)
        if all(v is not None for v in derivation):
            derived = self.mu0 * self.n_turns**2 * self.a_pole / 2.0
            if abs(derived - self.k_em) > 1e-9 * abs(self.k_em):
                raise ValueError(
                    f"k_em inconsistent with mu0*N^2*A/2: "
                    f"{self.k_em} vs derived {derived}"
                )

    @classmethod
    def nominal(cls) -> "PlantParams":
        """The reference quarter-vehicle parameter set (all defaults)."""
        return cls()

    def equilibrium_residual(self) -> float:
        """|m g - f_m(x0, i0)|, the force-balance defect at the operating point.

        Zero would mean the body actually levitates at (x0, i0); the nominal
        parameters leave about 9.809 N unbalanced.
        """
        return abs(self.m * self.g - electromagnet_force(self.x0, self.i0, self.k_em))


# ---------------------------------------------------------------------------
# LTI containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateSpace:
    """An LTI realization (A, B, C, D) with a realization tag.

    ``realization`` is ``"physical"`` (states gap / velocity / current) or
    ``"companion"`` (top-row companion form, B = e1).
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    realization: str = "physical"
    state_labels: tuple = ()

    def __post_init__(self):
        a = require_square(as_matrix(self.a, "A"), "A")
        b = as_matrix(self.b, "B")
        c = as_matrix(self.c, "C")
        d = as_matrix(self.d, "D")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        n = a.shape[0]
        if b.shape[0] != n:
            raise DimensionError(f"B has {b.shape[0]} rows, expected {n}")
        if c.shape[1] != n:
            raise DimensionError(f"C has {c.shape[1]} columns, expected {n}")
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionError(
                f"D has shape {d.shape}, expected {(c.shape[0], b.shape[1])}"
            )
        if self.realization not in ("physical", "companion"):
            raise ValueError(f"unknown realization tag {self.realization!r}")
        if self.realization == "physical":
            if not self.state_labels:
                object.__setattr__(self, "state_labels", PHYSICAL_STATE_LABELS)
        elif not self.state_labels:
            object.__setattr__(
                self, "state_labels", tuple(f"x{i + 1}" for i in range(n))
            )
        if self.realization == "companion":
            # Structural companion checks: subdiagonal identity, B = e1.
            sub = a[1:, :]
            expected = np.eye(n)[: n - 1, :]
            if n > 1 and not np.allclose(sub, expected):
                raise ValueError("companion A must carry an identity subdiagonal")
            e1 = np.zeros((n, 1))
            e1[0, 0] = 1.0
            if not np.allclose(b, e1):
                raise ValueError("companion B must be the first unit vector")

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    @property
    def is_siso(self) -> bool:
        return self.n_inputs == 1 and self.n_outputs == 1

    def eigenvalues(self) -> np.ndarray:
        return eig(self.a)


@dataclass(frozen=True)
class TransferFunction:
    """Strictly proper SISO transfer function, coefficients by descending degree.

    The denominator is normalized to be monic on construction.
    """

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = np.trim_zeros(np.atleast_1d(np.asarray(self.num, dtype=float)), "f")
        den = np.trim_zeros(np.atleast_1d(np.asarray(self.den, dtype=float)), "f")
        if den.size == 0:
            raise ValueError("denominator must be nonzero")
        if num.size == 0:
            num = np.zeros(1)
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise ValueError("transfer function coefficients must be finite")
        num = num / den[0]
        den = den / den[0]
        if num.size >= den.size:
            raise ValueError(
                f"transfer function must be strictly proper: "
                f"deg(num)={num.size - 1} >= deg(den)={den.size - 1}"
            )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def order(self) -> int:
        return self.den.size - 1

    def __call__(self, s: complex) -> complex:
        return np.polyval(self.num, s) / np.polyval(self.den, s)


# ---------------------------------------------------------------------------
# Force law and nonlinear dynamics
# ---------------------------------------------------------------------------

def electromagnet_force(x: float, i: float, k_em: float) -> float:
    """Attractive electromagnet force ``(k/2) (i/x)^2`` in newtons.

    ``x <= 0`` means mechanical contact where the inverse-square law
    blows up, so it is rejected.
    """
    if x <= 0:
        raise ValueError(f"gap must be positive, got x={x}")
    return 0.5 * k_em * (i / x) ** 2


def nonlinear_derivative(z, u: float, p: PlantParams) -> np.ndarray:
    """State derivative of the gap / velocity / current triple.

        dz1/dt = z2
        dz2/dt = g + (k/m) (z3/z1)^2
        dz3/dt = u/L - (R/L) z3

    The magnetic term carries the sign and gain that linearize exactly to
    the A matrix of :func:`linearize`; see the module docstring for how this
    relates to the energy-method force law.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (3,):
        raise DimensionError(f"state must be a 3-vector, got shape {z.shape}")
    if z[0] <= 0:
        raise ValueError(f"gap must be positive, got z1={z[0]}")
    return np.array([
        z[1],
        p.g + (p.k_em / p.m) * (z[2] / z[0]) ** 2,
        u / p.l_coil - (p.r_coil / p.l_coil) * z[2],
    ])


def finite_difference_jacobian(z, u: float, p: PlantParams, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``nonlinear_derivative`` w.r.t. the state.

    Serves as the independent cross-check for :func:`linearize`.
    """
    if h <= 0:
        raise ValueError(f"step must be positive, got h={h}")
    z = np.asarray(z, dtype=float)
    if z[0] - h <= 0:
        raise ValueError(f"central differences need z1 - h > 0, got z1={z[0]}, h={h}")
    jac = np.zeros((3, 3))
    for j in range(3):
        dz = np.zeros(3)
        dz[j] = h
        jac[:, j] = (
            nonlinear_derivative(z + dz, u, p) - nonlinear_derivative(z - dz, u, p)
        ) / (2.0 * h)
    return jac


# ---------------------------------------------------------------------------
# Linearization and realizations
# ---------------------------------------------------------------------------

def linearize(p: PlantParams) -> StateSpace:
    """Linear model about ``(x0, 0, i0)`` in physical coordinates.

    ::

        A = [[0, 1, 0],
             [-2 k i0^2/(m x0^3), 0, 2 k i0/(m x0^2)],
             [0, 0, -R/L]]
        B = [0, 0, E/(L D)]^T        (potentiometer gain folded in)
        C = [1, 0, 0],  D = 0

    Requires ``x0 > 0`` and ``i0 > 0``; with zero operating current the
    magnetic coupling entries vanish and the body decouples from the coil.
    """
    if p.x0 <= 0 or p.i0 <= 0:
        raise ValueError("linearization needs x0 > 0 and i0 > 0")
    a = np.array([
        [0.0, 1.0, 0.0],
        [-2.0 * p.k_em * p.i0**2 / (p.m * p.x0**3), 0.0,
         2.0 * p.k_em * p.i0 / (p.m * p.x0**2)],
        [0.0, 0.0, -p.r_coil / p.l_coil],
    ])
    b = np.array([[0.0], [0.0], [p.e_pot / (p.l_coil * p.d_pot)]])
    c = np.array([[1.0, 0.0, 0.0]])
    d = np.zeros((1, 1))
    return StateSpace(a, b, c, d, realization="physical",
                      state_labels=PHYSICAL_STATE_LABELS)


def char_poly(a) -> np.ndarray:
    """Monic coefficients of det(sI - A), descending degree.

    Computed from the eigenvalues, hence invariant under similarity
    transforms up to rounding.
    """
    a = require_square(as_matrix(a, "A"), "A")
    coeffs = np.poly(a)
    if np.iscomplexobj(coeffs):
        coeffs = coeffs.real
    return np.asarray(coeffs, dtype=float)


def to_companion(tf: TransferFunction) -> StateSpace:
    """Controllable companion realization with coefficients in the top row.

    For ``den = s^n + a1 s^(n-1) + ... + an`` the realization is::

        A = [[-a1, -a2, ..., -an],       B = [1, 0, ..., 0]^T
             [  1,   0, ...,   0],
             [         ...      ],
             [  0, ...,  1,    0]]

    and C holds the numerator coefficients, lowest power in the last slot,
    so a unity numerator gives C = [0, ..., 0, 1].
    """
    n = tf.order
    if n < 1:
        raise ValueError("transfer function must have at least one pole")
    a = np.zeros((n, n))
    a[0, :] = -tf.den[1:]
    if n > 1:
        a[1:, : n - 1] = np.eye(n - 1)
    b = np.zeros((n, 1))
    b[0, 0] = 1.0
    c = np.zeros((1, n))
    c[0, n - tf.num.size:] = tf.num
    d = np.zeros((1, 1))
    return StateSpace(a, b, c, d, realization="companion")


def ss_to_tf(ss: StateSpace) -> TransferFunction:
    """SISO transfer function ``C (sI - A)^{-1} B + D`` as a coefficient ratio.

    The denominator is the raw characteristic polynomial; no pole-zero
    cancellation is attempted.  Uses the determinant identity
    ``det(sI - A + B C) = det(sI - A) (1 + C (sI - A)^{-1} B)`` so the
    numerator is ``poly(A - B C) - poly(A)`` plus the feedthrough term.
    """
    if not ss.is_siso:
        raise DimensionError(
            f"transfer function needs a SISO realization, got "
            f"{ss.n_inputs} inputs x {ss.n_outputs} outputs"
        )
    den = char_poly(ss.a)
    diff = char_poly(ss.a - ss.b @ ss.c) - den  # leading 1 - 1 cancels exactly
    d = float(ss.d[0, 0])
    if d == 0.0:
        num = np.array(diff[1:], dtype=float)  # degree < n
    else:
        # Nonzero feedthrough yields a proper but not strictly proper ratio;
        # TransferFunction will reject it, which is the intended contract.
        num = diff + d * den
    # poly() differences leave ~eps-size leading dust; trim it relative to
    # the numerator scale so a structurally constant numerator stays scalar.
    scale = max(float(np.max(np.abs(num))), 1e-300)
    while num.size > 1 and abs(num[0]) < 1e-9 * scale:
        num = num[1:]
    return TransferFunction(num=num, den=den)
