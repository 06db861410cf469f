"""Plant model tests: force law, nonlinear dynamics, linearization,
realizations and transfer-function conversions.

Hand-evaluated oracles for the nominal parameters (m=1, R=10, L=0.2,
i0=0.8, x0=0.03, k=2.9e-6, E=5, D=0.13):

    f_m(x0, i0)        = 0.5 * 2.9e-6 * (0.8/0.03)^2 = 1.0311111e-3 N
    A21 = -2 k i0^2/(m x0^3) = -0.137481481...
    A23 =  2 k i0 /(m x0^2)  = 5.15555556e-3
    A33 = -R/L               = -50
    B3  =  E/(L D)           = 192.30769...
    num =  A23 * B3          = 0.991452991...
"""

import numpy as np
import pytest

from emsim.errors import DimensionError
from emsim.numerics import eig
from emsim.plant import (
    PlantParams,
    StateSpace,
    TransferFunction,
    char_poly,
    electromagnet_force,
    finite_difference_jacobian,
    linearize,
    nonlinear_derivative,
    ss_to_tf,
    to_companion,
)

NOMINAL = PlantParams.nominal()

F_M_NOMINAL = 1.0311111111111113e-3       # 0.5*2.9e-6*(0.8/0.03)**2
A21 = -0.13748148148148154                # -2*2.9e-6*0.64/(1*2.7e-5)
A23 = 5.1555555555555565e-3               # 2*2.9e-6*0.8/(1*9e-4)
B3 = 192.3076923076923                    # 5/(0.2*0.13)
NUM_NOMINAL = 0.9914529914529915          # A23 * B3


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

def test_params_validation():
    with pytest.raises(ValueError):
        PlantParams(l_coil=-0.2)
    with pytest.raises(ValueError):
        PlantParams(x0=0.0)
    PlantParams(i0=0.0)  # zero operating current is admissible


def test_params_kem_consistency_check():
    # k = mu0 N^2 A / 2; pick a triple that reproduces the nominal k exactly
    mu0, n_turns = 4e-7, 100.0
    a_pole = 2.0 * 2.9e-6 / (mu0 * n_turns**2)
    PlantParams(mu0=mu0, n_turns=n_turns, a_pole=a_pole)  # consistent: ok
    with pytest.raises(ValueError):
        PlantParams(mu0=mu0, n_turns=n_turns, a_pole=2 * a_pole)


def test_equilibrium_residual_reported():
    # |m g - f_m| = 9.81 - 1.0311e-3, about 9.809 N of unbalanced weight
    assert NOMINAL.equilibrium_residual() == pytest.approx(9.81 - F_M_NOMINAL, abs=1e-12)
    assert NOMINAL.equilibrium_residual() == pytest.approx(9.809, abs=1e-3)


# ---------------------------------------------------------------------------
# Force law
# ---------------------------------------------------------------------------

def test_force_zero_current():
    assert electromagnet_force(0.05, 0.0, 2.9e-6) == 0.0


def test_force_direct_substitution():
    assert electromagnet_force(1.0, 3.0, 2.0) == pytest.approx(9.0)


def test_force_nominal_point():
    f = electromagnet_force(NOMINAL.x0, NOMINAL.i0, NOMINAL.k_em)
    assert f == pytest.approx(F_M_NOMINAL, rel=1e-12)
    # this is nowhere near m*g: the stated operating point is not a balance
    assert abs(f - NOMINAL.m * NOMINAL.g) > 9.0


def test_force_rejects_contact():
    with pytest.raises(ValueError):
        electromagnet_force(0.0, 1.0, 2.9e-6)
    with pytest.raises(ValueError):
        electromagnet_force(-0.01, 1.0, 2.9e-6)


def test_force_ratio_homogeneity():
    # f depends on i/x only: f(c x, c i) = f(x, i)
    rng = np.random.default_rng(8)
    for _ in range(20):
        x, i, c = rng.uniform(0.01, 0.1), rng.uniform(0.1, 2.0), rng.uniform(0.1, 10.0)
        assert electromagnet_force(c * x, c * i, 2.9e-6) == pytest.approx(
            electromagnet_force(x, i, 2.9e-6), rel=1e-12)


# ---------------------------------------------------------------------------
# Nonlinear dynamics
# ---------------------------------------------------------------------------

def test_derivative_gravity_only():
    dz = nonlinear_derivative([0.05, 0.3, 0.0], 0.0, NOMINAL)
    assert np.allclose(dz, [0.3, 9.81, 0.0])


def test_derivative_electrical_steady_state():
    # u = R i makes the coil current stationary
    z = np.array([0.04, 0.0, 0.7])
    dz = nonlinear_derivative(z, NOMINAL.r_coil * z[2], NOMINAL)
    assert dz[2] == pytest.approx(0.0, abs=1e-12)


def test_derivative_operating_point_value():
    # magnetic acceleration at the operating point is 2 f_m / m
    # (the acceleration law is the one the linear model differentiates,
    # see the module docstring), so dz2 = 9.81 + 2.0622e-3
    dz = nonlinear_derivative([NOMINAL.x0, 0.0, NOMINAL.i0], 0.0, NOMINAL)
    assert dz[1] == pytest.approx(9.81 + 2.0 * F_M_NOMINAL, rel=1e-12)


def test_derivative_rejects_contact():
    with pytest.raises(ValueError):
        nonlinear_derivative([0.0, 0.0, 0.5], 0.0, NOMINAL)


# ---------------------------------------------------------------------------
# Linearization
# ---------------------------------------------------------------------------

def test_linearize_nominal_entries():
    ss = linearize(NOMINAL)
    assert ss.realization == "physical"
    assert ss.state_labels == ("gap", "velocity", "current")
    assert ss.a[1, 0] == pytest.approx(A21, rel=1e-12)
    assert ss.a[1, 2] == pytest.approx(A23, rel=1e-12)
    assert ss.a[2, 2] == pytest.approx(-50.0)
    assert ss.b[2, 0] == pytest.approx(B3, rel=1e-12)
    assert np.allclose(ss.c, [[1.0, 0.0, 0.0]])
    assert np.allclose(ss.d, 0.0)


def test_linearize_mass_scaling():
    # doubling m halves the two magnetic entries, leaves A33 and B3 alone
    heavy = linearize(PlantParams(m=2.0))
    light = linearize(NOMINAL)
    assert heavy.a[1, 0] == pytest.approx(light.a[1, 0] / 2.0)
    assert heavy.a[1, 2] == pytest.approx(light.a[1, 2] / 2.0)
    assert heavy.a[2, 2] == light.a[2, 2]
    assert heavy.b[2, 0] == light.b[2, 0]


def test_linearize_rejects_zero_current():
    with pytest.raises(ValueError):
        linearize(PlantParams(i0=0.0))


def test_open_loop_eigenvalues():
    # nearly (s+50)(s^2+0.1375): one fast real pole, one undamped pair
    lams = sorted(eig(linearize(NOMINAL).a), key=lambda z: z.real)
    assert abs(lams[0] - (-50.0)) < 1e-4
    assert abs(abs(lams[1].imag) - 0.37078) < 1e-4
    assert abs(lams[1].real) < 1e-4


def test_jacobian_matches_linearization_at_operating_point():
    p = NOMINAL
    jac = finite_difference_jacobian(np.array([p.x0, 0.0, p.i0]), 0.0, p)
    assert np.allclose(jac, linearize(p).a, rtol=1e-4, atol=1e-12)


def test_jacobian_matches_linearization_randomized():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = PlantParams(m=rng.uniform(0.5, 3.0), x0=rng.uniform(0.01, 0.1),
                        i0=rng.uniform(0.1, 2.0))
        jac = finite_difference_jacobian(np.array([p.x0, 0.0, p.i0]), 0.0, p)
        assert np.allclose(jac, linearize(p).a, rtol=1e-4, atol=1e-12)


def test_jacobian_exact_on_linear_subsystem():
    # rows 1 and 3 of the dynamics are linear, so central differences are
    # exact there; entry (0,1) is structurally 1
    jac = finite_difference_jacobian(np.array([0.05, 0.1, 0.4]), 0.2, NOMINAL)
    assert jac[0, 1] == pytest.approx(1.0, abs=1e-10)
    assert jac[2, 2] == pytest.approx(-50.0, abs=1e-8)
    assert jac[0, 0] == jac[0, 2] == 0.0
    assert jac[2, 0] == jac[2, 1] == 0.0


def test_jacobian_rejects_bad_step():
    with pytest.raises(ValueError):
        finite_difference_jacobian(np.array([0.03, 0.0, 0.8]), 0.0, NOMINAL, h=0.0)
    with pytest.raises(ValueError):
        finite_difference_jacobian(np.array([1e-7, 0.0, 0.8]), 0.0, NOMINAL, h=1e-6)


# ---------------------------------------------------------------------------
# Characteristic polynomial
# ---------------------------------------------------------------------------

def test_char_poly_nominal_plant():
    coeffs = char_poly(linearize(NOMINAL).a)
    ref = [1.0, 50.0, 0.1375, 6.874]
    assert np.allclose(coeffs, ref, atol=1e-3)


def test_char_poly_trivial_cases():
    assert np.allclose(char_poly(np.eye(2)), [1.0, -2.0, 1.0], atol=1e-12)
    assert np.allclose(char_poly(np.zeros((3, 3))), [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_char_poly_similarity_invariance():
    rng = np.random.default_rng(9)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        a = rng.standard_normal((n, n))
        # well-conditioned random transform: orthogonal times mild diagonal
        qmat, _ = np.linalg.qr(rng.standard_normal((n, n)))
        t = qmat @ np.diag(rng.uniform(0.5, 2.0, n))
        similar = np.linalg.solve(t, a @ t)
        assert np.allclose(char_poly(similar), char_poly(a), atol=1e-8)


# ---------------------------------------------------------------------------
# Companion form and transfer functions
# ---------------------------------------------------------------------------

def test_to_companion_reference_form():
    # exactly the printed companion matrices for the unity-numerator model
    tf = TransferFunction([1.0], [1.0, 50.0, 0.1375, 6.874])
    ss = to_companion(tf)
    assert ss.realization == "companion"
    assert np.array_equal(ss.a[0], [-50.0, -0.1375, -6.874])
    assert np.array_equal(ss.a[1:], np.eye(3)[:2])
    assert np.array_equal(ss.b, [[1.0], [0.0], [0.0]])
    assert np.array_equal(ss.c, [[0.0, 0.0, 1.0]])
    # single unit output pick for the unity-numerator case
    assert np.sum(ss.c != 0.0) == 1 and ss.c[0, -1] == 1.0


def test_to_companion_first_order():
    ss = to_companion(TransferFunction([1.0], [1.0, 1.0]))
    assert np.array_equal(ss.a, [[-1.0]])
    assert np.array_equal(ss.b, [[1.0]])
    assert np.array_equal(ss.c, [[1.0]])


def test_to_companion_charpoly_round_trip():
    rng = np.random.default_rng(10)
    for _ in range(10):
        n = int(rng.integers(1, 5))
        den = np.poly(rng.uniform(-3.0, -0.2, n))
        tf = TransferFunction([1.0], den)
        assert np.allclose(char_poly(to_companion(tf).a), tf.den, atol=1e-9)


def test_to_companion_preserves_transfer_function():
    # equality checked at random complex evaluation points
    rng = np.random.default_rng(13)
    for _ in range(10):
        n = int(rng.integers(1, 5))
        den = np.poly(rng.uniform(-3.0, -0.2, n))
        num = rng.standard_normal(int(rng.integers(1, n + 1)))
        num[0] = num[0] if abs(num[0]) > 0.1 else 0.5
        tf = TransferFunction(num, den)
        ss = to_companion(tf)
        for _ in range(10):
            s = complex(rng.uniform(0.5, 3.0), rng.uniform(-3.0, 3.0))
            direct = tf(s)
            via_ss = complex(
                (ss.c @ np.linalg.solve(s * np.eye(n) - ss.a, ss.b))[0, 0])
            assert abs(via_ss - direct) <= 1e-8 * max(1.0, abs(direct))


def test_tf_rejects_improper():
    with pytest.raises(ValueError):
        TransferFunction([1.0, 0.0], [1.0, 1.0])  # equal degrees


def test_ss_to_tf_physical_realization():
    # sparsity makes the numerator the constant A23 * B3 = 0.99145...
    tf = ss_to_tf(linearize(NOMINAL))
    assert tf.num.size == 1
    assert tf.num[0] == pytest.approx(NUM_NOMINAL, rel=1e-9)
    assert np.allclose(tf.den, [1.0, 50.0, 0.1375, 6.874], atol=1e-3)


def test_ss_to_tf_companion_identity():
    tf_in = TransferFunction([1.0], [1.0, 50.0, 0.1375, 6.874])
    tf_out = ss_to_tf(to_companion(tf_in))
    assert np.allclose(tf_out.num, [1.0], atol=1e-9)
    assert np.allclose(tf_out.den, tf_in.den, atol=1e-9)


def test_ss_to_tf_scalar():
    ss = StateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    tf = ss_to_tf(ss)
    assert np.allclose(tf.num, [1.0]) and np.allclose(tf.den, [1.0, 1.0])


def test_ss_to_tf_round_trip_all_coefficients():
    rng = np.random.default_rng(14)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        den = np.poly(rng.uniform(-3.0, -0.2, n))
        num = rng.standard_normal(int(rng.integers(1, n + 1)))
        num[0] = num[0] if abs(num[0]) > 0.1 else 0.5
        tf = TransferFunction(num, den)
        back = ss_to_tf(to_companion(tf))
        assert np.allclose(back.den, tf.den, atol=1e-9)
        assert back.num.size == tf.num.size
        assert np.allclose(back.num, tf.num, atol=1e-9)


def test_ss_to_tf_rejects_mimo():
    ss = StateSpace(np.diag([-1.0, -2.0]), np.eye(2), np.eye(2), np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        ss_to_tf(ss)


def test_statespace_dimension_validation():
    with pytest.raises(DimensionError):
        StateSpace(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        StateSpace(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), np.zeros((1, 1)),
                   realization="companion")  # A not companion-structured