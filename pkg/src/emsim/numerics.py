"""Dense real-matrix kernels: eigenvalues, Lyapunov and Riccati solvers.

Everything here operates on plain ``numpy.ndarray`` matrices.  The two matrix
equations are solved directly rather than through a canned Riccati routine:

* ``solve_lyapunov`` reduces A to complex Schur form and back-substitutes
  column by column (Bartels-Stewart approach).
* ``solve_care`` extracts the stable invariant subspace of the Hamiltonian
  matrix via an ordered real Schur decomposition, then polishes the solution
  with Newton-Kleinman steps (each step is one Lyapunov solve) until the
  residual stops improving.

Both solvers enforce their residual contracts and raise instead of returning
a silently inaccurate solution.  All functions are pure and thread-safe.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .errors import (
    DimensionError,
    NumericalError,
    SingularEquationError,
    SynthesisError,
    WeightError,
)

# Residual contracts, relative to max(1, ||Q||_F).
LYAPUNOV_RESIDUAL_TOL = 1e-9
CARE_RESIDUAL_TOL = 1e-8


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """Coerce scalars / nested lists / arrays to a finite 2-D float array."""
    m = np.atleast_2d(np.asarray(value, dtype=float))
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.size == 0:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def require_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def require_symmetric(m: np.ndarray, name: str = "matrix", tol: float = 1e-9) -> np.ndarray:
    require_square(m, name)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > tol * scale:
        raise ValueError(f"{name} must be symmetric")
    return 0.5 * (m + m.T)


def is_psd(m: np.ndarray, tol: float = 1e-10) -> bool:
    """Symmetric positive semidefiniteness within an eigenvalue tolerance."""
    m = 0.5 * (m + m.T)
    w = np.linalg.eigvalsh(m)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    return bool(np.min(w) >= -tol * scale)


def is_pd(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = 0.5 * (m + m.T)
    w = np.linalg.eigvalsh(m)
    return bool(np.min(w) > tol * max(1.0, float(np.max(np.abs(w)))))


def is_hurwitz(a: np.ndarray, margin: float = 0.0) -> bool:
    """True when every eigenvalue of ``a`` has real part < -margin."""
    return bool(np.max(eig(a).real) < -margin)


# ---------------------------------------------------------------------------
# Eigenvalues
# ---------------------------------------------------------------------------

def eig(a) -> np.ndarray:
    """All eigenvalues of a square real matrix, as a complex array.

    Raises ``DimensionError`` for non-square input and ``NumericalError``
    if the QR iteration fails to converge.
    """
    a = require_square(as_matrix(a, "A"), "A")
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc


# ---------------------------------------------------------------------------
# Lyapunov equation  A^T X + X A + Q = 0
# ---------------------------------------------------------------------------

def solve_lyapunov(a, q) -> np.ndarray:
    """Solve ``A^T X + X A + Q = 0`` for symmetric ``Q``.

    Requires the spectrum of ``A`` to contain no pair with
    ``lambda_i + lambda_j = 0`` (in particular, a stable ``A`` always
    qualifies).  The returned ``X`` is symmetric and satisfies
    ``||A^T X + X A + Q||_F <= 1e-9 * max(1, ||Q||_F)``.
    """
    a = require_square(as_matrix(a, "A"), "A")
    q = require_symmetric(as_matrix(q, "Q"), "Q")
    if a.shape != q.shape:
        raise DimensionError(f"A {a.shape} and Q {q.shape} must agree")
    n = a.shape[0]

    t, u = sla.schur(a, output="complex")
    lam = np.diag(t)
    # Solvability: no lambda_i + lambda_j = 0 (checked on conj(lam_i)+lam_j,
    # the actual divisors below; for real A the two sets coincide).
    pair = np.add.outer(np.conj(lam), lam)
    if np.min(np.abs(pair)) <= 1e-12 * max(1.0, float(np.max(np.abs(lam)))):
        raise SingularEquationError(
            "Lyapunov equation is singular: spectrum of A contains a pair "
            "with lambda_i + lambda_j = 0"
        )

    # Transform, then solve T^H Y + Y T = -U^H Q U column by column.
    # T^H + T[j,j] I is lower triangular, so each column is one
    # forward substitution.
    qt = u.conj().T @ q @ u
    y = np.zeros((n, n), dtype=complex)
    th = t.conj().T
    eye = np.eye(n)
    for j in range(n):
        rhs = -qt[:, j] - y[:, :j] @ t[:j, j]
        y[:, j] = sla.solve_triangular(th + t[j, j] * eye, rhs, lower=True)
    x = (u @ y @ u.conj().T).real
    x = 0.5 * (x + x.T)

    residual = np.linalg.norm(a.T @ x + x @ a + q, "fro")
    bound = LYAPUNOV_RESIDUAL_TOL * max(1.0, np.linalg.norm(q, "fro"))
    if not np.isfinite(residual) or residual > bound:
        raise NumericalError(
            f"Lyapunov residual {residual:.3e} exceeds bound {bound:.3e}"
        )
    return x


# ---------------------------------------------------------------------------
# Continuous algebraic Riccati equation
#   A^T P + P A - (P B + N) R^{-1} (B^T P + N^T) + Q = 0
# ---------------------------------------------------------------------------

def _pbh_stabilizable(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """PBH test: every eigenvalue with Re >= 0 must be controllable."""
    n = a.shape[0]
    scale = max(1.0, float(np.linalg.norm(a, 2)))
    for lam in eig(a):
        if lam.real < -tol * scale:
            continue
        pencil = np.hstack([a - lam * np.eye(n), b.astype(complex)])
        if np.linalg.matrix_rank(pencil, tol=tol * scale) < n:
            return False
    return True


def stabilizable(a, b) -> bool:
    """True when (A, B) is stabilizable (all unstable modes controllable)."""
    a = require_square(as_matrix(a, "A"), "A")
    b = as_matrix(b, "B")
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"B has {b.shape[0]} rows, expected {a.shape[0]}")
    return _pbh_stabilizable(a, b)


def detectable(a, c) -> bool:
    """True when (A, C) is detectable; dual of ``stabilizable``."""
    a = require_square(as_matrix(a, "A"), "A")
    c = as_matrix(c, "C")
    if c.shape[1] != a.shape[0]:
        raise DimensionError(f"C has {c.shape[1]} columns, expected {a.shape[0]}")
    return _pbh_stabilizable(a.T, c.T)


def care_residual(a, b, q, r, n_cross, p) -> float:
    """Frobenius norm of the CARE residual for a candidate solution ``p``."""
    rinv_term = np.linalg.solve(r, b.T @ p + n_cross.T)
    return float(np.linalg.norm(
        a.T @ p + p @ a - (p @ b + n_cross) @ rinv_term + q, "fro"
    ))


def solve_care(a, b, q, r, n_cross=None) -> np.ndarray:
    """Stabilizing solution of the continuous algebraic Riccati equation.

    Parameters are the state matrix ``a`` (n x n), input matrix ``b``
    (n x m), symmetric PSD state weight ``q``, symmetric PD input weight
    ``r`` and optional state-input cross weight ``n_cross`` (n x m,
    defaults to zero).

    Returns the symmetric PSD ``P`` for which ``A - B R^{-1} (B^T P + N^T)``
    is Hurwitz, with Frobenius residual at most ``1e-8 * max(1, ||Q||_F)``.

    Raises ``WeightError`` when ``r`` is not positive definite,
    ``SynthesisError`` when no stabilizing solution exists (for instance an
    unstabilizable pair) and ``NumericalError`` when the residual contract
    cannot be met.
    """
    a = require_square(as_matrix(a, "A"), "A")
    b = as_matrix(b, "B")
    q = require_symmetric(as_matrix(q, "Q"), "Q")
    r = require_symmetric(as_matrix(r, "R"), "R")
    n = a.shape[0]
    m = b.shape[1]
    if b.shape[0] != n:
        raise DimensionError(f"B has {b.shape[0]} rows, expected {n}")
    if q.shape != (n, n):
        raise DimensionError(f"Q has shape {q.shape}, expected {(n, n)}")
    if r.shape != (m, m):
        raise DimensionError(f"R has shape {r.shape}, expected {(m, m)}")
    if n_cross is None:
        n_cross = np.zeros((n, m))
    n_cross = as_matrix(n_cross, "N")
    if n_cross.shape != (n, m):
        raise DimensionError(f"N has shape {n_cross.shape}, expected {(n, m)}")
    if not is_pd(r):
        raise WeightError("R must be symmetric positive definite")

    if not _pbh_stabilizable(a, b):
        raise SynthesisError("(A, B) is not stabilizable")

    # Absorb the cross term: equivalent CARE on (A - B R^-1 N^T, B,
    # Q - N R^-1 N^T, R), same solution P.
    rinv = np.linalg.inv(r)
    a_r = a - b @ rinv @ n_cross.T
    q_r = q - n_cross @ rinv @ n_cross.T
    g = b @ rinv @ b.T

    hamiltonian = np.block([[a_r, -g], [-q_r, -a_r.T]])
    # Existence condition: the Hamiltonian spectrum must split cleanly
    # around the imaginary axis (fails e.g. for undetectable cost on a
    # marginally stable plant).
    h_eigs = eig(hamiltonian)
    if np.min(np.abs(h_eigs.real)) <= 1e-9 * max(1.0, float(np.max(np.abs(h_eigs)))):
        raise SynthesisError(
            "Hamiltonian spectrum touches the imaginary axis; no stabilizing "
            "solution exists (cost cannot see every marginal mode)"
        )
    try:
        _, z, sdim = sla.schur(hamiltonian, output="real", sort="lhp")
    except Exception as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"Schur decomposition failed: {exc}") from exc
    if sdim != n:
        raise SynthesisError(
            f"Hamiltonian has {sdim} stable eigenvalues, expected {n}; "
            "no stabilizing solution exists"
        )
    u1 = z[:n, :n]
    u2 = z[n:, :n]
    try:
        p = np.linalg.solve(u1.T, u2.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("stable invariant subspace is degenerate") from exc
    p = 0.5 * (p + p.T)

    # Newton-Kleinman polish; each step is exact for the reduced problem up
    # to one Lyapunov solve, keeping whichever iterate has the best residual.
    best = p
    best_res = care_residual(a, b, q, r, n_cross, p)
    for _ in range(10):
        k = rinv @ b.T @ p
        a_cl = a_r - b @ k
        if np.max(eig(a_cl).real) >= 0:
            break
        try:
            p = solve_lyapunov(a_cl, q_r + k.T @ r @ k)
        except (SingularEquationError, NumericalError):
            break
        res = care_residual(a, b, q, r, n_cross, p)
        if res < best_res:
            best, best_res = p, res
        else:
            break
    p = best

    bound = CARE_RESIDUAL_TOL * max(1.0, np.linalg.norm(q, "fro"))
    if best_res > bound:
        raise NumericalError(
            f"CARE residual {best_res:.3e} exceeds bound {bound:.3e}"
        )
    closed = a - b @ rinv @ (b.T @ p + n_cross.T)
    if not is_hurwitz(closed):
        raise SynthesisError("CARE solution does not stabilize the closed loop")
    return p
