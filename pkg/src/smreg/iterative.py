"""Hotelling-Bodewig iterative inversion and the classical preconditioners."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, ShapeError, SingularMatrixError
from .matrix import Spectrum, as_matrix, frobenius_norm_sq

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
DIVERGENCE_RUN = 3
# residual increases below this (per unit dimension) are rounding noise
NOISE_FLOOR = 1e-16

PRECONDITIONERS = ("none", "jacobi", "gauss-seidel", "ssor")


@dataclass
class IterationTrace:
    """Residuals ``||I - A X_t||_F^2`` for ``t = 0 .. iterations``."""

    residuals: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    tolerance: float = DEFAULT_TOL
    omega: float = float("nan")

    @property
    def final_residual(self) -> float:
        return self.residuals[-1]

    def to_csv(self) -> str:
        lines = ["t,residual"]
        lines += [f"{t},{r!r}" for t, r in enumerate(self.residuals)]
        return "\n".join(lines) + "\n"


def gershgorin_omega(a) -> float:
    """Step size ``1 / max_n sum_i |a_n^H a_i|`` over the columns ``a_n`` of ``a``.

    The row sums of ``|A^H A|`` bound its spectral radius, so
    ``I - omega A A^H`` has all eigenvalues in ``[0, 1)``.
    """
    a = as_matrix(a, square=True)
    gram = np.abs(a.conj().T @ a)
    bound = float(np.max(gram.sum(axis=1)))
    if bound == 0.0:
        raise ValueError("Gershgorin step size is undefined for the zero matrix")
    return 1.0 / bound


def optimal_omega(spec: Spectrum) -> float:
    """``2 / (sigma_0^2 + sigma_{N-1}^2)`` from the singular values of ``spec``.

    For a positive-definite matrix these are its eigenvalues.
    """
    sv = spec.singular_values()
    lo, hi = sv[-1], sv[0]
    return 2.0 / (hi * hi + lo * lo)


def _residual(a: np.ndarray, x: np.ndarray):
    r = np.eye(a.shape[0], dtype=np.complex128) - a @ x
    return r, frobenius_norm_sq(r)


def hb_invert(a, omega: float | None = None, max_iter: int = DEFAULT_MAX_ITER,
              tol: float = DEFAULT_TOL):
    """Iterate ``X_t = 2 X_{t-1} - X_{t-1} A X_{t-1}`` from ``X_0 = omega A^H``.

    Stops as soon as ``||I - A X_t||_F^2 <= tol`` or after ``max_iter``
    updates. ``omega`` defaults to :func:`gershgorin_omega`. Pass ``tol=0``
    to run exactly ``max_iter`` updates.

    Returns
    -------
    (X, IterationTrace)

    Raises
    ------
    DivergenceError
        If the residual increases on three consecutive iterations.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if omega is None:
        omega = gershgorin_omega(a)
    x = omega * a.conj().T
    trace = IterationTrace(tolerance=tol, omega=float(omega))
    rises = 0
    floor = NOISE_FLOOR * n
    for t in range(max_iter + 1):
        r, res = _residual(a, x)
        if not np.isfinite(res):
            raise DivergenceError(
                f"residual overflowed at t={t} (omega={omega:.3e})", omega, trace.residuals
            )
        if trace.residuals and res > trace.residuals[-1] and res > floor:
            rises += 1
        else:
            rises = 0
        trace.residuals.append(res)
        trace.iterations = t
        if rises >= DIVERGENCE_RUN:
            raise DivergenceError(
                f"residual rose {DIVERGENCE_RUN} times in a row (omega={omega:.3e}, "
                f"last residuals {trace.residuals[-DIVERGENCE_RUN - 1:]})",
                omega,
                trace.residuals,
            )
        if res <= tol:
            trace.converged = True
            break
        if t == max_iter:
            break
        # X (2I - A X) = X (I + R)
        x = x + x @ r
    return x, trace


def predicted_residuals(spec: Spectrum, omega: float, t_max: int) -> np.ndarray:
    """Per-mode residuals ``sum_n (1 - omega lambda_n^2)^(2^(t+1))`` for Hermitian ``A``.

    Valid for ``X_0 = omega A``; entry ``t`` matches ``hb_invert``'s trace.
    """
    modes = 1.0 - omega * spec.values**2
    return np.array([np.sum(modes ** (2 ** (t + 1))) for t in range(t_max + 1)])


@dataclass(frozen=True)
class Preconditioner:
    kind: str
    matrix: np.ndarray


def _lower_inverse(lower: np.ndarray) -> np.ndarray:
    """Inverse of a lower-triangular matrix by forward substitution."""
    n = lower.shape[0]
    inv = np.zeros_like(lower)
    eye = np.eye(n, dtype=lower.dtype)
    for i in range(n):
        inv[i] = (eye[i] - lower[i, :i] @ inv[:i]) / lower[i, i]
    return inv


def _upper_inverse(upper: np.ndarray) -> np.ndarray:
    """Inverse of an upper-triangular matrix by back substitution."""
    n = upper.shape[0]
    inv = np.zeros_like(upper)
    eye = np.eye(n, dtype=upper.dtype)
    for i in range(n - 1, -1, -1):
        inv[i] = (eye[i] - upper[i, i + 1:] @ inv[i + 1:]) / upper[i, i]
    return inv


def build_preconditioner(a, kind: str) -> Preconditioner:
    """Assemble ``P`` from ``D = diag(A)`` and ``L = strict lower part of A``.

    ========  =====================================
    kind      P
    ========  =====================================
    none      I
    jacobi    D^-1
    gauss-    (D + L)^-1
    seidel
    ssor      (L^H + D)^-1 D^-1 (L + D)^-1
    ========  =====================================
    """
    a = as_matrix(a, square=True)
    if kind in ("gs", "gauss_seidel"):
        kind = "gauss-seidel"
    if kind not in PRECONDITIONERS:
        raise ValueError(f"unknown preconditioner {kind!r}; choose from {PRECONDITIONERS}")
    n = a.shape[0]
    if kind == "none":
        return Preconditioner(kind, np.eye(n, dtype=np.complex128))
    d = a.diagonal().copy()
    if np.any(d == 0):
        raise SingularMatrixError(
            f"zero diagonal entry at index {int(np.flatnonzero(d == 0)[0])}"
        )
    if kind == "jacobi":
        return Preconditioner(kind, np.diag(1.0 / d))
    lower = np.tril(a)  # D + L
    lower_inv = _lower_inverse(lower)
    if kind == "gauss-seidel":
        return Preconditioner(kind, lower_inv)
    upper_inv = _upper_inverse(np.triu(a.conj().T, 1) + np.diag(d))  # (L^H + D)^-1
    p = upper_inv @ (lower_inv / d[:, None])
    return Preconditioner(kind, p)


def preconditioned_invert(a, precond: Preconditioner, max_iter: int = DEFAULT_MAX_ITER,
                          tol: float = DEFAULT_TOL, omega: float | None = None):
    """Run :func:`hb_invert` on ``P A`` and return ``X_t P`` as the inverse of ``A``.

    The trace records ``||I - (P A) X_t||_F^2``. ``omega`` defaults to the
    Gershgorin step of ``P A``.
    """
    a = as_matrix(a, square=True)
    p = precond.matrix
    if p.shape != a.shape:
        raise ShapeError(f"preconditioner {p.shape} does not match matrix {a.shape}")
    pa = p @ a
    x, trace = hb_invert(pa, omega=omega, max_iter=max_iter, tol=tol)
    return x @ p, trace
