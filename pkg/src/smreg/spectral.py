"""Condition-number diagnostics and the 2x2 trailing-block analysis.

When ``b = u_{N-2} + u_{N-1}`` and ``c = xi * b``, rotating ``A - b c^H`` into
the eigenbasis of ``A`` leaves the leading eigenvalues untouched and replaces
the trailing pair by a 2x2 block ``Psi``. The helpers here build that block,
give its singular values in closed form, and compute the ``xi`` thresholds
above which both trailing singular values grow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, InternalConsistencyError, SingularMatrixError
from .matrix import Spectrum

DISCRIMINANT_ATOL = 1e-12


def condition_number(spec: Spectrum) -> float:
    """``lambda_0 / lambda_{N-1}`` for a positive-definite spectrum."""
    smallest = spec.values[-1]
    if smallest <= 0.0:
        raise SingularMatrixError(
            f"smallest eigenvalue {smallest:.3e} is not positive; matrix is rank deficient"
        )
    return float(spec.values[0] / smallest)


@dataclass(frozen=True)
class PsiMatrix:
    """Trailing ``dim x dim`` block of the rotated, regularized Wishart matrix.

    Only ``dim == 2`` is supported. Diagonal entry ``i`` is
    ``lambdas[i] - xi`` and every off-diagonal entry is ``-xi``.
    """

    lambdas: tuple
    xi: float
    dim: int = 2

    def __post_init__(self):
        if self.dim != 2:
            raise NotImplementedError("only the 2x2 trailing block is supported")
        if len(self.lambdas) != self.dim:
            raise ValueError(f"need {self.dim} eigenvalues, got {len(self.lambdas)}")

    @property
    def entries(self) -> np.ndarray:
        la, lb = self.lambdas
        xi = self.xi
        return np.array([[la - xi, -xi], [-xi, lb - xi]], dtype=float)

    def determinant(self) -> float:
        e = self.entries
        return float(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])

    def frobenius_sq(self) -> float:
        return float(np.sum(self.entries**2))


def _check_pair(lambdas, *, strict: bool):
    if len(lambdas) != 2:
        raise ValueError("expected the trailing eigenvalue pair (lambda_{N-2}, lambda_{N-1})")
    la, lb = float(lambdas[0]), float(lambdas[1])
    if not (la > 0.0 and lb > 0.0):
        raise ValueError(f"trailing eigenvalues must be positive, got ({la}, {lb})")
    if la < lb:
        raise ValueError(f"expected lambda_{{N-2}} >= lambda_{{N-1}}, got ({la}, {lb})")
    if strict and la == lb:
        raise DegenerateSpectrumError(
            "lambda_{N-2} == lambda_{N-1}: the threshold derivation divides by their gap"
        )
    return la, lb


def build_psi(lambdas, xi: float) -> PsiMatrix:
    """Trailing block for the pair ``(lambda_{N-2}, lambda_{N-1})`` and scale ``xi``.

    ``xi = 0`` is accepted and yields ``diag(lambdas)``.
    """
    la, lb = _check_pair(lambdas, strict=False)
    if xi < 0.0:
        raise ValueError(f"xi must be non-negative, got {xi}")
    return PsiMatrix((la, lb), float(xi))


def psi_frobenius_closed_form(lambdas, xi: float) -> float:
    """``4 xi^2 - 2 (la + lb) xi + la^2 + lb^2``, the expansion of the entries."""
    la, lb = lambdas
    return 4.0 * xi * xi - 2.0 * (la + lb) * xi + la * la + lb * lb


def psi_determinant_closed_form(lambdas, xi: float) -> float:
    la, lb = lambdas
    return la * lb - (la + lb) * xi


def psi_singular_values(lambdas, xi: float):
    """Closed-form singular values ``(sigma0, sigma1)`` of the trailing block.

    ``sigma = sqrt((L1 +- sqrt(L1^2 - 4 L2)) / 2)`` with ``L1 = ||Psi||_F^2``
    and ``L2 = det(Psi)^2``.
    """
    psi = build_psi(lambdas, xi)
    la, lb = psi.lambdas
    l1 = la**2 + lb**2 - 2.0 * la * xi - 2.0 * lb * xi + 4.0 * xi**2
    l2 = (
        la**2 * lb**2
        - 2.0 * la**2 * lb * xi
        - 2.0 * la * lb**2 * xi
        + la**2 * xi**2
        + 2.0 * la * lb * xi**2
        + lb**2 * xi**2
    )
    disc = l1 * l1 - 4.0 * l2
    if disc < -DISCRIMINANT_ATOL * max(1.0, l1 * l1):
        raise InternalConsistencyError(
            f"negative discriminant {disc:.3e} for a symmetric 2x2 block"
        )
    root = math.sqrt(max(disc, 0.0))
    sigma0 = math.sqrt(max(l1 + root, 0.0) / 2.0)
    sigma1 = math.sqrt(max(l1 - root, 0.0) / 2.0)
    return sigma0, sigma1


def xi_thresholds(lambdas):
    """Thresholds ``(xi_T1, xi_T2)`` for the pair ``(lambda_{N-2}, lambda_{N-1})``.

    ``xi > xi_T1`` guarantees ``sigma0 > lambda_{N-2}``; ``xi > xi_T2`` gives
    ``sigma1 > lambda_{N-1}``. Since ``xi_T1 > xi_T2`` the first is sufficient
    for both.
    """
    la, lb = _check_pair(lambdas, strict=True)
    xi_t1 = 2.0 * la * (la + lb) / (3.0 * la + lb)
    xi_t2 = 2.0 * (la + lb) * lb / (la + 3.0 * lb)
    return xi_t1, xi_t2


def residual_model(kappa: float, t: int) -> float:
    """Two-dominant-term estimate ``2 ((k^2 - 1) / (k^2 + 1))^(2^t)``."""
    if kappa < 1.0:
        raise ValueError(f"condition number must be >= 1, got {kappa}")
    if t < 0:
        raise ValueError(f"iteration index must be >= 0, got {t}")
    k2 = kappa * kappa
    ratio = (k2 - 1.0) / (k2 + 1.0)
    return 2.0 * ratio ** (2**t)


def iterations_predicted(kappa: float, tol: float, t_max: int = 200) -> int:
    """Smallest ``t`` with ``residual_model(kappa, t) <= tol`` (``t_max`` if none)."""
    for t in range(t_max + 1):
        if residual_model(kappa, t) <= tol:
            return t
    return t_max
