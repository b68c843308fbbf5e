"""Uniform entry point over every inversion method.

``exact`` is Gauss-Jordan elimination; ``hb`` is plain Hotelling-Bodewig;
``jacobi``, ``gs`` and ``ssor`` run HB on the preconditioned matrix; ``smr``
regularizes with one rank-one update and ``smr-list`` tries every column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iterative import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    IterationTrace,
    build_preconditioner,
    gershgorin_omega,
    hb_invert,
    preconditioned_invert,
)
from .matrix import as_matrix, direct_inverse, hermitian_eig, singular_values
from .smr import (
    list_regularize,
    lowcomplexity_update,
    select_alpha,
    sm_recover,
    theorem1_update,
    theorem2_update,
)

METHODS = ("exact", "hb", "jacobi", "gs", "ssor", "smr", "smr-list")
_PRECOND = {"jacobi": "jacobi", "gs": "gauss-seidel", "ssor": "ssor"}


@dataclass
class InverseResult:
    inverse: np.ndarray
    method: str
    iterations: int
    trace: IterationTrace | None = None
    update: object = None

    @property
    def converged(self) -> bool:
        return self.trace is None or self.trace.converged


def scenario_for_channel(channel: str) -> str:
    return "symmetric-rayleigh" if channel == "rayleigh" else "los-dominated"


def _omega_value(a: np.ndarray, omega) -> float | None:
    if omega in (None, "gershgorin"):
        return gershgorin_omega(a)
    if omega == "optimal":
        sv = singular_values(a, method="lapack")
        return 2.0 / (sv[0] ** 2 + sv[-1] ** 2)
    return float(omega)


def invert(a, method: str, *, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
           iterations: int | None = None, omega="gershgorin", alpha="auto",
           scenario: str = "symmetric-rayleigh", xi="auto", smr_mode: str = "lowcomplexity",
           column: int = 0) -> InverseResult:
    """Invert the Hermitian matrix ``a`` with ``method``.

    With ``iterations`` set, exactly that many HB updates are run and ``tol``
    is ignored. ``omega`` is ``"gershgorin"``, ``"optimal"`` or a number and
    is applied to the matrix actually iterated on. ``alpha="auto"`` defers
    to :func:`~smreg.smr.select_alpha` for ``scenario``.
    """
    a = as_matrix(a, square=True)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if iterations is not None:
        tol, max_iter = 0.0, int(iterations)
    if method == "exact":
        return InverseResult(direct_inverse(a), method, 0)
    if method == "hb":
        x, trace = hb_invert(a, omega=_omega_value(a, omega), max_iter=max_iter, tol=tol)
        return InverseResult(x, method, trace.iterations, trace)
    if method in _PRECOND:
        p = build_preconditioner(a, _PRECOND[method])
        w = None if omega in (None, "gershgorin") else _omega_value(p.matrix @ a, omega)
        x, trace = preconditioned_invert(a, p, max_iter=max_iter, tol=tol, omega=w)
        return InverseResult(x, method, trace.iterations, trace)
    if alpha == "auto":
        alpha = select_alpha(a, scenario)
    if method == "smr-list":
        res = list_regularize(a, float(alpha), iter_budget=max_iter, tol=tol)
        trace = res.traces[res.winner]
        return InverseResult(res.inverse, method, trace.iterations, trace, res.best)
    xi_value = None if xi == "auto" else float(xi)
    if smr_mode == "lowcomplexity":
        upd = lowcomplexity_update(a, float(alpha), column)
    elif smr_mode == "theorem1":
        upd = theorem1_update(hermitian_eig(a, method="lapack"), xi_value)
    elif smr_mode == "theorem2":
        upd = theorem2_update(hermitian_eig(a, method="lapack"), xi_value)
    else:
        raise ValueError(f"unknown smr mode {smr_mode!r}")
    reg = upd.apply(a)
    x, trace = hb_invert(reg, omega=_omega_value(reg, omega), max_iter=max_iter, tol=tol)
    return InverseResult(sm_recover(x, upd), method, trace.iterations, trace, upd)
