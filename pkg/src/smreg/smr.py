"""Sherman-Morrison regularization of Wishart matrices.

A rank-one matrix ``b c^H`` is subtracted from ``A`` so that ``A - b c^H`` is
better conditioned. Its inverse is computed iteratively and ``A^-1`` is then
recovered with the Sherman-Morrison identity::

    A^-1 = X - X b c^H X / (1 + c^H X b),    X = (A - b c^H)^-1

Two families of updates live here. The exact ones need the eigenbasis of
``A``: :func:`theorem1_update` removes the dominant eigenvalue, and
:func:`theorem2_update` lifts the two smallest. :func:`lowcomplexity_update`
needs only one column of ``A - alpha I``, and :func:`list_regularize` tries
every column and keeps the best.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError, SingularMatrixError
from .iterative import DEFAULT_MAX_ITER, DEFAULT_TOL, IterationTrace, NOISE_FLOOR, DIVERGENCE_RUN
from .matrix import Spectrum, as_matrix
from .spectral import xi_thresholds

log = logging.getLogger(__name__)

MODES = ("theorem1", "theorem2", "lowcomplexity")
SCENARIOS = {"los-dominated": 0.1, "symmetric-rayleigh": 1.0}
SINGULAR_DENOMINATOR = 1e-12


@dataclass(frozen=True)
class RankOneUpdate:
    """Vectors ``b``, ``c`` of the regularizer ``b c^H`` and how they were chosen."""

    b: np.ndarray
    c: np.ndarray
    mode: str
    alpha: float = 0.0
    xi: float = 0.0
    source_column: int | None = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.complex128).ravel()
        c = np.asarray(self.c, dtype=np.complex128).ravel()
        if b.shape != c.shape:
            raise ValueError(f"b and c lengths differ: {b.size} vs {c.size}")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("b and c must be finite")
        if not np.any(b):
            raise ValueError("b must be nonzero")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "lowcomplexity" and abs(np.linalg.norm(b) - 1.0) > 1e-12:
            raise ValueError("low-complexity updates need a unit-norm b")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def size(self) -> int:
        return self.b.size

    def apply(self, a) -> np.ndarray:
        """``a - b c^H``."""
        a = as_matrix(a, square=True)
        return a - np.outer(self.b, self.c.conj())


def theorem1_update(spec: Spectrum, xi: float | None = None) -> RankOneUpdate:
    """``b = u_0``, ``c = xi u_0``: shifts the dominant eigenvalue to ``lambda_0 - xi``.

    Any ``xi`` in ``(lambda_0 - lambda_1, lambda_0 - lambda_{N-1})`` gives the
    smallest reachable condition number ``lambda_1 / lambda_{N-1}``. The
    default is the midpoint ``lambda_0 - (lambda_1 + lambda_{N-1}) / 2``.
    """
    if spec.size < 2:
        raise ValueError("need at least two eigenvalues")
    lam = spec.values
    if xi is None:
        xi = lam[0] - 0.5 * (lam[1] + lam[-1])
    b = spec.vector(0)
    return RankOneUpdate(b, xi * b, "theorem1", xi=float(xi))


def default_theorem2_xi(spec: Spectrum) -> float:
    """``1.5 xi_T1``, kept below ``lambda_0 / 2`` so the top eigenvalue stays on top."""
    xi_t1, _ = xi_thresholds((spec.values[-2], spec.values[-1]))
    xi = 1.5 * xi_t1
    cap = 0.5 * spec.values[0]
    if xi >= cap:
        xi = 0.99 * cap
        if xi <= xi_t1:
            log.warning("xi capped at %.3e, below the sufficient threshold %.3e", xi, xi_t1)
    return xi


def theorem2_update(spec: Spectrum, xi: float | None = None) -> RankOneUpdate:
    """``b = u_{N-2} + u_{N-1}``, ``c = xi b``: lifts the two smallest eigenvalues.

    Above ``xi_T1`` both trailing singular values strictly increase while the
    leading ``N - 2`` eigenvalues are unchanged.
    """
    if spec.size < 3:
        raise ValueError("need at least three eigenvalues")
    # validates the trailing pair, including the degenerate case
    xi_thresholds((spec.values[-2], spec.values[-1]))
    if xi is None:
        xi = default_theorem2_xi(spec)
    b = spec.vector(spec.size - 2) + spec.vector(spec.size - 1)
    return RankOneUpdate(b, xi * b, "theorem2", xi=float(xi))


def lowcomplexity_update(a, alpha: float, column: int = 0) -> RankOneUpdate:
    """Regularizer read off one column of ``Delta = A - alpha I``.

    ``b = delta_n / ||delta_n||`` and ``c = Delta b``. Only matrix-vector
    products are needed, so the cost is ``O(N^2)``.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if not 0 <= column < n:
        raise IndexError(f"column {column} out of range for N={n}")
    delta = a[:, column].copy()
    delta[column] -= alpha
    norm = np.linalg.norm(delta)
    if norm == 0.0:
        raise SingularMatrixError(
            f"column {column} of A - alpha*I is zero; pick another column or alpha"
        )
    b = delta / norm
    c = a @ b - alpha * b
    return RankOneUpdate(b, c, "lowcomplexity", alpha=float(alpha), source_column=column)


def select_alpha(a, scenario: str) -> float:
    """Identity shift for the low-complexity update.

    ``los-dominated`` gives 0.1, which suits a channel normalized to
    ``||H||_F^2 = N`` whose Wishart matrix has one dominant eigenvalue.
    ``symmetric-rayleigh`` gives 1, the limit of the diagonal entries of a
    large square i.i.d. Wishart matrix.
    """
    try:
        alpha = SCENARIOS[scenario]
    except KeyError:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}") from None
    if scenario == "los-dominated":
        a = as_matrix(a, square=True)
        mean_energy = float(np.sum(np.abs(a) ** 2)) / a.shape[0]
        if alpha >= mean_energy:
            log.warning("alpha=%.3g is not small against ||A||_F^2/N=%.3g", alpha, mean_energy)
    return alpha


def sm_recover(x, upd: RankOneUpdate) -> np.ndarray:
    """``X - X b c^H X / (1 + c^H X b)`` using matrix-vector products only."""
    x = as_matrix(x, square=True)
    xb = x @ upd.b
    chx = upd.c.conj() @ x
    denom = 1.0 + chx @ upd.b
    if abs(denom) < SINGULAR_DENOMINATOR:
        raise SingularMatrixError(
            f"|1 + c^H X b| = {abs(denom):.3e}: the rank-one update is singular"
        )
    return x - np.outer(xb, chx) / denom


class ListResult(NamedTuple):
    best: RankOneUpdate
    inverse: np.ndarray
    traces: list
    winner: int


def _batched_gershgorin(mats: np.ndarray) -> np.ndarray:
    gram = np.abs(np.conj(np.swapaxes(mats, -1, -2)) @ mats)
    return 1.0 / gram.sum(axis=-1).max(axis=-1)


def list_regularize(a, alpha: float, iter_budget: int = DEFAULT_MAX_ITER,
                    tol: float = DEFAULT_TOL) -> ListResult:
    """Run one low-complexity candidate per column and keep the best.

    All ``N`` candidates ``A - b_n c_n^H`` are iterated in lockstep with the
    same number of HB updates. Iteration stops once the smallest residual is
    ``<= tol`` or the budget is spent, and the candidate with the smallest
    residual wins. Ties go to the lowest column index. The result does not
    depend on evaluation order.

    Candidates whose residual rises three times running are dropped. If
    every candidate is dropped, :class:`DivergenceError` is raised.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    updates = [lowcomplexity_update(a, alpha, col) for col in range(n)]
    mats = np.stack([u.apply(a) for u in updates])
    omegas = _batched_gershgorin(mats)
    xs = omegas[:, None, None] * np.conj(np.swapaxes(mats, -1, -2))
    eye = np.eye(n, dtype=np.complex128)
    traces = [IterationTrace(tolerance=tol, omega=float(w)) for w in omegas]
    alive = np.ones(n, dtype=bool)
    rises = np.zeros(n, dtype=int)
    floor = NOISE_FLOOR * n
    last = np.full(n, np.inf)
    for t in range(iter_budget + 1):
        r = eye - mats @ xs
        res = np.sum(r.real**2 + r.imag**2, axis=(1, 2))
        bad = ~np.isfinite(res)
        rises = np.where((res > last) & (res > floor), rises + 1, 0)
        for k in np.flatnonzero(alive):
            traces[k].residuals.append(float(res[k]))
            traces[k].iterations = t
        newly_dead = alive & (bad | (rises >= DIVERGENCE_RUN))
        alive &= ~newly_dead
        if not np.any(alive):
            raise DivergenceError(
                f"all {n} list candidates diverged by t={t}",
                residuals=[tr.final_residual for tr in traces],
            )
        last = res
        masked = np.where(alive, res, np.inf)
        best = int(np.argmin(masked))  # first index among ties
        if masked[best] <= tol or t == iter_budget:
            break
        xs = xs + xs @ r
    for k in np.flatnonzero(alive):
        traces[k].converged = traces[k].final_residual <= tol
    winner = best
    inverse = sm_recover(xs[winner], updates[winner])
    return ListResult(updates[winner], inverse, traces, winner)
