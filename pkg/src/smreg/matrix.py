"""Dense complex matrix helpers and the exact decompositions used as oracles.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; :func:`as_matrix`
is the single entry point that validates shape and finiteness.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConvergenceError,
    NotHermitianError,
    ShapeError,
    SingularMatrixError,
)

HERMITIAN_RTOL = 1e-9
JACOBI_RTOL = 1e-12
MAX_SWEEPS = 100


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array.

    1-D input is promoted to a column vector.
    """
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    if square and m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got {m.shape[0]}x{m.shape[1]}")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with a descriptive dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}: "
            f"inner dimensions {a.shape[1]} != {b.shape[0]}"
        )
    return a @ b


def matmul_h(a, b) -> np.ndarray:
    """Conjugate-transpose product ``a^H @ b``."""
    a = as_matrix(a)
    return matmul(a.conj().T, b)


def frobenius_norm_sq(a) -> float:
    """Sum of squared magnitudes of all entries."""
    a = np.asarray(a)
    return float(np.sum(a.real**2 + a.imag**2))


def hermitian_defect(a: np.ndarray) -> float:
    """``||a - a^H||_F`` relative to ``||a||_F`` (0 for the zero matrix)."""
    scale = np.sqrt(frobenius_norm_sq(a))
    if scale == 0.0:
        return 0.0
    return float(np.sqrt(frobenius_norm_sq(a - a.conj().T)) / scale)


def is_hermitian(a, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and hermitian_defect(a) <= rtol


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition ``A = U diag(values) U^H`` of a Hermitian matrix.

    ``values`` is non-increasing, so ``values[0]`` is the largest and
    ``values[-1]`` the smallest eigenvalue; ``basis[:, n]`` is the matching
    unit-norm eigenvector.
    """

    values: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        basis = np.asarray(self.basis, dtype=np.complex128)
        if values.ndim != 1 or basis.shape != (values.size, values.size):
            raise ShapeError("basis must be N x N for N values")
        if np.any(np.diff(values) > 0):
            raise ValueError("spectrum values must be non-increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "basis", basis)

    @property
    def size(self) -> int:
        return self.values.size

    def vector(self, n: int) -> np.ndarray:
        return self.basis[:, n]

    def reconstruct(self) -> np.ndarray:
        u = self.basis
        return (u * self.values) @ u.conj().T

    def singular_values(self) -> np.ndarray:
        """Magnitudes of the eigenvalues, sorted non-increasing."""
        return np.sort(np.abs(self.values))[::-1]


def _round_robin(n: int):
    """Pairings covering every (p, q), p < q, once per sweep in n-1 (or n) rounds.

    Pairs within a round are disjoint, so their rotations commute and can be
    applied together.
    """
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < 0 or q < 0:
                continue
            ps.append(min(p, q))
            qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi(a: np.ndarray, tol: float, max_sweeps: int):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=np.complex128)
    scale = np.sqrt(frobenius_norm_sq(a))
    if n == 1 or scale == 0.0:
        return a.diagonal().real.copy(), v
    rounds = _round_robin(n)
    diag_mask = np.eye(n, dtype=bool)
    off = 0.0
    for _ in range(max_sweeps):
        off = np.sqrt(frobenius_norm_sq(a[~diag_mask]))
        if off < tol * scale:
            return a.diagonal().real.copy(), v
        for p, q in rounds:
            apq = a[p, q]
            r = np.abs(apq)
            active = r > 0.0
            if not np.any(active):
                continue
            phase = np.where(active, apq / np.where(active, r, 1.0), 1.0)
            app = a[p, p].real
            aqq = a[q, q].real
            tau = np.where(active, (aqq - app) / (2.0 * np.where(active, r, 1.0)), 0.0)
            sign = np.where(tau >= 0.0, 1.0, -1.0)
            t = np.where(active, sign / (np.abs(tau) + np.sqrt(1.0 + tau * tau)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # unitary block [[g_pp, g_pq], [g_qp, g_qq]] = diag(1, conj(phase)) @ [[c, s], [-s, c]]
            g_pp = c
            g_pq = s
            g_qp = -s * np.conj(phase)
            g_qq = c * np.conj(phase)
            cols_p = a[:, p].copy()
            cols_q = a[:, q]
            a[:, p] = cols_p * g_pp + cols_q * g_qp
            a[:, q] = cols_p * g_pq + cols_q * g_qq
            rows_p = a[p, :].copy()
            rows_q = a[q, :]
            a[p, :] = np.conj(g_pp)[:, None] * rows_p + np.conj(g_qp)[:, None] * rows_q
            a[q, :] = np.conj(g_pq)[:, None] * rows_p + np.conj(g_qq)[:, None] * rows_q
            a[p, q] = 0.0
            a[q, p] = 0.0
            a[p, p] = a[p, p].real
            a[q, q] = a[q, q].real
            vp = v[:, p].copy()
            vq = v[:, q]
            v[:, p] = vp * g_pp + vq * g_qp
            v[:, q] = vp * g_pq + vq * g_qq
    raise ConvergenceError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
        f"(off-diagonal norm {off:.3e}, target {tol * scale:.3e})",
        residual=off,
    )


def hermitian_eig(a, *, method: str = "jacobi", tol: float = JACOBI_RTOL,
                  max_sweeps: int = MAX_SWEEPS) -> Spectrum:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues non-increasing.

    ``method="jacobi"`` (default) runs cyclic two-sided complex Jacobi
    rotations until the off-diagonal Frobenius norm drops below
    ``tol * ||a||_F``. ``method="lapack"`` delegates to
    :func:`numpy.linalg.eigh` and exists for large Monte-Carlo statistics
    where the rotation sweep is needlessly slow.

    Raises
    ------
    NotHermitianError
        If ``||a - a^H||_F > 1e-9 ||a||_F``.
    ConvergenceError
        If the sweep budget runs out; ``residual`` holds the off-diagonal norm.
    """
    a = as_matrix(a, square=True)
    defect = hermitian_defect(a)
    if defect > HERMITIAN_RTOL:
        raise NotHermitianError(f"matrix is not Hermitian (relative defect {defect:.3e})")
    a = 0.5 * (a + a.conj().T)
    if method == "jacobi":
        values, vectors = _jacobi(a, tol, max_sweeps)
    elif method == "lapack":
        values, vectors = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-values, kind="stable")
    return Spectrum(values[order], vectors[:, order])


def singular_values(a, *, method: str = "jacobi") -> np.ndarray:
    """Singular values, non-increasing, computed through :func:`hermitian_eig`.

    Hermitian input uses ``|eig(a)|``; anything else uses ``sqrt(eig(a^H a))``.
    """
    a = as_matrix(a)
    if is_hermitian(a):
        return hermitian_eig(a, method=method).singular_values()
    gram = a.conj().T @ a
    vals = hermitian_eig(gram, method=method).values
    return np.sqrt(np.clip(vals, 0.0, None))


def kappa(a, *, method: str = "jacobi") -> float:
    """Singular-value condition number; ``inf`` for singular input."""
    sv = singular_values(a, method=method)
    if sv[-1] <= 0.0:
        return float("inf")
    return float(sv[0] / sv[-1])


def direct_inverse(a) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot falls below
    ``1e-14 * ||a||_F``.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    threshold = 1e-14 * np.sqrt(frobenius_norm_sq(a))
    aug = np.hstack([a, np.eye(n, dtype=np.complex128)])
    for k in range(n):
        pivot = k + int(np.argmax(np.abs(aug[k:, k])))
        if np.abs(aug[pivot, k]) <= threshold:
            raise SingularMatrixError(
                f"pivot {np.abs(aug[pivot, k]):.3e} in column {k} below {threshold:.3e}"
            )
        if pivot != k:
            aug[[k, pivot]] = aug[[pivot, k]]
        aug[k] /= aug[k, k]
        factors = aug[:, k].copy()
        factors[k] = 0.0
        aug -= np.outer(factors, aug[k])
    return aug[:, n:]


def write_matrix(path, a) -> None:
    """Write ``a`` in the text format: ``rows cols`` then ``re im`` pairs, row-major."""
    a = as_matrix(a)
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    for row in a:
        lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def parse_matrix(text: str) -> np.ndarray:
    tokens = text.split()
    if len(tokens) < 2:
        raise ValueError("matrix text needs a 'rows cols' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise ValueError(f"bad matrix header {tokens[:2]!r}") from exc
    body = tokens[2:]
    if rows < 1 or cols < 1 or len(body) != 2 * rows * cols:
        raise ValueError(
            f"expected {2 * rows * cols} numbers for a {rows}x{cols} matrix, got {len(body)}"
        )
    vals = np.array(body, dtype=float).reshape(rows * cols, 2)
    return as_matrix((vals[:, 0] + 1j * vals[:, 1]).reshape(rows, cols))


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())
