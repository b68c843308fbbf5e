"""Linear precoding, 64-QAM and Monte-Carlo symbol-error-rate simulation.

The downlink model is ``y = sqrt(Pt) H W s + v`` with ``v ~ CN(0, N0 I)``
and ``||W||_F = 1``, so ``Pt`` is the total transmit power. Each stream is
detected on its own: ``y_k`` is divided by the effective gain
``sqrt(Pt) (H W)_kk`` and sliced to the nearest constellation point.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ElaaGeometry, SurrogateParams, elaa_channel, rayleigh_channel
from .config import SimulationConfig, config_hash, parse_method
from .matrix import as_matrix
from .methods import InverseResult, invert, scenario_for_channel

QAM_ORDER = 64
_SIDE = 8
_LEVELS = np.arange(-(_SIDE - 1), _SIDE, 2, dtype=float)
QAM_SCALE = math.sqrt(42.0)
TIE_RTOL = 1e-12
WORKERS_ENV = "SMREG_WORKERS"


def _gray(n):
    return n ^ (n >> 1)


# level position p carries bit label _gray(p); _POS[label] inverts it
_LABEL = np.array([_gray(p) for p in range(_SIDE)])
_POS = np.argsort(_LABEL)


def qam_constellation() -> np.ndarray:
    """All 64 points indexed by their 6-bit Gray label.

    The top three bits select the in-phase level and the bottom three the
    quadrature level, so neighbouring points differ in one bit.
    """
    idx = np.arange(QAM_ORDER)
    re = _LEVELS[_POS[idx >> 3]]
    im = _LEVELS[_POS[idx & 7]]
    return (re + 1j * im) / QAM_SCALE


CONSTELLATION = qam_constellation()


def qam_map(indices) -> np.ndarray:
    idx = np.asarray(indices)
    if idx.size and (not np.issubdtype(idx.dtype, np.integer) or idx.min() < 0 or idx.max() >= QAM_ORDER):
        raise ValueError(f"symbol indices must be integers in [0, {QAM_ORDER - 1}]")
    return CONSTELLATION[idx]


def _slice_axis(x: np.ndarray) -> np.ndarray:
    """Bit label of the nearest level along one axis; ties go to the lower label."""
    levels = _LEVELS / QAM_SCALE
    u = x * QAM_SCALE
    lo = np.clip(np.floor((u + (_SIDE - 1)) / 2.0).astype(int), 0, _SIDE - 2)
    d_lo = np.abs(x - levels[lo])
    d_hi = np.abs(levels[lo + 1] - x)
    tie = np.abs(d_lo - d_hi) <= TIE_RTOL * np.maximum(d_lo, d_hi)
    lab_lo, lab_hi = _LABEL[lo], _LABEL[lo + 1]
    pick = np.where(d_lo < d_hi, lab_lo, lab_hi)
    return np.where(tie, np.minimum(lab_lo, lab_hi), pick)


def qam_demap(received) -> np.ndarray:
    """Minimum-distance indices; a point equidistant from several gets the lowest."""
    z = np.asarray(received, dtype=np.complex128)
    return (_slice_axis(z.real) << 3) | _slice_axis(z.imag)


@dataclass
class PrecodeResult:
    W: np.ndarray
    method: str
    inverse_source: str = "direct"
    iterations_used: int = 0


def _normalized(w: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise ValueError("precoder is identically zero")
    return w / norm


def _source(method: str) -> str:
    if method == "exact":
        return "direct"
    if method in ("jacobi", "gs", "ssor"):
        return "preconditioned"
    return method


def zf_precoder(h, a_inv, *, inverse_source: str = "direct", iterations_used: int = 0) -> PrecodeResult:
    """``W = H^H A^-1`` scaled to unit Frobenius norm."""
    h = as_matrix(h)
    w = _normalized(h.conj().T @ as_matrix(a_inv, square=True))
    return PrecodeResult(w, "zf", inverse_source, iterations_used)


def lmmse_precoder(h, n0_over_pt: float, invert_fn=None) -> PrecodeResult:
    """``W = H^H (H H^H + (N0/Pt) I)^-1`` scaled to unit Frobenius norm.

    ``invert_fn`` maps the regularized Wishart matrix to an
    :class:`~smreg.methods.InverseResult`; it defaults to the exact inverse.
    An infinite ratio gives the matched filter ``H^H``.
    """
    if n0_over_pt < 0:
        raise ValueError("N0/Pt must be non-negative")
    h = as_matrix(h)
    if math.isinf(n0_over_pt):
        return PrecodeResult(_normalized(h.conj().T), "lmmse", "direct", 0)
    invert_fn = invert_fn or (lambda m: invert(m, "exact"))
    a = h @ h.conj().T + n0_over_pt * np.eye(h.shape[0])
    res: InverseResult = invert_fn(a)
    w = _normalized(h.conj().T @ res.inverse)
    return PrecodeResult(w, "lmmse", _source(res.method), res.iterations)


def count_symbol_errors(h, w, pt: float, indices: np.ndarray, noise: np.ndarray,
                        n0: float) -> int:
    """Transmit ``indices`` (``N x T``) through one channel use per column."""
    e = h @ w
    s = CONSTELLATION[indices]
    amp = math.sqrt(pt)
    y = amp * (e @ s) + math.sqrt(n0) * noise
    gain = amp * np.diag(e)
    safe = np.where(gain == 0, 1.0, gain)
    z = np.where((gain == 0)[:, None], y, y / safe[:, None])
    return int(np.count_nonzero(qam_demap(z) != indices))


# ---------------------------------------------------------------------------
# Monte-Carlo driver


@dataclass
class SerPoint:
    pt_db: float
    ser: float
    mean_iterations: float
    trials: int
    errors: int = 0
    symbols: int = 0


@dataclass
class SerCurve:
    method: str
    points: list = field(default_factory=list)
    config_hash: str = ""
    trial_cap: int = 0

    def ser_at(self, pt_db: float) -> float:
        for p in self.points:
            if p.pt_db == pt_db:
                return p.ser
        raise KeyError(pt_db)

    def to_csv(self) -> str:
        lines = [
            f"# config_hash={self.config_hash} method={self.method} "
            f"ser=per-stream trial_cap={self.trial_cap}",
            "pt_db,ser,mean_iterations,trials",
        ]
        lines += [f"{p.pt_db!r},{p.ser!r},{p.mean_iterations!r},{p.trials}" for p in self.points]
        return "\n".join(lines) + "\n"


def make_channel(cfg: SimulationConfig, seed: int):
    if cfg.channel == "rayleigh":
        return rayleigh_channel(cfg.N, cfg.M, seed)
    geometry = ElaaGeometry.for_dimensions(
        cfg.M, cfg.N, cfg.antennas_per_user,
        bs_height=cfg.bs_height, user_height=cfg.user_height,
        antenna_spacing=cfg.antenna_spacing, carrier=cfg.carrier, region=tuple(cfg.region),
    )
    params = SurrogateParams(cfg.ple_los, cfg.ple_nlos, cfg.shadowing_db, cfg.los_d0, cfg.rician_k_db)
    return elaa_channel(geometry, cfg.channel.split("-", 1)[1], seed, params)


def method_invert(cfg: SimulationConfig, token: str, a: np.ndarray) -> InverseResult:
    """Invert ``a`` with the method named by a config token such as ``"hb@16"``."""
    name, count = parse_method(token)
    scenario = cfg.scenario if cfg.scenario != "auto" else scenario_for_channel(cfg.channel)
    return invert(
        a, name, tol=cfg.tol, max_iter=cfg.max_iter, iterations=count, omega=cfg.omega,
        alpha=cfg.alpha, scenario=scenario, xi=cfg.xi, smr_mode=cfg.smr_mode,
        column=cfg.smr_column,
    )


def _pt_linear(pt_db: float) -> float:
    return 0.0 if pt_db == -math.inf else 10.0 ** (pt_db / 10.0)


def run_trial(cfg: SimulationConfig, trial: int):
    """Errors and iteration counts for every (method, power) pair of one trial.

    The channel uses seed ``base_seed + trial``; symbols and noise come from
    a separate stream keyed on the same seed, shared by all methods.
    """
    seed = cfg.base_seed + trial
    h = make_channel(cfg, seed).H
    rng = np.random.default_rng([seed, 1])
    shape = (cfg.N, cfg.symbols_per_trial)
    indices = rng.integers(0, QAM_ORDER, shape)
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    a = h @ h.conj().T
    errors = np.zeros((len(cfg.methods), len(cfg.power_grid_db)), dtype=np.int64)
    iters = np.zeros_like(errors)
    for i, token in enumerate(cfg.methods):
        zf = None
        for j, pt_db in enumerate(cfg.power_grid_db):
            pt = _pt_linear(pt_db)
            if cfg.precoder == "zf":
                if zf is None:
                    res = method_invert(cfg, token, a)
                    zf = zf_precoder(h, res.inverse, inverse_source=_source(res.method),
                                     iterations_used=res.iterations)
                pre = zf
            else:
                ratio = math.inf if pt == 0.0 else cfg.n0 / pt
                pre = lmmse_precoder(h, ratio, lambda m: method_invert(cfg, token, m))
            errors[i, j] = count_symbol_errors(h, pre.W, pt, indices, noise, cfg.n0)
            iters[i, j] = pre.iterations_used
    return errors, iters


def _workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def _trial_batches(cfg: SimulationConfig, workers: int):
    """Yield per-trial results in trial order, computing ``workers`` at a time."""
    if workers == 1:
        for t in range(cfg.max_trials):
            yield run_trial(cfg, t)
        return
    with ProcessPoolExecutor(workers) as pool:
        for start in range(0, cfg.max_trials, workers):
            stop = min(start + workers, cfg.max_trials)
            yield from pool.map(run_trial, [cfg] * (stop - start), range(start, stop))


def simulate_ser(cfg: SimulationConfig, workers: int | None = None) -> dict:
    """SER curve per method over ``cfg.power_grid_db``.

    A point keeps accumulating trials until it has seen ``trials`` trials and
    ``min_errors`` symbol errors, or ``max_trials`` trials. Results are folded
    in trial order, so they do not depend on the worker count.
    """
    n_m, n_p = len(cfg.methods), len(cfg.power_grid_db)
    errors = np.zeros((n_m, n_p), dtype=np.int64)
    iters = np.zeros((n_m, n_p), dtype=np.int64)
    trials = np.zeros((n_m, n_p), dtype=np.int64)
    active = np.ones((n_m, n_p), dtype=bool)
    for err, it in _trial_batches(cfg, _workers(workers)):
        if not active.any():
            break
        errors += np.where(active, err, 0)
        iters += np.where(active, it, 0)
        trials += active
        done = (trials >= cfg.trials) & (errors >= cfg.min_errors)
        active &= ~(done | (trials >= cfg.max_trials))
    digest = config_hash(cfg)
    per_trial = cfg.N * cfg.symbols_per_trial
    order = np.argsort(cfg.power_grid_db, kind="stable")
    curves = {}
    for i, token in enumerate(cfg.methods):
        curve = SerCurve(token, config_hash=digest, trial_cap=cfg.max_trials)
        for j in order:
            n = int(trials[i, j])
            curve.points.append(SerPoint(
                float(cfg.power_grid_db[j]), float(errors[i, j] / (n * per_trial)),
                float(iters[i, j] / n), n, int(errors[i, j]), n * per_trial,
            ))
        curves[token] = curve
    return curves
