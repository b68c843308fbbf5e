"""Experiment orchestration: SER sweeps, iteration comparisons, artifacts on disk."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import SimulationConfig, config_hash, parse_method, serialize_config
from .errors import DivergenceError
from .precoding import make_channel, method_invert, simulate_ser

log = logging.getLogger(__name__)

BOOTSTRAP_SAMPLES = 2000


def _tol_token(token: str) -> str:
    """Drop any ``@k`` suffix so the method runs to the configured tolerance."""
    return parse_method(token)[0]


def _slug(token: str) -> str:
    return token.replace("@", "_at")


def iterations_to_tol(cfg: SimulationConfig, token: str, a: np.ndarray) -> int | None:
    """HB updates needed to reach ``cfg.tol``; ``None`` on divergence or budget exhaustion."""
    try:
        res = method_invert(cfg, _tol_token(token), a)
    except DivergenceError as exc:
        log.info("%s diverged: %s", token, exc)
        return None
    return res.iterations if res.converged else None


@dataclass
class IterationReport:
    reference: str
    candidate: str
    reference_iterations: list = field(default_factory=list)
    candidate_iterations: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    reduction_pct: float = 0.0
    ci_low: float = 0.0
    ci_high: float = 0.0

    @property
    def realizations(self) -> int:
        return len(self.reference_iterations)

    def summary(self) -> str:
        ref = np.mean(self.reference_iterations) if self.reference_iterations else float("nan")
        cand = np.mean(self.candidate_iterations) if self.candidate_iterations else float("nan")
        return (
            f"{self.candidate} vs {self.reference}: mean iterations {cand:.2f} vs {ref:.2f}, "
            f"reduction {self.reduction_pct:.1f}% "
            f"(95% CI {self.ci_low:.1f}..{self.ci_high:.1f}), "
            f"{self.realizations} realizations, {len(self.excluded)} excluded"
        )


def reduction_percent(reference, candidate) -> float:
    """``100 (1 - mean(candidate) / mean(reference))``."""
    return 100.0 * (1.0 - np.mean(candidate) / np.mean(reference))


def bootstrap_ci(reference, candidate, seed: int, samples: int = BOOTSTRAP_SAMPLES):
    """Percentile 95% interval of :func:`reduction_percent` over paired resamples."""
    ref = np.asarray(reference, dtype=float)
    cand = np.asarray(candidate, dtype=float)
    rng = np.random.default_rng([seed, 2])
    idx = rng.integers(0, ref.size, (samples, ref.size))
    stats = 100.0 * (1.0 - cand[idx].mean(axis=1) / ref[idx].mean(axis=1))
    lo, hi = np.percentile(stats, [2.5, 97.5])
    return float(lo), float(hi)


def compare_iterations(cfg: SimulationConfig, reference: str, candidate: str,
                       realizations: int | None = None) -> IterationReport:
    """Paired iterations-to-tol over channel seeds ``base_seed .. base_seed + R - 1``.

    A realization on which either method diverges or exhausts ``max_iter``
    is excluded and recorded in ``excluded`` as ``(trial, reason)``.
    """
    count = cfg.trials if realizations is None else realizations
    report = IterationReport(reference, candidate)
    for trial in range(count):
        h = make_channel(cfg, cfg.base_seed + trial).H
        a = h @ h.conj().T
        it_ref = iterations_to_tol(cfg, reference, a)
        it_cand = it_ref if candidate == reference else iterations_to_tol(cfg, candidate, a)
        if it_ref is None or it_cand is None:
            who = [m for m, it in ((reference, it_ref), (candidate, it_cand)) if it is None]
            report.excluded.append((trial, "did not converge: " + ", ".join(who)))
            continue
        report.reference_iterations.append(it_ref)
        report.candidate_iterations.append(it_cand)
    if report.reference_iterations:
        report.reduction_pct = reduction_percent(report.reference_iterations,
                                                 report.candidate_iterations)
        report.ci_low, report.ci_high = bootstrap_ci(
            report.reference_iterations, report.candidate_iterations, cfg.base_seed)
    return report


def _alpha_dependent(token: str) -> bool:
    return parse_method(token)[0] in ("smr", "smr-list")


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def run_experiment(cfg: SimulationConfig, outdir, *, sweep_alpha=None, workers=None) -> dict:
    """Write SER CSVs, one trace CSV per method and ``summary.json`` to ``outdir``.

    With ``sweep_alpha``, methods that use ``alpha`` are simulated once per
    value and their files carry an ``_alpha<value>`` suffix.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)
    runs = [("", cfg)]
    if sweep_alpha:
        fixed = tuple(m for m in cfg.methods if not _alpha_dependent(m))
        swept = tuple(m for m in cfg.methods if _alpha_dependent(m))
        runs = [("", cfg.with_overrides(methods=fixed))] if fixed else []
        runs += [(f"_alpha{a!r}", cfg.with_overrides(methods=swept, alpha=float(a)))
                 for a in sweep_alpha]
    h = make_channel(cfg, cfg.base_seed).H
    a = h @ h.conj().T
    files, curves_out = [], {}
    for suffix, sub in runs:
        for token, curve in simulate_ser(sub, workers).items():
            curve.config_hash = digest
            name = f"ser_{_slug(token)}{suffix}.csv"
            _write(out / name, curve.to_csv())
            files.append(name)
            curves_out[token + suffix] = [asdict(p) for p in curve.points]
            if parse_method(token)[0] == "exact":
                continue
            res = method_invert(sub, token, a)
            trace_name = f"trace_{_slug(token)}{suffix}.csv"
            _write(out / trace_name, f"# config_hash={digest} method={token} trial=0\n"
                   + res.trace.to_csv())
            files.append(trace_name)
    summary = {
        "config_hash": digest,
        "base_seed": cfg.base_seed,
        "config": serialize_config(cfg),
        "sweep_alpha": list(sweep_alpha) if sweep_alpha else None,
        "ser_averaging": "per-stream",
        "files": files,
        "curves": curves_out,
    }
    _write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def crossing_db(curve, target: float) -> float:
    """Transmit power where ``curve`` first falls to ``target``, log-linearly interpolated.

    Returns ``inf`` if the curve never reaches ``target`` on the grid.
    """
    pts = curve.points
    for prev, cur in zip(pts, pts[1:]):
        if prev.ser > target >= cur.ser:
            if cur.ser <= 0.0:
                return cur.pt_db
            lp, lc, lt = np.log10(prev.ser), np.log10(cur.ser), np.log10(target)
            return prev.pt_db + (lp - lt) / (lp - lc) * (cur.pt_db - prev.pt_db)
    if pts and pts[0].ser <= target:
        return pts[0].pt_db
    return float("inf")
