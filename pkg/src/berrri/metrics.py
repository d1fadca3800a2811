"""Evaluation harness: reconstruction error, precision/recall against the
planted mask, confidence intervals, and wall-clock timing ladders.

The precision/recall machinery is method-agnostic: any Q x P score matrix can
be evaluated against a binary truth mask, including score files produced by
external methods.
"""

from dataclasses import dataclass
from time import perf_counter
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import engine
from .errors import ValidationError
from .simulate import SimConfig, simulate
from .types import Dataset, Hyperparameters

__all__ = [
    "PRCurve",
    "rss",
    "precision_recall",
    "confidence_interval",
    "TimingRow",
    "timing_ladder",
    "per_sweep_seconds",
]

MAX_PR_THRESHOLDS = 500


def rss(y_true, y_pred) -> float:
    """Residual sum of squares over all matrix entries."""
    a = np.asarray(y_true, dtype=np.float64)
    b = np.asarray(y_pred, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(((a - b) ** 2).sum())


@dataclass(frozen=True)
class PRCurve:
    """Precision/recall at a strictly decreasing list of score thresholds."""

    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    auc: float

    def __post_init__(self):
        t, pr, rc = (np.asarray(a, dtype=np.float64) for a in (self.thresholds, self.precision, self.recall))
        if not (t.shape == pr.shape == rc.shape) or t.ndim != 1 or t.size == 0:
            raise ValidationError("curve arrays must be equal-length non-empty vectors")
        if t.size > 1 and not (np.diff(t) < 0).all():
            raise ValidationError("thresholds must be strictly decreasing")
        if ((pr < 0) | (pr > 1)).any() or ((rc < 0) | (rc > 1)).any():
            raise ValidationError("precision and recall must lie in [0, 1]")
        if t.size > 1 and (np.diff(rc) < 0).any():
            raise ValidationError("recall must be non-increasing in the threshold")
        for name, arr in (("thresholds", t), ("precision", pr), ("recall", rc)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def precision_at_recall(self, level: float) -> Optional[float]:
        """Precision at the first (largest) threshold reaching the recall level."""
        hit = np.nonzero(self.recall >= level)[0]
        return float(self.precision[hit[0]]) if hit.size else None

    def rows(self):
        return list(zip(self.thresholds, self.precision, self.recall))


def precision_recall(scores, mask, thresholds=None) -> PRCurve:
    """PR curve of a score matrix against a binary truth mask.

    Default thresholds are the unique observed scores in descending order,
    subsampled to at most 500 points.  Precision with zero predictions is 1.
    """
    s = np.asarray(scores, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if s.shape != m.shape:
        raise ValidationError(f"shape mismatch: scores {s.shape} vs mask {m.shape}")
    positives = int(m.sum())
    if positives == 0:
        raise ValidationError("mask has no positive entries")

    if thresholds is None:
        t = np.unique(s)[::-1]
        if t.size > MAX_PR_THRESHOLDS:
            idx = np.unique(np.linspace(0, t.size - 1, MAX_PR_THRESHOLDS).round().astype(int))
            t = t[idx]
    else:
        t = np.asarray(thresholds, dtype=np.float64)
        if t.size > 1 and not (np.diff(t) < 0).all():
            raise ValidationError("thresholds must be strictly decreasing")

    precision = np.empty(t.size)
    recall = np.empty(t.size)
    for i, thr in enumerate(t):
        predicted = s >= thr
        tp = int((predicted & m).sum())
        n_pred = int(predicted.sum())
        precision[i] = tp / n_pred if n_pred else 1.0
        recall[i] = tp / positives
    order = np.argsort(recall)
    auc = float(np.trapezoid(precision[order], recall[order]))
    return PRCurve(thresholds=t, precision=precision, recall=recall, auc=auc)


def confidence_interval(samples: Sequence[float], level: float = 0.95):
    """Student-t confidence interval for the mean: mean +/- t * sd / sqrt(n)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValidationError(f"need at least 2 samples, got {x.size}")
    if not 0.0 < level < 1.0:
        raise ValidationError(f"level must lie in (0, 1), got {level}")
    mean = float(x.mean())
    half = float(stats.t.ppf(0.5 + level / 2.0, x.size - 1) * x.std(ddof=1) / np.sqrt(x.size))
    return mean - half, mean + half


@dataclass(frozen=True)
class TimingRow:
    n_snps: int
    mean_seconds: float
    sd_seconds: float
    per_sweep_seconds: float


def per_sweep_seconds(
    data: Dataset,
    hp: Hyperparameters,
    n_sweeps: int = 5,
    backend: Optional[str] = None,
    warmup: int = 2,
) -> float:
    """Average wall-clock seconds per coordinate sweep on the given data."""
    state = engine.initial_state(data, hp)
    ws = engine._Workspace(data)
    for _ in range(warmup):
        engine.sweep(state, data, hp, backend=backend, workspace=ws)
    start = perf_counter()
    for _ in range(n_sweeps):
        engine.sweep(state, data, hp, backend=backend, workspace=ws)
    return (perf_counter() - start) / n_sweeps


def timing_ladder(
    q_ladder: Sequence[int],
    hp: Hyperparameters,
    repetitions: int = 3,
    *,
    n_individuals: int = 100,
    n_traits: int = 25,
    k_true: int = 5,
    sim_seed: int = 0,
    backend: Optional[str] = None,
):
    """Wall-clock seconds per full fit at increasing SNP counts.

    Returns one TimingRow per ladder entry; with a single repetition the sd is
    reported as 0.  Runs are strictly serial to avoid contention skew.
    """
    if len(q_ladder) == 0:
        raise ValidationError("q_ladder must be non-empty")
    if repetitions < 1:
        raise ValidationError(f"repetitions must be >= 1, got {repetitions}")
    rows = []
    for q in q_ladder:
        cfg = SimConfig(
            n_individuals=n_individuals,
            n_snps=int(q),
            n_traits=n_traits,
            k_true=min(k_true, int(q)),
            seed=sim_seed,
        )
        data, _ = simulate(cfg)
        times = []
        for _ in range(repetitions):
            start = perf_counter()
            engine.fit(data, hp, backend=backend)
            times.append(perf_counter() - start)
        times = np.asarray(times)
        sd = float(times.std(ddof=1)) if times.size > 1 else 0.0
        rows.append(
            TimingRow(
                n_snps=int(q),
                mean_seconds=float(times.mean()),
                sd_seconds=sd,
                per_sweep_seconds=per_sweep_seconds(data, hp, backend=backend),
            )
        )
    return rows
