"""SNP-trait association scores, permutation FDR, and a univariate baseline.

The score for pair (q, p) is the magnitude of the posterior-mean
reconstruction coefficient (E[Z] @ E[A])[q, p]; the signed matrix is kept for
effect-direction reporting.  Significance is calibrated by refitting on
row-shuffled trait matrices and pooling the resulting scores as a global null.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .engine import fit
from .errors import ValidationError
from .streams import child_rng, child_seed_sequence
from .types import Dataset, Hyperparameters, VariationalState

__all__ = [
    "AssociationScores",
    "vmap",
    "vmap_signed",
    "permute_labels",
    "fdr_threshold",
    "run_permutation_fdr",
    "univariate_bf",
]

logger = logging.getLogger("berrri")


@dataclass(frozen=True)
class AssociationScores:
    """Q x P association scores plus permutation-FDR calibration metadata.

    vmap holds the score magnitudes, signed the raw posterior-mean products.
    threshold is None when no score reaches the FDR target.
    """

    vmap: np.ndarray
    signed: np.ndarray
    fdr_target: float
    n_permutations: int = 0
    threshold: Optional[float] = None
    null_scores: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.vmap.shape != self.signed.shape:
            raise ValidationError(
                f"score shapes differ: {self.vmap.shape} vs {self.signed.shape}"
            )
        if not 0.0 < self.fdr_target < 1.0:
            raise ValidationError(f"fdr_target must lie in (0, 1), got {self.fdr_target}")

    def discoveries(self) -> np.ndarray:
        """Boolean Q x P matrix: scores at or above the threshold."""
        if self.threshold is None:
            return np.zeros_like(self.vmap, dtype=bool)
        return self.vmap >= self.threshold


def vmap_signed(state: VariationalState) -> np.ndarray:
    """Posterior-mean reconstruction coefficients E[Z] @ E[A], with sign."""
    return state.eta @ state.phi


def vmap(state: VariationalState) -> np.ndarray:
    """Association score magnitudes |E[Z] @ E[A]| per SNP-trait pair."""
    return np.abs(vmap_signed(state))


def permute_labels(data: Dataset, seed) -> Dataset:
    """Shuffle the sample labels of the trait matrix (X stays untouched)."""
    if data.n_individuals < 2:
        raise ValidationError("need at least 2 individuals to permute")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    perm = rng.permutation(data.n_individuals)
    return Dataset(
        X=data.X,
        Y=data.Y[perm],
        snp_ids=data.snp_ids,
        trait_ids=data.trait_ids,
        snp_positions=data.snp_positions,
        trait_positions=data.trait_positions,
    )


def fdr_threshold(
    real_scores,
    null_scores,
    fdr_target: float,
    n_real_tests: Optional[int] = None,
    n_null_tests: Optional[int] = None,
) -> Optional[float]:
    """Smallest observed real score usable as a significance cutoff.

    The FDR estimate at cutoff t is (#null >= t / #real >= t) scaled by the
    ratio of real to null test counts.  The returned threshold is the smallest
    real score such that the estimate stays at or below the target for it and
    every larger candidate, so the declared set is stable under raising the
    cutoff; None when no candidate qualifies.
    """
    real = np.asarray(real_scores, dtype=np.float64).ravel()
    null = np.sort(np.asarray(null_scores, dtype=np.float64).ravel())
    if real.size == 0 or null.size == 0:
        raise ValidationError("both real and null score sets must be non-empty")
    if not 0.0 < fdr_target < 1.0:
        raise ValidationError(f"fdr_target must lie in (0, 1), got {fdr_target}")
    n_real = real.size if n_real_tests is None else n_real_tests
    n_null = null.size if n_null_tests is None else n_null_tests
    scale = n_real / n_null

    real_sorted = np.sort(real)
    candidates = np.unique(real)[::-1]                 # descending
    n_ge_real = real.size - np.searchsorted(real_sorted, candidates, side="left")
    n_ge_null = null.size - np.searchsorted(null, candidates, side="left")

    threshold = None
    worst = 0.0                                        # max estimate over cutoffs >= t
    for t, ge_real, ge_null in zip(candidates, n_ge_real, n_ge_null):
        if ge_real == 0:                               # estimate undefined here
            continue
        worst = max(worst, ge_null / ge_real * scale)
        if worst <= fdr_target:
            threshold = float(t)
        else:
            break
    return threshold


def run_permutation_fdr(
    data: Dataset,
    hp: Hyperparameters,
    fdr_target: float = 0.1,
    n_permutations: int = 10,
    backend: Optional[str] = None,
):
    """Fit on real data, refit on permuted data, pool a global null, threshold.

    Returns (AssociationScores, VariationalState, FitReport) for the real fit.
    Permutation fits reuse the same hyperparameters with per-permutation
    derived seeds; a non-converged permutation fit is kept (with a warning)
    since its scores are still valid null draws.
    """
    if n_permutations < 1:
        raise ValidationError(f"n_permutations must be >= 1, got {n_permutations}")
    state, report = fit(data, hp, backend=backend)
    signed = vmap_signed(state)
    scores = np.abs(signed)

    null_parts = []
    for j in range(n_permutations):
        shuffled = permute_labels(data, child_rng(hp.seed, "fdr-permutation", j))
        perm_seed = int(child_seed_sequence(hp.seed, "fdr-fit", j).generate_state(1)[0])
        perm_state, perm_report = fit(shuffled, replace(hp, seed=perm_seed), backend=backend)
        if not perm_report.converged:
            logger.warning(
                "permutation %d did not converge in %d iterations; "
                "its scores are kept as null draws",
                j,
                perm_report.iterations,
            )
        null_parts.append(vmap(perm_state).ravel())
    null = np.concatenate(null_parts)

    threshold = fdr_threshold(
        scores.ravel(),
        null,
        fdr_target,
        n_real_tests=scores.size,
        n_null_tests=null.size,
    )
    result = AssociationScores(
        vmap=scores,
        signed=signed,
        fdr_target=fdr_target,
        n_permutations=n_permutations,
        threshold=threshold,
        null_scores=null,
    )
    return result, state, report


def univariate_bf(
    data: Dataset,
    q: int,
    p: int,
    prior_effect_sd: float = 0.5,
    sigma2: float = 1.0,
) -> Optional[float]:
    """log10 Bayes factor of a single-SNP linear model against intercept-only.

    Conjugate zero-mean Gaussian effect prior with the given sd and a shared
    noise variance; the intercept is removed by centering, which is common to
    both models.  Returns None for a constant genotype column (undefined).
    """
    if prior_effect_sd <= 0:
        raise ValidationError(f"prior_effect_sd must be positive, got {prior_effect_sd}")
    x = data.X[:, q]
    if np.all(x == x[0]):
        return None
    y = data.Y[:, p]
    xc = x - x.mean()
    yc = y - y.mean()
    xx = float(xc @ xc)
    xy = float(xc @ yc)
    g = prior_effect_sd**2 * xx / sigma2
    log_bf = -0.5 * math.log1p(g) + (g / (1.0 + g)) * xy**2 / (2.0 * sigma2 * xx)
    return log_bf / math.log(10.0)
