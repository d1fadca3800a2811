"""Core domain types: data container, hyperparameters, and variational state.

The generative model approximates an N x P trait matrix Y as X @ Z @ A plus
Gaussian noise, where X is an N x Q minor-allele dosage matrix, Z is a Q x K
binary SNP-inclusion matrix with a truncated Indian-Buffet-Process prior
(independent Beta-Bernoulli columns), and A is a K x P effect-size matrix with
a per-entry ARD (inverse-gamma variance) prior.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ValidationError

__all__ = [
    "Dataset",
    "Hyperparameters",
    "VariationalState",
    "PlantedTruth",
    "ModelPoint",
    "GENOTYPE_VALUES",
]

GENOTYPE_VALUES = (0.0, 1.0, 2.0)


def _as_float_matrix(arr, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {out.shape}")
    return out


@dataclass(frozen=True)
class Dataset:
    """Paired genotype and trait matrices with column labels.

    X holds minor-allele dosages in {0, 1, 2} for N individuals x Q SNPs; Y
    holds real-valued traits for the same N individuals x P traits.  Optional
    base-pair positions enable SNP-trait distance reporting.  Instances are
    immutable after construction and safe to share across threads.
    """

    X: np.ndarray
    Y: np.ndarray
    snp_ids: tuple = ()
    trait_ids: tuple = ()
    snp_positions: Optional[np.ndarray] = None
    trait_positions: Optional[np.ndarray] = None

    def __post_init__(self):
        X = _as_float_matrix(self.X, "X")
        Y = _as_float_matrix(self.Y, "Y")
        if X.shape[0] != Y.shape[0]:
            raise ValidationError(
                f"X has {X.shape[0]} rows but Y has {Y.shape[0]} rows; "
                "genotype and trait matrices must cover the same individuals"
            )
        bad = ~np.isin(X, GENOTYPE_VALUES)
        if bad.any():
            n, q = np.argwhere(bad)[0]
            raise ValidationError(
                f"genotype value {X[n, q]!r} at individual {n}, SNP {q} "
                "is not a dosage in {0, 1, 2}"
            )
        if not np.isfinite(Y).all():
            n, p = np.argwhere(~np.isfinite(Y))[0]
            raise ValidationError(f"non-finite trait value at individual {n}, trait {p}")

        snp_ids = tuple(self.snp_ids) if len(self.snp_ids) else tuple(f"snp{q}" for q in range(X.shape[1]))
        trait_ids = tuple(self.trait_ids) if len(self.trait_ids) else tuple(f"trait{p}" for p in range(Y.shape[1]))
        if len(snp_ids) != X.shape[1]:
            raise ValidationError(f"{len(snp_ids)} SNP labels for {X.shape[1]} genotype columns")
        if len(trait_ids) != Y.shape[1]:
            raise ValidationError(f"{len(trait_ids)} trait labels for {Y.shape[1]} trait columns")

        snp_pos = None if self.snp_positions is None else np.asarray(self.snp_positions, dtype=np.float64)
        trait_pos = None if self.trait_positions is None else np.asarray(self.trait_positions, dtype=np.float64)
        if snp_pos is not None and snp_pos.shape != (X.shape[1],):
            raise ValidationError(f"snp_positions has shape {snp_pos.shape}, expected ({X.shape[1]},)")
        if trait_pos is not None and trait_pos.shape != (Y.shape[1],):
            raise ValidationError(f"trait_positions has shape {trait_pos.shape}, expected ({Y.shape[1]},)")

        for name, arr in (("X", X), ("Y", Y), ("snp_positions", snp_pos), ("trait_positions", trait_pos)):
            if arr is not None:
                arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "snp_ids", snp_ids)
        object.__setattr__(self, "trait_ids", trait_ids)

    @property
    def n_individuals(self) -> int:
        return self.X.shape[0]

    @property
    def n_snps(self) -> int:
        return self.X.shape[1]

    @property
    def n_traits(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class Hyperparameters:
    """Fixed model and fitting configuration.

    k_max=None resolves to min(Q, 50) for the dataset at hand.  sigma2 is a
    single noise variance shared by all individuals.  c and d are the
    inverse-gamma shape/rate of the ARD prior on effect-size variances.
    """

    # c = d = 1 keeps the ARD prior weakly informative while letting unused
    # factors settle quickly: the variance/rate pair of an empty factor
    # contracts toward its fixed point at ratio 0.5 / (c + 0.5) per sweep, so
    # a much smaller c (e.g. 1e-3) would leave unused factors drifting for
    # thousands of iterations and the convergence monitor never passes.
    alpha: float = 1.0
    sigma2: float = 1.0
    c: float = 1.0
    d: float = 1.0
    k_max: Optional[int] = None
    p_thresh: float = 0.05
    burn_in: int = 100
    check_interval: int = 100
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha", "sigma2", "c", "d"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {v}")
        if self.k_max is not None and self.k_max < 1:
            raise ValidationError(f"k_max must be >= 1, got {self.k_max}")
        if not 0 < self.p_thresh < 1:
            raise ValidationError(f"p_thresh must lie in (0, 1), got {self.p_thresh}")
        if self.burn_in < 0:
            raise ValidationError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.check_interval < 1:
            raise ValidationError(f"check_interval must be >= 1, got {self.check_interval}")
        if not self.burn_in < self.max_iter:
            raise ValidationError(
                f"burn_in ({self.burn_in}) must be smaller than max_iter ({self.max_iter})"
            )

    def resolve_k_max(self, n_snps: int) -> int:
        return min(n_snps, 50) if self.k_max is None else self.k_max

    def with_(self, **kwargs) -> "Hyperparameters":
        return replace(self, **kwargs)


@dataclass
class VariationalState:
    """All variational parameters of the factorized posterior.

    lam[k]      Beta(lam[k,0], lam[k,1]) over the stick weight pi_k
    eta[q,k]    Bernoulli mean for Z[q,k]
    phi[k,p]    Gaussian mean for A[k,p]
    varphi[k,p] Gaussian variance for A[k,p]; the row posterior for A[k,:]
                factorizes over traits, so the per-factor covariance is the
                diagonal matrix diag(varphi[k])
    kappa[k,p]  inverse-gamma (shape, rate) over the ARD variance delta[k,p]

    Owned exclusively by the fitting routine while a fit is running.
    """

    lam: np.ndarray
    eta: np.ndarray
    phi: np.ndarray
    varphi: np.ndarray
    kappa: np.ndarray
    iteration: int = 0

    @property
    def n_snps(self) -> int:
        return self.eta.shape[0]

    @property
    def k_max(self) -> int:
        return self.eta.shape[1]

    @property
    def n_traits(self) -> int:
        return self.phi.shape[1]

    def covariance(self, k: int) -> np.ndarray:
        """Materialize the (diagonal) posterior covariance of row A[k, :]."""
        return np.diag(self.varphi[k])

    def effective_k(self, threshold: float = 0.5) -> int:
        """Number of factors with at least one SNP inclusion above threshold."""
        return int((self.eta.max(axis=0) > threshold).sum())

    def validate(self):
        Q, K = self.eta.shape
        P = self.phi.shape[1]
        if self.lam.shape != (K, 2):
            raise ValidationError(f"lam has shape {self.lam.shape}, expected ({K}, 2)")
        if self.phi.shape != (K, P):
            raise ValidationError(f"phi has shape {self.phi.shape}, expected ({K}, {P})")
        if self.varphi.shape != (K, P):
            raise ValidationError(f"varphi has shape {self.varphi.shape}, expected ({K}, {P})")
        if self.kappa.shape != (K, P, 2):
            raise ValidationError(f"kappa has shape {self.kappa.shape}, expected ({K}, {P}, 2)")
        if not ((self.eta >= 0) & (self.eta <= 1)).all():
            raise ValidationError("eta entries must lie in [0, 1]")
        if not (self.lam > 0).all():
            raise ValidationError("lam entries must be strictly positive")
        if not (self.kappa > 0).all():
            raise ValidationError("kappa entries must be strictly positive")
        if not (self.varphi > 0).all():
            raise ValidationError("varphi entries must be strictly positive")
        for name in ("lam", "eta", "phi", "varphi", "kappa"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValidationError(f"non-finite entries in {name}")

    def copy(self) -> "VariationalState":
        return VariationalState(
            lam=self.lam.copy(),
            eta=self.eta.copy(),
            phi=self.phi.copy(),
            varphi=self.varphi.copy(),
            kappa=self.kappa.copy(),
            iteration=self.iteration,
        )


@dataclass(frozen=True)
class PlantedTruth:
    """Simulation ground truth: inclusion matrix, effects, and the derived
    SNP-trait association mask used for precision/recall scoring."""

    Z_true: np.ndarray
    A_true: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z_true, dtype=np.int8)
        A = np.asarray(self.A_true, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if Z.ndim != 2 or A.ndim != 2 or Z.shape[1] != A.shape[0]:
            raise ValidationError(
                f"inconsistent truth shapes: Z_true {Z.shape}, A_true {A.shape}"
            )
        if Z.shape[1] < 1:
            raise ValidationError("planted truth needs at least one factor")
        if not np.isin(Z, (0, 1)).all():
            raise ValidationError("Z_true must be binary")
        expected = derive_mask(Z, A)
        if mask.shape != expected.shape or (mask != expected).any():
            raise ValidationError("mask does not follow from Z_true and A_true")
        for name, arr in (("Z_true", Z), ("A_true", A), ("mask", mask)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_factors(cls, Z_true, A_true) -> "PlantedTruth":
        Z = np.asarray(Z_true, dtype=np.int8)
        A = np.asarray(A_true, dtype=np.float64)
        return cls(Z_true=Z, A_true=A, mask=derive_mask(Z, A))


def derive_mask(Z_true: np.ndarray, A_true: np.ndarray) -> np.ndarray:
    """mask[q, p] = 1 iff some factor k has Z[q, k] = 1 and |A[k, p]| > 0."""
    return (np.asarray(Z_true, dtype=np.float64) @ (np.abs(A_true) > 0)) > 0


@dataclass(frozen=True)
class ModelPoint:
    """One concrete assignment of the latent variables (Z, A, pi, delta),
    used to evaluate the unnormalized log joint density."""

    Z: np.ndarray
    A: np.ndarray
    pi: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=np.float64)
        A = np.asarray(self.A, dtype=np.float64)
        pi = np.asarray(self.pi, dtype=np.float64)
        delta = np.asarray(self.delta, dtype=np.float64)
        K = Z.shape[1] if Z.ndim == 2 else -1
        if Z.ndim != 2 or A.ndim != 2 or A.shape[0] != K:
            raise ValidationError(f"inconsistent shapes: Z {Z.shape}, A {A.shape}")
        if pi.shape != (K,):
            raise ValidationError(f"pi has shape {pi.shape}, expected ({K},)")
        if delta.shape != A.shape:
            raise ValidationError(f"delta has shape {delta.shape}, expected {A.shape}")
        if not np.isin(Z, (0.0, 1.0)).all():
            raise ValidationError("Z must be binary")
        if not ((pi > 0) & (pi < 1)).all():
            raise ValidationError("pi entries must lie in the open interval (0, 1)")
        if not (delta > 0).all():
            raise ValidationError("delta entries must be strictly positive")
        for name, arr in (("Z", Z), ("A", A), ("pi", pi), ("delta", delta)):
            object.__setattr__(self, name, arr)
