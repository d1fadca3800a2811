"""Coordinate-ascent variational inference.

One sweep updates, in order: stick-weight Beta parameters (all factors), SNP
inclusion probabilities (factor by factor, SNP by SNP), effect-size Gaussians
(factor by factor), and ARD inverse-gamma parameters.  Every update is the
exact mean-field solution for its block given the others, so the ELBO never
decreases; updates within a block run sequentially (Gauss-Seidel) because the
factors couple through the shared residual.

Convergence is judged from per-block scalar traces with a Geweke-style
two-segment test, checked at a fixed iteration cadence after burn-in.
"""

import logging
import math
from dataclasses import dataclass, field
from time import perf_counter
from typing import Callable, Optional

import numpy as np
from scipy.special import digamma, erfc, expit

from . import kernels
from .errors import EngineError, ValidationError
from .model import elbo
from .streams import child_rng
from .types import Dataset, Hyperparameters, VariationalState

__all__ = [
    "TRACE_BLOCKS",
    "TraceMonitor",
    "ConvergenceCheck",
    "FitReport",
    "initial_state",
    "update_lambda",
    "update_eta",
    "update_A",
    "update_kappa",
    "sweep",
    "geweke_statistic",
    "check_convergence",
    "fit",
]

logger = logging.getLogger("berrri")

TRACE_BLOCKS = ("lambda", "eta", "phi", "varphi", "kappa")

def initial_state(data: Dataset, hp: Hyperparameters) -> VariationalState:
    """Deterministic data-aware initialization.

    Inclusion probabilities start as a uniform random draw; the effect-size
    and ARD blocks are then set to their conditional optima given that draw.
    Starting the effect sizes at zero instead would let the first inclusion
    pass (which runs before any effect-size update) wipe out the random
    symmetry breaking, after which the factors collapse onto one another and
    the optimizer is left in a heavily merged local optimum.
    """
    K = hp.resolve_k_max(data.n_snps)
    Q, P = data.n_snps, data.n_traits
    rng = child_rng(hp.seed, "init")
    lam = np.column_stack([np.full(K, hp.alpha / K), np.ones(K)])
    eta = rng.uniform(0.25, 0.75, size=(Q, K))
    phi = np.zeros((K, P))
    varphi = np.ones((K, P))
    kappa = np.empty((K, P, 2))
    kappa[..., 0] = hp.c + 0.5
    kappa[..., 1] = hp.d + 0.5
    state = VariationalState(lam=lam, eta=eta, phi=phi, varphi=varphi, kappa=kappa)
    ws = _Workspace(data)
    M = data.X @ state.eta
    for k in range(K):
        _A_factor_update(state, data, hp, k, M, ws.x2sum)
    state.kappa[..., 0] = hp.c + 0.5
    state.kappa[..., 1] = hp.d + (state.varphi + state.phi**2) / 2.0
    return state


class _Workspace:
    """Per-fit constants derived from the genotype matrix."""

    def __init__(self, data: Dataset):
        self.XT = np.ascontiguousarray(data.X.T)
        self.x2sum = (data.X**2).sum(axis=0)


# ---------------------------------------------------------------------------
# Block updates.  The standalone functions recompute whatever they need from
# the current state; `sweep` reuses the same cores with per-factor caching.
# ---------------------------------------------------------------------------


def update_lambda(state: VariationalState, hp: Hyperparameters, k: int):
    """Beta parameters of stick weight k from the current inclusion means."""
    eta_k = state.eta[:, k]
    state.lam[k, 0] = hp.alpha / state.k_max + eta_k.sum()
    state.lam[k, 1] = 1.0 + (1.0 - eta_k).sum()
    return state.lam[k, 0], state.lam[k, 1]


def _factor_residual(state: VariationalState, data: Dataset, k: int, M: np.ndarray) -> np.ndarray:
    """Expected residual of Y with factor k's contribution excluded."""
    return data.Y - M @ state.phi + np.outer(M[:, k], state.phi[k])


def _eta_factor_inputs(state: VariationalState, data: Dataset, hp: Hyperparameters, k: int):
    """Quantities that stay fixed across one factor's inclusion sweep."""
    M = data.X @ state.eta
    R_k = _factor_residual(state, data, k, M)
    u = R_k @ state.phi[k]
    prior_logit = float(digamma(state.lam[k, 0]) - digamma(state.lam[k, 1]))
    sa2 = float((state.varphi[k] + state.phi[k] ** 2).sum())
    return u, prior_logit, sa2


def _eta_scalar_update(state, ws, k: int, q: int, u, prior_logit, sa2, inv_sigma2):
    eta_k = state.eta[:, k]
    m_full = eta_k @ ws.XT
    dot_xm = ws.XT[q] @ m_full - eta_k[q] * ws.x2sum[q]
    dot_xu = ws.XT[q] @ u
    zeta = (
        prior_logit
        - 0.5 * sa2 * inv_sigma2 * ws.x2sum[q]
        - sa2 * inv_sigma2 * dot_xm
        + inv_sigma2 * dot_xu
    )
    if not np.isfinite(zeta):
        raise EngineError(f"non-finite inclusion logit at factor {k}, SNP {q}; state is corrupted")
    state.eta[q, k] = expit(zeta)
    return state.eta[q, k]


def update_eta(state: VariationalState, data: Dataset, hp: Hyperparameters, k: int, q: int):
    """Exact mean-field update of one inclusion probability."""
    ws = _Workspace(data)
    u, prior_logit, sa2 = _eta_factor_inputs(state, data, hp, k)
    return _eta_scalar_update(state, ws, k, q, u, prior_logit, sa2, 1.0 / hp.sigma2)


def _A_factor_update(state: VariationalState, data: Dataset, hp: Hyperparameters, k: int,
                     M: np.ndarray, x2sum: np.ndarray):
    eta_k = state.eta[:, k]
    M_k = M[:, k]
    S_k = float(M_k @ M_k + x2sum @ (eta_k * (1.0 - eta_k)))
    R_k = _factor_residual(state, data, k, M)
    e_inv_delta = state.kappa[k, :, 0] / state.kappa[k, :, 1]
    precision = e_inv_delta + S_k / hp.sigma2
    if not (np.isfinite(precision).all() and (precision > 0).all()):
        raise EngineError(f"effect-size precision for factor {k} is not positive definite")
    state.varphi[k] = 1.0 / precision
    state.phi[k] = (M_k @ R_k) / hp.sigma2 * state.varphi[k]
    return state.phi[k].copy(), state.varphi[k].copy()


def update_A(state: VariationalState, data: Dataset, hp: Hyperparameters, k: int):
    """Exact Gaussian update of the effect-size row for factor k.

    The row posterior factorizes over traits, so the covariance is diagonal:
    the returned variance vector is the diagonal of the posterior covariance.
    """
    ws = _Workspace(data)
    M = data.X @ state.eta
    return _A_factor_update(state, data, hp, k, M, ws.x2sum)


def update_kappa(state: VariationalState, hp: Hyperparameters, k: int, p: int):
    """Exact inverse-gamma update of one ARD variance."""
    state.kappa[k, p, 0] = hp.c + 0.5
    state.kappa[k, p, 1] = hp.d + (state.varphi[k, p] + state.phi[k, p] ** 2) / 2.0
    return state.kappa[k, p, 0], state.kappa[k, p, 1]


def sweep(
    state: VariationalState,
    data: Dataset,
    hp: Hyperparameters,
    *,
    order=None,
    on_update: Optional[Callable[[str, int, Optional[int]], None]] = None,
    backend: Optional[str] = None,
    workspace: Optional[_Workspace] = None,
) -> VariationalState:
    """One full coordinate pass in block order lambda, eta, A, kappa.

    `order` overrides the factor processing sequence (default ascending);
    `on_update` is called after every individual block update, which forces
    the per-SNP python path for the inclusion block.
    """
    ws = workspace if workspace is not None else _Workspace(data)
    K, Q, P = state.k_max, state.n_snps, state.n_traits
    factor_order = range(K) if order is None else [int(k) for k in order]
    if order is not None and sorted(factor_order) != list(range(K)):
        raise ValidationError(f"order must be a permutation of 0..{K - 1}")
    inv_sigma2 = 1.0 / hp.sigma2

    for k in factor_order:
        update_lambda(state, hp, k)
        if on_update is not None:
            on_update("lambda", k, None)

    for k in factor_order:
        M = data.X @ state.eta
        R_k = _factor_residual(state, data, k, M)
        u = R_k @ state.phi[k]
        prior_logit = float(digamma(state.lam[k, 0]) - digamma(state.lam[k, 1]))
        sa2 = float((state.varphi[k] + state.phi[k] ** 2).sum())
        if on_update is None:
            eta_k = np.ascontiguousarray(state.eta[:, k])
            status = kernels.eta_factor_sweep(
                ws.XT, ws.x2sum, eta_k, u, prior_logit, sa2, inv_sigma2, backend=backend
            )
            if status != 0:
                q_bad = -status - 1
                raise EngineError(
                    f"non-finite inclusion logit at factor {k}, SNP {q_bad}; state is corrupted"
                )
            state.eta[:, k] = eta_k
        else:
            for q in range(Q):
                _eta_scalar_update(state, ws, k, q, u, prior_logit, sa2, inv_sigma2)
                on_update("eta", k, q)

    M = data.X @ state.eta
    for k in factor_order:
        _A_factor_update(state, data, hp, k, M, ws.x2sum)
        if on_update is not None:
            on_update("A", k, None)

    if on_update is None:
        state.kappa[..., 0] = hp.c + 0.5
        state.kappa[..., 1] = hp.d + (state.varphi + state.phi**2) / 2.0
    else:
        for k in factor_order:
            for p in range(P):
                update_kappa(state, hp, k, p)
                on_update("kappa", k, p)

    state.iteration += 1
    return state


# ---------------------------------------------------------------------------
# Convergence monitoring
# ---------------------------------------------------------------------------


@dataclass
class TraceMonitor:
    """Per-block scalar traces (the mean of each parameter block, recorded
    once per iteration) plus the burn-in and check cadence settings."""

    burn_in: int = 100
    check_interval: int = 100
    min_post_burn: int = 20
    traces: dict = field(default_factory=lambda: {b: [] for b in TRACE_BLOCKS})

    def record(self, state: VariationalState):
        self.traces["lambda"].append(float(state.lam.mean()))
        self.traces["eta"].append(float(state.eta.mean()))
        self.traces["phi"].append(float(state.phi.mean()))
        self.traces["varphi"].append(float(state.varphi.mean()))
        self.traces["kappa"].append(float(state.kappa.mean()))

    def __len__(self) -> int:
        return len(self.traces["lambda"])

    def post_burn(self, block: str) -> np.ndarray:
        return np.asarray(self.traces[block][self.burn_in:], dtype=np.float64)

    def ready(self) -> bool:
        n = len(self)
        return n - self.burn_in >= self.min_post_burn and n % self.check_interval == 0


@dataclass(frozen=True)
class ConvergenceCheck:
    t_stats: dict
    p_values: dict
    converged: bool
    degenerate: tuple = ()
    iteration: int = 0


def geweke_statistic(trace, first: float = 0.1, last: float = 0.5):
    """Two-segment stationarity test on one trace.

    Compares the mean of the first 10% against the mean of the last 50% with
    t = (m1 - m2) / sqrt(s1/n1 + s2/n2), where s1 and s2 are the segment
    standard deviations; the two-sided p-value uses the standard normal
    reference.  For unit-variance stationary traces this matches the usual
    z statistic, while for nearly flat traces the sqrt(s/n) floor absorbs
    numerically irrelevant micro-drift.  Exactly flat segments are degenerate:
    equal means count as converged (t = 0), unequal means do not.
    Returns (t, p, degenerate_flag).
    """
    x = np.asarray(trace, dtype=np.float64)
    n1 = int(first * x.size)
    n2 = int(last * x.size)
    if n1 < 2 or n2 < 2:
        raise ValidationError(
            f"trace of length {x.size} is too short for segment sizes ({n1}, {n2})"
        )
    seg1, seg2 = x[:n1], x[x.size - n2:]
    m1, m2 = float(seg1.mean()), float(seg2.mean())
    s1, s2 = float(seg1.std(ddof=1)), float(seg2.std(ddof=1))
    if s1 + s2 == 0.0:
        if m1 == m2:
            return 0.0, 1.0, True
        return math.inf, 0.0, True
    t = (m1 - m2) / math.sqrt(s1 / n1 + s2 / n2)
    p = float(erfc(abs(t) / math.sqrt(2.0)))
    return float(t), p, False


def check_convergence(monitor: TraceMonitor, hp: Hyperparameters) -> ConvergenceCheck:
    """Geweke test on every block trace; converged iff all p exceed p_thresh."""
    t_stats, p_values, degenerate = {}, {}, []
    for block in TRACE_BLOCKS:
        t, p, degen = geweke_statistic(monitor.post_burn(block))
        t_stats[block] = t
        p_values[block] = p
        if degen:
            degenerate.append(block)
    converged = all(p > hp.p_thresh for p in p_values.values())
    return ConvergenceCheck(
        t_stats=t_stats,
        p_values=p_values,
        converged=converged,
        degenerate=tuple(degenerate),
        iteration=len(monitor),
    )


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitReport:
    converged: bool
    iterations: int
    final_elbo: float
    k_effective: int
    wall_seconds: float
    p_values: dict
    t_stats: dict
    elbo_trace: tuple
    n_checks: int


def fit(
    data: Dataset,
    hp: Hyperparameters,
    init_state: Optional[VariationalState] = None,
    backend: Optional[str] = None,
):
    """Run coordinate ascent until the trace monitor converges or max_iter.

    Deterministic for a given (data, hp, seed): identical runs produce
    identical parameter traces and reports.  Non-convergence at max_iter is
    reported, not raised.
    """
    start = perf_counter()
    state = init_state.copy() if init_state is not None else initial_state(data, hp)
    state.validate()
    if state.n_snps != data.n_snps or state.n_traits != data.n_traits:
        raise ValidationError(
            f"state is for {state.n_snps} SNPs x {state.n_traits} traits, data has "
            f"{data.n_snps} x {data.n_traits}"
        )
    ws = _Workspace(data)
    monitor = TraceMonitor(burn_in=hp.burn_in, check_interval=hp.check_interval)
    elbo_trace = []
    converged = False
    last_check = None
    n_checks = 0

    for _ in range(hp.max_iter):
        sweep(state, data, hp, backend=backend, workspace=ws)
        elbo_trace.append(elbo(state, data, hp))
        monitor.record(state)
        if monitor.ready():
            last_check = check_convergence(monitor, hp)
            n_checks += 1
            logger.info(
                "iteration %d: elbo=%.6f p-values=%s",
                state.iteration,
                elbo_trace[-1],
                {b: round(p, 4) for b, p in last_check.p_values.items()},
            )
            if last_check.converged:
                converged = True
                break

    report = FitReport(
        converged=converged,
        iterations=state.iteration,
        final_elbo=elbo_trace[-1],
        k_effective=state.effective_k(),
        wall_seconds=perf_counter() - start,
        p_values=dict(last_check.p_values) if last_check else {},
        t_stats=dict(last_check.t_stats) if last_check else {},
        elbo_trace=tuple(elbo_trace),
        n_checks=n_checks,
    )
    return state, report
