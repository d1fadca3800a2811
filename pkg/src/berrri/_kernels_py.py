"""NumPy fallback for the compiled coordinate-update kernel.

Same contract as the Cython module `_kernels`: the inclusion probabilities of
one factor are updated SNP by SNP, and the expected factor load is recomputed
in full for every SNP (the method's published per-sweep cost profile is
quadratic in the SNP count).
"""

import numpy as np
from scipy.special import expit

__all__ = ["eta_factor_sweep"]


def eta_factor_sweep(XT, x2sum, eta_k, u, prior_logit, sa2, inv_sigma2):
    """Sequential update of eta_k[q] for q = 0..Q-1; eta_k is modified in place.

    XT is the Q x N transposed genotype matrix, u the per-individual residual
    (excluding this factor) projected onto the factor's effect-size means, and
    sa2 the summed second moment of those effect sizes.  Returns 0 on success
    or -(q + 1) if the logit for SNP q came out non-finite.
    """
    Q = XT.shape[0]
    half_pen = 0.5 * sa2 * inv_sigma2
    for q in range(Q):
        m_full = eta_k @ XT
        dot_xm = XT[q] @ m_full - eta_k[q] * x2sum[q]
        dot_xu = XT[q] @ u
        zeta = prior_logit - half_pen * x2sum[q] - sa2 * inv_sigma2 * dot_xm + inv_sigma2 * dot_xu
        if not np.isfinite(zeta):
            return -(q + 1)
        eta_k[q] = expit(zeta)
    return 0
