import numpy as np
import pytest

from berrri import ValidationError
from berrri.kernels import available_backends, default_backend, eta_factor_sweep


def kernel_inputs(n=12, q=8, seed=0):
    rng = np.random.default_rng(seed)
    XT = np.ascontiguousarray(rng.integers(0, 3, size=(n, q)).astype(float).T)
    x2sum = (XT**2).sum(axis=1)
    eta_k = rng.uniform(0.05, 0.95, size=q)
    u = rng.normal(size=n)
    return XT, x2sum, eta_k, u


class TestBackends:
    def test_python_backend_always_available(self):
        assert "python" in available_backends()
        assert default_backend() in available_backends()

    def test_unknown_backend_rejected(self):
        XT, x2sum, eta_k, u = kernel_inputs()
        with pytest.raises(ValidationError, match="unavailable"):
            eta_factor_sweep(XT, x2sum, eta_k, u, 0.0, 1.0, 1.0, backend="fortran")

    @pytest.mark.skipif("cython" not in available_backends(), reason="extension not built")
    def test_cython_matches_python(self):
        for seed in range(10):
            XT, x2sum, eta_k, u = kernel_inputs(seed=seed)
            a = eta_k.copy()
            b = eta_k.copy()
            assert eta_factor_sweep(XT, x2sum, a, u, -0.4, 0.8, 1.25, backend="cython") == 0
            assert eta_factor_sweep(XT, x2sum, b, u, -0.4, 0.8, 1.25, backend="python") == 0
            assert np.allclose(a, b, rtol=1e-12, atol=1e-14)

    def test_nonfinite_logit_reports_snp(self):
        XT, x2sum, eta_k, u = kernel_inputs()
        u[:] = np.inf
        for backend in available_backends():
            with np.errstate(invalid="ignore"):
                status = eta_factor_sweep(
                    XT, x2sum, eta_k.copy(), u, 0.0, 1.0, 1.0, backend=backend
                )
            assert status == -1  # SNP 0 is the first to go non-finite

    def test_updates_are_sequential(self):
        # the update for SNP q must see the already-updated values of SNPs
        # before it: freezing them changes the result
        XT, x2sum, eta_k, u = kernel_inputs(seed=3)
        u *= 5.0
        seq = eta_k.copy()
        eta_factor_sweep(XT, x2sum, seq, u, 0.2, 0.5, 1.0, backend="python")
        frozen = eta_k.copy()
        out = np.empty_like(frozen)
        for q in range(frozen.size):
            probe = frozen.copy()  # all-old values, Jacobi style
            eta_factor_sweep(XT, x2sum, probe, u, 0.2, 0.5, 1.0, backend="python")
            out[q] = probe[q] if q == 0 else out[q]
        # only the first coordinate can agree in general
        assert not np.allclose(seq[1:], _jacobi(XT, x2sum, frozen, u)[1:], atol=1e-12)
        assert seq[0] == pytest.approx(_jacobi(XT, x2sum, frozen, u)[0], abs=1e-15)


def _jacobi(XT, x2sum, eta_k, u, prior=0.2, sa2=0.5, inv_s2=1.0):
    from scipy.special import expit

    out = np.empty_like(eta_k)
    m_full = eta_k @ XT
    for q in range(eta_k.size):
        dot_xm = XT[q] @ m_full - eta_k[q] * x2sum[q]
        dot_xu = XT[q] @ u
        out[q] = expit(prior - 0.5 * sa2 * inv_s2 * x2sum[q] - sa2 * inv_s2 * dot_xm + inv_s2 * dot_xu)
    return out
