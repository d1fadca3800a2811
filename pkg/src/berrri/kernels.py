"""Backend selection for the hot coordinate-update kernel.

The compiled extension is used when present; otherwise the NumPy fallback.
`BERRRI_KERNEL=python` (or `cython`) in the environment forces a backend, and
callers may pass an explicit backend name, which the benchmark uses to compare
the two implementations.
"""

import os

from . import _kernels_py
from .errors import ValidationError

__all__ = ["available_backends", "default_backend", "eta_factor_sweep"]

try:
    from . import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None

_IMPLS = {"python": _kernels_py}
if _kernels_cy is not None:
    _IMPLS["cython"] = _kernels_cy


def available_backends() -> tuple:
    return tuple(sorted(_IMPLS))


def default_backend() -> str:
    forced = os.environ.get("BERRRI_KERNEL", "").strip().lower()
    if forced in ("", "auto"):
        return "cython" if "cython" in _IMPLS else "python"
    if forced not in ("python", "cython"):
        raise ValidationError(
            f"BERRRI_KERNEL={forced!r} is not one of auto, python, cython"
        )
    if forced not in _IMPLS:
        raise ValidationError(
            "BERRRI_KERNEL=cython requested but the compiled kernel is not importable"
        )
    return forced


def _resolve(backend):
    name = default_backend() if backend is None else backend
    try:
        return name, _IMPLS[name]
    except KeyError:
        raise ValidationError(
            f"kernel backend {name!r} unavailable; have {available_backends()}"
        ) from None


def eta_factor_sweep(XT, x2sum, eta_k, u, prior_logit, sa2, inv_sigma2, backend=None):
    """Dispatch one factor's sequential SNP-inclusion sweep."""
    _, impl = _resolve(backend)
    return impl.eta_factor_sweep(XT, x2sum, eta_k, u, prior_logit, sa2, inv_sigma2)
