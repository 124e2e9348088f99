"""Numerical curvature and volume invariants of Finsler metrics and Finsler warped products."""

import jax

jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"


def clear_caches() -> None:
    """Drop every compiled kernel (per-metric caches and JAX's own).

    Each distinct metric compiles its own kernels; long sessions touching many
    metrics should call this now and then to release the memory.
    """
    from . import curvature, geodesics, warped

    for fn in (curvature.kernels, geodesics._stepper, warped._calculus, warped._closed_spray,
               warped._closed_berwald, warped._closed_ricci):
        fn.cache_clear()
    jax.clear_caches()
