"""Model-specific integration drivers.

The compiled extension is preferred; the pure-Python implementation takes
over transparently when the build is unavailable.  ``USING_COMPILED`` reports
which one is active.
"""
try:
    from ._core import COMPILED, abm_model, rkf45_adjoint, rkf45_model
except ImportError:  # pragma: no cover - depends on the build environment
    from ._fallback import COMPILED, abm_model, rkf45_adjoint, rkf45_model

USING_COMPILED = COMPILED

__all__ = ["USING_COMPILED", "abm_model", "rkf45_adjoint", "rkf45_model"]
