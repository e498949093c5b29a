"""Backend selection for the hot flow kernels.

The compiled extension is used when importable; otherwise (or when forced
with ``RELCM_BACKEND=python`` or :func:`set_backend`) the pure-python
right-hand sides in :mod:`relcm._core.fallback` feed the generic
integrator loops in :mod:`relcm.integrate`.  Both backends implement the
same arithmetic; ``benchmarks/bench_backends.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

KERNEL_IDS = {"sv": 1, "pn": 2, "coulomb": 3}

_ACTIVE = "compiled" if (_kernels is not None and os.environ.get("RELCM_BACKEND") != "python") else "python"


def compiled_available() -> bool:
    return _kernels is not None


def get_backend() -> str:
    return _ACTIVE


def set_backend(name: str) -> None:
    global _ACTIVE
    if name not in ("compiled", "python"):
        raise ValueError("backend must be 'compiled' or 'python'")
    if name == "compiled" and _kernels is None:
        raise ValueError("compiled backend is not available")
    _ACTIVE = name


def has_kernel(name: str) -> bool:
    """True when the named flow integrates through the compiled loops."""
    return _ACTIVE == "compiled" and name in KERNEL_IDS


def flow_rhs(name: str, params: np.ndarray, s: float, y: np.ndarray) -> np.ndarray:
    """Evaluate the named RHS on the active backend."""
    if has_kernel(name):
        out = _kernels.rhs(KERNEL_IDS[name], np.ascontiguousarray(params, float), s, np.ascontiguousarray(y, float))
        if out is None:
            raise FloatingPointError("non-finite right-hand side")
        return out
    return fallback.RHS[name](np.asarray(params, float), s, np.asarray(y, float))


def rhs_batch(name: str, params: np.ndarray, sigmas: np.ndarray, states: np.ndarray) -> np.ndarray:
    out = np.empty_like(states)
    for i in range(len(sigmas)):
        out[i] = flow_rhs(name, params, float(sigmas[i]), states[i])
    return out


def rk4(name, params, y0, s0, h, nsteps, record_every):
    return _kernels.rk4(
        KERNEL_IDS[name], np.ascontiguousarray(params, float), np.ascontiguousarray(y0, float),
        s0, h, nsteps, record_every,
    )


def dopri45(name, params, y0, s0, s1, atol, rtol, h0, max_steps):
    return _kernels.dopri45(
        KERNEL_IDS[name], np.ascontiguousarray(params, float), np.ascontiguousarray(y0, float),
        s0, s1, atol, rtol, h0, max_steps,
    )
