"""Deterministic ODE integration shared by all dynamical modules.

Two steppers are provided: classic fixed-step RK4 (reproducible golden
files) and an adaptive Dormand-Prince 5(4) pair (default for production
runs).  Problems whose right-hand side is one of the named compiled flow
kernels are dispatched to the active backend in ``relcm._core``; anything
else integrates through the generic python loop below.  Both paths use
identical tableaus and step-control arithmetic.

Also hosts the 4th-order finite-difference rate oracle used to validate
closed-form solutions of the CM-integration equation, and a golden-section
refiner for locating orbit extrema on sampled trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _core

MIN_STEP = 1e-14

# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


class FlowSingularityError(RuntimeError):
    """Integration hit a non-finite right-hand side or a step underflow."""

    def __init__(self, message: str, sigma: float):
        super().__init__(f"{message} at sigma = {sigma!r}")
        self.sigma = sigma


@dataclass
class FlowProblem:
    """An initial-value problem dy/dsigma = rhs(sigma, y) over a sigma span.

    ``kernel`` optionally names a compiled flow ("sv", "pn", "coulomb")
    with its parameter vector; when the compiled backend is active those
    problems integrate entirely in C.
    """

    rhs: Callable[[float, np.ndarray], np.ndarray]
    y0: np.ndarray
    span: tuple[float, float]
    kernel: tuple[str, np.ndarray] | None = None


@dataclass
class Trajectory:
    """Sampled solution with node derivatives for dense evaluation."""

    sigmas: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.sigmas)

    def interpolate(self, sigma: float) -> np.ndarray:
        """Cubic Hermite interpolation between the two bracketing nodes."""
        s = self.sigmas
        if not (s[0] <= sigma <= s[-1]):
            raise ValueError("sigma outside the sampled range")
        i = int(np.searchsorted(s, sigma, side="right") - 1)
        i = min(i, len(s) - 2)
        h = s[i + 1] - s[i]
        if h == 0.0:
            return self.states[i].copy()
        t = (sigma - s[i]) / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        return (
            h00 * self.states[i]
            + h10 * h * self.derivs[i]
            + h01 * self.states[i + 1]
            + h11 * h * self.derivs[i + 1]
        )


def _checked_rhs(rhs: Callable, s: float, y: np.ndarray) -> np.ndarray:
    dy = np.asarray(rhs(s, y), dtype=float)
    if not np.all(np.isfinite(dy)):
        raise FlowSingularityError("non-finite right-hand side", s)
    return dy


def rk4_fixed(p: FlowProblem, h: float, record_every: int = 1) -> Trajectory:
    """Classic 4th-order Runge-Kutta with fixed step, sampled at every step."""
    if h <= 0:
        raise ValueError("step size must be positive")
    s0, s1 = p.span
    nsteps = max(1, int(round((s1 - s0) / h)))
    if p.kernel is not None and _core.has_kernel(p.kernel[0]):
        res = _core.rk4(p.kernel[0], p.kernel[1], np.asarray(p.y0, float), s0, h, nsteps, record_every)
        if res[0] is None:
            raise FlowSingularityError("non-finite right-hand side", float(res[1]))
        sig, states = res
        derivs = _core.rhs_batch(p.kernel[0], p.kernel[1], sig, states)
        return Trajectory(sig, states, derivs, {"n_steps": nsteps, "method": "rk4", "h": h})

    y = np.asarray(p.y0, dtype=float).copy()
    s = s0
    sigmas = [s]
    states = [y.copy()]
    for k in range(nsteps):
        k1 = _checked_rhs(p.rhs, s, y)
        k2 = _checked_rhs(p.rhs, s + h / 2, y + (h / 2) * k1)
        k3 = _checked_rhs(p.rhs, s + h / 2, y + (h / 2) * k2)
        k4 = _checked_rhs(p.rhs, s + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        s = s0 + (k + 1) * h
        if (k + 1) % record_every == 0 or k == nsteps - 1:
            sigmas.append(s)
            states.append(y.copy())
    sig = np.array(sigmas)
    sta = np.array(states)
    derivs = np.array([_checked_rhs(p.rhs, si, yi) for si, yi in zip(sig, sta)])
    return Trajectory(sig, sta, derivs, {"n_steps": nsteps, "method": "rk4", "h": h})


def rk45_adaptive(
    p: FlowProblem,
    atol: float = 1e-10,
    rtol: float = 1e-10,
    h0: float | None = None,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Embedded Dormand-Prince 5(4) with proportional step control.

    Every accepted step is recorded, which is dense enough for the drift
    statistics taken downstream.
    """
    if atol <= 0 or rtol <= 0:
        raise ValueError("tolerances must be positive")
    s0, s1 = p.span
    if h0 is None:
        h0 = (s1 - s0) / 100.0
    if p.kernel is not None and _core.has_kernel(p.kernel[0]):
        res = _core.dopri45(
            p.kernel[0], p.kernel[1], np.asarray(p.y0, float), s0, s1, atol, rtol, h0, max_steps
        )
        if res[0] is None:
            raise FlowSingularityError(res[1], float(res[2]))
        sig, states, st = res
        derivs = _core.rhs_batch(p.kernel[0], p.kernel[1], sig, states)
        return Trajectory(
            sig,
            states,
            derivs,
            {
                "n_steps": int(st[0]),
                "n_rejected": int(st[1]),
                "h_min": float(st[2]),
                "h_max": float(st[3]),
                "method": "rk45",
            },
        )

    y = np.asarray(p.y0, dtype=float).copy()
    s = s0
    h = h0
    sigmas = [s]
    states = [y.copy()]
    derivs = [_checked_rhs(p.rhs, s, y)]
    n_acc = 0
    n_rej = 0
    h_min_seen = np.inf
    h_max_seen = 0.0
    k = np.zeros((7, y.size))
    while s < s1:
        h = min(h, s1 - s)
        if h < MIN_STEP * max(1.0, abs(s)):
            raise FlowSingularityError("stiffness or singularity encountered", s)
        k[0] = _checked_rhs(p.rhs, s, y)
        for i in range(1, 7):
            yi = y + h * (_DP_A[i] @ k[:i])
            k[i] = _checked_rhs(p.rhs, s + _DP_C[i] * h, yi)
        y5 = y + h * (_DP_B5 @ k)
        y4 = y + h * (_DP_B4 @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean(((y5 - y4) / scale) ** 2)))
        if err <= 1.0:
            s = s + h
            y = y5
            sigmas.append(s)
            states.append(y.copy())
            derivs.append(k[6].copy())  # FSAL: last stage is rhs at (s, y5)
            n_acc += 1
            h_min_seen = min(h_min_seen, h)
            h_max_seen = max(h_max_seen, h)
        else:
            n_rej += 1
        factor = 0.9 * (err if err > 0 else 1e-10) ** (-0.2)
        h = h * min(5.0, max(0.2, factor))
        if n_acc + n_rej > max_steps:
            raise FlowSingularityError("step budget exhausted", s)
    return Trajectory(
        np.array(sigmas),
        np.array(states),
        np.array(derivs),
        {
            "n_steps": n_acc,
            "n_rejected": n_rej,
            "h_min": float(h_min_seen),
            "h_max": float(h_max_seen),
            "method": "rk45",
        },
    )


def finite_diff_rate(f: Callable[[float], np.ndarray], s0: float, h: float = 1e-5) -> np.ndarray:
    """4th-order central-difference derivative of a sigma-valued curve."""
    return (
        -np.asarray(f(s0 + 2 * h))
        + 8 * np.asarray(f(s0 + h))
        - 8 * np.asarray(f(s0 - h))
        + np.asarray(f(s0 - 2 * h))
    ) / (12 * h)


def golden_minimize(fun: Callable[[float], float], a: float, b: float, tol: float = 1e-12) -> float:
    """Golden-section minimum of a unimodal function on [a, b]."""
    invphi = (np.sqrt(5.0) - 1) / 2
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while (b - a) > tol * max(1.0, abs(a) + abs(b)):
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fun(x2)
    return 0.5 * (a + b)
