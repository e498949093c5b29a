"""Numerical Poisson-bracket engine over canonical charts of 4-vector pairs.

A chart is an ordered list of conjugate (coordinate, momentum) 4-vector
pairs, flattened into a single state vector.  The defining bracket is

    {x_a^mu, p_b^nu} = g^{mu nu} delta_ab

(so {x^0, p^0} = -1 with the -+++ metric), all other elementary brackets
zero.  Brackets of arbitrary observables are assembled from full gradients
taken with 4th-order central differences plus one Richardson extrapolation
level; with the default step the residual floor for smooth observables is
around 1e-9, well below the 1e-6 identity gates used by callers.

Observables are plain callables mapping the flat state vector to a float
or to an ndarray (vector/tensor observables are differentiated in one
sweep, which is what makes the full Lorentz-algebra battery cheap).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import minkowski as mk

DEFAULT_STEP = 1e-6


class SingularEvaluationError(RuntimeError):
    """An observable returned a non-finite value during differencing."""


@dataclass(frozen=True)
class CanonicalState:
    """Flat phase-space point plus the names of its conjugate pairs."""

    pairs: tuple[tuple[str, str], ...]
    y: np.ndarray

    @property
    def npairs(self) -> int:
        return len(self.pairs)

    def coordinate(self, a: int) -> np.ndarray:
        return self.y[8 * a : 8 * a + 4]

    def momentum(self, a: int) -> np.ndarray:
        return self.y[8 * a + 4 : 8 * a + 8]


@dataclass(frozen=True)
class Chart:
    """Named chart exposing the global generators as observables."""

    name: str
    pair_names: tuple[tuple[str, str], ...]
    momentum: Callable[[np.ndarray], np.ndarray]
    angular_momentum: Callable[[np.ndarray], np.ndarray]

    def state(self, y: np.ndarray) -> CanonicalState:
        return CanonicalState(self.pair_names, np.asarray(y, dtype=float))


def _eval(f: Callable, y: np.ndarray) -> np.ndarray:
    val = np.asarray(f(y), dtype=float)
    if not np.all(np.isfinite(val)):
        raise SingularEvaluationError("singular observable evaluation")
    return val


def gradient(f: Callable, y: np.ndarray, step: float = DEFAULT_STEP) -> np.ndarray:
    """Gradient of f w.r.t. every flat coordinate, shape (dim, *out_shape).

    Per-coordinate step h_i = step * max(1, |y_i|); the 4th-order stencil is
    evaluated at h and h/2 and Richardson-combined.
    """
    y = np.asarray(y, dtype=float)
    f0 = _eval(f, y)
    out = np.zeros((y.size,) + f0.shape)

    def stencil(i: int, h: float) -> np.ndarray:
        yp2, yp1, ym1, ym2 = y.copy(), y.copy(), y.copy(), y.copy()
        yp2[i] += 2 * h
        yp1[i] += h
        ym1[i] -= h
        ym2[i] -= 2 * h
        return (-_eval(f, yp2) + 8 * _eval(f, yp1) - 8 * _eval(f, ym1) + _eval(f, ym2)) / (12 * h)

    for i in range(y.size):
        h = step * max(1.0, abs(y[i]))
        d1 = stencil(i, h)
        d2 = stencil(i, h / 2)
        out[i] = (16 * d2 - d1) / 15
    return out


def bracket(a: Callable, b: Callable, s: CanonicalState, step: float = DEFAULT_STEP):
    """Poisson bracket {A, B} at the state s.

    Scalar observables give a float; array observables of shapes sa and sb
    give an array of shape sa + sb.  Antisymmetric under A <-> B exactly.
    """
    ga = gradient(a, s.y, step)
    gb = gradient(b, s.y, step)
    sa, sb = ga.shape[1:], gb.shape[1:]
    n = s.npairs
    ga = ga.reshape(n, 2, 4, -1)
    gb = gb.reshape(n, 2, 4, -1)
    w = mk.METRIC_DIAG.reshape(1, 4, 1)
    t1 = np.einsum("aki,akj->ij", w * ga[:, 0], gb[:, 1])
    t2 = np.einsum("aki,akj->ij", w * ga[:, 1], gb[:, 0])
    res = (t1 - t2).reshape(sa + sb)
    if res.shape == ():
        return float(res)
    return res


# ---------------------------------------------------------------------------
# Lie-Poisson structure rules
# ---------------------------------------------------------------------------

def product_rule_residual(a: Callable, b: Callable, c: Callable, s: CanonicalState, step: float = DEFAULT_STEP) -> float:
    """|{A, BC} - {A,B} C - {A,C} B| for scalar observables."""

    def bc(y: np.ndarray) -> float:
        return float(np.asarray(b(y)) * np.asarray(c(y)))

    lhs = bracket(a, bc, s, step)
    rhs = bracket(a, b, s, step) * float(c(s.y)) + bracket(a, c, s, step) * float(b(s.y))
    return abs(lhs - rhs)


def derivative_rule_residual(a: Callable, b: Callable, s: CanonicalState, step: float = DEFAULT_STEP) -> float:
    """|{A, B^2} - 2 B {A,B}| (the chain rule for f = square)."""

    def b2(y: np.ndarray) -> float:
        return float(np.asarray(b(y))) ** 2

    lhs = bracket(a, b2, s, step)
    rhs = 2.0 * float(b(s.y)) * bracket(a, b, s, step)
    return abs(lhs - rhs)


def jacobi_residual(
    a: Callable,
    b: Callable,
    c: Callable,
    s: CanonicalState,
    inner_step: float = DEFAULT_STEP,
    outer_step: float = 1e-2,
) -> float:
    """|{A,{B,C}} + {B,{C,A}} + {C,{A,B}}| for scalar observables.

    The outer differencing uses a larger step: the inner bracket carries
    the finite-difference noise floor of a plain bracket, and dividing by
    a 1e-6-sized step would amplify it far above the identity's own size.
    For polynomial observables of low degree the larger step costs no
    truncation error at all.
    """

    def nest(f: Callable, g: Callable) -> Callable:
        def inner(y: np.ndarray) -> float:
            return bracket(f, g, CanonicalState(s.pairs, y), inner_step)

        return inner

    total = (
        bracket(a, nest(b, c), s, outer_step)
        + bracket(b, nest(c, a), s, outer_step)
        + bracket(c, nest(a, b), s, outer_step)
    )
    return abs(total)


# ---------------------------------------------------------------------------
# Lorentz-Poincare algebra battery
# ---------------------------------------------------------------------------

def verify_poincare_algebra(chart: Chart, y: np.ndarray, step: float = DEFAULT_STEP) -> dict:
    """Residuals of the full generator algebra {P,P}, {J,P}, {J,J}.

    The ten independent generators (4 momenta, 6 rotations/boosts) give a
    10 x 10 table of bracket identities; the residual tensors below carry
    the same content componentwise.
    """
    g = mk.METRIC
    p0 = chart.momentum(y)
    j0 = chart.angular_momentum(y)

    pp = bracket(chart.momentum, chart.momentum, chart.state(y), step)
    jp = bracket(chart.angular_momentum, chart.momentum, chart.state(y), step)
    jj = bracket(chart.angular_momentum, chart.angular_momentum, chart.state(y), step)

    jp_expected = np.einsum("ml,n->mnl", g, p0) - np.einsum("nl,m->mnl", g, p0)
    jj_expected = (
        np.einsum("ml,nr->mnlr", g, j0)
        - np.einsum("nl,mr->mnlr", g, j0)
        - np.einsum("mr,nl->mnlr", g, j0)
        + np.einsum("nr,ml->mnlr", g, j0)
    )
    residuals = {
        "pp": float(np.abs(pp).max()),
        "jp": float(np.abs(jp - jp_expected).max()),
        "jj": float(np.abs(jj - jj_expected).max()),
    }
    residuals["max"] = max(residuals.values())
    residuals["n_identities"] = 100
    return residuals


def ell_tensor_observable(chart: Chart) -> Callable:
    def f(y: np.ndarray) -> np.ndarray:
        p = chart.momentum(y)
        return mk.project_tensor(p, chart.angular_momentum(y))

    return f


def ell_vector_observable(chart: Chart) -> Callable:
    def f(y: np.ndarray) -> np.ndarray:
        p = chart.momentum(y)
        u = p / mk.invariant_mass(p)
        return mk.dualize(mk.project_tensor(p, chart.angular_momentum(y)), u)

    return f


def verify_internal_rotation_algebra(
    chart: Chart,
    y: np.ndarray,
    internal_vector: Callable | None = None,
    step: float = DEFAULT_STEP,
) -> dict:
    """Residuals of the internal-rotation bracket identities.

    Checks that the spatial internal angular momentum generates rotations
    in the CM hyperplane: its tensor/vector self-brackets and, when an
    internal vector observable A is supplied, the mixed brackets {A, ell}.
    """
    s = chart.state(y)
    ell_t = ell_tensor_observable(chart)
    ell_v = ell_vector_observable(chart)

    p0 = chart.momentum(y)
    u0 = p0 / mk.invariant_mass(p0)
    delta0 = mk.projector(p0)
    l0 = ell_t(y)

    out: dict[str, float] = {}

    ll = bracket(ell_t, ell_t, s, step)
    ll_expected = (
        np.einsum("mr,ln->mnlr", delta0, l0)
        - np.einsum("nl,mr->mnlr", delta0, l0)
        + np.einsum("nr,ml->mnlr", delta0, l0)
        - np.einsum("ml,rn->mnlr", delta0, l0)
    )
    out["ell_t_self"] = float(np.abs(ll - ll_expected).max())

    lvlv = bracket(ell_v, ell_v, s, step)
    out["ell_v_self"] = float(np.abs(lvlv - l0).max())

    if internal_vector is not None:
        a0 = np.asarray(internal_vector(y), dtype=float)

        al = bracket(internal_vector, ell_t, s, step)
        al_expected = np.einsum("ml,n->mnl", delta0, a0) - np.einsum("mn,l->mnl", delta0, a0)
        out["a_ell_t"] = float(np.abs(al - al_expected).max())

        lva = bracket(ell_v, internal_vector, s, step)
        lva_expected = np.einsum("mnlr,l,r->mn", mk.EPS_UPPER, mk.lower(a0), mk.lower(u0))
        out["ell_v_a"] = float(np.abs(lva - lva_expected).max())

        ap = bracket(internal_vector, chart.momentum, s, step)
        out["a_p"] = float(np.abs(ap).max())

    out["max"] = max(out.values())
    return out


# ---------------------------------------------------------------------------
# LRL self-bracket law and localizability
# ---------------------------------------------------------------------------

def proportionality_fit(t: np.ndarray, basis: np.ndarray) -> tuple[float, float]:
    """Least-squares coefficient c of t ~ c * basis and the fit residual."""
    denom = float((basis * basis).sum())
    if denom == 0.0:
        return 0.0, float(np.abs(t).max())
    c = float((t * basis).sum() / denom)
    return c, float(np.abs(t - c * basis).max())


def lrl_selfbracket_check(
    k: Callable,
    ell_t_value: np.ndarray,
    f_partial: float,
    s: CanonicalState,
    step: float = DEFAULT_STEP,
) -> dict:
    """Check {K^mu, K^nu} = -f_partial * ell^{mu nu} at the state s.

    f_partial is the closed-form derivative of K^2 with respect to the
    squared internal angular momentum, supplied by the system module.
    Also reports the invariance {K^mu, ell.K} = 0 and a free
    proportionality fit of {K,K} against ell.
    """
    kk = bracket(k, k, s, step)
    residual = float(np.abs(kk + f_partial * ell_t_value).max())
    coef, prop_residual = proportionality_fit(kk, np.asarray(ell_t_value))
    return {
        "residual": residual,
        "fitted_coef": coef,
        "expected_coef": -f_partial,
        "proportionality_residual": prop_residual,
    }


def invariance_check(k: Callable, scalar: Callable, s: CanonicalState, step: float = DEFAULT_STEP) -> float:
    """max |{K^mu, A}| for an internal scalar observable A."""
    r = bracket(k, scalar, s, step)
    return float(np.abs(r).max())


def boundness_index(f_partial: float) -> int:
    """eta = -sign(d(K^2)/d(ell^2)): +1 for bound, -1 for unbound systems."""
    if f_partial == 0.0:
        raise ValueError("degenerate (transition) state")
    return -1 if f_partial > 0 else 1


def localizability_check(
    q: Callable,
    ell_t_value: np.ndarray,
    m2: float,
    closed_form_coef: float,
    s: CanonicalState,
    step: float = DEFAULT_STEP,
    tol: float = 1e-6,
) -> dict:
    """Compare {Q,Q} with the system closed form and the canonical target.

    A point-localizable CM coordinate would need {Q^mu, Q^nu} equal to
    -ell^{mu nu} / M^2; generically the measured bracket does not satisfy
    that, and the returned flag records the comparison.
    """
    qq = bracket(q, q, s, step)
    ell = np.asarray(ell_t_value)
    residual = float(np.abs(qq - closed_form_coef * ell).max())
    scale = max(1.0, float(np.abs(ell).max()) / m2)
    localizable = bool(np.abs(qq + ell / m2).max() < tol * scale)
    return {
        "residual": residual,
        "closed_form_coef": closed_form_coef,
        "canonical_coef": -1.0 / m2,
        "localizable": localizable,
    }
