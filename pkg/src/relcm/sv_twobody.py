"""Fully relativistic two-body system with light-like scalar-vector coupling.

The model is a first-class-constraint system on the 16-dimensional chart
(z, P, x, q): P is conjugate to the global coordinate z, q to the relative
coordinate x, and the dynamics is the sigma-flow generated by the
constraint phi (admissible initial data satisfy phi = 0 and the light-cone
condition x.x = 0; both are preserved by the flow).  Scalar and vector
couplings are equal up to the sign alpha; chi is the sign of P.x, fixed by
the retarded/advanced character of the initial data.

Closed forms implemented here: the internal momentum Pi, the spatial
internal angular momentum, the trivial/non-trivial CM-integration
solutions R1/R2, the shift vector Q, and the LRL vector K with
Q = 2 (m1 - m2) / (M0 [M^2 - (m1 - m2)^2]) * K.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import _core
from . import integrate
from . import minkowski as mk
from . import poisson


@dataclass(frozen=True)
class SVConfig:
    """Masses, vector coupling kappa, scalar-coupling sign alpha, chi, gauge."""

    m1: float
    m2: float
    kappa: float
    alpha: int = 1
    chi: int = 1
    lam_gauge: float = 1.0

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("masses must be positive")
        if self.alpha not in (1, -1):
            raise ValueError("alpha must be +1 or -1")
        if self.chi not in (1, -1):
            raise ValueError("chi must be +1 or -1")
        if self.lam_gauge <= 0:
            raise ValueError("lam_gauge must be positive")

    @property
    def M0(self) -> float:
        return self.m1 + self.m2

    @property
    def params(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.kappa, float(self.alpha), float(self.chi), self.lam_gauge])


@dataclass(frozen=True)
class SVPhase:
    """Canonical phase-space point (z, P, x, q)."""

    z: np.ndarray
    P: np.ndarray
    x: np.ndarray
    q: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.z, self.P, self.x, self.q])

    @classmethod
    def from_flat(cls, y: np.ndarray) -> "SVPhase":
        y = np.asarray(y, dtype=float)
        return cls(z=y[0:4], P=y[4:8], x=y[8:12], q=y[12:16])


# ---------------------------------------------------------------------------
# Mass functions
# ---------------------------------------------------------------------------

def b_of_m2(m2_val: float, m1: float, m2: float) -> float:
    """b(M^2) in factored form (M^2 - M0^2)(M^2 - (m1-m2)^2) / (4 M^2)."""
    if m2_val <= 0:
        raise ValueError("M^2 must be positive")
    return (m2_val - (m1 + m2) ** 2) * (m2_val - (m1 - m2) ** 2) / (4.0 * m2_val)


def b_of_m2_quartic(m2_val: float, m1: float, m2: float) -> float:
    """Unfactored quartic form of b(M^2); equals the factored form."""
    if m2_val <= 0:
        raise ValueError("M^2 must be positive")
    return (
        m2_val**2 - 2.0 * m2_val * (m1**2 + m2**2) + (m1**2 - m2**2) ** 2
    ) / (4.0 * m2_val)


def g_of_m2(m2_val: float, cfg: SVConfig) -> float:
    """g(M^2) = (chi kappa / 2) [M^2 - (m1 - alpha m2)^2]."""
    return 0.5 * cfg.chi * cfg.kappa * (m2_val - (cfg.m1 - cfg.alpha * cfg.m2) ** 2)


# ---------------------------------------------------------------------------
# Observables on a phase-space point
# ---------------------------------------------------------------------------

def _px(s: SVPhase) -> float:
    px = float(mk.dot(s.P, s.x))
    if px == 0.0:
        raise ZeroDivisionError("singular configuration: P.x = 0")
    return px


def chi_of(s: SVPhase) -> int:
    """Sign of P.x, the retarded/advanced marker of the state."""
    return 1 if _px(s) > 0 else -1


def mass_sq(s: SVPhase) -> float:
    return mk.invariant_mass_sq(s.P)


def constraint_phi(s: SVPhase, cfg: SVConfig) -> float:
    """Canonical form of the first-class constraint."""
    px = _px(s)
    w = mass_sq(s)
    return (
        float(mk.dot(s.q, s.q))
        - 2.0 * float(mk.dot(s.P, s.q)) * float(mk.dot(s.q, s.x)) / px
        - 2.0 * g_of_m2(w, cfg) / px
        - b_of_m2(w, cfg.m1, cfg.m2)
    )


def pi_internal(s: SVPhase) -> np.ndarray:
    """Internal momentum Pi = q - (P.q / P.x) x; satisfies Pi.P = 0."""
    px = _px(s)
    return s.q - (float(mk.dot(s.P, s.q)) / px) * s.x


def x_perp(s: SVPhase) -> np.ndarray:
    return mk.project(s.P, s.x)


def constraint_phi_pi_form(s: SVPhase, cfg: SVConfig) -> float:
    """Equivalent form phi = Pi^2 - 2 g(M^2)/(P.x) - b(M^2)."""
    px = _px(s)
    w = mass_sq(s)
    pi = pi_internal(s)
    return float(mk.dot(pi, pi)) - 2.0 * g_of_m2(w, cfg) / px - b_of_m2(w, cfg.m1, cfg.m2)


def ell_tensor(s: SVPhase) -> np.ndarray:
    """Spatial internal angular momentum, x_perp wedge Pi."""
    return mk.wedge(x_perp(s), pi_internal(s))


def ell_squared(s: SVPhase) -> float:
    ell = ell_tensor(s)
    return 0.5 * float(np.einsum("mn,mn->", ell, mk.lower2(ell)))


def angular_momentum(s: SVPhase) -> np.ndarray:
    """Conserved total angular momentum J = z ^ P + x ^ q."""
    return mk.wedge(s.z, s.P) + mk.wedge(s.x, s.q)


def center_of_inertia(s: SVPhase) -> np.ndarray:
    """X_I = z_perp + (P.x / M^2) Pi (constant along the flow)."""
    return mk.project(s.P, s.z) + (_px(s) / mass_sq(s)) * pi_internal(s)


def newtonian_cm(s: SVPhase, cfg: SVConfig) -> np.ndarray:
    """Mass-weighted CM in terms of the canonical variables."""
    w = mass_sq(s)
    dm2 = cfg.m1**2 - cfg.m2**2
    px = _px(s)
    return s.z + 0.5 * dm2 * ((1.0 / cfg.M0**2 - 1.0 / w) * s.x - 2.0 * px / w**2 * s.P)


# ---------------------------------------------------------------------------
# Flow
# ---------------------------------------------------------------------------

def flow_rhs(s: SVPhase, cfg: SVConfig) -> SVPhase:
    """Analytic sigma-rates of (z, P, x, q) generated by the constraint.

    d(coordinate)/dsigma = (lam/2) dphi/d(momentum) with the index raised
    by the metric, and the conjugate-momentum equations with the opposite
    sign; P is conserved because phi does not depend on z.
    """
    dy = _core.flow_rhs("sv", cfg.params, 0.0, s.flat)
    return SVPhase.from_flat(dy)


def flow_problem(cfg: SVConfig, s: SVPhase, span: tuple[float, float]) -> integrate.FlowProblem:
    params = cfg.params

    def rhs(sig: float, y: np.ndarray) -> np.ndarray:
        return _core.flow_rhs("sv", params, sig, y)

    return integrate.FlowProblem(rhs=rhs, y0=s.flat, span=span, kernel=("sv", params))


# ---------------------------------------------------------------------------
# Closed forms of the CM integration
# ---------------------------------------------------------------------------

def _shift_prefactor(w: float, cfg: SVConfig) -> float:
    denom = cfg.M0 * (w - (cfg.m1 - cfg.m2) ** 2)
    if abs(denom) < 1e-14:
        raise ValueError("degenerate 2-body kinematics")
    return 2.0 * (cfg.m1 - cfg.m2) / denom


def lrl_vector(s: SVPhase, cfg: SVConfig) -> np.ndarray:
    """K = Pi_nu ell^{mu nu} - (g(M^2)/P.x) x_perp."""
    px = _px(s)
    w = mass_sq(s)
    pi = pi_internal(s)
    xb = x_perp(s)
    return ell_tensor(s) @ mk.lower(pi) - (g_of_m2(w, cfg) / px) * xb


def closed_forms(s: SVPhase, cfg: SVConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(R1, R2, Q, K) with Q = R1 - R2 = prefactor * K."""
    px = _px(s)
    w = mass_sq(s)
    pi = pi_internal(s)
    xb = x_perp(s)
    gval = g_of_m2(w, cfg)
    pref = _shift_prefactor(w, cfg)

    dm2 = cfg.m1**2 - cfg.m2**2
    r1 = 0.5 * dm2 * (1.0 / cfg.M0**2 - 1.0 / w) * xb - (px / w) * pi
    r2 = pref * (float(mk.dot(pi, xb)) * pi - (gval / px) * xb) - (px / w) * pi
    k = lrl_vector(s, cfg)
    return r1, r2, r1 - r2, k


def r1_forms(s: SVPhase, cfg: SVConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three equivalent forms of the trivial solution R1.

    The first two are algebraically identical; the third uses the
    constraint, so it matches only on-shell.
    """
    px = _px(s)
    w = mass_sq(s)
    pi = pi_internal(s)
    xb = x_perp(s)
    gval = g_of_m2(w, cfg)
    bval = b_of_m2(w, cfg.m1, cfg.m2)
    pref = _shift_prefactor(w, cfg)
    dm2 = cfg.m1**2 - cfg.m2**2

    f1 = 0.5 * dm2 * (1.0 / cfg.M0**2 - 1.0 / w) * xb - (px / w) * pi
    f2 = pref * bval * xb - (px / w) * pi
    f3 = pref * (float(mk.dot(pi, pi)) - 2.0 * gval / px) * xb - (px / w) * pi
    return f1, f2, f3


def shift_vector(s: SVPhase, cfg: SVConfig) -> np.ndarray:
    """Q = prefactor * K, constant along the flow."""
    return _shift_prefactor(mass_sq(s), cfg) * lrl_vector(s, cfg)


def k_squared_residual(s: SVPhase, cfg: SVConfig, on_shell_tol: float = 1e-10) -> float:
    """|K.K - (b ell^2 + g^2/M^2)| at an on-shell state.

    The identity holds on the constraint surface with light-like x, so
    off-shell input is rejected.
    """
    phi = constraint_phi(s, cfg)
    if abs(phi) > on_shell_tol:
        raise ValueError(f"on-shell check called off-shell: phi = {phi:.3e}")
    w = mass_sq(s)
    k = lrl_vector(s, cfg)
    expected = b_of_m2(w, cfg.m1, cfg.m2) * ell_squared(s) + g_of_m2(w, cfg) ** 2 / w
    return abs(float(mk.dot(k, k)) - expected)


def kk_bracket_coefficient(s: SVPhase, cfg: SVConfig) -> float:
    """Closed-form coefficient of ell^{mu nu} in {K, K}: -b(M^2)."""
    return -b_of_m2(mass_sq(s), cfg.m1, cfg.m2)


def qq_bracket_coefficient(s: SVPhase, cfg: SVConfig) -> float:
    """Closed-form coefficient of ell^{mu nu} in {Q, Q}."""
    w = mass_sq(s)
    bval = b_of_m2(w, cfg.m1, cfg.m2)
    return -4.0 * (cfg.m1 - cfg.m2) ** 2 * bval / (cfg.M0**2 * (w - (cfg.m1 - cfg.m2) ** 2) ** 2)


class SVModel:
    """Adapter for the generic CM-integration residual check."""

    def __init__(self, cfg: SVConfig):
        self.cfg = cfg

    def xn_projected_rate(self, s: SVPhase) -> np.ndarray:
        """Projected mass-weighted CM rate, evaluated analytically."""
        rate = flow_rhs(s, self.cfg)
        dm2 = self.cfg.m1**2 - self.cfg.m2**2
        coeff = 0.5 * dm2 * (1.0 / self.cfg.M0**2 - 1.0 / mass_sq(s))
        return mk.project(s.P, rate.z) + coeff * mk.project(s.P, rate.x)


# ---------------------------------------------------------------------------
# Admissible initial data
# ---------------------------------------------------------------------------

def _stable_gauge_momentum(cfg: SVConfig, m_target: float, s_val: float, qx: float) -> float:
    """Pick P.q on the contracting branch of its gauge-sector flow.

    Along the flow f = P.q obeys a Riccati equation
    df/dsigma = (lam/s)[f^2 + (qx M^2 / s) f + g M^2 / s]; the branch above
    the separatrix diverges in finite sigma (a gauge artifact: the internal
    dynamics stays a clean conic orbit).  Seeding f at the attracting root,
    or at the vertex when the roots are complex, keeps the full chart
    regular until the next perihelion passage.
    """
    w = m_target**2
    gval = g_of_m2(w, cfg)
    a = 1.0 / s_val
    b_lin = qx * w / s_val**2
    c = gval * w / s_val**2
    disc = b_lin**2 - 4.0 * a * c
    if disc <= 0.0:
        return -b_lin / (2.0 * a)
    r1 = (-b_lin - np.sqrt(disc)) / (2.0 * a)
    r2 = (-b_lin + np.sqrt(disc)) / (2.0 * a)
    # stable root: negative slope of the quadratic there
    return r1 if 2.0 * a * r1 + b_lin < 0 else r2


def init_state(
    cfg: SVConfig,
    m_target: float,
    ell_target: float,
    seed: int = 0,
    r: float | None = None,
    boost_v: np.ndarray | None = None,
    outgoing: bool = True,
) -> SVPhase:
    """Build a CM-frame state with invariant mass m_target, phi = 0,
    light-like x (sign matching chi) and |ell| close to ell_target.

    The radial component of the internal momentum is fixed by a 1-D root
    solve of the constraint at the chosen separation.  By default the state
    is launched outgoing shortly after closest approach with the gauge
    momentum P.q on its stable branch, which keeps the 16-dimensional flow
    regular for a full radial period.
    """
    if m_target <= abs(cfg.m1 - cfg.m2):
        raise ValueError("target mass must exceed |m1 - m2|")
    rng = np.random.default_rng(seed)
    w = m_target**2
    bval = b_of_m2(w, cfg.m1, cfg.m2)
    # on-shell radial law: Pi^2(r) = b + c_eff / r with c_eff frame-invariant
    c_eff = cfg.kappa * (w - (cfg.m1 - cfg.alpha * cfg.m2) ** 2) / m_target

    if r is None:
        roots = np.roots([bval, c_eff, -(ell_target**2)])
        roots = np.sort(roots[np.abs(roots.imag) < 1e-12].real)
        pos = roots[roots > 0]
        if bval < 0:
            if c_eff <= 0 or len(pos) < 2:
                raise ValueError(
                    "no bound orbit at this (M, ell): need attractive effective "
                    f"coupling and ell^2 <= c_eff^2/(-4b); got c_eff={c_eff:.3g}, b={bval:.3g}"
                )
            r = float(rng.uniform(pos[0] + 0.05 * (pos[1] - pos[0]), pos[0] + 0.4 * (pos[1] - pos[0])))
        else:
            # start far enough out that the gauge momentum P.q has an
            # attracting branch along the whole escape (b r^2 - c_eff r -
            # ell^2 >= 0 keeps its Riccati roots real for an outgoing state)
            disc = c_eff**2 + 4.0 * bval * ell_target**2
            r_free = (c_eff + np.sqrt(disc)) / (2.0 * bval) if disc >= 0 else 0.0
            r_min = max((p for p in pos), default=0.0)
            r = float(max(r_free, r_min, 0.5) * rng.uniform(1.1, 1.4))

    pi_sq_needed = bval + c_eff / r
    pi_tan = ell_target / r
    f = lambda a: a * a + pi_tan**2 - pi_sq_needed
    if f(0.0) > 0.0:
        raise ValueError(
            "root solve for the radial momentum failed: constraint has no real "
            f"solution at r={r:.4g} (phi(0)={f(0.0):.3e} > 0); adjust r or ell_target"
        )
    hi = np.sqrt(pi_sq_needed) + 1.0
    pi_rad = brentq(f, 0.0, hi, xtol=1e-14, rtol=8.9e-16)
    if not outgoing:
        pi_rad = -pi_rad

    # random orbital plane orientation
    e1 = np.array([np.cos(th := rng.uniform(0, 2 * np.pi)), np.sin(th), 0.0])
    e2 = np.array([-np.sin(th), np.cos(th), 0.0])

    P = np.array([m_target, 0.0, 0.0, 0.0])
    x3 = r * e1
    x = np.concatenate([[-cfg.chi * r], x3])  # light-like, sign(P.x) = chi
    pi3 = pi_rad * e1 + pi_tan * e2
    s_val = cfg.chi * m_target * r  # P.x in the CM frame
    q0 = -_stable_gauge_momentum(cfg, m_target, s_val, r * pi_rad) / m_target
    q = np.concatenate([[q0], pi3 - (q0 / (cfg.chi * r)) * x3])
    z = np.concatenate([rng.uniform(-0.5, 0.5, 1), rng.uniform(-1.0, 1.0, 3)])

    s = SVPhase(z=z, P=P, x=x, q=q)
    if boost_v is not None:
        s = boost_state(s, boost_v)
    return s


def boost_state(s: SVPhase, v: np.ndarray) -> SVPhase:
    return SVPhase(z=mk.boost(v, s.z), P=mk.boost(v, s.P), x=mk.boost(v, s.x), q=mk.boost(v, s.q))


# ---------------------------------------------------------------------------
# Canonical chart for the bracket engine
# ---------------------------------------------------------------------------

def chart(cfg: SVConfig) -> poisson.Chart:
    def momentum(y: np.ndarray) -> np.ndarray:
        return y[4:8]

    def angular_momentum(y: np.ndarray) -> np.ndarray:
        return mk.wedge(y[0:4], y[4:8]) + mk.wedge(y[8:12], y[12:16])

    return poisson.Chart(
        name="sv", pair_names=(("z", "P"), ("x", "q")), momentum=momentum, angular_momentum=angular_momentum
    )


def k_observable(cfg: SVConfig):
    def k_func(y: np.ndarray) -> np.ndarray:
        return lrl_vector(SVPhase.from_flat(y), cfg)

    return k_func


def q_observable(cfg: SVConfig):
    def q_func(y: np.ndarray) -> np.ndarray:
        return shift_vector(SVPhase.from_flat(y), cfg)

    return q_func


def pi_observable(cfg: SVConfig):
    def pi_func(y: np.ndarray) -> np.ndarray:
        return pi_internal(SVPhase.from_flat(y))

    return pi_func


def ell_dot_k_observable(cfg: SVConfig):
    """Internal scalar ell.K, whose bracket with K must vanish."""

    def f(y: np.ndarray) -> float:
        s = SVPhase.from_flat(y)
        u = s.P / mk.invariant_mass(s.P)
        ell_v = mk.dualize(ell_tensor(s), u)
        return float(mk.dot(ell_v, lrl_vector(s, cfg)))

    return f
