"""Post-Newtonian two-body worked example.

The dynamics is the plain Newtonian Kepler-Coulomb relative motion (that
is all the 1/c^2 bookkeeping requires); on top of it the module evaluates
the closed-form trivial/non-trivial solutions of the CM-integration
equation and the shift vector, which is proportional to the Newtonian LRL
vector.  Everything lives in the CM frame, where the time component of
the shift vanishes and 3-vectors suffice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import integrate


@dataclass(frozen=True)
class PNConfig:
    """Masses, coupling (e1*e2 electric or -G*m1*m2 gravitational), and c."""

    m1: float
    m2: float
    kappa: float
    c: float = 1.0

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("masses must be positive")
        if self.c <= 0:
            raise ValueError("speed of light must be positive")

    @property
    def M0(self) -> float:
        return self.m1 + self.m2

    @property
    def mu(self) -> float:
        return self.m1 * self.m2 / self.M0

    @property
    def prefactor(self) -> float:
        """(m1 - m2) / (2 M0^2 c^2), the shift-vector scale."""
        return (self.m1 - self.m2) / (2.0 * self.M0**2 * self.c**2)


@dataclass(frozen=True)
class PNState:
    """Relative coordinate and velocity (3-vectors) at time t."""

    r: np.ndarray
    v: np.ndarray
    t: float = 0.0

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.r, self.v])

    @classmethod
    def from_flat(cls, y: np.ndarray, t: float = 0.0) -> "PNState":
        return cls(r=np.asarray(y[0:3], float), v=np.asarray(y[3:6], float), t=t)


def _rnorm(r: np.ndarray) -> float:
    rn = float(np.sqrt(r @ r))
    if rn <= 0.0:
        raise ValueError("coincident bodies: r = 0 singularity")
    return rn


def newton_rhs(s: PNState, cfg: PNConfig) -> tuple[np.ndarray, np.ndarray]:
    """dr/dt = v, mu dv/dt = kappa r / r^3."""
    rn = _rnorm(s.r)
    return s.v.copy(), (cfg.kappa / cfg.mu) * s.r / rn**3


def flow_problem(cfg: PNConfig, s: PNState, t_span: tuple[float, float]) -> integrate.FlowProblem:
    params = np.array([cfg.mu, cfg.kappa])

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        from . import _core

        return _core.flow_rhs("pn", params, t, y)

    return integrate.FlowProblem(rhs=rhs, y0=s.flat, span=t_span, kernel=("pn", params))


def energy(s: PNState, cfg: PNConfig) -> float:
    return 0.5 * cfg.mu * float(s.v @ s.v) + cfg.kappa / _rnorm(s.r)


def angular_momentum(s: PNState, cfg: PNConfig) -> np.ndarray:
    return cfg.mu * np.cross(s.r, s.v)


def dR_dt(s: PNState, cfg: PNConfig) -> np.ndarray:
    """Projected rate of the mass-weighted CM at order 1/c^2."""
    rn = _rnorm(s.r)
    v2 = float(s.v @ s.v)
    vr = float(s.v @ s.r)
    return cfg.prefactor * ((cfg.mu * v2 + cfg.kappa / rn) * s.v + (cfg.kappa * vr / rn**3) * s.r)


def lrl_vector(s: PNState, cfg: PNConfig) -> np.ndarray:
    """Newtonian LRL vector K = (mu v^2 + kappa/r) r - mu (v.r) v."""
    rn = _rnorm(s.r)
    v2 = float(s.v @ s.v)
    vr = float(s.v @ s.r)
    return (cfg.mu * v2 + cfg.kappa / rn) * s.r - cfg.mu * vr * s.v


def lrl_vector_cross_form(s: PNState, cfg: PNConfig) -> np.ndarray:
    """Equivalent form K = v x ell + (kappa/r) r."""
    rn = _rnorm(s.r)
    return np.cross(s.v, angular_momentum(s, cfg)) + (cfg.kappa / rn) * s.r


def closed_forms(s: PNState, cfg: PNConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(R1, R2, Q, K): both CM-integration solutions, their difference,
    and the LRL vector with Q = prefactor * K exactly."""
    rn = _rnorm(s.r)
    v2 = float(s.v @ s.v)
    vr = float(s.v @ s.r)
    r1 = cfg.prefactor * (cfg.mu * v2 + cfg.kappa / rn) * s.r
    r2 = cfg.prefactor * cfg.mu * vr * s.v
    k = lrl_vector(s, cfg)
    return r1, r2, r1 - r2, k


class PNModel:
    """Adapter for the generic CM-integration residual check."""

    def __init__(self, cfg: PNConfig):
        self.cfg = cfg

    def xn_projected_rate(self, s: PNState) -> np.ndarray:
        return dR_dt(s, self.cfg)


# ---------------------------------------------------------------------------
# Orbit construction and perihelion machinery
# ---------------------------------------------------------------------------

def circular_state(cfg: PNConfig, r: float) -> PNState:
    """Circular orbit (requires attractive coupling kappa < 0)."""
    if cfg.kappa >= 0:
        raise ValueError("circular orbits require attractive coupling")
    vmag = np.sqrt(-cfg.kappa / (cfg.mu * r))
    return PNState(r=np.array([r, 0.0, 0.0]), v=np.array([0.0, vmag, 0.0]))


def bound_state(cfg: PNConfig, r_peri: float, ecc: float, seed: int | None = None) -> PNState:
    """Bound planar orbit launched at perihelion with eccentricity ecc."""
    if cfg.kappa >= 0:
        raise ValueError("bound orbits require attractive coupling")
    if not 0.0 <= ecc < 1.0:
        raise ValueError("eccentricity must be in [0, 1)")
    vmag = np.sqrt(-cfg.kappa * (1.0 + ecc) / (cfg.mu * r_peri))
    state = PNState(r=np.array([r_peri, 0.0, 0.0]), v=np.array([0.0, vmag, 0.0]))
    if seed is not None:
        # random in-plane rotation exercises orientation independence
        ang = np.random.default_rng(seed).uniform(0.0, 2 * np.pi)
        rot = np.array(
            [[np.cos(ang), -np.sin(ang), 0.0], [np.sin(ang), np.cos(ang), 0.0], [0.0, 0.0, 1.0]]
        )
        state = PNState(r=rot @ state.r, v=rot @ state.v)
    return state


def unbound_state(cfg: PNConfig, r0: float, v_inf_scale: float = 1.2) -> PNState:
    """Hyperbolic-like initial data with positive total energy."""
    v_escape = np.sqrt(2.0 * abs(cfg.kappa) / (cfg.mu * r0))
    vmag = v_inf_scale * v_escape
    return PNState(r=np.array([r0, 0.0, 0.0]), v=np.array([-vmag * 0.6, vmag * 0.8, 0.0]))


def period(cfg: PNConfig, s: PNState) -> float:
    """Kepler period from the semi-major axis (bound orbits only)."""
    e_tot = energy(s, cfg)
    if e_tot >= 0:
        raise ValueError("period is defined for bound orbits only")
    a = cfg.kappa / (2.0 * e_tot)
    return 2.0 * np.pi * np.sqrt(cfg.mu * a**3 / -cfg.kappa)


def perihelion_times(traj: integrate.Trajectory, refine_tol: float = 1e-12) -> np.ndarray:
    """Times of local minima of |r| along a sampled trajectory.

    Minima are bracketed on the sample grid and refined by golden-section
    search on the cubic Hermite interpolant.
    """
    rn = np.sqrt((traj.states[:, 0:3] ** 2).sum(axis=1))
    times = []
    for i in range(1, len(rn) - 1):
        if rn[i] < rn[i - 1] and rn[i] <= rn[i + 1]:
            f = lambda t: float(np.sqrt((traj.interpolate(t)[0:3] ** 2).sum()))
            times.append(integrate.golden_minimize(f, traj.sigmas[i - 1], traj.sigmas[i + 1], refine_tol))
    return np.array(times)
