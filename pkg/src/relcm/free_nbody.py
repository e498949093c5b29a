"""Interaction-free relativistic N-body system.

Particles move on straight worldlines with constant unit 4-velocities, so
every observable is closed-form.  The module builds the auxiliary vector G
(the unique solution of the Gram linear system G.u_a = 1), the trivial and
non-trivial solutions R1, R2 of the CM-integration equation, and the
constant shift vector Q = R1 - R2 = G_nu ell^{mu nu} / M0, which is the
system's internal LRL-type vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import minkowski as mk
from . import poisson
from .observables import center_of_inertia, newtonian_cm, spatial_internal_ell

MAX_GRAM_COND = 1e12


@dataclass(frozen=True)
class FreeParticle:
    """Mass, an initial event on the worldline, and the unit 4-velocity."""

    m: float
    x0: np.ndarray
    u: np.ndarray


@dataclass(frozen=True)
class GVector:
    """G = sum_a alpha_a u_a with G.u_a = 1 for every particle."""

    G: np.ndarray
    alphas: np.ndarray


@dataclass
class FreeSystem:
    particles: list[FreeParticle]
    gauge: str = "labtime"
    _gvector: GVector | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.particles:
            raise ValueError("need at least one particle")
        if self.gauge not in ("labtime", "affine"):
            raise ValueError("gauge must be 'labtime' or 'affine'")
        for p in self.particles:
            if p.m <= 0:
                raise ValueError("masses must be positive")
            if abs(mk.dot(p.u, p.u) + 1.0) > 1e-12:
                raise ValueError("4-velocities must be unit timelike (u.u = -1)")
        mk.invariant_mass_sq(self.P)  # total momentum must be timelike

    # -- static global data ------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.particles)

    @property
    def masses(self) -> np.ndarray:
        return np.array([p.m for p in self.particles])

    @property
    def momenta(self) -> np.ndarray:
        return np.array([p.m * p.u for p in self.particles])

    @property
    def P(self) -> np.ndarray:
        return self.momenta.sum(axis=0)

    @property
    def M(self) -> float:
        return mk.invariant_mass(self.P)

    @property
    def M0(self) -> float:
        return float(self.masses.sum())

    @property
    def U(self) -> np.ndarray:
        return self.P / self.M

    @property
    def J(self) -> np.ndarray:
        # constant: sliding x0 along u changes x0 ^ p by (u ^ u) terms only
        j = np.zeros((4, 4))
        for p, mom in zip(self.particles, self.momenta):
            j += mk.wedge(p.x0, mom)
        return j

    def ell_tensor(self) -> np.ndarray:
        return spatial_internal_ell(self.P, self.J)

    def ell_vector(self) -> np.ndarray:
        return mk.dualize(self.ell_tensor(), self.U)

    # -- trajectories --------------------------------------------------------

    def evolve(self, sigma: float) -> np.ndarray:
        """Particle events at the common evolution parameter sigma.

        In the default lab-time gauge all particles share the coordinate
        time x^0 = sigma (generalized Lorentz factor gamma_a = u_a^0); the
        affine gauge advances each worldline by sigma units of proper time
        (gamma_a = 1).
        """
        out = np.empty((self.n, 4))
        for a, p in enumerate(self.particles):
            if self.gauge == "labtime":
                out[a] = p.x0 + ((sigma - p.x0[0]) / p.u[0]) * p.u
            else:
                out[a] = p.x0 + sigma * p.u
        return out

    def gammas(self) -> np.ndarray:
        if self.gauge == "labtime":
            return np.array([p.u[0] for p in self.particles])
        return np.ones(self.n)

    def velocities(self) -> np.ndarray:
        """Generalized velocities dx_a/dsigma = u_a / gamma_a."""
        return np.array([p.u for p in self.particles]) / self.gammas()[:, None]

    def spatial_parts(self, sigma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CM-frame spatial coordinates xi_a, momenta q_a and energies E_a."""
        xs = self.evolve(sigma)
        xi = mk.project(self.P, xs)
        q = mk.project(self.P, self.momenta)
        e = -mk.dot(self.momenta, self.U)
        return xi, q, e

    # -- G vector and CM integration -----------------------------------------

    def solve_G(self) -> GVector:
        """Solve the Gram system sum_b (u_a.u_b) alpha_b = 1 for G.

        For N <= 4 the Gram matrix is generically nonsingular and the solve
        is direct.  For N >= 5 it is structurally rank-deficient (the
        velocities live in 4 dimensions), and a solution exists only for
        velocity sets admitting a common normalization vector G.u_a = 1;
        those are solved in the least-squares sense and the normalization
        is verified, so inadmissible configurations are rejected.
        """
        if self._gvector is None:
            us = np.array([p.u for p in self.particles])
            gram = np.array([[mk.dot(ua, ub) for ub in us] for ua in us])
            if self.n <= 4:
                if np.linalg.cond(gram) > MAX_GRAM_COND:
                    raise ValueError("degenerate velocity configuration")
                alphas = np.linalg.solve(gram, np.ones(self.n))
            else:
                alphas = np.linalg.lstsq(gram, np.ones(self.n), rcond=None)[0]
            g = (alphas[:, None] * us).sum(axis=0)
            if np.abs(mk.dot(g, us) - 1.0).max() > 1e-9:
                raise ValueError("degenerate velocity configuration")
            self._gvector = GVector(G=g, alphas=alphas)
        return self._gvector

    def g_perp(self) -> np.ndarray:
        return mk.project(self.P, self.solve_G().G)

    def r1_r2_Q(self, sigma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Trivial solution, non-trivial solution, and their difference.

        R1 is the projected mass-weighted CM minus the centre-of-inertia;
        R2 carries the G-weighted coordinates; Q = R1 - R2 is constant in
        sigma and equals the closed form G_nu ell^{mu nu} / M0.
        """
        xs = self.evolve(sigma)
        xi, q, e = self.spatial_parts(sigma)
        m2 = self.M * self.M
        xp = mk.dot(xs, self.P)

        coeff = self.masses / self.M0 - e / self.M
        r1 = (coeff[:, None] * xi).sum(axis=0) - ((xp / m2)[:, None] * q).sum(axis=0)

        gp = self.g_perp()
        r2 = ((mk.dot(gp, xi) / self.M0)[:, None] * q).sum(axis=0) - ((xp / m2)[:, None] * q).sum(axis=0)
        return r1, r2, r1 - r2

    def q_closed_form(self) -> np.ndarray:
        """Q^mu = G_nu ell^{mu nu} / M0."""
        return self.ell_tensor() @ mk.lower(self.solve_G().G) / self.M0

    def qq_bracket_closed_form(self) -> tuple[float, float]:
        """Coefficient of ell^{mu nu} in {Q, Q}, and the Q^2 decomposition.

        Returns (-G_perp^2 / M0^2, [G_perp^2 ell^2 - (G.ell)^2] / M0^2); the
        second entry must equal dot(Q, Q).
        """
        gp = self.g_perp()
        gp2 = float(mk.dot(gp, gp))
        ell_t = self.ell_tensor()
        ell_v = self.ell_vector()
        ell2 = 0.5 * float(np.einsum("mn,mn->", ell_t, mk.lower2(ell_t)))
        gdotl = float(mk.dot(self.solve_G().G, ell_v))
        return -gp2 / self.M0**2, (gp2 * ell2 - gdotl**2) / self.M0**2

    def xn_projected_rate(self, sigma: float) -> np.ndarray:
        """Projected rate of the mass-weighted CM: sum_a q_a / (gamma_a M0)."""
        _, q, _ = self.spatial_parts(sigma)
        return (q / self.gammas()[:, None]).sum(axis=0) / self.M0

    def newtonian_cm(self, sigma: float) -> np.ndarray:
        return newtonian_cm(list(zip(self.masses, self.evolve(sigma))))

    def center_of_inertia(self) -> np.ndarray:
        return center_of_inertia(self.P, self.J)

    # -- constructors ----------------------------------------------------------

    @classmethod
    def random(
        cls,
        n: int,
        seed: int,
        p_scale: float = 0.4,
        boost_v: np.ndarray | None = None,
        gauge: str = "labtime",
    ) -> "FreeSystem":
        """Random system built in its rest frame, optionally boosted.

        Masses are uniform in [0.5, 2].  For n <= 4, CM-frame 3-momenta are
        sampled and recentred so they sum to zero, then energies are rebuilt
        on-shell.  For n >= 5 the velocities must admit a common
        normalization vector (see solve_G), so they are drawn with a shared
        Lorentz factor in a randomly boosted frame, which realizes exactly
        that family.
        """
        rng = np.random.default_rng(seed)
        masses = rng.uniform(0.5, 2.0, n)
        if n <= 4:
            w = rng.normal(0.0, p_scale, (n, 3))
            if n > 1:
                w -= w.mean(axis=0)
            else:
                w[:] = 0.0
            energies = np.sqrt(masses**2 + (w**2).sum(axis=1))
            us = np.column_stack([energies, w[:, 0], w[:, 1], w[:, 2]]) / masses[:, None]
        else:
            gamma = rng.uniform(1.05, 1.6)
            speed = np.sqrt(gamma**2 - 1.0)
            dirs = rng.normal(0.0, 1.0, (n, 3))
            dirs /= np.sqrt((dirs**2).sum(axis=1))[:, None]
            us = np.column_stack([np.full(n, gamma), speed * dirs])
            frame_v = rng.uniform(-0.3, 0.3, 3)
            us = np.array([mk.boost(frame_v, u) for u in us])
        times = rng.uniform(-1.0, 1.0, n)
        positions = rng.uniform(-2.0, 2.0, (n, 3))
        particles = []
        for a in range(n):
            x0 = np.concatenate([[times[a]], positions[a]])
            u = us[a]
            if boost_v is not None:
                x0 = mk.boost(boost_v, x0)
                u = mk.boost(boost_v, u)
            particles.append(FreeParticle(m=float(masses[a]), x0=x0, u=u))
        return cls(particles, gauge=gauge)

    @classmethod
    def two_body(cls, m1: float, m2: float, q3: np.ndarray, seed: int = 0, **kw) -> "FreeSystem":
        """Two particles with opposite CM 3-momenta +-q3."""
        rng = np.random.default_rng(seed)
        q3 = np.asarray(q3, dtype=float)
        masses = [m1, m2]
        ws = [q3, -q3]
        particles = []
        for m, w in zip(masses, ws):
            e = np.sqrt(m**2 + w @ w)
            p4 = np.concatenate([[e], w])
            x0 = np.concatenate([rng.uniform(-1, 1, 1), rng.uniform(-2, 2, 3)])
            particles.append(FreeParticle(m=float(m), x0=x0, u=p4 / m))
        return cls(particles, **kw)

    def boosted(self, v: np.ndarray) -> "FreeSystem":
        return FreeSystem(
            [
                FreeParticle(m=p.m, x0=mk.boost(v, p.x0), u=mk.boost(v, p.u))
                for p in self.particles
            ],
            gauge=self.gauge,
        )


def g2_closed_form(sys: FreeSystem) -> np.ndarray:
    """2-body closed form G_perp = 2 (m1 - m2) q / (M^2 - (m1 - m2)^2)."""
    if sys.n != 2:
        raise ValueError("closed form is specific to two bodies")
    m1, m2 = sys.masses
    denom = sys.M**2 - (m1 - m2) ** 2
    if abs(denom) < 1e-12:
        raise ValueError("degenerate 2-body kinematics")
    q = mk.project(sys.P, sys.momenta[0])
    return 2.0 * (m1 - m2) * q / denom


# ---------------------------------------------------------------------------
# Canonical chart for the bracket engine (masses enter as fixed parameters)
# ---------------------------------------------------------------------------

def chart(masses: np.ndarray) -> poisson.Chart:
    """Free-particle canonical chart with pairs (x_a, p_a)."""
    masses = np.asarray(masses, dtype=float)
    n = len(masses)

    def momentum(y: np.ndarray) -> np.ndarray:
        return y.reshape(n, 2, 4)[:, 1, :].sum(axis=0)

    def angular_momentum(y: np.ndarray) -> np.ndarray:
        blocks = y.reshape(n, 2, 4)
        j = np.zeros((4, 4))
        for a in range(n):
            j += mk.wedge(blocks[a, 0], blocks[a, 1])
        return j

    names = tuple((f"x{a + 1}", f"p{a + 1}") for a in range(n))
    return poisson.Chart(name=f"free-{n}", pair_names=names, momentum=momentum, angular_momentum=angular_momentum)


def q_observable(masses: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Shift vector as a phase-space function of the free chart."""
    masses = np.asarray(masses, dtype=float)
    n = len(masses)
    m0 = float(masses.sum())
    ch = chart(masses)

    def q_func(y: np.ndarray) -> np.ndarray:
        p = ch.momentum(y)
        ell = mk.project_tensor(p, ch.angular_momentum(y))
        ps = y.reshape(n, 2, 4)[:, 1, :]
        us = ps / masses[:, None]
        gram = np.array([[mk.dot(ua, ub) for ub in us] for ua in us])
        alphas = np.linalg.solve(gram, np.ones(n))
        g = (alphas[:, None] * us).sum(axis=0)
        return ell @ mk.lower(g) / m0

    return q_func


def system_state(sys: FreeSystem, sigma: float = 0.0) -> np.ndarray:
    """Flatten the system's events and momenta into the chart layout."""
    xs = sys.evolve(sigma)
    ps = sys.momenta
    return np.concatenate([np.concatenate([xs[a], ps[a]]) for a in range(sys.n)])
