"""Frame-covariant observables of a composite relativistic system.

Given the global generators (total momentum P, total angular momentum J
about the coordinate origin) this module extracts the invariant mass, the
centre-of-inertia, the spatial internal angular momentum, and -- once a
system supplies its internal angular momentum j -- the shift vector Q by
which the spatial CM coordinate is displaced from the centre-of-inertia.

It also hosts the generic bookkeeping of the CM-integration procedure:
validating that a candidate internal solution R has the sigma-derivative
equal to the projected rate of the mass-weighted (Newtonian-style) CM.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import minkowski as mk


@dataclass(frozen=True)
class GlobalState:
    """Global generators: total momentum P and angular momentum J."""

    P: np.ndarray
    J: np.ndarray


@dataclass(frozen=True)
class InternalDecomposition:
    """Internal content extracted from (P, J) and a shift vector Q."""

    M: float
    U: np.ndarray
    X_I: np.ndarray
    ell_t: np.ndarray
    ell_v: np.ndarray
    Q: np.ndarray
    X_o: np.ndarray
    j: np.ndarray


@dataclass(frozen=True)
class CentroidLine:
    """Straight CM worldline X_o + tau * P/M."""

    base: np.ndarray
    direction: np.ndarray

    def at(self, tau: float) -> np.ndarray:
        return self.base + tau * self.direction


class SystemModel(Protocol):
    """A concrete system consumed by the generic CM-integration check."""

    def xn_projected_rate(self, state) -> np.ndarray:
        """Sigma-rate of the mass-weighted CM, projected orthogonal to P."""
        ...


def center_of_inertia(P: np.ndarray, J: np.ndarray) -> np.ndarray:
    """X_I^mu = -J^{mu nu} P_nu / M^2; orthogonal to P by antisymmetry."""
    m2 = mk.invariant_mass_sq(P)
    return -(J @ mk.lower(P)) / m2


def spatial_internal_ell(P: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Double projection of J onto the hyperplane orthogonal to P."""
    mk.invariant_mass_sq(P)
    return mk.project_tensor(P, J)


def internal_ell_vector(P: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Dual vector of the spatial internal angular momentum."""
    u = P / mk.invariant_mass(P)
    return mk.dualize(spatial_internal_ell(P, J), u)


def shift_from_internal(j: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Shift vector Q^mu = j^{mu nu} P_nu / M^2."""
    m2 = mk.invariant_mass_sq(P)
    return (np.asarray(j) @ mk.lower(P)) / m2


def recompose_internal(ell_t: np.ndarray, Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Rebuild j^{mu nu} = ell^{mu nu} - Q^mu P^nu + Q^nu P^mu."""
    return np.asarray(ell_t) - mk.wedge(Q, P)


def cm_from_shift(g: GlobalState, Q: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Spatial CM coordinate X_o = X_I + Q, normalized to X_o . P = 0."""
    scale = max(1.0, float(np.abs(Q).max()), mk.invariant_mass(g.P))
    if abs(mk.dot(Q, g.P)) > tol * scale:
        raise ValueError("shift vector must be orthogonal to the total momentum")
    return mk.project(g.P, center_of_inertia(g.P, g.J) + Q)


def decompose(P: np.ndarray, J: np.ndarray, Q: np.ndarray | None = None) -> InternalDecomposition:
    """Full internal decomposition; Q defaults to zero (inertia centroid)."""
    m = mk.invariant_mass(P)
    u = P / m
    ell_t = spatial_internal_ell(P, J)
    ell_v = mk.dualize(ell_t, u)
    if Q is None:
        Q = np.zeros(4)
    x_i = center_of_inertia(P, J)
    x_o = cm_from_shift(GlobalState(P, J), Q)
    j = recompose_internal(ell_t, Q, P)
    return InternalDecomposition(M=m, U=u, X_I=x_i, ell_t=ell_t, ell_v=ell_v, Q=np.asarray(Q), X_o=x_o, j=j)


def inertia_centroid(P: np.ndarray, J: np.ndarray) -> CentroidLine:
    m = mk.invariant_mass(P)
    return CentroidLine(base=center_of_inertia(P, J), direction=P / m)


def shifted_centroid(P: np.ndarray, J: np.ndarray, Q: np.ndarray) -> CentroidLine:
    m = mk.invariant_mass(P)
    return CentroidLine(base=center_of_inertia(P, J) + Q, direction=P / m)


def newtonian_cm(points: list[tuple[float, np.ndarray]]) -> np.ndarray:
    """Mass-weighted average of coordinates, sum(m_a x_a) / sum(m_a)."""
    if not points:
        raise ValueError("newtonian_cm requires at least one particle")
    masses = np.array([m for m, _ in points])
    if np.any(masses <= 0):
        raise ValueError("masses must be positive")
    coords = np.array([np.asarray(x) for _, x in points])
    return (masses[:, None] * coords).sum(axis=0) / masses.sum()


def cm_integration_residual(model: SystemModel, state, r_candidate_rate: np.ndarray) -> np.ndarray:
    """Residual of the CM-integration equation for a candidate solution rate.

    A valid internal solution R satisfies dR/dsigma equal to the projected
    rate of the mass-weighted CM, so the returned vector vanishes for it.
    """
    return model.xn_projected_rate(state) - np.asarray(r_candidate_rate)
