"""Minkowski-space linear algebra on plain float64 arrays.

Conventions, fixed once for the whole package:

* metric ``diag(-1, 1, 1, 1)``, index order ``(t, x, y, z)``, ``c = 1``;
* 4-vectors are stored contravariant as shape ``(4,)`` arrays, lowering an
  index applies the metric explicitly at the use site;
* the Levi-Civita symbol has ``eps^{0123} = +1`` (so ``eps_{0123} = -1``);
* antisymmetric rank-2 tensors (angular momenta) are ``(4, 4)`` arrays
  built with :func:`wedge`, which is exactly antisymmetric in IEEE
  arithmetic because each component pair is the same two products
  subtracted in opposite order.

All functions are pure and re-entrant.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

METRIC = np.diag([-1.0, 1.0, 1.0, 1.0])
METRIC_DIAG = np.array([-1.0, 1.0, 1.0, 1.0])


def _permutation_sign(perm) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def _levi_civita_upper() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in permutations(range(4)):
        eps[perm] = _permutation_sign(perm)
    return eps


#: eps^{mu nu lam rho}, contravariant components.
EPS_UPPER = _levi_civita_upper()
#: eps_{mu nu lam rho} = -eps^{mu nu lam rho} (det g = -1).
EPS_LOWER = -EPS_UPPER


def dot(a: np.ndarray, b: np.ndarray) -> float | np.ndarray:
    """Minkowski dot product a^mu b_mu; broadcasts over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    return -a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2] + a[..., 3] * b[..., 3]


def lower(v: np.ndarray) -> np.ndarray:
    """v_mu = g_{mu nu} v^nu."""
    return METRIC_DIAG * np.asarray(v)


def lower2(t: np.ndarray) -> np.ndarray:
    """T_{mu nu} = g_{mu lam} g_{nu rho} T^{lam rho}."""
    return np.outer(METRIC_DIAG, METRIC_DIAG) * np.asarray(t)


def wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Antisymmetric product (a wedge b)^{mu nu} = a^mu b^nu - a^nu b^mu."""
    m = np.outer(a, b)
    return m - m.T


def invariant_mass_sq(p: np.ndarray) -> float:
    """M^2 = -P.P for a timelike momentum; raises otherwise."""
    m2 = -dot(p, p)
    if not m2 > 0.0:
        raise ValueError("non-timelike total momentum")
    return float(m2)


def invariant_mass(p: np.ndarray) -> float:
    return float(np.sqrt(invariant_mass_sq(p)))


def projector(p: np.ndarray) -> np.ndarray:
    """Spatial projector Delta^{mu nu} = g^{mu nu} + P^mu P^nu / M^2."""
    m2 = invariant_mass_sq(p)
    return METRIC + np.outer(p, p) / m2


def mixed(t: np.ndarray) -> np.ndarray:
    """Lower the second index: T^mu_nu = T^{mu lam} g_{lam nu}."""
    return np.asarray(t) * METRIC_DIAG


def project(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Component of v orthogonal to a timelike p: Delta^mu_nu v^nu.

    Evaluated in factored form so that project(p, p) is exactly zero.
    """
    m2 = invariant_mass_sq(p)
    v = np.asarray(v)
    return v + np.multiply.outer(dot(p, v) / m2, p)


def project_tensor(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Double projection Delta^mu_lam Delta^nu_rho T^{lam rho}."""
    d = mixed(projector(p))
    return d @ np.asarray(t) @ d.T


def dualize(ell_t: np.ndarray, u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Dual vector ell^mu = (1/2) eps^{mu nu lam rho} ell_{nu lam} u_rho.

    u must be a unit timelike vector (u.u = -1).
    """
    if abs(dot(u, u) + 1.0) > tol:
        raise ValueError("dualize requires a unit timelike vector (u.u = -1)")
    return 0.5 * np.einsum("mnlr,nl,r->m", EPS_UPPER, lower2(ell_t), lower(u))


def undualize(ell_v: np.ndarray, u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Inverse duality ell^{mu nu} = eps^{mu nu lam rho} ell_lam u_rho.

    ell_v must be orthogonal to the unit vector u.
    """
    if abs(dot(u, u) + 1.0) > tol:
        raise ValueError("undualize requires a unit timelike vector (u.u = -1)")
    scale = max(1.0, float(np.abs(ell_v).max()))
    if abs(dot(ell_v, u)) > tol * scale:
        raise ValueError("undualize requires ell_v orthogonal to u")
    return np.einsum("mnlr,l,r->mn", EPS_UPPER, lower(ell_v), lower(u))


def boost_matrix(v: np.ndarray) -> np.ndarray:
    """Active Lorentz boost with 3-velocity v (|v| < 1).

    Applied to a rest-frame momentum (m, 0, 0, 0) it yields a momentum
    moving with velocity +v.
    """
    v = np.asarray(v, dtype=float)
    v2 = float(v @ v)
    if v2 >= 1.0:
        raise ValueError("boost speed must satisfy |v| < 1")
    lam = np.eye(4)
    if v2 == 0.0:
        return lam
    gamma = 1.0 / np.sqrt(1.0 - v2)
    lam[0, 0] = gamma
    lam[0, 1:] = gamma * v
    lam[1:, 0] = gamma * v
    lam[1:, 1:] = np.eye(3) + (gamma - 1.0) * np.outer(v, v) / v2
    return lam


def boost(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Boost the 4-vector a by 3-velocity v."""
    return boost_matrix(v) @ np.asarray(a)


def boost_tensor(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Boost a rank-2 contravariant tensor: Lam T Lam^T."""
    lam = boost_matrix(v)
    return lam @ np.asarray(t) @ lam.T
