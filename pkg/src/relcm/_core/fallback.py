"""Pure-python right-hand sides for the named flow kernels.

Mirrors the arithmetic of ``_kernels.pyx`` term for term; the parity test
in tests/test_backends.py keeps the two in sync.
"""

from __future__ import annotations

import numpy as np


def _mdot(a: np.ndarray, b: np.ndarray) -> float:
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]


def sv_rhs(params: np.ndarray, s: float, y: np.ndarray) -> np.ndarray:
    """Constraint-generated flow of the light-like scalar-vector 2-body system.

    State layout (z, P, x, q); params (m1, m2, kappa, alpha, chi, lam).
    """
    m1, m2, kappa, alpha, chi, lam = params
    P = y[4:8]
    x = y[8:12]
    q = y[12:16]
    px = _mdot(P, x)
    pq = _mdot(P, q)
    qx = _mdot(q, x)
    w = -_mdot(P, P)
    dm2 = (m1 - alpha * m2) ** 2
    g_val = 0.5 * chi * kappa * (w - dm2)
    g_der = 0.5 * chi * kappa
    b_der = 0.25 - (m1 * m1 - m2 * m2) ** 2 / (4.0 * w * w)

    out = np.empty(16)
    out[0:4] = lam * (
        -(qx / px) * q
        + (pq * qx / px**2 + g_val / px**2) * x
        + (2.0 * g_der / px + b_der) * P
    )
    out[4:8] = 0.0
    out[8:12] = lam * (q - (qx / px) * P - (pq / px) * x)
    out[12:16] = lam * ((pq / px) * q - ((pq * qx + g_val) / px**2) * P)
    return out


def pn_rhs(params: np.ndarray, t: float, y: np.ndarray) -> np.ndarray:
    """Newtonian Kepler-Coulomb relative motion; state (r, v), params (mu, kappa)."""
    mu, kappa = params
    r = y[0:3]
    v = y[3:6]
    rn = np.sqrt(r @ r)
    out = np.empty(6)
    out[0:3] = v
    out[3:6] = (kappa / mu) * r / rn**3
    return out


def coulomb_rhs(params: np.ndarray, t: float, y: np.ndarray) -> np.ndarray:
    """Fixed-centre Coulomb field with r-dependent mass; state (r, p).

    params (m, kappa, kappa_prime); the kappa_prime**2 / r**2 term in the
    mass function contributes an extra radial force.
    """
    m, kappa, kp = params
    r = y[0:3]
    p = y[3:6]
    rn = np.sqrt(r @ r)
    wroot = np.sqrt(p @ p + m * m + kp * kp / rn**2)
    out = np.empty(6)
    out[0:3] = p / wroot
    out[3:6] = (kp * kp / (rn**4 * wroot) + kappa / rn**3) * r
    return out


RHS = {"sv": sv_rhs, "pn": pn_rhs, "coulomb": coulomb_rhs}
DIMS = {"sv": 16, "pn": 6, "coulomb": 6}
