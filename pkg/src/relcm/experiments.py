"""Experiment drivers: run a system's verification battery, collect
per-check residuals against their gates, and emit machine-readable
reports plus trajectory CSVs.

Every check record carries a short ``law`` slug naming the conservation
law or bracket identity it exercises, so reports stay greppable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import coulomb_scalar as cs
from . import free_nbody as fnb
from . import integrate
from . import minkowski as mk
from . import pn_twobody as pn
from . import poisson
from . import sv_twobody as sv

SCHEMA_VERSION = 1

SYSTEMS = ("free-nbody", "pn2", "sv2", "coulomb-scalar", "pb-suite")


class UsageError(ValueError):
    """Invalid configuration (maps to CLI exit code 2)."""


@dataclass
class CheckRecord:
    name: str
    law: str
    residual: float
    gate: float
    passed: bool


@dataclass
class Report:
    system: str
    seed: int
    config: dict
    sigma_range: tuple[float, float] | None = None
    step_stats: dict | None = None
    checks: list[CheckRecord] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def add(self, name: str, law: str, residual: float, gate: float) -> CheckRecord:
        rec = CheckRecord(name=name, law=law, residual=float(residual), gate=float(gate), passed=bool(abs(residual) < gate))
        self.checks.append(rec)
        return rec

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "system": self.system,
            "seed": self.seed,
            "config": self.config,
            "sigma_range": list(self.sigma_range) if self.sigma_range is not None else None,
            "step_stats": self.step_stats,
            "checks": [asdict(c) for c in self.checks],
            "extras": self.extras,
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _merge_config(defaults: dict, overrides: dict) -> dict:
    out = dict(defaults)
    for key, val in overrides.items():
        if val is None:
            continue
        if key not in defaults:
            raise UsageError(f"unknown config key: {key!r}")
        if isinstance(defaults[key], dict) and isinstance(val, dict):
            out[key] = {**defaults[key], **val}
        else:
            out[key] = val
    return out


def _validate_positive(cfg: dict, keys: tuple[str, ...]) -> None:
    for key in keys:
        if not cfg[key] > 0:
            raise UsageError(f"config key {key!r} must be positive")


def _integrate(problem: integrate.FlowProblem, integ: dict) -> integrate.Trajectory:
    if integ["method"] == "rk4":
        return integrate.rk4_fixed(problem, integ["h"])
    if integ["method"] == "rk45":
        return integrate.rk45_adaptive(problem, atol=integ["atol"], rtol=integ["rtol"])
    raise UsageError(f"unknown integrator method {integ['method']!r}")


# ---------------------------------------------------------------------------
# free N-body
# ---------------------------------------------------------------------------

FREE_DEFAULTS: dict = {
    "n": 4,
    "equal_masses": False,
    "sigma_span": [0.0, 10.0],
    "n_samples": 21,
    "boost": None,  # optional 3-velocity applied to all inputs
    "bracket_step": 1e-6,
    "gates": {
        "q_drift": 1e-10,
        "orthogonality": 1e-10,
        "g_system": 1e-10,
        "g2_closed_form": 1e-10,
        "equal_mass_q": 1e-12,
        "qq_coef": 1e-6,
        "rate_residual": 1e-8,
    },
}


def _build_free_system(cfg: dict, seed: int) -> fnb.FreeSystem:
    if cfg["equal_masses"]:
        rng = np.random.default_rng(seed)
        m = float(rng.uniform(0.5, 2.0))
        sys_ = fnb.FreeSystem.two_body(m, m, rng.normal(0, 0.4, 3), seed=seed)
        if cfg["boost"] is not None:
            sys_ = sys_.boosted(np.asarray(cfg["boost"], float))
        return sys_
    return fnb.FreeSystem.random(
        cfg["n"], seed, boost_v=None if cfg["boost"] is None else np.asarray(cfg["boost"], float)
    )


def run_free_nbody(config: dict | None = None, seed: int = 0) -> tuple[Report, dict]:
    cfg = _merge_config(FREE_DEFAULTS, config or {})
    if cfg["n"] < 1:
        raise UsageError("n must be >= 1")
    report = Report(system="free-nbody", seed=seed, config=cfg, sigma_range=tuple(cfg["sigma_span"]))
    gates = cfg["gates"]

    sys_ = _build_free_system(cfg, seed)
    sigmas = np.linspace(cfg["sigma_span"][0], cfg["sigma_span"][1], cfg["n_samples"])
    q_closed = sys_.q_closed_form()

    qs = []
    rows = []
    for s in sigmas:
        r1, r2, q = sys_.r1_r2_Q(float(s))
        qs.append(q)
        ell2 = 0.5 * float(np.einsum("mn,mn->", sys_.ell_tensor(), mk.lower2(sys_.ell_tensor())))
        rows.append([s, *sys_.evolve(float(s)).ravel(), sys_.M, ell2, *q])
    qs = np.array(qs)

    report.add("shift-vector drift over sigma", "shift-vector-constancy", np.abs(qs - qs[0]).max(), gates["q_drift"])
    report.add("Q vs closed form", "shift-vector-constancy", np.abs(qs - q_closed).max(), gates["q_drift"] * 10)
    report.add("Q.P orthogonality", "shift-orthogonality", abs(mk.dot(q_closed, sys_.P)), gates["orthogonality"])
    report.add("Q.ell orthogonality", "shift-ell-orthogonality", abs(mk.dot(q_closed, sys_.ell_vector())), gates["orthogonality"])

    gv = sys_.solve_G()
    us = np.array([p.u for p in sys_.particles])
    g_resid = max(
        float(np.abs(mk.dot(gv.G, us) - 1.0).max()),
        abs(mk.dot(gv.G, sys_.P) - sys_.M0) / sys_.M0,
    )
    report.add("G linear system postconditions", "g-postconditions", g_resid, gates["g_system"])

    if sys_.n == 2:
        g2 = fnb.g2_closed_form(sys_)
        report.add("2-body G closed form", "g-two-body-closed-form", np.abs(sys_.g_perp() - g2).max(), gates["g2_closed_form"])
        if abs(sys_.masses[0] - sys_.masses[1]) < 1e-14:
            report.add("equal-mass Q vanishes", "equal-mass-shift-vanishes", np.abs(q_closed).max(), gates["equal_mass_q"])

    coef_expected, q2_expected = sys_.qq_bracket_closed_form()
    y = fnb.system_state(sys_, sigmas[0])
    ch = fnb.chart(sys_.masses)
    qq = poisson.bracket(fnb.q_observable(sys_.masses), fnb.q_observable(sys_.masses), ch.state(y), cfg["bracket_step"])
    fitted, prop_resid = poisson.proportionality_fit(qq, sys_.ell_tensor())
    report.add("{Q,Q} coefficient vs -G_perp^2/M0^2", "qq-coefficient", fitted - coef_expected, gates["qq_coef"])
    report.add("{Q,Q} proportional to ell", "qq-coefficient", prop_resid, gates["qq_coef"])
    report.add("Q^2 decomposition", "q2-decomposition", float(mk.dot(q_closed, q_closed)) - q2_expected, gates["g_system"])

    mid = float(sigmas[len(sigmas) // 2])
    for label, idx in (("R1", 0), ("R2", 1)):
        rate = integrate.finite_diff_rate(lambda t: sys_.r1_r2_Q(t)[idx], mid, 1e-5)
        resid = np.abs(rate - sys_.xn_projected_rate(mid)).max()
        report.add(f"{label} solves the CM-integration equation", "cm-integration", resid, gates["rate_residual"])

    header = ["sigma"] + [f"x{a + 1}_{c}" for a in range(sys_.n) for c in "txyz"] + ["M", "ell2", "Q_t", "Q_x", "Q_y", "Q_z"]
    artifacts = {"trajectory": (header, rows)}
    report.extras["eta"] = None  # free system: b-analog is -G_perp^2 scale, always unbound-like
    report.extras["qq_fitted_coef"] = fitted
    report.extras["qq_expected_coef"] = coef_expected
    return report, artifacts


# ---------------------------------------------------------------------------
# post-Newtonian two-body
# ---------------------------------------------------------------------------

PN_DEFAULTS: dict = {
    "m1": 1.4,
    "m2": 0.8,
    "equal_masses": False,
    "kappa": -1.0,
    "c": 1.0,
    "orbit": "bound",  # bound | unbound | circular
    "r_peri": 1.0,
    "ecc": 0.4,
    "n_periods": 1.5,  # > 1 keeps a perihelion passage interior to the window
    "integrator": {"method": "rk45", "h": 1e-3, "atol": 1e-12, "rtol": 1e-12},
    "gates": {
        "q_drift": 1e-8,
        "k_forms": 1e-12,
        "alignment_rad": 1e-6,
        "conservation": 1e-9,
        "c_scaling_slope": 1e-3,
        "rate_residual": 1e-8,
    },
}


def run_pn2(config: dict | None = None, seed: int = 0) -> tuple[Report, dict]:
    cfg = _merge_config(PN_DEFAULTS, config or {})
    if cfg["equal_masses"]:
        cfg["m2"] = cfg["m1"]
    _validate_positive(cfg, ("m1", "m2", "c", "r_peri"))
    if cfg["orbit"] not in ("bound", "unbound", "circular"):
        raise UsageError("orbit must be bound, unbound or circular")
    pncfg = pn.PNConfig(m1=cfg["m1"], m2=cfg["m2"], kappa=cfg["kappa"], c=cfg["c"])
    gates = cfg["gates"]

    if cfg["orbit"] == "bound":
        state0 = pn.bound_state(pncfg, cfg["r_peri"], cfg["ecc"], seed=seed)
        t_end = cfg["n_periods"] * pn.period(pncfg, state0)
    elif cfg["orbit"] == "circular":
        state0 = pn.circular_state(pncfg, cfg["r_peri"])
        t_end = cfg["n_periods"] * pn.period(pncfg, state0)
    else:
        state0 = pn.unbound_state(pncfg, cfg["r_peri"] * 4.0)
        t_end = cfg["n_periods"] * 20.0

    report = Report(system="pn2", seed=seed, config=cfg, sigma_range=(0.0, float(t_end)))
    traj = _integrate(pn.flow_problem(pncfg, state0, (0.0, float(t_end))), cfg["integrator"])
    report.step_stats = traj.stats

    states = [pn.PNState.from_flat(yy, t=tt) for tt, yy in zip(traj.sigmas, traj.states)]
    e0 = pn.energy(state0, pncfg)
    l0 = pn.angular_momentum(state0, pncfg)
    energies = np.array([pn.energy(st, pncfg) for st in states])
    ells = np.array([pn.angular_momentum(st, pncfg) for st in states])
    report.add("energy drift", "newtonian-conservation", np.abs(energies - e0).max(), gates["conservation"])
    report.add("angular-momentum drift", "newtonian-conservation", np.abs(ells - l0).max(), gates["conservation"])

    quads = np.array([pn.closed_forms(st, pncfg)[2] for st in states])
    ks = np.array([pn.lrl_vector(st, pncfg) for st in states])
    report.add("shift-vector drift", "shift-vector-constancy", np.abs(quads - quads[0]).max(), gates["q_drift"])
    report.add("LRL drift", "lrl-constancy", np.abs(ks - ks[0]).max(), gates["q_drift"] / pncfg.prefactor if pncfg.prefactor else gates["q_drift"] * 1e3)

    forms = np.array([pn.lrl_vector(st, pncfg) - pn.lrl_vector_cross_form(st, pncfg) for st in states])
    report.add("LRL two forms agree", "lrl-two-forms", np.abs(forms).max(), gates["k_forms"])

    q_scale = pncfg.prefactor * np.abs(ks[0]).max()
    report.add(
        "Q proportional to K",
        "shift-vector-constancy",
        np.abs(quads - pncfg.prefactor * ks).max(),
        max(1e-15, abs(q_scale)) * 1e-9 + 1e-15,
    )

    if cfg["orbit"] in ("bound",) and abs(pncfg.m1 - pncfg.m2) > 1e-14:
        peri_ts = pn.perihelion_times(traj)
        if len(peri_ts):
            st_p = pn.PNState.from_flat(traj.interpolate(peri_ts[0]))
            k_hat = ks[0] / np.linalg.norm(ks[0])
            r_hat = st_p.r / np.linalg.norm(st_p.r)
            angle = float(np.arccos(np.clip(k_hat @ r_hat, -1, 1)))
            report.add("K points to perihelion", "lrl-perihelion-alignment", angle, gates["alignment_rad"])

    if cfg["equal_masses"]:
        report.add("equal-mass Q vanishes", "equal-mass-shift-vanishes", np.abs(quads).max(), 1e-15)

    # 1/c^2 scaling of the shift vector at fixed initial data
    cs_values = [1.0, 10.0, 100.0]
    mags = []
    for c_val in cs_values:
        cc = pn.PNConfig(m1=pncfg.m1, m2=pncfg.m2, kappa=pncfg.kappa, c=c_val)
        mags.append(np.linalg.norm(pn.closed_forms(state0, cc)[2]))
    if abs(pncfg.m1 - pncfg.m2) > 1e-14:
        slope = float(np.polyfit(np.log(cs_values), np.log(mags), 1)[0])
        report.add("Q magnitude scales as 1/c^2", "q-inverse-square-c-scaling", slope + 2.0, gates["c_scaling_slope"])

    mid_t = float(traj.sigmas[len(traj.sigmas) // 2])
    model = pn.PNModel(pncfg)
    for label, idx in (("R1", 0), ("R2", 1)):
        rate = integrate.finite_diff_rate(
            lambda t: pn.closed_forms(pn.PNState.from_flat(traj.interpolate(t)), pncfg)[idx], mid_t, 1e-4
        )
        resid = np.abs(rate - model.xn_projected_rate(pn.PNState.from_flat(traj.interpolate(mid_t)))).max()
        report.add(f"{label} solves the CM-integration equation", "cm-integration", resid, gates["rate_residual"])

    rows = [
        [tt, *yy, pn.energy(st, pncfg), *pn.angular_momentum(st, pncfg), *kk, *qq]
        for tt, yy, st, kk, qq in zip(traj.sigmas, traj.states, states, ks, quads)
    ]
    header = (
        ["t", "rx", "ry", "rz", "vx", "vy", "vz", "E", "l_x", "l_y", "l_z"]
        + ["K_x", "K_y", "K_z", "Q_x", "Q_y", "Q_z"]
    )
    return report, {"trajectory": (header, rows)}


# ---------------------------------------------------------------------------
# scalar-vector two-body
# ---------------------------------------------------------------------------

SV_DEFAULTS: dict = {
    "m1": 1.3,
    "m2": 0.7,
    "mass_ratio": None,  # overrides m1 with mass_ratio * m2
    "equal_masses": False,
    "kappa": 0.5,
    "alpha": 1,
    "chi": 1,
    "lam_gauge": 1.0,
    "bound": True,
    "m_factor": None,  # M_target / M0; default 0.94 bound, 1.06 unbound
    "ell_target": None,  # default: mid-range for the chosen M
    "sigma_span": [0.0, 20.0],
    "integrator": {"method": "rk45", "h": 2e-3, "atol": 1e-13, "rtol": 1e-13},
    "bracket_step": 1e-6,
    "gates": {
        "phi_drift": 1e-9,
        "lightcone": 1e-9,
        "k_drift": 1e-8,
        "pj_drift": 1e-9,
        "k_squared": 1e-9,
        "kk_coef": 1e-6,
        "qq_closed_form": 1e-6,
        "xperp_identity": 1e-10,
        "rate_residual": 1e-8,
    },
}


def _sv_config(cfg: dict) -> sv.SVConfig:
    m1, m2 = cfg["m1"], cfg["m2"]
    if cfg["mass_ratio"] is not None:
        m2 = 1.0
        m1 = float(cfg["mass_ratio"])
    if cfg["equal_masses"]:
        m1 = m2
    return sv.SVConfig(m1=m1, m2=m2, kappa=cfg["kappa"], alpha=int(cfg["alpha"]), chi=int(cfg["chi"]), lam_gauge=cfg["lam_gauge"])


def _sv_targets(cfg: dict, svcfg: sv.SVConfig) -> tuple[float, float]:
    m_factor = cfg["m_factor"]
    if m_factor is None:
        m_factor = 0.94 if cfg["bound"] else 1.06
    m_target = m_factor * svcfg.M0
    ell_target = cfg["ell_target"]
    if ell_target is None:
        bval = sv.b_of_m2(m_target**2, svcfg.m1, svcfg.m2)
        c_eff = svcfg.kappa * (m_target**2 - (svcfg.m1 - svcfg.alpha * svcfg.m2) ** 2) / m_target
        if bval < 0:
            ell_target = 0.55 * np.sqrt(max(c_eff**2 / (-4.0 * bval), 1e-12))
        else:
            ell_target = 0.6
    return float(m_target), float(ell_target)


def run_sv2(config: dict | None = None, seed: int = 0) -> tuple[Report, dict]:
    cfg = _merge_config(SV_DEFAULTS, config or {})
    svcfg = _sv_config(cfg)
    gates = cfg["gates"]
    m_target, ell_target = _sv_targets(cfg, svcfg)
    state0 = sv.init_state(svcfg, m_target, ell_target, seed=seed)

    span = tuple(float(v) for v in cfg["sigma_span"])
    report = Report(system="sv2", seed=seed, config=cfg, sigma_range=span)
    traj = _integrate(sv.flow_problem(svcfg, state0, span), cfg["integrator"])
    report.step_stats = traj.stats

    states = [sv.SVPhase.from_flat(yy) for yy in traj.states]
    phis = np.array([sv.constraint_phi(st, svcfg) for st in states])
    xx = np.array([mk.dot(st.x, st.x) for st in states])
    ks = np.array([sv.lrl_vector(st, svcfg) for st in states])
    quads = np.array([sv.shift_vector(st, svcfg) for st in states])
    js = np.array([sv.angular_momentum(st) for st in states])
    ps = np.array([st.P for st in states])
    xperp_resid = np.array(
        [abs(mk.dot(sv.x_perp(st), sv.x_perp(st)) - sv._px(st) ** 2 / sv.mass_sq(st)) for st in states]
    )
    chis = np.array([sv.chi_of(st) for st in states])

    report.add("constraint conservation |phi|", "constraint-conservation", np.abs(phis).max(), gates["phi_drift"])
    report.add("light-cone |x.x|", "light-cone-preservation", np.abs(xx).max(), gates["lightcone"])
    report.add("LRL drift", "lrl-constancy", np.abs(ks - ks[0]).max(), gates["k_drift"])
    report.add("shift-vector drift", "shift-vector-constancy", np.abs(quads - quads[0]).max(), gates["k_drift"])
    report.add("P drift", "global-conservation", np.abs(ps - ps[0]).max(), gates["pj_drift"])
    report.add("J drift", "global-conservation", np.abs(js - js[0]).max(), gates["pj_drift"])
    report.add("x_perp^2 = (P.x)^2/M^2", "light-cone-preservation", xperp_resid.max(), gates["xperp_identity"])
    if not np.all(chis == chis[0]):
        raise integrate.FlowSingularityError("chi sign flip (turning-point crossing)", float(traj.sigmas[int(np.argmax(chis != chis[0]))]))

    report.add("K^2 identity", "k-squared-identity", sv.k_squared_residual(state0, svcfg, on_shell_tol=1e-8), gates["k_squared"])

    ch = sv.chart(svcfg)
    st8 = ch.state(state0.flat)
    ell0 = sv.ell_tensor(state0)
    kk = poisson.bracket(sv.k_observable(svcfg), sv.k_observable(svcfg), st8, cfg["bracket_step"])
    fitted, prop_resid = poisson.proportionality_fit(kk, ell0)
    bval = sv.b_of_m2(m_target**2, svcfg.m1, svcfg.m2)
    report.add("{K,K} coefficient vs -b", "kk-coefficient", fitted + bval, gates["kk_coef"])
    report.add("{K,K} proportional to ell", "kk-coefficient", prop_resid, gates["kk_coef"])

    qq = poisson.bracket(sv.q_observable(svcfg), sv.q_observable(svcfg), st8, cfg["bracket_step"])
    coef_qq = sv.qq_bracket_coefficient(state0, svcfg)
    report.add("{Q,Q} matches closed form", "qq-closed-form", np.abs(qq - coef_qq * ell0).max(), gates["qq_closed_form"])

    forms = sv.r1_forms(state0, svcfg)
    report.add("R1 equivalent forms", "cm-integration", max(np.abs(forms[0] - forms[1]).max(), np.abs(forms[0] - forms[2]).max()), 1e-10)

    mid = float(traj.sigmas[len(traj.sigmas) // 2])
    model = sv.SVModel(svcfg)
    for label, idx in (("R1", 0), ("R2", 1)):
        rate = integrate.finite_diff_rate(
            lambda t: sv.closed_forms(sv.SVPhase.from_flat(traj.interpolate(t)), svcfg)[idx], mid, 1e-4
        )
        resid = np.abs(rate - model.xn_projected_rate(sv.SVPhase.from_flat(traj.interpolate(mid)))).max()
        report.add(f"{label} solves the CM-integration equation", "cm-integration", resid, gates["rate_residual"])

    try:
        eta = poisson.boundness_index(bval)
    except ValueError:
        eta = 0
    report.extras["eta"] = eta
    report.extras["b"] = bval
    report.extras["kk_fitted_coef"] = fitted
    report.extras["M_target"] = m_target
    report.extras["M0"] = svcfg.M0

    ell2s = np.array([sv.ell_squared(st) for st in states])
    ms = np.array([np.sqrt(sv.mass_sq(st)) for st in states])
    rows = [
        [tt, *yy, mm, ll, *kk_, *qq_, ph]
        for tt, yy, mm, ll, kk_, qq_, ph in zip(traj.sigmas, traj.states, ms, ell2s, ks, quads, phis)
    ]
    header = (
        ["sigma"]
        + [f"{n}_{c}" for n in ("z", "P", "x", "q") for c in "txyz"]
        + ["M", "ell2", "K_t", "K_x", "K_y", "K_z", "Q_t", "Q_x", "Q_y", "Q_z", "phi"]
    )
    return report, {"trajectory": (header, rows)}


# ---------------------------------------------------------------------------
# scalar-Coulomb fixed centre
# ---------------------------------------------------------------------------

COULOMB_DEFAULTS: dict = {
    "m": 1.0,
    "kappa": -0.35,
    "sign": 1,
    "orbit": "bound",
    "r0": 1.0,
    "ecc": 0.4,
    "n_revolutions": 5.0,
    "integrator": {"method": "rk45", "h": 1e-3, "atol": 1e-13, "rtol": 1e-13},
    "gates": {
        "orbit_residual": 1e-8,
        "k_mag": 1e-9,
        "k_drift": 1e-9,
        "conservation": 1e-10,
        "precession_rad": 1e-6,
    },
}


def run_coulomb(config: dict | None = None, seed: int = 0) -> tuple[Report, dict]:
    cfg = _merge_config(COULOMB_DEFAULTS, config or {})
    _validate_positive(cfg, ("m", "r0"))
    cscfg = cs.CSConfig(m=cfg["m"], kappa=cfg["kappa"], sign=int(cfg["sign"]))
    gates = cfg["gates"]

    if cfg["orbit"] == "bound":
        state0 = cs.bound_state(cscfg, cfg["r0"], cfg["ecc"])
        # revolution timescale from the non-relativistic analogue, padded
        e_val = cs.hamiltonian(state0, cscfg)
        t_end = cfg["n_revolutions"] * _coulomb_period_estimate(cscfg, state0)
    else:
        state0 = cs.unbound_state(cscfg, cfg["r0"] * 4.0)
        t_end = 40.0 * cfg["r0"]

    report = Report(system="coulomb-scalar", seed=seed, config=cfg, sigma_range=(0.0, float(t_end)))
    traj = _integrate(cs.flow_problem(cscfg, state0, (0.0, float(t_end))), cfg["integrator"])
    report.step_stats = traj.stats

    states = [cs.CSState.from_flat(yy) for yy in traj.states]
    e0 = cs.hamiltonian(state0, cscfg)
    hs = np.array([cs.hamiltonian(st, cscfg) for st in states])
    ells = np.array([cs.angular_momentum(st) for st in states])
    ks = np.array([cs.lrl_vector(st, cscfg) for st in states])
    report.add("energy drift", "global-conservation", np.abs(hs - e0).max(), gates["conservation"])
    report.add("angular-momentum drift", "global-conservation", np.abs(ells - ells[0]).max(), gates["conservation"])
    report.add("LRL drift", "lrl-constancy", np.abs(ks - ks[0]).max(), gates["k_drift"])

    psq = np.array([cs.momentum_sq_residual(st, cscfg, e0) for st in states])
    report.add("p^2 identity (1/r^2 cancellation)", "momentum-square-identity", psq.max(), gates["conservation"] * 10)

    ell0 = float(np.linalg.norm(ells[0]))
    kmag_resid = abs(float(ks[0] @ ks[0]) - cs.k_mag_sq_expected(e0, ell0, cscfg))
    report.add("|K|^2 magnitude law", "k-magnitude", kmag_resid, gates["k_mag"])

    report.add("orbit equation residual", "orbit-equation", cs.orbit_residual(traj, cscfg), gates["orbit_residual"])

    if cfg["orbit"] == "bound":
        peri = cs.perihelion_times(traj)
        if len(peri) >= 2:
            dirs = []
            for t_p in peri:
                st = cs.CSState.from_flat(traj.interpolate(float(t_p)))
                dirs.append(st.r / np.linalg.norm(st.r))
            dirs = np.array(dirs)
            angles = np.arccos(np.clip(dirs[1:] @ dirs[0], -1.0, 1.0))
            report.add("perihelion precession", "zero-precession", float(np.abs(angles).max()), gates["precession_rad"])
            report.extras["n_perihelia"] = int(len(peri))

    rows = [
        [tt, *yy, hh, *ll, *kk_]
        for tt, yy, hh, ll, kk_ in zip(traj.sigmas, traj.states, hs, ells, ks)
    ]
    header = ["t", "rx", "ry", "rz", "px", "py", "pz", "H", "l_x", "l_y", "l_z", "K_x", "K_y", "K_z"]
    return report, {"trajectory": (header, rows)}


def _coulomb_period_estimate(cfg: cs.CSConfig, s: cs.CSState) -> float:
    """Radial period from the effective Kepler-like orbit equation.

    The momentum-square identity p^2 = E^2 - m^2 - 2 kappa E / r has the
    Newtonian form with effective energy and coupling, so the bound orbit
    is periodic with the corresponding Kepler period in the radial phase;
    an adequate estimate for windowing perihelion searches comes from the
    nonrelativistic analogue with mu = E.
    """
    e_val = cs.hamiltonian(s, cfg)
    e_eff = (e_val**2 - cfg.m**2) / 2.0
    k_eff = cfg.kappa * e_val
    if e_eff >= 0:
        raise UsageError("period estimate valid for bound orbits only")
    a_eff = k_eff / (2.0 * e_eff)
    return float(2.0 * np.pi * np.sqrt(e_val * a_eff**3 / -k_eff))


# ---------------------------------------------------------------------------
# Poisson-bracket suite
# ---------------------------------------------------------------------------

PB_DEFAULTS: dict = {
    "system": "free-nbody",
    "n": 3,
    "n_states": 20,
    "bracket_step": 1e-6,
    "rules_states": 5,
    "gates": {
        "poincare": 1e-6,
        "rules": 1e-7,
        "jacobi": 1e-5,
        "internal": 1e-6,
    },
}


def _pb_states(cfg: dict, seed: int) -> tuple[poisson.Chart, list[np.ndarray]]:
    if cfg["system"] == "free-nbody":
        ch = fnb.chart(fnb.FreeSystem.random(cfg["n"], seed).masses)
        states = []
        for i in range(cfg["n_states"]):
            sys_ = fnb.FreeSystem.random(cfg["n"], seed + i)
            states.append(fnb.system_state(sys_, 0.0))
        return ch, states
    if cfg["system"] == "sv2":
        svcfg = sv.SVConfig(m1=1.3, m2=0.7, kappa=0.5)
        ch = sv.chart(svcfg)
        rng = np.random.default_rng(seed)
        states = []
        for i in range(cfg["n_states"]):
            m_factor = rng.uniform(0.9, 0.98) if i % 2 == 0 else rng.uniform(1.02, 1.1)
            st = sv.init_state(svcfg, m_factor * svcfg.M0, 0.5, seed=seed + 100 + i)
            states.append(st.flat)
        return ch, states
    raise UsageError("pb-suite system must be free-nbody or sv2")


def _poly_observables(dim: int, seed: int):
    rng = np.random.default_rng(seed)
    va, vb, vc = rng.normal(0, 1, (3, dim))
    ma, mb, mc = rng.normal(0, 0.3, (3, dim, dim))

    def make(vec, mat):
        sym = 0.5 * (mat + mat.T)

        def f(y):
            return float(vec @ y + y @ (sym @ y))

        return f

    return make(va, ma), make(vb, mb), make(vc, mc)


def run_pb_suite(config: dict | None = None, seed: int = 0) -> tuple[Report, dict]:
    cfg = _merge_config(PB_DEFAULTS, config or {})
    gates = cfg["gates"]
    ch, states = _pb_states(cfg, seed)
    report = Report(system="pb-suite", seed=seed, config=cfg)

    worst = 0.0
    for y in states:
        res = poisson.verify_poincare_algebra(ch, y, cfg["bracket_step"])
        worst = max(worst, res["max"])
    report.add(f"Poincare algebra over {len(states)} states", "poincare-algebra", worst, gates["poincare"])

    dim = len(states[0])
    anti_worst = prod_worst = deriv_worst = 0.0
    jac_worst = 0.0
    for i, y in enumerate(states[: cfg["rules_states"]]):
        s = ch.state(y)
        a, b, c = _poly_observables(dim, seed + 17 * i)
        ab = poisson.bracket(a, b, s, cfg["bracket_step"])
        ba = poisson.bracket(b, a, s, cfg["bracket_step"])
        anti_worst = max(anti_worst, abs(ab + ba))
        prod_worst = max(prod_worst, poisson.product_rule_residual(a, b, c, s, cfg["bracket_step"]))
        deriv_worst = max(deriv_worst, poisson.derivative_rule_residual(a, b, s, cfg["bracket_step"]))
        jac_worst = max(jac_worst, poisson.jacobi_residual(a, b, c, s, cfg["bracket_step"]))
    report.add("bracket antisymmetry", "rules-antisymmetry", anti_worst, gates["rules"])
    report.add("product rule", "rules-product", prod_worst, gates["rules"])
    report.add("derivative rule", "rules-derivative", deriv_worst, gates["rules"])
    report.add("Jacobi identity", "rules-jacobi", jac_worst, gates["jacobi"])

    if cfg["system"] == "sv2":
        svcfg = sv.SVConfig(m1=1.3, m2=0.7, kappa=0.5)
        internal = sv.pi_observable(svcfg)
    else:
        masses = fnb.FreeSystem.random(cfg["n"], seed).masses
        internal = fnb.q_observable(masses)
    rot_worst = 0.0
    for y in states[:3]:
        res = poisson.verify_internal_rotation_algebra(ch, y, internal, cfg["bracket_step"])
        rot_worst = max(rot_worst, res["max"])
    report.add("internal rotation algebra", "internal-rotation-algebra", rot_worst, gates["internal"])

    return report, {}


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP_DEFAULTS: dict = {
    "system": "sv2",
    "axis": {"param": "m_factor", "values": []},
    "base": {},
}


def run_sweep(config: dict | None = None, seed: int = 0) -> tuple[Report, dict]:
    cfg = _merge_config(SWEEP_DEFAULTS, config or {})
    if cfg["system"] != "sv2":
        raise UsageError("sweep currently supports the sv2 system")
    param = cfg["axis"].get("param")
    values = cfg["axis"].get("values") or []
    if param not in ("m_factor", "kappa"):
        raise UsageError("sweep axis param must be m_factor or kappa")
    if len(values) == 0:
        raise UsageError("sweep axis has no values")

    report = Report(system="sweep", seed=seed, config=cfg)
    points = []
    fitted_coefs = []
    for i, val in enumerate(values):
        base = dict(cfg["base"])
        base[param] = float(val)
        svcfg = _sv_config(_merge_config(SV_DEFAULTS, base))
        m_target, ell_target = _sv_targets(_merge_config(SV_DEFAULTS, base), svcfg)
        state = sv.init_state(svcfg, m_target, ell_target, seed=seed + i)
        bval = sv.b_of_m2(m_target**2, svcfg.m1, svcfg.m2)
        kk = poisson.bracket(sv.k_observable(svcfg), sv.k_observable(svcfg), sv.chart(svcfg).state(state.flat))
        fitted, _ = poisson.proportionality_fit(kk, sv.ell_tensor(state))
        try:
            eta = poisson.boundness_index(bval)
        except ValueError:
            eta = 0
        points.append(
            {
                param: float(val),
                "M_target": m_target,
                "M0": svcfg.M0,
                "b": bval,
                "kk_fitted_coef": fitted,
                "sign_b": int(np.sign(bval)),
                "sign_M_minus_M0": int(np.sign(m_target - svcfg.M0)),
                "eta": eta,
            }
        )
        fitted_coefs.append(fitted)

    report.extras["points"] = points
    if param == "m_factor":
        mismatches = sum(1 for p in points if p["sign_b"] != p["sign_M_minus_M0"])
        report.add("sign(b) equals sign(M - M0) at every point", "eta-transition", float(mismatches), 0.5)
        flips = [i for i in range(1, len(points)) if points[i]["eta"] * points[i - 1]["eta"] < 0 or points[i]["eta"] == 0]
        report.extras["transition_indices"] = flips
    else:
        spread = float(np.max(fitted_coefs) - np.min(fitted_coefs))
        report.add("{K,K} coefficient independent of kappa", "kk-coupling-independence", spread, 1e-6)
    return report, {}


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

RUNNERS = {
    "free-nbody": run_free_nbody,
    "pn2": run_pn2,
    "sv2": run_sv2,
    "coulomb-scalar": run_coulomb,
    "pb-suite": run_pb_suite,
}


def write_outputs(report: Report, artifacts: dict, outdir: str | Path, plotdata: bool = False) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    if "trajectory" in artifacts:
        header, rows = artifacts["trajectory"]
        with open(out / "trajectory.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        if plotdata:
            pdir = out / "plotdata"
            pdir.mkdir(exist_ok=True)
            cols = {name: i for i, name in enumerate(header)}
            arr = np.array([[float(v) for v in row] for row in rows])
            for name in header[1:]:
                with open(pdir / f"{name}.csv", "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow([header[0], name])
                    writer.writerows(zip(arr[:, 0], arr[:, cols[name]]))
    return out
