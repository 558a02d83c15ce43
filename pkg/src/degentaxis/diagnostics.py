"""Functionals, a priori bound checks, and the dual-norm dictionary distance.

Every quantity the estimates control is evaluated here: masses and sup norms,
the entropy-like integrals of u, the quasi-Lyapunov functional
``-int ln u + (chi/2) int |grad v|^2`` with its dissipation
``int (v/u)|grad u|^2``, the weighted gradient integrals
``int (u/v)|grad v|^2``, ``int |grad v|^4 / v^3`` and ``int |grad v|^6 / v^5``,
and the energy-like combination ``4 b int u ln u + int |grad v|^4 / v^3``.

Ratio integrands are assembled per face: the gradient lives on the face and
u, v enter as arithmetic means of the adjacent cells, so numerator and
denominator are collocated and the no-flux boundary contributes nothing.
Each interior face carries quadrature weight hx*hy per direction, the
staggered-grid analogue of the midpoint rule.

``check_invariants`` turns the a priori bounds into pass/fail checks over a
trajectory.  Exact discrete identities (mass balances, cumulative consumption)
are tested at ``tol_exact``; bounds that hold only up to discretization error
use ``tol_pde``, by default ``50 * (mean dt + h^2)`` as a relative slack.

The ``(W^{1,inf})*`` distance of the large-time analysis is uncomputable
exactly; ``dual_distance`` replaces it by a supremum of pairings against a
fixed low-frequency cosine dictionary, each entry normalized so that
``|phi|_inf + |grad phi|_inf <= 1``.  This is a principled lower bound on the
true dual norm, and is only ever used as such a proxy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PositivityFloorViolated
from .grid import (
    GridSpec,
    ScalarField,
    face_means,
    integrate,
    interior_grads,
    linf,
    require_same_grid,
)
from .model import Params


@dataclass(frozen=True)
class DiagConfig:
    """Knobs for diagnostic evaluation.

    b weights the entropy part of the energy functional (only existence of a
    valid b is asserted upstream, so it is configuration here); p_list are the
    tracked Lebesgue exponents; stride is the sampling cadence in accepted
    steps; positivity_floor guards every ratio denominator; dictionary_size
    is the number of cosine test functions of the dual-norm proxy.
    """

    b: float = 1.0
    p_list: tuple[float, ...] = (2.0, 3.0, 5.0)
    stride: int = 20
    positivity_floor: float = 1e-14
    dictionary_size: int = 25

    def __post_init__(self):
        if not self.b > 0.0:
            raise ValueError(f"b must be > 0, got {self.b}")
        if any(p < 1.0 for p in self.p_list):
            raise ValueError(f"every p must be >= 1, got {self.p_list}")
        if self.stride < 1 or self.dictionary_size < 1:
            raise ValueError("stride and dictionary_size must be positive")


@dataclass
class DiagRecord:
    """One sample of every tracked functional at time t.

    Cumulative fields are running left-endpoint time integrals maintained by
    the integrator; standalone evaluation leaves them at zero.
    """

    t: float
    mass_u: float
    mass_v: float
    sup_u: float
    sup_v: float
    min_v: float
    sup_gradv: float
    ent_u: float
    log_u: float
    lyap: float
    diss_u: float
    diss_v: float
    q4: float
    q6: float
    energy: float
    r_uv: float
    lp_u: dict[float, float] = field(default_factory=dict)
    cum_uv: float = 0.0
    cum_diss_u: float = 0.0
    cum_diss_v: float = 0.0
    cum_q4: float = 0.0
    cum_q6: float = 0.0
    cum_mass_v: float = 0.0
    cum_v_gradv2: float = 0.0


def scalar_columns(p_list: tuple[float, ...]) -> list[str]:
    """Fixed column order used by the CSV schema."""
    cols = ["t", "mass_u", "mass_v", "sup_u", "sup_v", "min_v", "sup_gradv",
            "ent_u", "log_u", "lyap", "diss_u", "diss_v", "q4", "q6",
            "energy", "r_uv"]
    cols += [f"lp_u_{p:g}" for p in p_list]
    cols += ["cum_uv", "cum_diss_u", "cum_diss_v", "cum_q4", "cum_q6",
             "cum_mass_v", "cum_v_gradv2"]
    return cols


def record_to_row(r: DiagRecord, p_list: tuple[float, ...]) -> list[float]:
    vals = [r.t, r.mass_u, r.mass_v, r.sup_u, r.sup_v, r.min_v, r.sup_gradv,
            r.ent_u, r.log_u, r.lyap, r.diss_u, r.diss_v, r.q4, r.q6,
            r.energy, r.r_uv]
    vals += [r.lp_u[p] for p in p_list]
    vals += [r.cum_uv, r.cum_diss_u, r.cum_diss_v, r.cum_q4, r.cum_q6,
             r.cum_mass_v, r.cum_v_gradv2]
    return vals


def face_functionals(u: ScalarField, v: ScalarField, floor: float) -> dict[str, float]:
    """Face-quadrature values of the gradient-weighted integrals.

    Returns the integrals (already weighted by hx*hy) of:
    ``diss_u``  (v/u)|grad u|^2, ``diss_v``  (u/v)|grad v|^2,
    ``v_gradv2``  v |grad v|^2, ``q4``  |grad v|^4/v^3, ``q6``  |grad v|^6/v^5,
    ``gradv2``  |grad v|^2, plus ``sup_gradv``, the largest face gradient.
    """
    w = u.grid.cell_volume
    out = dict(diss_u=0.0, diss_v=0.0, v_gradv2=0.0, q4=0.0, q6=0.0, gradv2=0.0)
    sup_g = 0.0
    gus = interior_grads(u)
    gvs = interior_grads(v)
    ufs = face_means(u)
    vfs = face_means(v)
    for gu, gv, uf, vf in zip(gus, gvs, ufs, vfs):
        g2u = gu * gu
        g2v = gv * gv
        uf_g = np.maximum(uf, floor)
        vf_g = np.maximum(vf, floor)
        out["diss_u"] += float((vf / uf_g * g2u).sum())
        out["diss_v"] += float((uf / vf_g * g2v).sum())
        out["v_gradv2"] += float((vf * g2v).sum())
        v3 = vf_g * vf_g * vf_g
        out["q4"] += float((g2v * g2v / v3).sum())
        out["q6"] += float((g2v * g2v * g2v / (v3 * vf_g * vf_g)).sum())
        out["gradv2"] += float(g2v.sum())
        if gv.size:
            sup_g = max(sup_g, float(np.abs(gv).max()))
    res = {k: w * s for k, s in out.items()}
    res["sup_gradv"] = sup_g
    return res


def functionals(s, p: Params, d: DiagConfig) -> DiagRecord:
    """Evaluate every tracked functional on a state; cumulative slots stay 0."""
    u, v = s.u, s.v
    if u.min() <= d.positivity_floor or v.min() <= d.positivity_floor:
        raise PositivityFloorViolated(
            f"min u = {u.min()}, min v = {v.min()} at t = {s.t}")
    w = u.grid.cell_volume
    ff = face_functionals(u, v, d.positivity_floor)
    ent_u = w * float((u.values * np.log(u.values)).sum())
    log_u = w * float(np.log(u.values).sum())
    lyap = -log_u + 0.5 * p.chi * ff["gradv2"]
    r_uv = w * float((u.values * v.values).sum())
    lp_u = {q: w * float((u.values ** q).sum()) for q in d.p_list}
    return DiagRecord(
        t=s.t,
        mass_u=integrate(u),
        mass_v=integrate(v),
        sup_u=linf(u),
        sup_v=linf(v),
        min_v=v.min(),
        sup_gradv=ff["sup_gradv"],
        ent_u=ent_u,
        log_u=log_u,
        lyap=lyap,
        diss_u=ff["diss_u"],
        diss_v=ff["diss_v"],
        q4=ff["q4"],
        q6=ff["q6"],
        energy=4.0 * d.b * ent_u + ff["q4"],
        r_uv=r_uv,
        lp_u=lp_u,
    )


# -- invariant checking ------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: float
    bound: float
    detail: str = ""


@dataclass
class ViolationReport:
    checks: list[CheckResult]
    tol_exact: float
    tol_pde: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def default_tol_pde(dt_mean: float, h: float) -> float:
    """Relative slack for bounds that hold only up to scheme error."""
    return 50.0 * (dt_mean + h * h)


def check_invariants(traj, p: Params, tol_exact: float = 1e-10,
                     tol_pde: float | None = None) -> ViolationReport:
    """Evaluate the a priori bounds over a trajectory.

    Exact discrete identities use ``tol_exact`` (relative); estimates that are
    exact only for the continuum problem use ``tol_pde``.  The q4 ceiling is a
    boundedness proxy: the running maximum may not exceed ten times the
    early-run maximum.
    """
    samples = traj.samples
    if len(samples) < 2:
        raise ValueError("need at least 2 samples to check a trajectory")
    recs = [r for _, r in samples]
    g = traj.grid
    h = min(g.hx, g.hy)
    if tol_pde is None:
        tol_pde = default_tol_pde(traj.dt_mean, h)

    m0u = recs[0].mass_u
    v0_mass = recs[0].mass_v
    v0_sup = recs[0].sup_v
    v0_min = recs[0].min_v
    last = recs[-1]
    checks: list[CheckResult] = []

    # (a) mass of u never drops below its initial value
    obs = min(r.mass_u for r in recs)
    bnd = m0u - tol_exact * max(1.0, m0u)
    checks.append(CheckResult("mass_u_lower", obs >= bnd, obs, m0u,
                              "int u(t) >= int u0+eps"))

    # (b) mass of u never exceeds the produced-mass window
    obs = max(r.mass_u for r in recs)
    bnd = (m0u + p.ell * v0_mass) * (1.0 + tol_exact)
    checks.append(CheckResult("mass_u_upper", obs <= bnd, obs, bnd,
                              "int u(t) <= int u0+eps + ell int v0"))

    # (c) nutrient mass and sup norm are nonincreasing
    worst_mv = max(recs[i + 1].mass_v - recs[i].mass_v for i in range(len(recs) - 1))
    checks.append(CheckResult("mass_v_monotone",
                              worst_mv <= tol_exact * max(1.0, v0_mass),
                              worst_mv, 0.0, "int v nonincreasing"))
    worst_sv = max(recs[i + 1].sup_v - recs[i].sup_v for i in range(len(recs) - 1))
    checks.append(CheckResult("sup_v_monotone",
                              worst_sv <= tol_exact * max(1.0, v0_sup),
                              worst_sv, 0.0, "sup v nonincreasing"))

    # (d) cumulative consumption cannot exceed the initial nutrient supply
    checks.append(CheckResult("cum_uv_bound",
                              last.cum_uv <= v0_mass * (1.0 + tol_exact),
                              last.cum_uv, v0_mass,
                              "int int u v <= int v0"))

    # (e) cumulative int v |grad v|^2 against the cubic balance bound
    bnd = g.area * v0_sup ** 3 / 3.0
    checks.append(CheckResult("cum_v_gradv2_bound",
                              last.cum_v_gradv2 <= bnd * (1.0 + tol_pde),
                              last.cum_v_gradv2, bnd,
                              "int int v |grad v|^2 <= |O| sup(v0)^3 / 3"))

    # (f) quasi-Lyapunov decay and its dissipation budget.  The growth term
    # enters the balance through ell, so the budget is diss_u + ell * int v.
    lyap_scale = max(1.0, max(abs(r.lyap) for r in recs))
    worst = 0.0
    for i in range(len(recs) - 1):
        dt_s = recs[i + 1].t - recs[i].t
        worst = max(worst, recs[i + 1].lyap - recs[i].lyap - tol_pde * lyap_scale * dt_s)
    checks.append(CheckResult("lyap_monotone", worst <= tol_exact * lyap_scale,
                              worst, 0.0, "lyapunov nonincreasing per unit time"))
    drop = recs[0].lyap - last.lyap
    budget = last.cum_diss_u + p.ell * last.cum_mass_v
    slack = tol_pde * lyap_scale * (1.0 + last.t)
    checks.append(CheckResult("lyap_dissipation", drop >= budget - slack,
                              drop, budget,
                              "lyap(0)-lyap(T) >= cum diss_u + ell cum int v"))

    # (g) q4 boundedness proxy
    n_early = max(1, len(recs) // 10)
    ceiling = 10.0 * max(max(r.q4 for r in recs[:n_early]), recs[0].q4)
    obs = max(r.q4 for r in recs)
    checks.append(CheckResult("q4_ceiling",
                              obs <= ceiling + tol_exact,
                              obs, ceiling, "sup q4 <= 10x early-run max"))

    # (h) comparison lower bound for min v
    u_bar = traj.max_sup_u
    factor = 1.0 - 10.0 * (traj.dt_mean + h * h)
    worst = math.inf
    for r in recs:
        lower = v0_min * math.exp(-u_bar * r.t) * factor
        worst = min(worst, r.min_v - lower)
    checks.append(CheckResult("min_v_comparison", worst >= 0.0, worst, 0.0,
                              "min v(t) >= min v0 exp(-sup_u t) (1 - 10(dt+h^2))"))

    return ViolationReport(checks, tol_exact, tol_pde)


# -- dual-norm dictionary proxy ----------------------------------------------

def dictionary_modes(size: int) -> list[tuple[int, int]]:
    """First ``size`` frequency pairs ordered by m+n, then by m."""
    modes = []
    s = 0
    while len(modes) < size:
        for m in range(s + 1):
            modes.append((m, s - m))
            if len(modes) == size:
                break
        s += 1
    return modes


def _dictionary(grid: GridSpec, size: int) -> np.ndarray:
    X, Y = grid.cell_centers()
    phis = np.empty((size, grid.ny, grid.nx))
    for k, (m, n) in enumerate(dictionary_modes(size)):
        norm = 1.0 + math.pi * m / grid.lx + math.pi * n / grid.ly
        phis[k] = np.cos(m * math.pi * X / grid.lx) * np.cos(n * math.pi * Y / grid.ly) / norm
    return phis


def dual_distance(u1: ScalarField, u2: ScalarField, d: DiagConfig) -> float:
    """Sup of |int (u1-u2) phi| over the normalized cosine dictionary.

    A computable stand-in for the (W^{1,inf})* distance: every dictionary
    entry satisfies |phi|_inf + |grad phi|_inf <= 1, so this never exceeds the
    true dual norm.
    """
    require_same_grid(u1, u2)
    g = u1.grid
    diff = u1.values - u2.values
    phis = _dictionary(g, d.dictionary_size)
    pairings = g.cell_volume * np.tensordot(phis, diff, axes=([1, 2], [0, 1]))
    return float(np.abs(pairings).max())
