"""Adaptive forward-Euler integration with positivity rejection.

Forward Euler is chosen deliberately: with it, the discrete balance laws are
machine-exact telescopes.  Summing the update over all cells, the flux
divergence cancels face by face, so

    int u^{n+1} = int u^n + dt * ell * int u^n v^n
    int v^{n+1} = int v^n - dt * int u^n v^n

hold to rounding error at every accepted step, and under the stability bound
the v-update is a convex combination of old values minus a nonnegative
consumption term, so ``sup v`` cannot grow and ``min v`` obeys the comparison
decay.  The price is the parabolic restriction dt ~ h^2, acceptable at desk
scale.

Positivity of u is not guaranteed by the scheme near the degeneracy, so a
trial step that produces a nonpositive cell is rejected and retried with half
the step; fields are never clamped, because clamping would silently break the
balance identities above.

The hot loop is a fused numba kernel that produces the right-hand sides, the
stability reductions, and the per-step integrand sums for the cumulative
space-time integrals in a single pass with a fixed summation order, so runs
are bit-for-bit reproducible.  The kernel is exercised against the plain
numpy operators in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .diagnostics import DiagConfig, DiagRecord, functionals
from .errors import NonFiniteState, StepCollapse
from .grid import GridSpec, ScalarField
from .model import Params, State, regularize_initial, rhs_u, rhs_v


@dataclass(frozen=True)
class StepControl:
    """Step-size policy.

    ``cfl_safety`` scales the stability bound; the accepted dt is clamped to
    [dt_min, dt_max].  ``fixed_dt`` disables adaptation (convergence studies
    only).  ``sup_u_ceiling`` is the configured no-blow-up ceiling; the run
    records the observed maximum of ``sup u`` for comparison against it.
    """

    t_end: float
    cfl_safety: float = 0.4
    dt_min: float = 1e-12
    dt_max: float = 1.0
    max_rejections_per_step: int = 40
    fixed_dt: float | None = None
    sup_u_ceiling: float = 1e6

    def __post_init__(self):
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if not (0.0 < self.dt_min <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_max")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")


@dataclass
class Trajectory:
    """Result of one run: sampled diagnostics, snapshots, and bookkeeping."""

    grid: GridSpec
    samples: list[tuple[float, DiagRecord]] = field(default_factory=list)
    snapshot_times: list[float] = field(default_factory=list)
    snapshots: list[State] = field(default_factory=list)
    initial: State | None = None
    final: State | None = None
    n_accepted: int = 0
    n_rejected: int = 0
    dt_mean: float = 0.0
    max_sup_u: float = 0.0
    max_mass_residual_u: float = 0.0
    max_mass_residual_v: float = 0.0
    max_supv_growth: float = 0.0
    stopped_early: bool = False
    stop_reason: str = "t_end"

    def records(self) -> list[DiagRecord]:
        return [r for _, r in self.samples]


# Indices into the stats vector filled by _rhs_stats.
_RUV, _DISS_U, _DISS_V, _VGR2, _Q4, _Q6, _GRADV2 = range(7)
_MAX_UV, _MAX_U, _MAX_V, _MAX_ADV, _MAX_GRADV = range(7, 12)
_SUM_U, _SUM_V, _MIN_U, _MIN_V = range(12, 16)
_NSTATS = 16


@njit(cache=True)
def _rhs_stats(u, v, chi, ell, eps, floor, hx, hy, ru, rv, stats):  # pragma: no cover
    ny, nx = u.shape
    for j in range(ny):
        for i in range(nx):
            ru[j, i] = 0.0
            rv[j, i] = 0.0
    for k in range(_NSTATS):
        stats[k] = 0.0
    stats[_MIN_U] = u[0, 0]
    stats[_MIN_V] = v[0, 0]

    for j in range(ny):
        for i in range(nx - 1):
            gu = (u[j, i + 1] - u[j, i]) / hx
            gv = (v[j, i + 1] - v[j, i]) / hx
            uf = 0.5 * (u[j, i + 1] + u[j, i])
            vf = 0.5 * (v[j, i + 1] + v[j, i])
            uvf = 0.5 * (u[j, i + 1] * v[j, i + 1] + u[j, i] * v[j, i])
            u2vf = uf * uf * vf
            F = uvf * gu - chi * u2vf * gv
            ru[j, i] -= F / hx
            ru[j, i + 1] += F / hx
            rv[j, i] -= gv / hx
            rv[j, i + 1] += gv / hx
            g2u = gu * gu
            g2v = gv * gv
            ufg = max(uf, floor)
            vfg = max(vf, floor)
            v3 = vfg * vfg * vfg
            stats[_DISS_U] += vf / ufg * g2u
            stats[_DISS_V] += uf / vfg * g2v
            stats[_VGR2] += vf * g2v
            stats[_Q4] += g2v * g2v / v3
            stats[_Q6] += g2v * g2v * g2v / (v3 * vfg * vfg)
            stats[_GRADV2] += g2v
            adv = chi * u2vf * abs(gv) / max(uf, eps)
            if adv > stats[_MAX_ADV]:
                stats[_MAX_ADV] = adv
            ag = abs(gv)
            if ag > stats[_MAX_GRADV]:
                stats[_MAX_GRADV] = ag
    for j in range(ny - 1):
        for i in range(nx):
            gu = (u[j + 1, i] - u[j, i]) / hy
            gv = (v[j + 1, i] - v[j, i]) / hy
            uf = 0.5 * (u[j + 1, i] + u[j, i])
            vf = 0.5 * (v[j + 1, i] + v[j, i])
            uvf = 0.5 * (u[j + 1, i] * v[j + 1, i] + u[j, i] * v[j, i])
            u2vf = uf * uf * vf
            F = uvf * gu - chi * u2vf * gv
            ru[j, i] -= F / hy
            ru[j + 1, i] += F / hy
            rv[j, i] -= gv / hy
            rv[j + 1, i] += gv / hy
            g2u = gu * gu
            g2v = gv * gv
            ufg = max(uf, floor)
            vfg = max(vf, floor)
            v3 = vfg * vfg * vfg
            stats[_DISS_U] += vf / ufg * g2u
            stats[_DISS_V] += uf / vfg * g2v
            stats[_VGR2] += vf * g2v
            stats[_Q4] += g2v * g2v / v3
            stats[_Q6] += g2v * g2v * g2v / (v3 * vfg * vfg)
            stats[_GRADV2] += g2v
            adv = chi * u2vf * abs(gv) / max(uf, eps)
            if adv > stats[_MAX_ADV]:
                stats[_MAX_ADV] = adv
            ag = abs(gv)
            if ag > stats[_MAX_GRADV]:
                stats[_MAX_GRADV] = ag

    for j in range(ny):
        for i in range(nx):
            ui = u[j, i]
            vi = v[j, i]
            uv = ui * vi
            ru[j, i] += ell * uv
            rv[j, i] -= uv
            stats[_RUV] += uv
            stats[_SUM_U] += ui
            stats[_SUM_V] += vi
            if uv > stats[_MAX_UV]:
                stats[_MAX_UV] = uv
            if ui > stats[_MAX_U]:
                stats[_MAX_U] = ui
            if vi > stats[_MAX_V]:
                stats[_MAX_V] = vi
            if ui < stats[_MIN_U]:
                stats[_MIN_U] = ui
            if vi < stats[_MIN_V]:
                stats[_MIN_V] = vi


@njit(cache=True)
def _apply(u, v, ru, rv, dt, un, vn, out):  # pragma: no cover
    """un = u + dt ru, vn = v + dt rv; out = [min un, min vn, max vn, sum un, sum vn]."""
    ny, nx = u.shape
    min_u = math.inf
    min_v = math.inf
    max_v = -math.inf
    su = 0.0
    sv = 0.0
    for j in range(ny):
        for i in range(nx):
            a = u[j, i] + dt * ru[j, i]
            b = v[j, i] + dt * rv[j, i]
            un[j, i] = a
            vn[j, i] = b
            if a < min_u:
                min_u = a
            if b < min_v:
                min_v = b
            if b > max_v:
                max_v = b
            su += a
            sv += b
    out[0] = min_u
    out[1] = min_v
    out[2] = max_v
    out[3] = su
    out[4] = sv


def _stable_dt_from_stats(stats: np.ndarray, grid: GridSpec, c: StepControl) -> float:
    """Spec step bound from the kernel reductions.

    Constraints on the v-equation (diffusive h^2/4 and reactive 1/max u) are
    active only while v is not identically zero; all u-equation constraints
    deactivate themselves through the degenerate mobilities.
    """
    h = min(grid.hx, grid.hy)
    dt = math.inf
    if stats[_MAX_UV] > 0.0:
        dt = min(dt, h * h / (4.0 * stats[_MAX_UV]))
    if stats[_MAX_V] > 0.0:
        dt = min(dt, h * h / 4.0)
        dt = min(dt, 1.0 / stats[_MAX_U])
    if stats[_MAX_ADV] > 0.0:
        dt = min(dt, h / stats[_MAX_ADV])
    dt = c.cfl_safety * dt
    return min(max(dt, c.dt_min), c.dt_max)


def stable_dt(s: State, p: Params, c: StepControl, floor: float = 1e-14) -> float:
    """Stability-limited step for the current state, clamped to [dt_min, dt_max]."""
    g = s.grid
    ru = np.empty(g.shape)
    rv = np.empty(g.shape)
    stats = np.empty(_NSTATS)
    _rhs_stats(s.u.values, s.v.values, p.chi, p.ell, p.eps, floor,
               g.hx, g.hy, ru, rv, stats)
    return _stable_dt_from_stats(stats, g, c)


def step_euler(s: State, p: Params, dt: float) -> State:
    """One explicit step using the reference numpy operators."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    un = s.u.values + dt * rhs_u(s.u, s.v, p).values
    vn = s.v.values + dt * rhs_v(s.u, s.v).values
    g = s.grid
    return State(ScalarField(g, un), ScalarField(g, vn), s.t + dt)


class _Accumulators:
    """Running left-endpoint time integrals of the tracked integrands."""

    __slots__ = ("uv", "diss_u", "diss_v", "q4", "q6", "mass_v", "v_gradv2")

    def __init__(self):
        self.uv = self.diss_u = self.diss_v = 0.0
        self.q4 = self.q6 = self.mass_v = self.v_gradv2 = 0.0

    def add(self, dt: float, stats: np.ndarray, w: float):
        self.uv += dt * stats[_RUV] * w
        self.diss_u += dt * stats[_DISS_U] * w
        self.diss_v += dt * stats[_DISS_V] * w
        self.q4 += dt * stats[_Q4] * w
        self.q6 += dt * stats[_Q6] * w
        self.mass_v += dt * stats[_SUM_V] * w
        self.v_gradv2 += dt * stats[_VGR2] * w


def _sample(traj: Trajectory, state: State, p: Params, d: DiagConfig,
            acc: _Accumulators) -> None:
    rec = functionals(state, p, d)
    rec.cum_uv = acc.uv
    rec.cum_diss_u = acc.diss_u
    rec.cum_diss_v = acc.diss_v
    rec.cum_q4 = acc.q4
    rec.cum_q6 = acc.q6
    rec.cum_mass_v = acc.mass_v
    rec.cum_v_gradv2 = acc.v_gradv2
    traj.samples.append((state.t, rec))


def run(u0: ScalarField, v0: ScalarField, p: Params, c: StepControl,
        d: DiagConfig | None = None,
        snapshot_times: list[float] | None = None,
        stop_sup_v_below: float | None = None) -> Trajectory:
    """Integrate from (u0 + eps, v0) to t_end.

    ``snapshot_times`` are landed on exactly (the step is shortened), and a
    copy of the state is stored for each; this is what makes field comparisons
    across runs share identical sample times.  With ``stop_sup_v_below`` the
    run ends as soon as ``sup v`` crosses the threshold.
    """
    d = d or DiagConfig()
    if v0.values.min() <= 0.0:
        raise ValueError("v0 must be strictly positive")
    u = regularize_initial(u0, p.eps).values.copy()
    v = v0.values.copy()
    g = u0.grid
    w = g.cell_volume
    targets = sorted(t for t in (snapshot_times or []) if t > 0.0)

    traj = Trajectory(grid=g)
    traj.initial = State(ScalarField(g, u.copy()), ScalarField(g, v.copy()), 0.0)
    acc = _Accumulators()

    ru = np.empty(g.shape)
    rv = np.empty(g.shape)
    un = np.empty(g.shape)
    vn = np.empty(g.shape)
    stats = np.empty(_NSTATS)
    applied = np.empty(5)

    _rhs_stats(u, v, p.chi, p.ell, p.eps, d.positivity_floor, g.hx, g.hy, ru, rv, stats)
    if not np.all(np.isfinite(stats)):
        raise NonFiniteState("initial state produced non-finite values")
    t = 0.0
    mass_u = stats[_SUM_U] * w
    mass_v = stats[_SUM_V] * w
    traj.max_sup_u = stats[_MAX_U]
    _sample(traj, State(ScalarField(g, u.copy()), ScalarField(g, v.copy()), 0.0), p, d, acc)
    if snapshot_times is not None and any(abs(ts) <= 1e-15 for ts in snapshot_times):
        traj.snapshot_times.append(0.0)
        traj.snapshots.append(traj.initial)

    next_target = targets.pop(0) if targets else None
    since_sample = 0
    t_eps = 1e-12 * max(1.0, c.t_end)

    while t < c.t_end - t_eps:
        if stop_sup_v_below is not None and stats[_MAX_V] < stop_sup_v_below:
            traj.stopped_early = True
            traj.stop_reason = "sup_v_threshold"
            break

        dt = c.fixed_dt if c.fixed_dt is not None else _stable_dt_from_stats(stats, g, c)
        dt = min(dt, c.t_end - t)
        if next_target is not None and t < next_target:
            dt = min(dt, next_target - t)

        accepted = False
        for _ in range(c.max_rejections_per_step + 1):
            _apply(u, v, ru, rv, dt, un, vn, applied)
            if (np.all(np.isfinite(applied)) and applied[0] > 0.0 and applied[1] > 0.0):
                accepted = True
                break
            traj.n_rejected += 1
            dt *= 0.5
            if dt < c.dt_min:
                raise StepCollapse(
                    f"dt fell below dt_min={c.dt_min} at t={t} after rejections")
        if not accepted:
            raise StepCollapse(
                f"step at t={t} rejected {c.max_rejections_per_step + 1} times")

        # exact discrete balance residuals for this step
        exp_u = mass_u + dt * p.ell * stats[_RUV] * w
        exp_v = mass_v - dt * stats[_RUV] * w
        new_mu = applied[3] * w
        new_mv = applied[4] * w
        traj.max_mass_residual_u = max(traj.max_mass_residual_u,
                                       abs(new_mu - exp_u) / max(1.0, abs(exp_u)))
        traj.max_mass_residual_v = max(traj.max_mass_residual_v,
                                       abs(new_mv - exp_v) / max(1.0, abs(exp_v)))
        if stats[_MAX_V] > 0.0:
            traj.max_supv_growth = max(traj.max_supv_growth,
                                       (applied[2] - stats[_MAX_V]) / stats[_MAX_V])
        acc.add(dt, stats, w)

        u, un = un, u
        v, vn = vn, v
        t += dt
        mass_u, mass_v = new_mu, new_mv
        traj.n_accepted += 1
        since_sample += 1

        _rhs_stats(u, v, p.chi, p.ell, p.eps, d.positivity_floor, g.hx, g.hy, ru, rv, stats)
        if not np.all(np.isfinite(stats)):
            raise NonFiniteState(f"non-finite state at t={t}")
        traj.max_sup_u = max(traj.max_sup_u, stats[_MAX_U])

        hit_target = next_target is not None and abs(t - next_target) <= t_eps
        if hit_target:
            traj.snapshot_times.append(t)
            traj.snapshots.append(
                State(ScalarField(g, u.copy()), ScalarField(g, v.copy()), t))
            next_target = targets.pop(0) if targets else None

        at_end = t >= c.t_end - t_eps
        if since_sample >= d.stride or at_end:
            _sample(traj, State(ScalarField(g, u.copy()), ScalarField(g, v.copy()), t),
                    p, d, acc)
            since_sample = 0

    final = State(ScalarField(g, u.copy()), ScalarField(g, v.copy()), t)
    traj.final = final
    if traj.samples[-1][0] < t - t_eps:
        _sample(traj, final, p, d, acc)
    traj.dt_mean = t / max(1, traj.n_accepted)
    return traj
