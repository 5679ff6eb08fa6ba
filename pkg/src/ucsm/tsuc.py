"""Two-stage stochastic unit commitment MILP and its branch-and-bound solver.

First-stage commitment binaries u/y/z are shared across scenarios; second
stage dispatches each scenario under piecewise-linear costs. Bus angles are
eliminated through the PTDF, so the per-bus balance collapses to one
system-wide balance row per (scenario, hour) and line limits become linear
rows over the dispatch. Angles are recovered afterwards; per-bus balance
holds by construction.

Network/ramp rows are activated lazily during the solve: a node LP is
re-solved with every violated row added until none remain, so each node
bound equals the bound of the fully constrained relaxation.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import FeatureMismatch, TooLarge
from .grid import GridMatrices, SystemCase, build_matrices
from .pwl import PwlCost, pwl_cost
from .scenarios import Scenario
from .simplex import LpProblem, LpSolution, LpStatus, remap_start, solve_lp
from .svm import Hyperplane

SURROGATE_TOL = 1e-9
FLOW_TOL_MW = 1e-6
INTEGRALITY_TOL = 1e-6
DEFAULT_GAP_TOL = 1e-6
DEFAULT_NODE_LIMIT = 100_000
BRUTE_FORCE_MAX_BITS = 16


class TsucMode(Enum):
    FULL_NETWORK = "full"
    SURROGATE = "surrogate"


class TsucStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NODE_LIMIT = "node_limit"


@dataclass
class TsucInstance:
    case: SystemCase
    scenarios: list[Scenario]
    horizon: int
    mode: TsucMode
    hyperplane: Hyperplane | None = None
    pwl_segments: int = 8
    initial_status: np.ndarray | None = None  # u_{g,0}, default all off

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.scenarios:
            raise ValueError("need at least one scenario")
        if self.pwl_segments < 1:
            raise ValueError("pwl_segments must be >= 1")
        if self.mode is TsucMode.SURROGATE and self.hyperplane is None:
            raise ValueError("surrogate mode requires a hyperplane")
        if self.initial_status is None:
            self.initial_status = np.zeros(self.case.n_gens, dtype=int)


@dataclass
class Schedule:
    u: np.ndarray  # (G, T) in {0,1}
    y: np.ndarray
    z: np.ndarray


@dataclass
class SolveStats:
    nodes: int = 0
    lp_solves: int = 0
    wall_time: float = 0.0
    gap: float = 0.0


@dataclass
class TsucSolution:
    status: TsucStatus
    schedule: Schedule | None
    dispatch: np.ndarray | None   # (G, S, T) MW
    angles: np.ndarray | None     # (N, S, T) rad
    objective: float
    stats: SolveStats
    flow_rows: int = 0
    surrogate_rows: int = 0


def constraint_counts(n_lines: int, n_scenarios: int, horizon: int) -> dict:
    """Exact feasibility-row counts for both modes (count-only, no build)."""
    full = 2 * n_lines * n_scenarios * horizon
    surrogate = n_scenarios * horizon
    reduction = 100.0 * (1.0 - surrogate / full) if full else 0.0
    return {"full_rows": full, "surrogate_rows": surrogate,
            "reduction_pct": reduction}


def build_feature_vector(scenario: Scenario, hour: int, dispatch: np.ndarray) -> np.ndarray:
    """[mu, sigma, p] in the fixed dataset ordering for one scenario-hour."""
    return np.concatenate([scenario.mu, scenario.sigma,
                           np.asarray(dispatch, dtype=float)])


def minimal_transitions(u: np.ndarray, u0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smallest y/z consistent with the commitment path (no spurious pairs)."""
    prev = np.column_stack([u0, u[:, :-1]])
    delta = u - prev
    return (delta > 0).astype(int), (delta < 0).astype(int)


def schedule_is_logical(case: SystemCase, u: np.ndarray, u0: np.ndarray) -> bool:
    """Min-up/min-down windows (truncated at the horizon) on a binary path."""
    y, z = minimal_transitions(u, u0)
    horizon = u.shape[1]
    for gi, g in enumerate(case.generators):
        for t in range(horizon):
            if y[gi, t]:
                end = min(t + g.min_up, horizon)
                if not np.all(u[gi, t:end] == 1):
                    return False
            if z[gi, t]:
                end = min(t + g.min_down, horizon)
                if not np.all(u[gi, t:end] == 0):
                    return False
    return True


class _Milp:
    """Compact TSUC MILP: columns [u, y, z, delta], rows built on demand.

    Eager rows: transition logic, min-up/min-down, per-(s,t) system balance,
    and the capacity link sum(delta) <= (pmax - pmin) u. Lazy families (ramp,
    line-flow or surrogate rows) are materialized only when violated.
    """

    def __init__(self, inst: TsucInstance, mats: GridMatrices | None = None):
        case, mode = inst.case, inst.mode
        if mode is TsucMode.SURROGATE:
            expected = tuple(case.feature_names())
            if tuple(inst.hyperplane.feature_names) != expected:
                raise FeatureMismatch(
                    "hyperplane features "
                    f"{list(inst.hyperplane.feature_names)} do not match case "
                    f"features {list(expected)}"
                )
        self.inst = inst
        self.mats = mats if mats is not None else build_matrices(case)
        G, S, T = case.n_gens, len(inst.scenarios), inst.horizon
        self.G, self.S, self.T = G, S, T
        self.curves: list[PwlCost] = [
            pwl_cost(g, inst.pwl_segments) for g in case.generators
        ]
        self.K = inst.pwl_segments

        # Column layout.
        self.n_u = G * T
        self.off_y = self.n_u
        self.off_z = 2 * self.n_u
        self.off_d = 3 * self.n_u
        self.ncols = self.off_d + G * S * T * self.K

        self.pmin = np.array([g.p_min for g in case.generators])
        self.pmax = np.array([g.p_max for g in case.generators])
        self.widths = np.array([c.widths for c in self.curves])  # (G, K)

        # Scenario data.
        self.wind_total = np.array([
            s.wind_mw.sum(axis=0) for s in inst.scenarios
        ])  # (S, T)
        self.load_bus = np.array([
            s.loads(case) for s in inst.scenarios
        ])  # (S, N, T)
        self.load_total = self.load_bus.sum(axis=1)  # (S, T)
        self.wind_bus = np.zeros((S, case.n_buses, T))
        for si, s in enumerate(inst.scenarios):
            for wi, w in enumerate(case.wind_units):
                self.wind_bus[si, case.bus_index(w.bus)] += s.wind_mw[wi]
        self.gen_bus = np.array([case.bus_index(g.bus) for g in case.generators])

        self._build_objective()
        self._build_bounds()
        self._build_eager_rows()

        counts = constraint_counts(case.n_lines, S, T)
        self.flow_row_count = counts["full_rows"] if mode is TsucMode.FULL_NETWORK else 0
        self.surrogate_row_count = (
            counts["surrogate_rows"] if mode is TsucMode.SURROGATE else 0
        )

        # Lazy pool: activated rows accumulate across the whole search.
        self.lazy_a: list[np.ndarray] = []
        self.lazy_b: list[float] = []
        self.lazy_keys: set = set()
        self.lazy_key_order: list = []

    # -- column helpers ----------------------------------------------------

    def u_col(self, g: int, t: int) -> int:
        return t * self.G + g  # hour-major so ties prefer earlier hours

    def d_cols(self, g: int, s: int, t: int) -> slice:
        base = self.off_d + ((s * self.T + t) * self.G + g) * self.K
        return slice(base, base + self.K)

    def _build_objective(self):
        inst, case = self.inst, self.inst.case
        c = np.zeros(self.ncols)
        pi = np.array([s.probability for s in inst.scenarios])
        for g in range(self.G):
            gen = case.generators[g]
            fixed = gen.c0 + self.curves[g].base_value
            for t in range(self.T):
                c[self.u_col(g, t)] = fixed  # sum(pi) = 1
                c[self.off_y + self.u_col(g, t)] = gen.startup_cost
                c[self.off_z + self.u_col(g, t)] = gen.shutdown_cost
            for s in range(self.S):
                for t in range(self.T):
                    c[self.d_cols(g, s, t)] = pi[s] * self.curves[g].slopes
        self.c = c

    def _build_bounds(self):
        lo = np.zeros(self.ncols)
        hi = np.ones(self.ncols)
        for g in range(self.G):
            for s in range(self.S):
                for t in range(self.T):
                    hi[self.d_cols(g, s, t)] = self.widths[g]
        self.lo, self.hi = lo, hi

    def _expand_p_row(self, row: np.ndarray, coeff: np.ndarray, s: int, t: int):
        """Add coeff_g * p_{g,s,t} to a row via p = pmin*u + sum(delta)."""
        for g in range(self.G):
            if coeff[g] == 0.0:
                continue
            row[self.u_col(g, t)] += coeff[g] * self.pmin[g]
            row[self.d_cols(g, s, t)] += coeff[g]

    def _build_eager_rows(self):
        inst, case = self.inst, self.inst.case
        G, S, T, K = self.G, self.S, self.T, self.K
        u0 = inst.initial_status
        a_le, b_le = [], []

        # Transition logic: u_t - u_{t-1} - y_t <= 0 and u_{t-1} - u_t - z_t <= 0.
        for g in range(G):
            for t in range(T):
                row = np.zeros(self.ncols)
                row[self.u_col(g, t)] = 1.0
                row[self.off_y + self.u_col(g, t)] = -1.0
                rhs = 0.0
                if t == 0:
                    rhs = float(u0[g])
                else:
                    row[self.u_col(g, t - 1)] = -1.0
                a_le.append(row)
                b_le.append(rhs)

                row = np.zeros(self.ncols)
                row[self.u_col(g, t)] = -1.0
                row[self.off_z + self.u_col(g, t)] = -1.0
                rhs = 0.0
                if t == 0:
                    rhs = -float(u0[g])
                else:
                    row[self.u_col(g, t - 1)] = 1.0
                a_le.append(row)
                b_le.append(rhs)

        # Min-up: y_t - u_tau <= 0; min-down: z_t + u_tau <= 1.
        for g in range(G):
            gen = case.generators[g]
            for t in range(T):
                for tau in range(t, min(t + gen.min_up, T)):
                    row = np.zeros(self.ncols)
                    row[self.off_y + self.u_col(g, t)] = 1.0
                    row[self.u_col(g, tau)] -= 1.0
                    a_le.append(row)
                    b_le.append(0.0)
                for tau in range(t, min(t + gen.min_down, T)):
                    row = np.zeros(self.ncols)
                    row[self.off_z + self.u_col(g, t)] = 1.0
                    row[self.u_col(g, tau)] += 1.0
                    a_le.append(row)
                    b_le.append(1.0)

        # Aggregated capacity link per (g, t): the scenario sum of the exact
        # rows sum_k delta <= (pmax - pmin) u. The individual rows live in
        # the lazy pool; scenarios are statistically alike, so few of them
        # ever activate while the eager system stays S times smaller.
        for g in range(G):
            for t in range(T):
                row = np.zeros(self.ncols)
                for s in range(S):
                    row[self.d_cols(g, s, t)] = 1.0
                row[self.u_col(g, t)] = -S * (self.pmax[g] - self.pmin[g])
                a_le.append(row)
                b_le.append(0.0)

        # System balance per (s, t): sum_g p = load_total - wind_total.
        a_eq, b_eq = [], []
        for s in range(S):
            for t in range(T):
                row = np.zeros(self.ncols)
                self._expand_p_row(row, np.ones(G), s, t)
                a_eq.append(row)
                b_eq.append(self.load_total[s, t] - self.wind_total[s, t])

        self.a_le = np.array(a_le)
        self.b_le = np.array(b_le)
        self.a_eq = np.array(a_eq)
        self.b_eq = np.array(b_eq)

    # -- lazy families -----------------------------------------------------

    def dispatch_of(self, x: np.ndarray) -> np.ndarray:
        """(G, S, T) dispatch implied by a column vector."""
        u = x[:self.n_u].reshape(self.T, self.G).T  # (G, T)
        d = x[self.off_d:].reshape(self.S, self.T, self.G, self.K)
        return self.pmin[:, None, None] * u[:, None, :] + d.sum(axis=3).transpose(2, 0, 1)

    def flows_of(self, p: np.ndarray) -> np.ndarray:
        """(L, S, T) line flows for a (G, S, T) dispatch."""
        inj = self.wind_bus - self.load_bus  # (S, N, T)
        inj = inj.copy()
        for g in range(self.G):
            inj[:, self.gen_bus[g], :] += p[g]
        return np.einsum("lb,sbt->lst", self.mats.ptdf, inj)

    def violated_lazy_rows(self, x: np.ndarray, tol: float = FLOW_TOL_MW):
        """(key, row, rhs) for every not-yet-active violated lazy row."""
        inst, case = self.inst, self.inst.case
        p = self.dispatch_of(x)
        out = []

        # Exact capacity link: sum_k delta <= (pmax - pmin) u per (g, s, t).
        u = x[:self.n_u].reshape(self.T, self.G).T
        excess = (p - self.pmin[:, None, None] * u[:, None, :]
                  - (self.pmax - self.pmin)[:, None, None] * u[:, None, :])
        for g, s, t in zip(*np.nonzero(excess > tol)):
            key = ("cap", g, s, t)
            if key not in self.lazy_keys:
                row = np.zeros(self.ncols)
                row[self.d_cols(g, s, t)] = 1.0
                row[self.u_col(g, t)] = -(self.pmax[g] - self.pmin[g])
                out.append((key, row, 0.0))

        # Ramps, t >= 2: p_t - p_{t-1} <= RU; p_{t-1} - p_t <= RD.
        ru = np.array([g.ramp_up for g in case.generators])
        rd = np.array([g.ramp_down for g in case.generators])
        dp = p[:, :, 1:] - p[:, :, :-1]  # (G, S, T-1)
        for g, s, i in zip(*np.nonzero(dp > ru[:, None, None] + tol)):
            key = ("ru", g, s, i + 1)
            if key not in self.lazy_keys:
                row = np.zeros(self.ncols)
                self._expand_p_row(row, _unit(self.G, g), s, i + 1)
                self._expand_p_row(row, -_unit(self.G, g), s, i)
                out.append((key, row, float(ru[g])))
        for g, s, i in zip(*np.nonzero(-dp > rd[:, None, None] + tol)):
            key = ("rd", g, s, i + 1)
            if key not in self.lazy_keys:
                row = np.zeros(self.ncols)
                self._expand_p_row(row, -_unit(self.G, g), s, i + 1)
                self._expand_p_row(row, _unit(self.G, g), s, i)
                out.append((key, row, float(rd[g])))

        if inst.mode is TsucMode.FULL_NETWORK:
            flows = self.flows_of(p)  # (L, S, T)
            limits = case.line_limits[:, None, None]
            base = np.einsum("lb,sbt->lst", self.mats.ptdf,
                             self.wind_bus - self.load_bus)
            gcoef = self.mats.ptdf[:, self.gen_bus]  # (L, G)
            for sign in (1.0, -1.0):
                bad = sign * flows > limits + tol
                for li, s, t in zip(*np.nonzero(bad)):
                    key = ("f", int(sign), li, s, t)
                    if key in self.lazy_keys:
                        continue
                    row = np.zeros(self.ncols)
                    self._expand_p_row(row, sign * gcoef[li], s, t)
                    rhs = float(case.line_limits[li] - sign * base[li, s, t])
                    out.append((key, row, rhs))
        else:
            h = inst.hyperplane
            W = case.n_wind
            w_mu = h.weights_physical[:W]
            w_sig = h.weights_physical[W:2 * W]
            w_p = h.weights_physical[2 * W:]
            for s, scen in enumerate(self.inst.scenarios):
                const = float(w_mu @ scen.mu + w_sig @ scen.sigma
                              + h.bias_physical)
                vals = np.einsum("g,gt->t", w_p, p[:, s, :]) + const
                for t in np.nonzero(vals < -SURROGATE_TOL)[0]:
                    key = ("svm", s, int(t))
                    if key in self.lazy_keys:
                        continue
                    row = np.zeros(self.ncols)
                    self._expand_p_row(row, -w_p, s, int(t))
                    out.append((key, row, const + SURROGATE_TOL))
        return out

    def add_lazy(self, rows) -> None:
        for key, row, rhs in rows:
            self.lazy_keys.add(key)
            self.lazy_key_order.append(key)
            self.lazy_a.append(row)
            self.lazy_b.append(rhs)

    def le_keys(self, fix: tuple) -> list:
        """Stable identity of every <= row: eager prefix, lazy pool, fixings."""
        return (list(range(self.b_le.size)) + list(self.lazy_key_order)
                + [("fix",) + f for f in fix])

    def lp_problem(self, fix: tuple) -> LpProblem:
        """Node LP: eager rows + activated lazy rows + branch fixing rows.

        A fixing (j, v) pins binary column j with a row (u_j <= 0 or
        -u_j <= -1) instead of a bound change, so a parent basis stays
        valid for the child and can warm start it.
        """
        blocks_a = [self.a_le]
        blocks_b = [self.b_le]
        if self.lazy_a:
            blocks_a.append(np.array(self.lazy_a))
            blocks_b.append(np.array(self.lazy_b))
        if fix:
            fa = np.zeros((len(fix), self.ncols))
            fb = np.empty(len(fix))
            for i, (col, val) in enumerate(fix):
                if val == 0:
                    fa[i, col] = 1.0
                    fb[i] = 0.0
                else:
                    fa[i, col] = -1.0
                    fb[i] = -1.0
            blocks_a.append(fa)
            blocks_b.append(fb)
        return LpProblem(c=self.c, a_eq=self.a_eq, b_eq=self.b_eq,
                         a_le=np.vstack(blocks_a),
                         b_le=np.concatenate(blocks_b),
                         lo=self.lo, hi=self.hi)


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def build_milp(inst: TsucInstance, mats: GridMatrices | None = None) -> _Milp:
    """Assemble the MILP; raises FeatureMismatch on a surrogate/case conflict."""
    return _Milp(inst, mats)


def _solve_node(
    milp: _Milp,
    fix: tuple,
    stats: SolveStats,
    base: tuple[LpSolution, list] | None = None,
):
    """LP bound with lazy rows grown until none are violated.

    ``base`` is a previously solved (solution, row keys) pair — the parent
    node or the previous lazy round — used to warm start each solve.
    """
    while True:
        keys = milp.le_keys(fix)
        start = None
        if base is not None:
            start = remap_start(base[0], milp.ncols, milp.b_eq.size,
                                base[1], keys)
        sol = solve_lp(milp.lp_problem(fix), start=start)
        stats.lp_solves += 1
        if sol.status is not LpStatus.OPTIMAL:
            return sol.status, np.inf, None, None
        violated = milp.violated_lazy_rows(sol.x)
        if not violated:
            return sol.status, sol.objective, sol.x, (sol, keys)
        milp.add_lazy(violated)
        base = (sol, keys)


def _extract_solution(
    milp: _Milp, x: np.ndarray, objective: float, stats: SolveStats,
    status: TsucStatus,
) -> TsucSolution:
    inst, case = milp.inst, milp.inst.case
    u = np.rint(x[:milp.n_u].reshape(milp.T, milp.G).T).astype(int)
    y, z = minimal_transitions(u, inst.initial_status)
    p = milp.dispatch_of(x)
    # Zero out numerical dust on offline units.
    p = np.where(u[:, None, :] == 0, 0.0, p)
    angles = np.zeros((case.n_buses, milp.S, milp.T))
    for s in range(milp.S):
        for t in range(milp.T):
            inj = milp.wind_bus[s, :, t] - milp.load_bus[s, :, t]
            for g in range(milp.G):
                inj[milp.gen_bus[g]] += p[g, s, t]
            angles[:, s, t] = milp.mats.angles(inj, case.base_mva)
    return TsucSolution(
        status=status,
        schedule=Schedule(u=u, y=y, z=z),
        dispatch=p,
        angles=angles,
        objective=objective,
        stats=stats,
        flow_rows=milp.flow_row_count,
        surrogate_rows=milp.surrogate_row_count,
    )


def _repair_schedule(case: SystemCase, u: np.ndarray, u0: np.ndarray) -> np.ndarray:
    """Make a rounded commitment satisfy min-up/min-down by committing more.

    Forward pass per unit: every switch-on holds for the (truncated) min-up
    window; a switch-off whose off-gap would be shorter than min-down is
    cancelled by keeping the unit running through the gap.
    """
    out = u.copy()
    G, T = out.shape
    for gi, gen in enumerate(case.generators):
        prev = int(u0[gi])
        t = 0
        while t < T:
            if out[gi, t] == 1 and prev == 0:
                end = min(t + gen.min_up, T)
                out[gi, t:end] = 1
                prev = 1
                t = end
            elif out[gi, t] == 0 and prev == 1:
                end = min(t + gen.min_down, T)
                if np.any(out[gi, t:end] == 1):
                    out[gi, t] = 1  # gap too short: stay on this hour
                    t += 1
                else:
                    prev = 0
                    t = end
            else:
                prev = int(out[gi, t])
                t += 1
    return out


def _heuristic_incumbent(
    milp: _Milp, x: np.ndarray, stats: SolveStats,
) -> tuple[float, np.ndarray | None, np.ndarray | None]:
    """Round-and-repair primal heuristic: a feasible schedule and its cost.

    Rounds the relaxation's commitment, repairs the up/down logic, and
    prices the result with one exact dispatch LP per scenario. Returns
    (inf, None, None) when any scenario cannot be dispatched.
    """
    inst, case = milp.inst, milp.inst.case
    G, T = milp.G, milp.T
    u_frac = x[:milp.n_u].reshape(T, G).T
    need = (milp.load_total - milp.wind_total).max(axis=0)  # (T,)

    def candidate(threshold: float) -> np.ndarray:
        u = (u_frac >= threshold).astype(int)
        # Capacity cover: the relaxation spreads commitment thinly, so
        # rounding can leave too little committed capacity. Commit extra
        # units per hour, by descending fractional value, until the
        # worst-scenario net load fits under the committed maximum output.
        for t in range(T):
            order = np.argsort(-u_frac[:, t])
            k = 0
            while float(milp.pmax @ u[:, t]) < need[t] and k < G:
                u[order[k], t] = 1
                k += 1
        return _repair_schedule(case, u, inst.initial_status)

    # Progressively more committed candidates; ramps or side constraints
    # can reject sparse schedules that cover raw capacity.
    tried: set = set()
    for threshold in (0.5, 0.2, 0.05):
        u = candidate(threshold)
        key = u.tobytes()
        if key in tried:
            continue
        tried.add(key)
        result = _price_schedule(milp, u, stats)
        if result is not None:
            return result
    u = np.ones((G, T), dtype=int)
    if u.tobytes() not in tried:
        result = _price_schedule(milp, u, stats)
        if result is not None:
            return result
    return np.inf, None, None


def _price_schedule(
    milp: _Milp, u: np.ndarray, stats: SolveStats,
) -> tuple[float, np.ndarray, np.ndarray] | None:
    """Exact cost of a binary schedule, or None if it cannot be dispatched."""
    inst, case = milp.inst, milp.inst.case
    G, T = milp.G, milp.T
    if not schedule_is_logical(case, u, inst.initial_status):
        return None
    y, z = minimal_transitions(u, inst.initial_status)
    cost = float(sum(
        y[g, t] * case.generators[g].startup_cost
        + z[g, t] * case.generators[g].shutdown_cost
        + u[g, t] * (case.generators[g].c0 + milp.curves[g].base_value)
        for g in range(G) for t in range(T)
    ))
    p_all = np.zeros((G, milp.S, T))
    for s in range(milp.S):
        stats.lp_solves += 1
        feasible, c_s, p = _dispatch_lp(milp, u, s)
        if not feasible:
            return None
        cost += c_s
        p_all[:, s, :] = p
    return cost, u, p_all


def _solution_from_schedule(
    milp: _Milp, u: np.ndarray, p_all: np.ndarray, objective: float,
    stats: SolveStats, status: TsucStatus,
) -> TsucSolution:
    inst, case = milp.inst, milp.inst.case
    y, z = minimal_transitions(u, inst.initial_status)
    angles = np.zeros((case.n_buses, milp.S, milp.T))
    for s in range(milp.S):
        for t in range(milp.T):
            inj = milp.wind_bus[s, :, t] - milp.load_bus[s, :, t]
            for g in range(milp.G):
                inj[milp.gen_bus[g]] += p_all[g, s, t]
            angles[:, s, t] = milp.mats.angles(inj, case.base_mva)
    return TsucSolution(status=status, schedule=Schedule(u=u, y=y, z=z),
                        dispatch=p_all, angles=angles, objective=objective,
                        stats=stats,
                        flow_rows=milp.flow_row_count,
                        surrogate_rows=milp.surrogate_row_count)


def solve_tsuc(
    inst: TsucInstance,
    *,
    gap_tol: float = DEFAULT_GAP_TOL,
    node_limit: int = DEFAULT_NODE_LIMIT,
    mats: GridMatrices | None = None,
) -> TsucSolution:
    """Best-bound branch-and-bound on the commitment binaries.

    Branches on the most fractional u, ties broken by (earlier hour, lower
    generator index); that order is the u column order, so the lowest column
    index wins ties.
    """
    t_start = time.perf_counter()
    stats = SolveStats()
    milp = build_milp(inst, mats)

    counter = itertools.count()
    status, bound, x, base = _solve_node(milp, (), stats)
    stats.nodes = 1
    incumbent_obj = np.inf
    incumbent_x = None
    incumbent_sched = None  # (u, p_all) from the rounding heuristic
    heap = []
    if status is LpStatus.OPTIMAL:
        h_obj, h_u, h_p = _heuristic_incumbent(milp, x, stats)
        if h_obj < incumbent_obj:
            incumbent_obj, incumbent_sched = h_obj, (h_u, h_p)
        heap.append((bound, next(counter), (), x, base))

    def cutoff() -> float:
        if not np.isfinite(incumbent_obj):
            return np.inf
        return incumbent_obj - gap_tol * (1.0 + abs(incumbent_obj))

    node_limited = False
    pruned_min = np.inf  # smallest bound discarded by the cutoff
    while heap:
        bound, _, fix, x, base = heapq.heappop(heap)
        if bound >= cutoff():
            pruned_min = min(pruned_min, bound)
            continue
        uvals = x[:milp.n_u]
        frac = np.abs(uvals - np.rint(uvals))
        if frac.max() <= INTEGRALITY_TOL:
            if bound < incumbent_obj:
                incumbent_obj, incumbent_x = bound, x
            continue
        if stats.nodes >= node_limit:
            node_limited = True
            break
        j = int(np.argmax(np.where(frac > INTEGRALITY_TOL, frac, -1.0)))
        for val in (0, 1):
            cfix = fix + ((j, val),)
            st, cb, cx, cbase = _solve_node(milp, cfix, stats, base)
            stats.nodes += 1
            if st is not LpStatus.OPTIMAL:
                continue
            cu = cx[:milp.n_u]
            if np.abs(cu - np.rint(cu)).max() <= INTEGRALITY_TOL:
                if cb < incumbent_obj:
                    incumbent_obj, incumbent_x = cb, cx
                    incumbent_sched = None
            elif cb < cutoff():
                heapq.heappush(heap, (cb, next(counter), cfix, cx, cbase))
            else:
                pruned_min = min(pruned_min, cb)

    stats.wall_time = time.perf_counter() - t_start
    if incumbent_x is None and incumbent_sched is None:
        final = TsucStatus.NODE_LIMIT if node_limited else TsucStatus.INFEASIBLE
        return TsucSolution(status=final, schedule=None, dispatch=None,
                            angles=None, objective=np.inf, stats=stats,
                            flow_rows=milp.flow_row_count,
                            surrogate_rows=milp.surrogate_row_count)
    best_open = min((b for b, *_ in heap), default=np.inf)
    lower = min(incumbent_obj, best_open, pruned_min)
    stats.gap = abs(incumbent_obj - lower) / (1.0 + abs(incumbent_obj))
    status = TsucStatus.NODE_LIMIT if node_limited else TsucStatus.OPTIMAL
    if incumbent_x is None:
        u, p_all = incumbent_sched
        return _solution_from_schedule(milp, u, p_all, incumbent_obj, stats,
                                       status)
    return _extract_solution(milp, incumbent_x, incumbent_obj, stats, status)


def _dispatch_lp(
    milp: _Milp, u: np.ndarray, s: int,
) -> tuple[bool, float, np.ndarray | None]:
    """Second-stage LP for one scenario under a fixed binary commitment."""
    inst, case = milp.inst, milp.inst.case
    G, T, K = milp.G, milp.T, milp.K
    nvar = G * T * K

    def cols(g, t):
        return slice((t * G + g) * K, (t * G + g) * K + K)

    c = np.zeros(nvar)
    lo = np.zeros(nvar)
    hi = np.zeros(nvar)
    pi = inst.scenarios[s].probability
    for g in range(G):
        for t in range(T):
            c[cols(g, t)] = milp.curves[g].slopes
            hi[cols(g, t)] = milp.widths[g] * u[g, t]

    base_p = milp.pmin[:, None] * u  # (G, T) committed minimum output
    a_eq = np.zeros((T, nvar))
    b_eq = np.zeros(T)
    for t in range(T):
        for g in range(G):
            a_eq[t, cols(g, t)] = 1.0
        b_eq[t] = (milp.load_total[s, t] - milp.wind_total[s, t]
                   - base_p[:, t].sum())

    a_le, b_le = [], []
    for g in range(G):
        gen = case.generators[g]
        for t in range(1, T):
            row = np.zeros(nvar)
            row[cols(g, t)] = 1.0
            row[cols(g, t - 1)] = -1.0
            a_le.append(row)
            b_le.append(gen.ramp_up - (base_p[g, t] - base_p[g, t - 1]))
            row = np.zeros(nvar)
            row[cols(g, t)] = -1.0
            row[cols(g, t - 1)] = 1.0
            a_le.append(row)
            b_le.append(gen.ramp_down + (base_p[g, t] - base_p[g, t - 1]))

    if inst.mode is TsucMode.FULL_NETWORK:
        base_flow = np.einsum("lb,bt->lt", milp.mats.ptdf,
                              milp.wind_bus[s] - milp.load_bus[s])
        gcoef = milp.mats.ptdf[:, milp.gen_bus]
        for t in range(T):
            fixed = base_flow[:, t] + gcoef @ base_p[:, t]
            for li in range(case.n_lines):
                row = np.zeros(nvar)
                for g in range(G):
                    row[cols(g, t)] = gcoef[li, g]
                a_le.append(row.copy())
                b_le.append(case.line_limits[li] - fixed[li])
                a_le.append(-row)
                b_le.append(case.line_limits[li] + fixed[li])
    else:
        h = inst.hyperplane
        W = case.n_wind
        scen = inst.scenarios[s]
        w_p = h.weights_physical[2 * W:]
        const = float(h.weights_physical[:W] @ scen.mu
                      + h.weights_physical[W:2 * W] @ scen.sigma
                      + h.bias_physical)
        for t in range(T):
            row = np.zeros(nvar)
            for g in range(G):
                row[cols(g, t)] = -w_p[g]
            a_le.append(row)
            b_le.append(const + float(w_p @ base_p[:, t]) + SURROGATE_TOL)

    lp = LpProblem(c=c, a_eq=a_eq, b_eq=b_eq,
                   a_le=np.array(a_le) if a_le else np.zeros((0, nvar)),
                   b_le=np.array(b_le), lo=lo, hi=hi)
    sol = solve_lp(lp)
    if sol.status is not LpStatus.OPTIMAL:
        return False, np.inf, None
    p = base_p.copy()
    for g in range(G):
        for t in range(T):
            p[g, t] += sol.x[cols(g, t)].sum()
    return True, pi * float(sol.objective), p


def brute_force_tsuc(inst: TsucInstance, mats: GridMatrices | None = None) -> TsucSolution:
    """Exact optimum by enumerating all binary commitment paths.

    Filters paths violating the transition/min-up/min-down logic, dispatches
    the rest scenario by scenario, and keeps the cheapest total.
    """
    t_start = time.perf_counter()
    case = inst.case
    G, T = case.n_gens, inst.horizon
    if G * T > BRUTE_FORCE_MAX_BITS:
        raise TooLarge(f"brute force limited to G*T <= {BRUTE_FORCE_MAX_BITS}, "
                       f"got {G * T}")
    milp = build_milp(inst, mats)
    stats = SolveStats()
    u0 = inst.initial_status
    fixed_per_gt = np.array([
        [g.c0 + milp.curves[gi].base_value for g in [case.generators[gi]]][0]
        for gi in range(G)
    ])

    best = (np.inf, None, None)
    for bits in itertools.product((0, 1), repeat=G * T):
        u = np.array(bits, dtype=int).reshape(G, T)
        if not schedule_is_logical(case, u, u0):
            continue
        y, z = minimal_transitions(u, u0)
        cost = float(sum(
            y[g, t] * case.generators[g].startup_cost
            + z[g, t] * case.generators[g].shutdown_cost
            + u[g, t] * fixed_per_gt[g]
            for g in range(G) for t in range(T)
        ))
        p_all = np.zeros((G, len(inst.scenarios), T))
        ok = True
        for s in range(len(inst.scenarios)):
            stats.lp_solves += 1
            feasible, c_s, p = _dispatch_lp(milp, u, s)
            if not feasible:
                ok = False
                break
            cost += c_s
            p_all[:, s, :] = p
        if ok and cost < best[0]:
            best = (cost, u, p_all)
        stats.nodes += 1

    stats.wall_time = time.perf_counter() - t_start
    if best[1] is None:
        return TsucSolution(status=TsucStatus.INFEASIBLE, schedule=None,
                            dispatch=None, angles=None, objective=np.inf,
                            stats=stats,
                            flow_rows=milp.flow_row_count,
                            surrogate_rows=milp.surrogate_row_count)
    cost, u, p_all = best
    y, z = minimal_transitions(u, u0)
    angles = np.zeros((case.n_buses, len(inst.scenarios), T))
    for s in range(len(inst.scenarios)):
        for t in range(T):
            inj = milp.wind_bus[s, :, t] - milp.load_bus[s, :, t]
            for g in range(G):
                inj[milp.gen_bus[g]] += p_all[g, s, t]
            angles[:, s, t] = milp.mats.angles(inj, case.base_mva)
    return TsucSolution(status=TsucStatus.OPTIMAL,
                        schedule=Schedule(u=u, y=y, z=z),
                        dispatch=p_all, angles=angles, objective=cost,
                        stats=stats,
                        flow_rows=milp.flow_row_count,
                        surrogate_rows=milp.surrogate_row_count)
