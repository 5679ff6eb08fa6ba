"""Bounded-variable two-phase revised simplex solver.

Dense implementation with an explicitly maintained basis inverse (rank-1
eta updates, periodic refactorization through the LU module). Pivoting uses
a Dantzig rule and falls back to Bland's rule after 2*(m+n) iterations to
guarantee termination on cycling instances.

Bounds with magnitude >= INF_BOUND are treated as unbounded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, SingularMatrix

INF_BOUND = 1e18

# Variable states.
_AT_LO = 0
_AT_HI = 1
_FREE = 2
_BASIC = 3


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LpProblem:
    """min c @ x  s.t.  a_eq @ x = b_eq,  a_le @ x <= b_le,  lo <= x <= hi."""

    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_le: np.ndarray
    b_le: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = self.c.size
        self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
        self.a_le = np.asarray(self.a_le, dtype=float).reshape(-1, n)
        self.b_eq = np.atleast_1d(np.asarray(self.b_eq, dtype=float))
        self.b_le = np.atleast_1d(np.asarray(self.b_le, dtype=float))
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if self.b_eq.size != self.a_eq.shape[0]:
            raise DimensionMismatch("b_eq length != a_eq rows")
        if self.b_le.size != self.a_le.shape[0]:
            raise DimensionMismatch("b_le length != a_le rows")
        if self.lo.size != n or self.hi.size != n:
            raise DimensionMismatch("bound vectors must match objective length")
        if np.any(self.lo > self.hi):
            raise DimensionMismatch("lo > hi for some variable")

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    duals: np.ndarray  # one multiplier per row, eq rows first
    objective: float
    iterations: int
    dual_objective: float = 0.0
    basis: np.ndarray | None = None       # basic column per row
    col_status: np.ndarray | None = None  # per-column state codes


@dataclass
class LpStart:
    """Advanced (warm) starting point for ``solve_lp``.

    ``basis[i]`` is the basic column for row i in the new problem's column
    numbering; ``col_status`` covers every column (structural, slack,
    artificial). Rows whose basic column is an artificial absorb their
    residual in phase 1. Falls back to a cold start if the basis turns out
    primal-infeasible in the structural variables.
    """

    basis: np.ndarray
    col_status: np.ndarray


@dataclass
class _Tableau:
    """Mutable simplex state over the standard-form system A x = b."""

    a: np.ndarray        # (m, n) structural columns
    b: np.ndarray
    m_eq: int
    lo: np.ndarray       # bounds for structural + slack + artificial columns
    hi: np.ndarray
    basis: np.ndarray = field(default=None)
    status: np.ndarray = field(default=None)
    xval: np.ndarray = field(default=None)
    xb: np.ndarray = field(default=None)
    binv: np.ndarray = field(default=None)
    art_sign: np.ndarray = field(default=None)

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def n_struct(self) -> int:
        return self.a.shape[1]

    @property
    def n_slack(self) -> int:
        return self.m - self.m_eq

    @property
    def n_cols(self) -> int:
        return self.n_struct + self.n_slack + self.m

    def col(self, j: int) -> np.ndarray:
        ns, nk = self.n_struct, self.n_slack
        if j < ns:
            return self.a[:, j]
        e = np.zeros(self.m)
        if j < ns + nk:
            e[self.m_eq + (j - ns)] = 1.0
        else:
            i = j - ns - nk
            e[i] = self.art_sign[i]
        return e

    def nonbasic_rhs(self) -> np.ndarray:
        """b minus the contribution of all nonbasic columns at their values."""
        v = self.xval.copy()
        v[self.basis] = 0.0
        ns, nk = self.n_struct, self.n_slack
        contrib = self.a @ v[:ns]
        contrib[self.m_eq:] += v[ns:ns + nk]
        contrib += self.art_sign * v[ns + nk:]
        return self.b - contrib

    def refactor(self):
        m, ns, nk = self.m, self.n_struct, self.n_slack
        bmat = np.zeros((m, m))
        js = self.basis
        pos = np.arange(m)
        struct = js < ns
        if np.any(struct):
            bmat[:, pos[struct]] = self.a[:, js[struct]]
        slack = (js >= ns) & (js < ns + nk)
        if np.any(slack):
            bmat[self.m_eq + (js[slack] - ns), pos[slack]] = 1.0
        art = js >= ns + nk
        if np.any(art):
            rows = js[art] - ns - nk
            bmat[rows, pos[art]] = self.art_sign[rows]
        try:
            self.binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix("basis matrix singular at refactorization") from exc
        self.xb = self.binv @ self.nonbasic_rhs()
        self.xval[self.basis] = self.xb


def _install_warm_start(t: _Tableau, start: "LpStart", tol: float) -> bool:
    """Adopt an advanced basis; returns False if it cannot be used."""
    m, ns, nk = t.m, t.n_struct, t.n_slack
    basis = start.basis.astype(int).copy()
    status = start.col_status.astype(np.int8).copy()
    if np.unique(basis).size != m:
        return False
    status[basis] = _BASIC
    xval = np.where(status == _AT_LO, t.lo,
                    np.where(status == _AT_HI, t.hi, 0.0))
    xval[basis] = 0.0

    t.basis = basis
    t.status = status
    t.xval = xval
    t.art_sign = np.ones(m)

    # A basic artificial absorbs its row's residual; only supported on its
    # own row. Its sign is fixed after refactorization: flipping the sign of
    # basis column i negates row i of the inverse and xb[i], so any negative
    # basic artificial is made nonnegative in place.
    for i in np.nonzero(basis >= ns + nk)[0]:
        if basis[i] - ns - nk != i:
            return False

    def refactor_ok() -> bool:
        try:
            t.refactor()
        except SingularMatrix:
            return False
        flip = (basis >= ns + nk) & (t.xb < 0)
        for i in np.nonzero(flip)[0]:
            t.art_sign[i] *= -1.0
            t.xb[i] *= -1.0
            t.binv[i, :] *= -1.0
        t.xval[basis] = t.xb
        return True

    if not refactor_ok():
        return False
    # Basic structural/slack variables must respect their bounds; phase 1
    # only prices artificials, so it cannot recover from other violations.
    # An out-of-bounds basic slack sitting on its own row (a newly added,
    # violated row) is repairable: swap in that row's artificial.
    lob = t.lo[basis]
    hib = t.hi[basis]
    arts = basis >= ns + nk
    bad = np.nonzero(
        ~arts & ((t.xb < lob - tol) | (t.xb > hib + tol))
    )[0]
    if bad.size:
        for i in bad:
            j = basis[i]
            if ns <= j < ns + nk and t.m_eq + (j - ns) == i:
                status[j] = _AT_LO
                xval[j] = 0.0
                basis[i] = ns + nk + i
                status[basis[i]] = _BASIC
            else:
                return False
        if not refactor_ok():
            return False
        lob = t.lo[basis]
        hib = t.hi[basis]
        arts = basis >= ns + nk
        ok = np.all(t.xb[~arts] >= lob[~arts] - tol) and np.all(
            t.xb[~arts] <= hib[~arts] + tol
        )
        if not ok:
            return False
    np.clip(t.xb, np.where(arts, 0.0, lob), np.where(arts, np.inf, hib),
            out=t.xb)
    t.xval[basis] = t.xb
    return True


def _nonbasic_value(lo: float, hi: float, state: int) -> float:
    if state == _AT_LO:
        return lo
    if state == _AT_HI:
        return hi
    return 0.0


def solve_lp(
    problem: LpProblem,
    *,
    opt_tol: float = 1e-9,
    feas_tol: float = 1e-9,
    pivot_tol: float = 1e-10,
    max_iter: int | None = None,
    start: LpStart | None = None,
) -> LpSolution:
    """Solve a bounded-variable LP with the two-phase revised simplex method."""
    n = problem.n
    m_eq = problem.a_eq.shape[0]
    m_le = problem.a_le.shape[0]
    m = m_eq + m_le

    a = np.vstack([problem.a_eq, problem.a_le]) if m else np.zeros((0, n))
    b = np.concatenate([problem.b_eq, problem.b_le])

    lo = np.concatenate([problem.lo, np.zeros(m_le), np.zeros(m)])
    hi = np.concatenate([problem.hi, np.full(m_le, np.inf), np.full(m, np.inf)])
    lo[lo <= -INF_BOUND] = -np.inf
    hi[hi >= INF_BOUND] = np.inf

    t = _Tableau(a=a, b=b, m_eq=m_eq, lo=lo, hi=hi)
    ns, nk = n, m_le
    ncols = t.n_cols

    def cold_state():
        # Nonbasic start: nearest finite bound, free variables at zero.
        status = np.where(
            np.isfinite(lo), _AT_LO, np.where(np.isfinite(hi), _AT_HI, _FREE)
        ).astype(np.int8)
        status[ns + nk:] = _AT_LO
        xval = np.where(status == _AT_LO, lo,
                        np.where(status == _AT_HI, hi, 0.0))
        xval[~np.isfinite(xval)] = 0.0
        return status, xval

    t.status, t.xval = cold_state()
    t.basis = np.arange(ns + nk, ncols)
    t.art_sign = np.ones(m)

    if m == 0:
        # Pure bound problem: each variable sits at its cheaper bound.
        x = np.where(problem.c > 0, lo[:n],
                     np.where(problem.c < 0, hi[:n],
                              np.where(np.isfinite(lo[:n]), lo[:n], 0.0)))
        if np.any(~np.isfinite(x)):
            return LpSolution(LpStatus.UNBOUNDED, x, np.zeros(0), -np.inf, 0)
        obj = float(problem.c @ x)
        return LpSolution(LpStatus.OPTIMAL, x, np.zeros(0), obj, 0, obj)

    warm = False
    if start is not None and start.basis.size == m and start.col_status.size == ncols:
        warm = _install_warm_start(t, start, feas_tol * (1.0 + float(np.max(np.abs(b)))))
    if not warm:
        # Crash basis: slack basic on every inequality row whose slack start
        # is feasible, artificial elsewhere. Cuts phase-1 work to the
        # infeasible rows. A failed warm-start attempt may have mutated the
        # tableau state, so rebuild the nonbasic start from scratch.
        t.status, t.xval = cold_state()
        t.art_sign = np.ones(m)
        r = t.nonbasic_rhs()
        t.basis = np.empty(m, dtype=int)
        t.art_sign = np.ones(m)
        for i in range(m):
            if i >= m_eq and r[i] >= 0:
                t.basis[i] = ns + (i - m_eq)
            else:
                t.basis[i] = ns + nk + i
                t.art_sign[i] = 1.0 if r[i] >= 0 else -1.0
        t.binv = np.diag(np.where(t.basis >= ns + nk, t.art_sign, 1.0))
        t.xb = np.abs(r)
        t.status[t.basis] = _BASIC
        t.xval[t.basis] = t.xb
    status = t.status
    xval = t.xval

    if max_iter is None:
        max_iter = 200 * (m + ns) + 2000
    bland_after = 2 * (m + ns)

    c_phase1 = np.zeros(ncols)
    c_phase1[ns + nk:] = 1.0
    c_phase2 = np.zeros(ncols)
    c_phase2[:ns] = problem.c

    iters = 0
    c_scale = 1.0 + float(np.max(np.abs(problem.c))) if n else 1.0
    b_scale = 1.0 + (float(np.max(np.abs(b))) if m else 0.0)

    def price(cvec):
        y = cvec[t.basis] @ t.binv
        d = np.empty(ns + nk)
        d[:ns] = cvec[:ns] - y @ t.a
        d[ns:] = cvec[ns:ns + nk] - y[m_eq:]
        return y, d

    def run_phase(cvec, phase: int):
        nonlocal iters
        dtol = opt_tol * (c_scale if phase == 2 else b_scale)
        since_refactor = 0
        while True:
            if iters >= max_iter:
                return "iteration_limit"
            y, d = price(cvec)
            sl = t.status[:ns + nk]
            eligible = (
                ((sl == _AT_LO) & (d < -dtol) & (t.hi[:ns + nk] > t.lo[:ns + nk]))
                | ((sl == _AT_HI) & (d > dtol) & (t.hi[:ns + nk] > t.lo[:ns + nk]))
                | ((sl == _FREE) & (np.abs(d) > dtol))
            )
            idx = np.nonzero(eligible)[0]
            if idx.size == 0:
                return "optimal"
            if iters > bland_after:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            iters += 1

            sj = t.status[j]
            direction = 1.0 if (sj == _AT_LO or (sj == _FREE and d[j] < 0)) else -1.0
            w = t.binv @ t.col(j)

            # Ratio test: basic variables hitting their bounds, plus a
            # possible bound flip of the entering variable itself.
            dw = direction * w
            lob = t.lo[t.basis]
            hib = t.hi[t.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                down = np.where(dw > pivot_tol, (t.xb - lob) / dw, np.inf)
                up = np.where(dw < -pivot_tol, (t.xb - hib) / dw, np.inf)
            lim = np.minimum(down, up)
            lim[~np.isfinite(lim)] = np.inf
            lim = np.maximum(lim, 0.0)

            flip = np.inf
            if np.isfinite(t.lo[j]) and np.isfinite(t.hi[j]):
                flip = t.hi[j] - t.lo[j]

            # Select a leaving row whose pivot element is usable. Dividing
            # by a negligible pivot destroys the factorization: if the
            # inverse is stale the value may be drift, so refactor and
            # redo the iteration; under a fresh factorization the row truly
            # cannot block the entering variable, so drop it and rerun the
            # ratio test.
            stale = False
            step = np.inf
            leave = -1
            while lim.size:
                kmin = float(np.min(lim))
                if not np.isfinite(kmin):
                    break
                if iters > bland_after:
                    ties = np.nonzero(lim <= kmin + 1e-12)[0]
                    cand = int(ties[np.argmin(t.basis[ties])])
                else:
                    ties = np.nonzero(lim <= kmin * (1 + 1e-9) + 1e-12)[0]
                    cand = int(ties[np.argmax(np.abs(dw[ties]))])
                if abs(w[cand]) >= 1e-9:
                    leave = cand
                    step = float(lim[cand])
                    break
                if since_refactor > 0:
                    stale = True
                    break
                lim[cand] = np.inf
            if stale:
                t.refactor()
                since_refactor = 0
                iters -= 1
                continue

            if min(step, flip) == np.inf:
                return "unbounded"

            if flip < step - 1e-15 or leave < 0:
                # Bound flip: entering variable moves to its other bound.
                t.xb -= flip * dw
                t.xval[t.basis] = t.xb
                t.status[j] = _AT_HI if sj == _AT_LO else _AT_LO
                t.xval[j] = _nonbasic_value(t.lo[j], t.hi[j], t.status[j])
                continue

            wr = w[leave]

            enter_val = t.xval[j] + direction * step
            t.xb -= step * dw
            old = t.basis[leave]
            # dw > 0 means the leaving basic variable decreased onto its
            # lower bound; dw < 0 means it rose onto its upper bound.
            t.status[old] = _AT_LO if dw[leave] > 0 else _AT_HI
            t.xval[old] = _nonbasic_value(t.lo[old], t.hi[old], t.status[old])

            t.basis[leave] = j
            t.status[j] = _BASIC
            t.xb[leave] = enter_val
            t.xval[j] = enter_val

            # Eta update of the inverse.
            t.binv[leave, :] /= wr
            others = np.arange(m) != leave
            t.binv[others, :] -= np.outer(w[others], t.binv[leave, :])
            t.xval[t.basis] = t.xb

            since_refactor += 1
            if since_refactor >= 100:
                t.refactor()
                since_refactor = 0

    def assemble(st: LpStatus) -> LpSolution:
        y, d = price(c_phase2)
        x = t.xval[:n].copy()
        obj = float(problem.c @ x)
        finite = np.isfinite(t.xval[:ns + nk]) & (t.status[:ns + nk] != _BASIC)
        dual_obj = float(y @ b + d[finite] @ t.xval[:ns + nk][finite])
        return LpSolution(st, x, y.copy(), obj, iters, dual_obj,
                          basis=t.basis.copy(), col_status=t.status.copy())

    out = run_phase(c_phase1, 1)
    if out == "iteration_limit":
        return assemble(LpStatus.ITERATION_LIMIT)
    phase1_obj = float(c_phase1[t.basis] @ t.xb)
    if phase1_obj > feas_tol * b_scale:
        sol = assemble(LpStatus.INFEASIBLE)
        return sol

    # Drive remaining artificials out of the basis; redundant rows keep a
    # fixed artificial pinned at zero.
    art_start = ns + nk
    for r_i in range(m):
        if t.basis[r_i] < art_start:
            continue
        pivoted = False
        for j in range(ns + nk):
            if t.status[j] == _BASIC:
                continue
            w = t.binv[r_i] @ t.col(j)
            if abs(w) > 1e-7:
                full_w = t.binv @ t.col(j)
                old = t.basis[r_i]
                t.basis[r_i] = j
                enter_val = t.xb[r_i] = t.xval[j]
                t.status[old] = _AT_LO
                t.xval[old] = 0.0
                t.status[j] = _BASIC
                t.binv[r_i, :] /= full_w[r_i]
                others = np.arange(m) != r_i
                t.binv[others, :] -= np.outer(full_w[others], t.binv[r_i, :])
                t.refactor()
                pivoted = True
                break
        if not pivoted:
            art = t.basis[r_i]
            t.hi[art] = 0.0
    t.hi[art_start:] = np.where(t.status[art_start:] == _BASIC, t.hi[art_start:], 0.0)
    t.hi[art_start:] = 0.0

    out = run_phase(c_phase2, 2)
    if out == "iteration_limit":
        return assemble(LpStatus.ITERATION_LIMIT)
    if out == "unbounded":
        sol = assemble(LpStatus.UNBOUNDED)
        sol.objective = -np.inf
        return sol
    return assemble(LpStatus.OPTIMAL)


def remap_start(
    sol: LpSolution,
    n: int,
    m_eq: int,
    old_keys: list,
    new_keys: list,
) -> LpStart | None:
    """Carry a solved basis over to a problem with a different <= row set.

    ``old_keys``/``new_keys`` identify the inequality rows of the old and
    new problems (same order as their a_le blocks); equality rows must be
    unchanged. Rows of the old problem that disappear are not supported;
    new rows get their slack as the basic variable (phase 1 repairs any
    violated ones through a basic artificial).
    """
    if sol.basis is None or sol.col_status is None:
        return None
    old_mle, new_mle = len(old_keys), len(new_keys)
    pos = {k: i for i, k in enumerate(new_keys)}
    try:
        le_map = np.array([pos[k] for k in old_keys], dtype=int)
    except KeyError:
        return None

    # Old-column -> new-column index: structural unchanged, slacks and
    # artificials of <= rows follow the key map, eq artificials shift.
    old_ncols = n + old_mle + m_eq + old_mle
    newcol = np.empty(old_ncols, dtype=int)
    newcol[:n] = np.arange(n)
    newcol[n:n + old_mle] = n + le_map
    newcol[n + old_mle:n + old_mle + m_eq] = n + new_mle + np.arange(m_eq)
    newcol[n + old_mle + m_eq:] = n + new_mle + m_eq + le_map

    ncols = n + new_mle + m_eq + new_mle
    col_status = np.full(ncols, _AT_LO, dtype=np.int8)
    col_status[newcol] = sol.col_status

    basis = np.full(m_eq + new_mle, -1, dtype=int)
    basis[:m_eq] = newcol[sol.basis[:m_eq]]
    basis[m_eq + le_map] = newcol[sol.basis[m_eq:]]
    fresh = np.nonzero(basis < 0)[0]
    basis[fresh] = n + (fresh - m_eq)  # fresh slack basic on its own row
    col_status[basis] = _BASIC
    return LpStart(basis=basis, col_status=col_status)


def brute_force_lp(problem: LpProblem, tol: float = 1e-9) -> LpSolution:
    """Vertex-enumeration oracle for small LPs.

    Enumerates every choice of n active constraints (equality rows always
    active) among inequality rows and finite bounds, solves the square
    system, and keeps the best feasible vertex. Independent of the simplex
    path; intended for problems with n <= ~8.
    """
    n = problem.n
    if n > 10:
        raise DimensionMismatch("vertex oracle limited to n <= 10")
    rows = [(problem.a_eq[i], problem.b_eq[i]) for i in range(problem.a_eq.shape[0])]
    cands = []
    for i in range(problem.a_le.shape[0]):
        cands.append((problem.a_le[i], problem.b_le[i]))
    for j in range(n):
        e = np.zeros(n)
        if problem.lo[j] > -INF_BOUND:
            e_lo = e.copy()
            e_lo[j] = 1.0
            cands.append((e_lo, problem.lo[j]))
        if problem.hi[j] < INF_BOUND:
            e_hi = e.copy()
            e_hi[j] = 1.0
            cands.append((e_hi, problem.hi[j]))

    need = n - len(rows)
    best_x, best_obj = None, np.inf
    scale = 1.0 + max(
        float(np.max(np.abs(problem.b_le))) if problem.b_le.size else 0.0,
        float(np.max(np.abs(problem.b_eq))) if problem.b_eq.size else 0.0,
    )
    for combo in itertools.combinations(range(len(cands)), max(need, 0)):
        amat = np.array([r for r, _ in rows] + [cands[k][0] for k in combo])
        bvec = np.array([v for _, v in rows] + [cands[k][1] for k in combo])
        try:
            x = np.linalg.solve(amat, bvec)
        except np.linalg.LinAlgError:
            continue
        if np.linalg.matrix_rank(amat) < n:
            continue
        feasible = (
            np.all(problem.a_le @ x <= problem.b_le + tol * scale)
            and (problem.a_eq.shape[0] == 0
                 or np.all(np.abs(problem.a_eq @ x - problem.b_eq) <= tol * scale))
            and np.all(x >= np.maximum(problem.lo, -INF_BOUND) - tol * scale)
            and np.all(x <= np.minimum(problem.hi, INF_BOUND) + tol * scale)
        )
        if feasible:
            obj = float(problem.c @ x)
            if obj < best_obj - 0.0:
                best_obj, best_x = obj, x
    if best_x is None:
        return LpSolution(LpStatus.INFEASIBLE, np.zeros(n), np.zeros(0), np.inf, 0)
    return LpSolution(LpStatus.OPTIMAL, best_x, np.zeros(0), best_obj, 0, best_obj)
