"""Security indices: minimum count or cost of corrupted measurements for a
stealth attack on one target measurement.

A stealth attack adds a = Hc to the measurements, so its footprint is the
support of Hc under the constraint H[j]c = mu.  alpha counts integrity
corruptions alone, beta lets availability withdrawal stand in for
integrity corruption, gamma prices the two actions separately.  All three
are sparsest-support programs solved exactly as big-M MILPs.

Rows that are scalar multiples of one another vanish together for every
certificate c, so each parallel row class gets a single indicator binary.
A node oracle attached to the branch-and-bound derives admissible bounds
from the rank structure of the node's certificate space, and closes
subtrees exactly once that space has small dimension by enumerating every
reachable zero pattern.  A brute-force critical-tuple search over
measurement subsets provides an independent oracle for small systems.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .milp import MilpProblem, NodeHint, solve_milp

PARALLEL_ATOL = 1e-8
SUPPORT_FRACTION = 1e-6  # of big M: rows above it count as attacked
BIG_M_FACTOR = 1e4       # default M = BIG_M_FACTOR * |mu|
_M_GUARD = 0.99
_RANK_TOL = 1e-10        # singular value cutoff, relative to the largest
_CONSIST_TOL = 1e-7      # certificate-system residual, scaled by |mu|
_VAL_TOL = 1e-7          # row-value nonzero threshold, scaled by |mu|
_RAY_TOL = 1e-9          # identically-zero direction test, scaled by row norm
_FATHOM_CAP = 200_000    # largest subset enumeration a single node may run


class SecurityIndexError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class IndexQuery:
    """One security-index question: which measurement, at what magnitude,
    under which action costs, against which model matrix."""

    h: np.ndarray
    target_j: int  # 1-based measurement index
    mu: float = 0.1
    cost_integrity: float = 1.0
    cost_availability: float = 0.5
    big_m: Optional[float] = None

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        object.__setattr__(self, "h", h)
        if h.ndim != 2:
            raise SecurityIndexError("model matrix must be 2-D")
        if not 1 <= self.target_j <= h.shape[0]:
            raise SecurityIndexError(f"target_j {self.target_j} outside 1..{h.shape[0]}")
        if self.mu == 0.0 or not np.isfinite(self.mu):
            raise SecurityIndexError("mu must be nonzero and finite")
        if self.cost_integrity < 0 or self.cost_availability < 0:
            raise SecurityIndexError("costs must be nonnegative")
        if self.big_m is not None and self.big_m <= 0:
            raise SecurityIndexError("big_m must be positive")

    @property
    def resolved_big_m(self) -> float:
        return self.big_m if self.big_m is not None else BIG_M_FACTOR * abs(self.mu)


@dataclass(frozen=True, eq=False)
class SecurityIndexResult:
    objective: float
    integrity_set: tuple  # 1-based, sorted
    availability_set: tuple
    certificate_c: np.ndarray
    verified_stealth: bool

    @property
    def support(self) -> tuple:
        return tuple(sorted(self.integrity_set + self.availability_set))


@dataclass(frozen=True)
class BruteForceResult:
    objective: int
    support: tuple           # first minimal support, 1-based
    family: tuple            # all minimal supports, enumeration order


@dataclass(frozen=True)
class Theorem2Report:
    target_j: int
    alpha: int
    beta: int
    alpha_perturbed: int
    beta_perturbed: int
    indices_equal: bool
    assumption1_holds: Optional[bool]  # None when the system is too large to enumerate


def _matrix(model_or_h) -> np.ndarray:
    h = getattr(model_or_h, "H", model_or_h)
    return np.asarray(h, dtype=float)


def parallel_classes(h):
    """Group rows that are exact scalar multiples of each other.

    Returns (classes, row_class): classes is a list of index arrays, one
    per class in order of first appearance; row_class maps each row to its
    class id.  Such rows share the same zero set for every c, which is
    what lets one binary represent the whole class.
    """
    h = _matrix(h)
    m = h.shape[0]
    norms = np.linalg.norm(h, axis=1)
    if np.any(norms < 1e-12):
        raise SecurityIndexError("model matrix has a zero row")
    units = h / norms[:, None]
    reps = []
    members = []
    row_class = np.empty(m, dtype=int)
    for i in range(m):
        u = units[i]
        lead = int(np.argmax(np.abs(u) > PARALLEL_ATOL))
        if u[lead] < 0:
            u = -u
        for ci, v in enumerate(reps):
            if np.max(np.abs(v - u)) <= PARALLEL_ATOL:
                members[ci].append(i)
                row_class[i] = ci
                break
        else:
            reps.append(u)
            members.append([i])
            row_class[i] = len(reps) - 1
    classes = [np.array(ms, dtype=int) for ms in members]
    return classes, row_class


@lru_cache(maxsize=None)
def _combos(f: int, s: int) -> np.ndarray:
    out = np.array(list(itertools.combinations(range(f), s)), dtype=np.intp)
    return out.reshape(-1, s)


def _subset_count(f: int, d: int) -> int:
    return sum(math.comb(f, s) for s in range(min(f, d) + 1))


class _ClassOracle:
    """Node oracle for the class-collapsed support programs.

    At each node the fixed-to-zero classes plus the target equality define
    an affine certificate space c = c0 + N t.  Classes whose rows vanish
    on no point of that space are forced into the support, giving an
    admissible lower bound.  When dim(t) is small the subtree optimum is
    computed exactly: every zero pattern reachable inside the space is the
    solution set of a full-rank subset of at most dim(t) class rows, so
    enumerating those subsets and scoring their min-norm points covers the
    optimum.  Larger nodes get branch scores from a weighted-L1 point of
    the space, which concentrates certificate mass the way the optimal
    support does.
    """

    def __init__(self, h_rep, target_row, mu, wt_on, jc, layout, fathom_dim,
                 d_pattern):
        self.h_rep = h_rep
        self.row_norm = np.linalg.norm(h_rep, axis=1)
        self.target_row = target_row
        self.mu = mu
        self.wt_on = wt_on
        self.jc = jc
        self.layout = layout  # (n, ncls, nv, classes, row_class, j0)
        self.fathom_dim = fathom_dim
        self.d_pattern = d_pattern  # None, or True when d=1 on support rows
        self.vtol = _VAL_TOL * abs(mu)
        self.ctol = _CONSIST_TOL * max(1.0, abs(mu))

    def __call__(self, lo, hi):
        n, ncls, nv, classes, row_class, j0 = self.layout
        y_lo = lo[n : n + ncls]
        y_hi = hi[n : n + ncls]
        if self.d_pattern is not None:
            # Bounds on d variables are the builder's; if branching ever
            # touches them the cost model here no longer applies.
            if np.any(lo[n + ncls :] != 0.0) or np.any(hi[n + ncls :] != self._root_d_hi):
                return None
        fix0 = y_hi <= 0.5
        fix1 = y_lo >= 0.5
        free = ~fix0 & ~fix1

        rows = [self.h_rep[fix0]] if fix0.any() else []
        rows.append(self.target_row[None, :])
        a = np.vstack(rows)
        b = np.zeros(a.shape[0])
        b[-1] = self.mu
        u, s, vt = np.linalg.svd(a, full_matrices=True)
        rank = int(np.sum(s > _RANK_TOL * s[0])) if s.size else 0
        c0 = vt[:rank].T @ ((u[:, :rank].T @ b) / s[:rank])
        if np.max(np.abs(a @ c0 - b)) > self.ctol:
            return NodeHint(exact=True, objective=math.inf)
        nullsp = vt[rank:].T
        dim = nullsp.shape[1]

        vals0 = self.h_rep @ c0
        ray = self.h_rep @ nullsp
        movable = (
            np.abs(ray).max(axis=1) > _RAY_TOL * self.row_norm
            if dim
            else np.zeros(ncls, dtype=bool)
        )
        nonzero0 = np.abs(vals0) > self.vtol
        forced = free & ~movable & nonzero0
        idzero = free & ~movable & ~nonzero0
        undecided = free & movable
        paid = float(self.wt_on[fix1].sum() + self.wt_on[forced].sum())

        cand = np.where(free & ~idzero)[0]
        mov = np.where(undecided)[0]
        if dim <= self.fathom_dim and _subset_count(mov.size, dim) <= _FATHOM_CAP:
            value, point, on_mask = self._fathom(c0, nullsp, vals0, ray, cand, mov)
            x = self._assemble(point, set(np.where(fix1)[0]) | set(cand[on_mask]))
            return NodeHint(exact=True,
                            objective=float(self.wt_on[fix1].sum()) + value,
                            solution=x)
        if not undecided.any():
            x = self._assemble(c0, set(np.where(fix1 | forced)[0]))
            return NodeHint(exact=True, objective=paid, solution=x)

        vstar = self._weighted_l1_point(vals0, ray, undecided)
        scores = np.full(nv, -1.0)
        scores[n : n + ncls] = np.where(
            undecided, np.abs(vstar), np.where(forced, -0.5, -1.0)
        )
        guess = fix1 | forced | (undecided & (np.abs(vstar) > self.vtol))
        x = self._refit(~guess, fix1, free)
        return NodeHint(lower_bound=paid, branch_scores=scores, solution=x)

    def _weighted_l1_point(self, vals0, ray, undecided):
        """Approximate min of sum wt |v| over the node space by iteratively
        reweighted least squares; the annealed weights drive most classes
        toward genuine zeros, so surviving magnitudes rank support
        candidates far better than the min-norm point does."""
        r = ray[undecided]
        v0 = vals0[undecided]
        wt = self.wt_on[undecided]
        t = np.zeros(r.shape[1])
        step = r.shape[1] + 1
        eps = 0.1 * abs(self.mu)
        for _ in range(8):
            w = wt / np.maximum(np.abs(v0 + r @ t), eps)
            g = (r * w[:, None]).T @ r
            g.flat[::step] += 1e-12 * (1.0 + g.trace())
            t = np.linalg.solve(g, -(r * w[:, None]).T @ v0)
            eps = max(eps * 0.2, 1e-10)
        return vals0 + ray @ t

    def _refit(self, zero_cls, fix1, free):
        """Exact certificate for a guessed support: zero the complement,
        keep the target equality, read the support back off the values."""
        a = np.vstack([self.h_rep[zero_cls], self.target_row[None, :]])
        b = np.zeros(a.shape[0])
        b[-1] = self.mu
        c, *_ = np.linalg.lstsq(a, b, rcond=None)
        if np.max(np.abs(a @ c - b)) > self.ctol:
            return None
        vals = self.h_rep @ c
        on = fix1 | (free & (np.abs(vals) > self.vtol))
        return self._assemble(c, set(np.where(on)[0]))

    def _fathom(self, c0, nullsp, vals0, ray, cand, mov):
        """Exact subtree optimum by flat enumeration.

        Any point of the node space zeroes some class set Z; the flat
        {v_Z = 0} equals the solution set of a full-rank subset S of Z
        with |S| <= dim(t), and the min-norm point of S zeroes all of Z.
        Scoring min-norm points of every full-rank subset of movable rows
        therefore visits a point at least as cheap as the optimum, while
        every visited point is itself feasible.
        """
        dim = nullsp.shape[1]
        r_cand = ray[cand]
        v_cand = vals0[cand]
        wt_cand = self.wt_on[cand]
        r_mov, v_mov = self._merge_flats(ray[mov], vals0[mov])
        floor_w = float(wt_cand.sum() - self.wt_on[mov].sum())
        best_w = float(wt_cand[np.abs(v_cand) > self.vtol].sum())
        best_t = np.zeros(dim)
        for size in range(1, min(dim, len(r_mov)) + 1):
            if best_w <= floor_w + 1e-12:
                break
            picks = _combos(len(r_mov), size)
            a = r_mov[picks]
            u, sv, vt = np.linalg.svd(a, full_matrices=False)
            ok = sv[:, -1] > 1e-10 * sv[:, 0]
            if not ok.any():
                continue
            rhs = -v_mov[picks][ok]
            coef = np.einsum("cij,ci->cj", u[ok], rhs) / sv[ok]
            ts = np.einsum("cjd,cj->cd", vt[ok], coef)
            vv = v_cand[None, :] + ts @ r_cand.T
            w = (np.abs(vv) > self.vtol) @ wt_cand
            k = int(np.argmin(w))
            if w[k] < best_w - 1e-12:
                best_w = float(w[k])
                best_t = ts[k]
        point = c0 + nullsp @ best_t
        on_mask = np.abs(v_cand + r_cand @ best_t) > self.vtol
        return best_w, point, on_mask

    @staticmethod
    def _merge_flats(r, v):
        """Collapse rows whose augmented directions (ray, value) coincide:
        such rows vanish on exactly the same flat, and a subset mixing two
        of them is never full rank, so one representative suffices."""
        aug = np.hstack([r, v[:, None]])
        aug = aug / np.linalg.norm(aug, axis=1)[:, None]
        sign = np.sign(aug[np.arange(len(aug)), np.argmax(np.abs(aug), axis=1)])
        aug = aug * sign[:, None]
        keep = []
        for i in range(len(aug)):
            if all(np.max(np.abs(aug[i] - aug[k])) > PARALLEL_ATOL for k in keep):
                keep.append(i)
        return r[keep], v[keep]

    def _assemble(self, c, on_ids):
        n, ncls, nv, classes, row_class, j0 = self.layout
        x = np.zeros(nv)
        x[:n] = c
        for k in on_ids:
            x[n + k] = 1.0
        if self.d_pattern:
            for k in on_ids:
                for i in classes[k]:
                    if i != j0:
                        x[n + ncls + i] = 1.0
        return x


def _build_problem(h, classes, row_class, j0, mu, big_m, y_weights, with_d,
                   d_delta, wt_on, fathom_dim):
    m, n = h.shape
    ncls = len(classes)
    jc = int(row_class[j0])
    norms = np.linalg.norm(h, axis=1)
    rep_rows = np.array([cls[np.argmax(norms[cls])] for cls in classes])
    h_rep = h[rep_rows]

    nv = n + ncls + (m if with_d else 0)
    n_ub = 2 * ncls + (m if with_d else 0)
    a_ub = np.zeros((n_ub, nv))
    b_ub = np.zeros(n_ub)
    for k in range(ncls):
        a_ub[2 * k, :n] = h_rep[k]
        a_ub[2 * k, n + k] = -big_m
        a_ub[2 * k + 1, :n] = -h_rep[k]
        a_ub[2 * k + 1, n + k] = -big_m
    if with_d:
        for i in range(m):
            row = 2 * ncls + i
            a_ub[row, n + ncls + i] = 1.0
            a_ub[row, n + row_class[i]] = -1.0
    a_eq = np.zeros((1, nv))
    a_eq[0, :n] = h[j0]
    b_eq = np.array([mu])

    binary = np.zeros(nv, dtype=bool)
    binary[n:] = True
    lb = np.full(nv, -np.inf)
    ub = np.full(nv, np.inf)
    lb[n:] = 0.0
    ub[n:] = 1.0
    lb[n + jc] = 1.0  # target row is corrupted by definition
    if with_d:
        ub[n + ncls + j0] = 0.0  # the target value must be written, not withdrawn
    priority = np.zeros(nv)
    priority[n : n + ncls] = 1.0

    objective = np.zeros(nv)
    objective[n : n + ncls] = y_weights
    if with_d:
        objective[n + ncls :] = d_delta

    d_pattern = None
    if with_d:
        d_pattern = d_delta < 0  # cheaper to withdraw than to corrupt
    oracle = _ClassOracle(h_rep, h[j0], mu, wt_on, jc,
                          (n, ncls, nv, classes, row_class, j0), fathom_dim,
                          d_pattern)
    if with_d:
        oracle._root_d_hi = ub[n + ncls :].copy()
    return MilpProblem(objective, a_ub, b_ub, a_eq, b_eq, binary, lb, ub,
                       branch_priority=priority, node_hook=oracle), h_rep


def _canonical_sets(support_rows, j0, with_d, ci, ca):
    if with_d and ca < ci:
        integrity = (int(j0) + 1,)
        availability = tuple(sorted(int(i) + 1 for i in support_rows if i != j0))
    else:
        integrity = tuple(sorted(int(i) + 1 for i in support_rows))
        availability = ()
    return integrity, availability


def _warm_solution(h, classes, row_class, j0, mu, nv, with_d, d_delta,
                   warm_rows):
    """Feasible start from a known stealth support (0-based rows).  The
    certificate is refit from the support's complement; a bad support just
    fails verification inside the solver and is ignored."""
    m, n = h.shape
    rows = np.asarray(sorted(set(warm_rows) | {j0}), dtype=int)
    comp = np.setdiff1d(np.arange(m), rows)
    a = np.vstack([h[comp], h[j0][None, :]])
    b = np.zeros(a.shape[0])
    b[-1] = mu
    c, *_ = np.linalg.lstsq(a, b, rcond=None)
    x = np.zeros(nv)
    x[:n] = c
    for i in rows:
        x[n + row_class[i]] = 1.0
    if with_d and d_delta < 0:
        for i in rows:
            if i != j0:
                x[n + len(classes) + i] = 1.0
    return x


def _solve_support(h, j0, mu, big_m, y_weights, with_d, d_delta, wt_on,
                   fathom_dim, warm_rows=None):
    classes, row_class = parallel_classes(h)
    m, n = h.shape
    big = big_m
    for _ in range(3):
        problem, h_rep = _build_problem(h, classes, row_class, j0, mu, big,
                                        y_weights(classes, row_class),
                                        with_d, d_delta,
                                        wt_on(classes, row_class), fathom_dim)
        if warm_rows is not None:
            problem.warm_solution = _warm_solution(
                h, classes, row_class, j0, mu, len(problem.objective),
                with_d, d_delta, warm_rows)
        sol = solve_milp(problem)
        if sol.status != "optimal":
            raise SecurityIndexError(f"index program ended with status {sol.status}")
        cvec = sol.x[:n]
        if np.max(np.abs(h @ cvec)) <= _M_GUARD * big:
            break
        big *= 10.0  # big-M validity guard: certificate saturated the box
    else:
        raise SecurityIndexError("big-M guard failed after repeated enlargement")

    # Support = paid classes with clearly nonzero certificate values.  At a
    # verified optimum a paid class is never zeroable (dropping it would
    # strictly improve the objective), so the intersection only removes
    # zero-cost padding that ties can legitimately leave behind.
    rep_vals = np.abs(h_rep @ cvec)
    y = sol.x[n : n + len(classes)]
    on_classes = np.where((y > 0.5) & (rep_vals > _VAL_TOL * abs(mu)))[0]
    support_rows = np.sort(np.concatenate([classes[k] for k in on_classes]))
    expect = float(wt_on(classes, row_class)[on_classes].sum())
    if abs(sol.objective - expect) > 1e-6 * max(1.0, abs(expect)):
        raise SecurityIndexError("objective inconsistent with reported support")

    # Re-derive the certificate from the support alone: the exact system
    # puts genuine zeros outside the support instead of big-M slack.
    comp = np.setdiff1d(np.arange(m), support_rows)
    a = np.vstack([h[comp], h[j0][None, :]])
    b = np.zeros(a.shape[0])
    b[-1] = mu
    c_ref, *_ = np.linalg.lstsq(a, b, rcond=None)
    if comp.size and np.max(np.abs(h[comp] @ c_ref)) > SUPPORT_FRACTION * big:
        raise SecurityIndexError("rows outside the support are not negligible")
    stealth = (
        abs(h[j0] @ c_ref - mu) <= 1e-7 * max(1.0, abs(mu))
        and (comp.size == 0 or np.max(np.abs(h[comp] @ c_ref)) <= 1e-9 * max(1.0, abs(mu)))
    )
    return expect, support_rows, c_ref if stealth else cvec, stealth


def _sizes(classes):
    return np.array([len(c) for c in classes], dtype=float)


def fdi_index(query: IndexQuery, fathom_dim: int = 3) -> SecurityIndexResult:
    """alpha: fewest integrity corruptions for a stealth attack on j."""
    h = query.h
    j0 = query.target_j - 1
    value, rows, cert, stealth = _solve_support(
        h, j0, query.mu, query.resolved_big_m,
        lambda cls, rc: _sizes(cls),
        with_d=False, d_delta=0.0,
        wt_on=lambda cls, rc: _sizes(cls),
        fathom_dim=fathom_dim,
    )
    if abs(value - round(value)) > 1e-6:
        raise SecurityIndexError("non-integer cardinality objective")
    integ, avail = _canonical_sets(rows, j0, False, 1.0, 1.0)
    return SecurityIndexResult(float(round(value)), integ, avail, cert, stealth)


def combined_index(query: IndexQuery, fathom_dim: int = 3,
                   warm_support: Optional[tuple] = None) -> SecurityIndexResult:
    """beta: fewest corruptions when availability attacks may substitute.

    warm_support (1-based rows of any known stealth support, e.g. an alpha
    result) seeds the search with a verified incumbent.
    """
    h = query.h
    j0 = query.target_j - 1
    warm = None if warm_support is None else [i - 1 for i in warm_support]
    value, rows, cert, stealth = _solve_support(
        h, j0, query.mu, query.resolved_big_m,
        lambda cls, rc: _sizes(cls),
        with_d=True, d_delta=0.0,
        wt_on=lambda cls, rc: _sizes(cls), fathom_dim=fathom_dim,
        warm_rows=warm,
    )
    if abs(value - round(value)) > 1e-6:
        raise SecurityIndexError("non-integer cardinality objective")
    integ, avail = _canonical_sets(rows, j0, True, 1.0, 1.0)
    return SecurityIndexResult(float(round(value)), integ, avail, cert, stealth)


def cost_weighted_index(query: IndexQuery, availability: bool = True,
                        fathom_dim: int = 3,
                        warm_support: Optional[tuple] = None) -> SecurityIndexResult:
    """gamma: cheapest stealth attack under per-action costs.

    With availability=False the availability action is forbidden and the
    program reduces to the integrity-only index at cost C_I per row.
    warm_support seeds the search with a known stealth support.
    """
    h = query.h
    j0 = query.target_j - 1
    ci, ca = query.cost_integrity, query.cost_availability
    warm = None if warm_support is None else [i - 1 for i in warm_support]
    if not availability:
        value, rows, cert, stealth = _solve_support(
            h, j0, query.mu, query.resolved_big_m,
            lambda cls, rc: ci * _sizes(cls),
            with_d=False, d_delta=0.0,
            wt_on=lambda cls, rc: ci * _sizes(cls),
            fathom_dim=fathom_dim, warm_rows=warm,
        )
        integ, avail = _canonical_sets(rows, j0, False, ci, ca)
        return SecurityIndexResult(value, integ, avail, cert, stealth)

    def wt(cls, rc):
        w = _sizes(cls) * min(ci, ca)
        w[rc[j0]] += ci - min(ci, ca)  # target row cannot be withdrawn
        return w

    value, rows, cert, stealth = _solve_support(
        h, j0, query.mu, query.resolved_big_m,
        lambda cls, rc: ci * _sizes(cls),
        with_d=True, d_delta=ca - ci, wt_on=wt, fathom_dim=fathom_dim,
        warm_rows=warm,
    )
    integ, avail = _canonical_sets(rows, j0, True, ci, ca)
    return SecurityIndexResult(value, integ, avail, cert, stealth)


def brute_force_index(model_or_h, target_j: int, max_rows: int = 25,
                      max_enumerations: int = 500_000) -> BruteForceResult:
    """Sparsest critical tuple containing target_j by direct enumeration.

    A support S (with j in S) admits a stealth certificate iff the target
    row is independent of the rows outside S, decided by a rank test.
    Supports are enumerated in increasing cardinality, so the first hits
    are exactly the minimal family.
    """
    h = _matrix(model_or_h)
    m, n = h.shape
    if m > max_rows:
        raise SecurityIndexError(f"enumeration guard: m = {m} exceeds {max_rows}")
    if not 1 <= target_j <= m:
        raise SecurityIndexError(f"target_j {target_j} outside 1..{m}")
    j0 = target_j - 1
    others = [i for i in range(m) if i != j0]
    seen = 0
    for k in range(1, m + 1):
        family = []
        for extra in itertools.combinations(others, k - 1):
            seen += 1
            if seen > max_enumerations:
                raise SecurityIndexError("enumeration cap exceeded")
            support = np.array(sorted((j0,) + extra))
            comp = np.setdiff1d(np.arange(m), support)
            r1 = np.linalg.matrix_rank(h[comp]) if comp.size else 0
            r2 = np.linalg.matrix_rank(np.vstack([h[comp], h[j0][None, :]]))
            if r2 == r1 + 1:
                family.append(tuple(int(i) + 1 for i in support))
        if family:
            return BruteForceResult(k, family[0], tuple(family))
    raise SecurityIndexError("no feasible support found; model unobservable?")


def verify_theorem2(h, h_perturbed, target_j: int, mu: float = 0.1,
                    enumeration_limit: int = 25) -> Theorem2Report:
    """Check that alpha and beta agree between a model and its structured
    perturbation, and (on systems small enough to enumerate) that the two
    models share identical minimal critical-tuple families for every j."""
    h = _matrix(h)
    hp = _matrix(h_perturbed)
    if h.shape != hp.shape:
        raise SecurityIndexError("models differ in shape")
    vals = []
    for mat in (h, hp):
        q = IndexQuery(mat, target_j, mu)
        vals.append(int(fdi_index(q).objective))
        vals.append(int(combined_index(q).objective))
    alpha, beta, alpha_p, beta_p = vals
    assumption = None
    if h.shape[0] <= enumeration_limit:
        assumption = all(
            brute_force_index(h, j).family == brute_force_index(hp, j).family
            for j in range(1, h.shape[0] + 1)
        )
    return Theorem2Report(target_j, alpha, beta, alpha_p, beta_p,
                          alpha == beta == alpha_p == beta_p, assumption)


def index_sweep(model_or_h, mu: float = 0.1, cost_integrity: float = 1.0,
                cost_availability: float = 0.5, fathom_dim: int = 3,
                mapper=None):
    """Per-measurement index table for j = 1..m.

    Parallel rows share their index and support family, so each class is
    solved once and the result replicated to its members; only the
    canonical integrity/availability split is member-specific.  Classes
    are independent tasks, so a parallel mapper changes nothing but time.
    """
    h = _matrix(model_or_h)
    classes, row_class = parallel_classes(h)
    ci, ca = cost_integrity, cost_availability

    def solve_class(cls):
        lead = int(cls.min())
        query = IndexQuery(h, lead + 1, mu, ci, ca)
        alpha = fdi_index(query, fathom_dim=fathom_dim)
        beta = combined_index(query, fathom_dim=fathom_dim,
                              warm_support=alpha.support)
        gamma = cost_weighted_index(query, fathom_dim=fathom_dim,
                                    warm_support=beta.support)
        return alpha, beta, gamma

    rows = [None] * h.shape[0]
    for cls, (alpha, beta, gamma) in zip(classes,
                                         (mapper or map)(solve_class, classes)):
        support0 = sorted(i - 1 for i in gamma.support)
        for j0 in cls:
            # the whole class sits inside the support, so members differ
            # only in which row is written rather than withdrawn
            integ, avail = _canonical_sets(support0, int(j0), True, ci, ca)
            rows[j0] = {
                "j": int(j0) + 1,
                "alpha": int(alpha.objective),
                "beta": int(beta.objective),
                "gamma_fdi": ci * alpha.objective,
                "gamma_combined": gamma.objective,
                "k_a": len(integ),
                "k_d": len(avail),
                "integrity_set": integ,
                "availability_set": avail,
            }
    return rows


def format_index_csv(rows) -> str:
    def num(x):
        return f"{x:.12g}"

    lines = ["j,alpha,beta,gamma_fdi,gamma_combined,k_a,k_d,integrity_set,availability_set"]
    for r in rows:
        lines.append(",".join([
            str(r["j"]), str(r["alpha"]), str(r["beta"]),
            num(r["gamma_fdi"]), num(r["gamma_combined"]),
            str(r["k_a"]), str(r["k_d"]),
            ";".join(str(i) for i in r["integrity_set"]),
            ";".join(str(i) for i in r["availability_set"]),
        ]))
    return "\n".join(lines) + "\n"
