"""Exact desk-scale oracles: rational LPs, brute force, and dual checks.

Everything in this module is deliberately independent of the solver
modules: a two-phase simplex over ``fractions.Fraction``, a
branch-and-bound integral b-matching solver, and exact feasibility /
laminarity checks.  The test suite freezes expected values computed
here and uses them to judge the streaming solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .graph import Graph, LeveledGraph, OddSet, discretize, enumerate_small_odd_sets

__all__ = [
    "ExactResult",
    "LPInfeasibleError",
    "LPUnboundedError",
    "brute_force_bmatching",
    "check_dual_feasible",
    "enumerate_cuts_check",
    "exact_lp_values",
    "laminar_check",
    "solve_lp_max_leq",
    "solve_lp_min",
    "uncross_dual",
]


class LPUnboundedError(RuntimeError):
    """The linear program is unbounded."""


class LPInfeasibleError(RuntimeError):
    """The linear program has no feasible point."""


# ---------------------------------------------------------------------------
# Rational simplex
# ---------------------------------------------------------------------------

def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tableau[row][col]
    inv = Fraction(1) / piv
    tableau[row] = [v * inv for v in tableau[row]]
    for r, vec in enumerate(tableau):
        if r != row and vec[col] != 0:
            factor = vec[col]
            prow = tableau[row]
            tableau[r] = [v - factor * p for v, p in zip(vec, prow)]
    basis[row] = col


def _simplex_min_core(tableau: list[list[Fraction]], basis: list[int], n_vars: int) -> None:
    """Run Bland-rule simplex to optimality on a minimization tableau.

    ``tableau`` has one row per constraint plus a final objective row of
    reduced costs; the last column is the right-hand side.  Terminates
    (Bland's rule excludes cycling) or raises ``LPUnboundedError``.
    """
    m = len(tableau) - 1
    obj = tableau[-1]
    while True:
        enter = -1
        for j in range(n_vars):
            if obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best: Fraction | None = None
        for r in range(m):
            a = tableau[r][enter]
            if a > 0:
                ratio = tableau[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best = ratio
                    leave = r
        if leave < 0:
            raise LPUnboundedError("unbounded direction found")
        _pivot(tableau, basis, leave, enter)
        obj = tableau[-1]


def solve_lp_max_leq(
    c: Sequence[Fraction],
    rows: Sequence[Sequence[Fraction]],
    rhs: Sequence[Fraction],
) -> tuple[Fraction, list[Fraction]]:
    """Solve ``max c.x  s.t.  rows.x <= rhs, x >= 0`` with ``rhs >= 0``.

    Returns ``(value, x)``.  All arithmetic is exact.
    """
    n = len(c)
    m = len(rows)
    for v in rhs:
        if v < 0:
            raise ValueError("solve_lp_max_leq requires nonnegative right-hand sides")
    tableau: list[list[Fraction]] = []
    for r in range(m):
        row = [Fraction(v) for v in rows[r]]
        slack = [Fraction(1) if s == r else Fraction(0) for s in range(m)]
        tableau.append(row + slack + [Fraction(rhs[r])])
    # Minimize -c.x
    tableau.append([-Fraction(v) for v in c] + [Fraction(0)] * m + [Fraction(0)])
    basis = [n + r for r in range(m)]
    _simplex_min_core(tableau, basis, n + m)
    x = [Fraction(0)] * n
    for r, bv in enumerate(basis):
        if bv < n:
            x[bv] = tableau[r][-1]
    # Objective-row rhs accumulates the negated minimization value, i.e.
    # exactly max c.x for the original maximization.
    return tableau[-1][-1], x


def solve_lp_min(
    c: Sequence[Fraction],
    a_ge: Sequence[Sequence[Fraction]],
    b_ge: Sequence[Fraction],
    a_le: Sequence[Sequence[Fraction]] = (),
    b_le: Sequence[Fraction] = (),
) -> tuple[Fraction, list[Fraction]]:
    """Solve ``min c.x  s.t.  a_ge.x >= b_ge, a_le.x <= b_le, x >= 0``.

    Two-phase simplex with Bland's rule; exact rational arithmetic.

    Returns
    -------
    (value, x)

    Raises
    ------
    LPInfeasibleError, LPUnboundedError
    """
    n = len(c)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    senses: list[int] = []  # +1 for >=, -1 for <=
    for row, bv in zip(a_ge, b_ge):
        rows.append([Fraction(v) for v in row])
        rhs.append(Fraction(bv))
        senses.append(+1)
    for row, bv in zip(a_le, b_le):
        rows.append([Fraction(v) for v in row])
        rhs.append(Fraction(bv))
        senses.append(-1)
    m = len(rows)
    # Equality form: row.x - s = rhs (>=) or row.x + s = rhs (<=), s >= 0.
    # Normalize rhs >= 0 afterwards by sign flip.
    ncols = n + m  # decision + slack/surplus
    eq_rows: list[list[Fraction]] = []
    eq_rhs: list[Fraction] = []
    for r in range(m):
        row = rows[r] + [Fraction(0)] * m
        row[n + r] = Fraction(-senses[r])
        bv = rhs[r]
        if bv < 0:
            row = [-v for v in row]
            bv = -bv
        eq_rows.append(row)
        eq_rhs.append(bv)
    # Phase 1: artificial variable per row; minimize their sum.
    total = ncols + m
    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    for r in range(m):
        row = eq_rows[r] + [Fraction(1) if s == r else Fraction(0) for s in range(m)]
        tableau.append(row + [eq_rhs[r]])
        basis.append(ncols + r)
    # Reduced costs for min sum of artificials: cost 1 on artificials,
    # eliminated against the starting basis.
    obj = [Fraction(0)] * total + [Fraction(0)]
    for j in range(total + 1):
        s = Fraction(0)
        for r in range(m):
            s -= tableau[r][j]
        obj[j] = s
    for r in range(m):
        obj[ncols + r] += Fraction(1)
    tableau.append(obj)
    _simplex_min_core(tableau, basis, total)
    if tableau[-1][-1] < 0:
        # Objective row stores -(phase-1 value); negative means value > 0.
        raise LPInfeasibleError("phase 1 ended with positive artificial sum")
    # Drive any artificial still in the basis out (degenerate rows).
    for r in range(m):
        if basis[r] >= ncols:
            piv_col = -1
            for j in range(ncols):
                if tableau[r][j] != 0:
                    piv_col = j
                    break
            if piv_col >= 0:
                _pivot(tableau, basis, r, piv_col)
    keep = [r for r in range(m) if basis[r] < ncols]
    tableau = [
        [tableau[r][j] for j in range(ncols)] + [tableau[r][-1]] for r in keep
    ]
    basis = [basis[r] for r in keep]
    # Phase 2 objective: reduced costs c_j - c_B . B^-1 A_j against the
    # surviving basis.
    obj2 = [Fraction(v) for v in c] + [Fraction(0)] * m + [Fraction(0)]
    for r, bv in enumerate(basis):
        coeff = obj2[bv]
        if coeff != 0:
            row = tableau[r]
            for j in range(ncols + 1):
                obj2[j] -= coeff * row[j]
    tableau.append(obj2)
    _simplex_min_core(tableau, basis, ncols)
    x = [Fraction(0)] * n
    for r, bv in enumerate(basis):
        if bv < n:
            x[bv] = tableau[r][-1]
    value = sum((Fraction(c[j]) * x[j] for j in range(n)), Fraction(0))
    return value, x


# ---------------------------------------------------------------------------
# Brute-force integral b-matching
# ---------------------------------------------------------------------------

def brute_force_bmatching(
    g: Graph,
    *,
    max_n: int = 14,
    max_b_total: int = 24,
) -> tuple[float, tuple[tuple[int, int, int], ...]]:
    """Exact maximum-weight b-matching by branch and bound.

    A b-matching assigns a nonnegative integer multiplicity to each
    edge so that the multiplicities incident to each vertex ``i`` sum
    to at most ``b_i``; the value is the multiplicity-weighted sum of
    edge weights.

    Parameters
    ----------
    g:
        Input graph.
    max_n, max_b_total:
        Instance-size guards (override for bigger desk experiments).

    Returns
    -------
    (weight, matching)
        ``matching`` is a tuple of ``(i, j, multiplicity)`` for edges
        with positive multiplicity, in the explored edge order sorted
        by ``(i, j)``.
    """
    if g.n > max_n:
        raise ValueError(f"brute force capped at n <= {max_n}, got {g.n}")
    if g.B > max_b_total:
        raise ValueError(f"brute force capped at total capacity <= {max_b_total}, got {g.B}")
    order = sorted(range(g.m), key=lambda e: (-g.edges[e][2], g.edges[e][0], g.edges[e][1]))
    edges = [g.edges[e] for e in order]
    m = len(edges)
    rem = list(g.b)
    best_weight = 0.0
    best_choice = [0] * m
    choice = [0] * m

    def bound(idx: int) -> float:
        out = 0.0
        for t in range(idx, m):
            i, j, w = edges[t]
            cap = min(rem[i], rem[j])
            if cap > 0:
                out += w * cap
        return out

    def rec(idx: int, acc: float) -> None:
        nonlocal best_weight, best_choice
        if acc > best_weight + 1e-12:
            best_weight = acc
            best_choice = choice.copy()
        if idx >= m:
            return
        if acc + bound(idx) <= best_weight + 1e-12:
            return
        i, j, w = edges[idx]
        cap = min(rem[i], rem[j])
        for mult in range(cap, -1, -1):
            choice[idx] = mult
            rem[i] -= mult
            rem[j] -= mult
            rec(idx + 1, acc + w * mult)
            rem[i] += mult
            rem[j] += mult
            choice[idx] = 0

    rec(0, 0.0)
    picked = [
        (edges[t][0], edges[t][1], best_choice[t])
        for t in range(m)
        if best_choice[t] > 0
    ]
    picked.sort()
    return best_weight, tuple(picked)


# ---------------------------------------------------------------------------
# Exact LP values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactResult:
    """Exact LP values for one instance.

    Attributes
    ----------
    beta_star:
        Optimum of the fractional matching LP with every odd-set
        constraint, on the original weights (original units).
    beta_bipartite:
        Optimum of ``min sum b_i x_i  s.t.  x_i + x_j >= w_ij`` on the
        original weights (original units).
    beta_hat_discrete:
        Fractional matching LP optimum on the retained leveled edges
        with level weights ``(1+eps)^k`` (rescaled units).
    beta_bipartite_discrete:
        Vertex-cover-style LP optimum on the leveled edges (rescaled
        units).
    beta_hat_layered:
        Optimum of the per-level relaxation with layered odd-set
        variables (rescaled units); ``None`` unless requested.
    scale:
        ``eps * Wstar / B`` — multiply rescaled by this for original.
    """

    beta_star: Fraction
    beta_bipartite: Fraction
    beta_hat_discrete: Fraction
    beta_bipartite_discrete: Fraction
    beta_hat_layered: Fraction | None
    scale: Fraction


def _all_odd_sets_masks(n: int, b: Sequence[int]) -> list[tuple[int, int]]:
    """All ``(mask, bnorm)`` with odd total capacity (any size)."""
    out = []
    for mask in range(1, 1 << n):
        bn = 0
        mm = mask
        while mm:
            low = mm & (-mm)
            bn += b[low.bit_length() - 1]
            mm ^= low
        if bn % 2 == 1:
            out.append((mask, bn))
    return out


def _matching_lp_value(
    n: int,
    b: Sequence[int],
    edges: Sequence[tuple[int, int]],
    weights: Sequence[Fraction],
    odd_sets: Sequence[tuple[int, int]],
) -> tuple[Fraction, list[Fraction]]:
    """Fractional b-matching LP optimum via odd-set row generation.

    ``odd_sets`` supplies ``(mask, bnorm)`` candidates to separate over.
    """
    m = len(edges)
    vert_rows: list[list[Fraction]] = [[Fraction(0)] * m for _ in range(n)]
    for e, (i, j) in enumerate(edges):
        vert_rows[i][e] = Fraction(1)
        vert_rows[j][e] = Fraction(1)
    rows = [r for r in vert_rows]
    rhs = [Fraction(bv) for bv in b]
    active: set[int] = set()
    for _round in range(4096):
        value, y = solve_lp_max_leq(weights, rows, rhs)
        worst_mask = -1
        worst_excess = Fraction(0)
        for mask, bn in odd_sets:
            cap = Fraction(bn // 2)
            inside = Fraction(0)
            for e, (i, j) in enumerate(edges):
                if (mask >> i & 1) and (mask >> j & 1):
                    inside += y[e]
            excess = inside - cap
            if excess > worst_excess:
                worst_excess = excess
                worst_mask = mask
        if worst_mask < 0:
            return value, y
        if worst_mask in active:
            raise AssertionError("odd-set row regenerated; separation loop stuck")
        active.add(worst_mask)
        row = [Fraction(0)] * m
        for e, (i, j) in enumerate(edges):
            if (worst_mask >> i & 1) and (worst_mask >> j & 1):
                row[e] = Fraction(1)
        rows.append(row)
        bn = next(bv for mk, bv in odd_sets if mk == worst_mask)
        rhs.append(Fraction(bn // 2))
    raise AssertionError("odd-set row generation did not converge")


def _bipartite_relaxation_value(
    n: int,
    b: Sequence[int],
    edges: Sequence[tuple[int, int]],
    weights: Sequence[Fraction],
) -> Fraction:
    """``min sum b_i x_i  s.t.  x_i + x_j >= w_e`` via its LP dual.

    The dual is the fractional b-matching LP without odd-set rows:
    ``max w.y  s.t.  sum_{e at i} y_e <= b_i``; strong duality makes
    the values equal, and the max form needs no phase-1.
    """
    m = len(edges)
    rows: list[list[Fraction]] = [[Fraction(0)] * m for _ in range(n)]
    for e, (i, j) in enumerate(edges):
        rows[i][e] = Fraction(1)
        rows[j][e] = Fraction(1)
    value, _y = solve_lp_max_leq(weights, rows, [Fraction(bv) for bv in b])
    return value


def _layered_lp_value(
    leveled: LeveledGraph,
    eps: Fraction,
    odd_sets: Sequence[OddSet],
) -> Fraction:
    """Exact optimum of the layered per-level dual relaxation.

    Variables: ``x_i(k)`` for each vertex-level row, top ``x_i``, and
    ``z_{U,l}`` for small odd sets at populated levels.  Constraints:

    - cover: ``x_i(k) + x_j(k) + sum_{l<=k} sum_{U ni i,j} z_{U,l} >= (1+eps)^k``
      for every retained edge at level ``k``;
    - degree: ``2 x_i(k) + sum_{l<=k} sum_{U ni i} z_{U,l} <= 3 (1+eps)^k``
      for every vertex-level row;
    - cap: ``x_i >= x_i(k)``.

    Objective: ``min sum b_i x_i + sum_U floor(||U||_b/2) sum_l z_{U,l}``.
    Layer variables are restricted to populated levels: a layer between
    populated levels enters exactly the same rows as the next populated
    level above it, so the restriction is lossless.
    """
    g = leveled.base
    vrows = leveled.vertex_rows()
    pop_levels = sorted(leveled.levels.keys())
    xk_index = {ik: t for t, ik in enumerate(vrows)}
    nxk = len(vrows)
    x_index = {i: nxk + t for t, i in enumerate(range(g.n))}
    nx = nxk + g.n
    z_keys: list[tuple[int, int]] = []  # (odd set idx, level)
    for s_idx in range(len(odd_sets)):
        for lev in pop_levels:
            z_keys.append((s_idx, lev))
    z_index = {key: nx + t for t, key in enumerate(z_keys)}
    nvars = nx + len(z_keys)

    one = Fraction(1)
    lw = {k: (one + eps) ** k for k in pop_levels}

    a_ge: list[list[Fraction]] = []
    b_ge: list[Fraction] = []
    a_le: list[list[Fraction]] = []
    b_le: list[Fraction] = []

    for _idx, i, j, k in leveled.retained():
        row = [Fraction(0)] * nvars
        row[xk_index[(i, k)]] += one
        row[xk_index[(j, k)]] += one
        for s_idx, s in enumerate(odd_sets):
            if (s.mask >> i & 1) and (s.mask >> j & 1):
                for lev in pop_levels:
                    if lev <= k:
                        row[z_index[(s_idx, lev)]] += one
        a_ge.append(row)
        b_ge.append(lw[k])

    for (i, k) in vrows:
        row = [Fraction(0)] * nvars
        row[xk_index[(i, k)]] += Fraction(2)
        for s_idx, s in enumerate(odd_sets):
            if s.mask >> i & 1:
                for lev in pop_levels:
                    if lev <= k:
                        row[z_index[(s_idx, lev)]] += one
        a_le.append(row)
        b_le.append(Fraction(3) * lw[k])

    for (i, k) in vrows:
        row = [Fraction(0)] * nvars
        row[x_index[i]] += one
        row[xk_index[(i, k)]] -= one
        a_ge.append(row)
        b_ge.append(Fraction(0))

    c = [Fraction(0)] * nvars
    for i in range(g.n):
        c[x_index[i]] = Fraction(g.b[i])
    for (s_idx, lev) in z_keys:
        c[z_index[(s_idx, lev)]] = Fraction(odd_sets[s_idx].half_capacity)

    value, _x = solve_lp_min(c, a_ge, b_ge, a_le, b_le)
    return value


def exact_lp_values(
    g: Graph,
    epsilon: float,
    *,
    include_layered: bool = False,
    max_n: int = 14,
) -> ExactResult:
    """Compute exact LP reference values for a desk-scale instance.

    Parameters
    ----------
    g, epsilon:
        Instance and discretization parameter (must be exactly
        representable, e.g. ``1/16``).
    include_layered:
        Also solve the layered per-level relaxation (much larger LP;
        keep instances tiny).
    max_n:
        Guard for the full odd-set enumeration.

    Returns
    -------
    ExactResult
    """
    if g.n > max_n:
        raise ValueError(f"exact LP values capped at n <= {max_n}, got {g.n}")
    eps = Fraction(epsilon)
    all_odd = _all_odd_sets_masks(g.n, g.b)
    orig_edges = [(i, j) for (i, j, _w) in g.edges]
    orig_w = [Fraction(w) for (_i, _j, w) in g.edges]
    beta_star, _ = _matching_lp_value(g.n, g.b, orig_edges, orig_w, all_odd)
    beta_bip = _bipartite_relaxation_value(g.n, g.b, orig_edges, orig_w)

    leveled = discretize(g, epsilon)
    ret = list(leveled.retained())
    lev_edges = [(i, j) for (_e, i, j, _k) in ret]
    lev_w = [(Fraction(1) + eps) ** k for (_e, _i, _j, k) in ret]
    beta_hat, _ = _matching_lp_value(g.n, g.b, lev_edges, lev_w, all_odd)
    beta_bip_disc = _bipartite_relaxation_value(g.n, g.b, lev_edges, lev_w)

    layered: Fraction | None = None
    if include_layered:
        odd_small = enumerate_small_odd_sets(g, epsilon)
        layered = _layered_lp_value(leveled, eps, odd_small)

    scale = eps * Fraction(leveled.Wstar) / g.B
    return ExactResult(
        beta_star=beta_star,
        beta_bipartite=beta_bip,
        beta_hat_discrete=beta_hat,
        beta_bipartite_discrete=beta_bip_disc,
        beta_hat_layered=layered,
        scale=scale,
    )


# ---------------------------------------------------------------------------
# Dual feasibility, laminarity, uncrossing
# ---------------------------------------------------------------------------

def check_dual_feasible(
    leveled: LeveledGraph,
    x: Mapping[int, float],
    z: Mapping[OddSet, float],
    *,
    tol: float = 1e-9,
) -> tuple[bool, float, float]:
    """Check feasibility of ``(x, z)`` for the odd-set dual on leveled edges.

    The constraint per retained edge ``(i, j)`` at level ``k`` is
    ``x_i + x_j + sum_{U containing i and j} z_U >= (1+eps)^k``.

    Returns
    -------
    (ok, worst_relative_violation, objective)
        ``objective`` is ``sum b_i x_i + sum_U floor(||U||_b/2) z_U``.
    """
    worst = 0.0
    for _e, i, j, k in leveled.retained():
        need = leveled.level_weight(k)
        have = x.get(i, 0.0) + x.get(j, 0.0)
        for u, zv in z.items():
            if (u.mask >> i & 1) and (u.mask >> j & 1):
                have += zv
        worst = max(worst, (need - have) / need)
    objective = sum(leveled.base.b[i] * xv for i, xv in x.items())
    objective += sum(u.half_capacity * zv for u, zv in z.items())
    return worst <= tol, worst, objective


def laminar_check(sets: Iterable[OddSet]) -> bool:
    """True when the family is laminar (pairwise nested or disjoint)."""
    items = list(sets)
    for a_idx in range(len(items)):
        for b_idx in range(a_idx + 1, len(items)):
            am, bm = items[a_idx].mask, items[b_idx].mask
            inter = am & bm
            if inter and inter != am and inter != bm:
                return False
    return True


def uncross_dual(
    b: Sequence[int],
    x: Mapping[int, Fraction],
    z: Mapping[OddSet, Fraction],
    *,
    max_steps: int = 100_000,
) -> tuple[dict[int, Fraction], dict[OddSet, Fraction]]:
    """Uncross an odd-set dual until its support is laminar.

    For a crossing pair ``A, B`` with positive multipliers and
    ``t = min(z_A, z_B)``:

    - if the capacity of ``A & B`` is even: shift ``t`` onto ``A - B``
      and ``B - A`` and raise ``x_i`` by ``t`` on ``A & B``;
    - if it is odd: shift ``t`` onto ``A | B`` and ``A & B``.

    Both moves preserve the dual objective and every cover constraint.
    Termination is monitored by the potentials ``sum z ||U||_b``
    (strictly decreases in the even case) and ``sum z ||U||_b^2``
    (strictly increases in the odd case, with the first potential
    unchanged).

    Returns the uncrossed ``(x, z)`` with zero entries dropped.
    """
    xv: dict[int, Fraction] = {i: Fraction(v) for i, v in x.items()}
    zv: dict[OddSet, Fraction] = {u: Fraction(v) for u, v in z.items() if v > 0}

    def bnorm_of_mask(mask: int) -> int:
        total = 0
        mm = mask
        while mm:
            low = mm & (-mm)
            total += b[low.bit_length() - 1]
            mm ^= low
        return total

    def set_from_mask(mask: int) -> OddSet:
        members = []
        mm = mask
        while mm:
            low = mm & (-mm)
            members.append(low.bit_length() - 1)
            mm ^= low
        return OddSet(members=tuple(members), bnorm=bnorm_of_mask(mask), mask=mask)

    def potentials() -> tuple[Fraction, Fraction]:
        p1 = sum((v * u.bnorm for u, v in zv.items()), Fraction(0))
        p2 = sum((v * u.bnorm * u.bnorm for u, v in zv.items()), Fraction(0))
        return p1, p2

    for _step in range(max_steps):
        crossing: tuple[OddSet, OddSet] | None = None
        supp = sorted(zv.keys())
        for ai in range(len(supp)):
            for bi in range(ai + 1, len(supp)):
                a_set, b_set = supp[ai], supp[bi]
                inter = a_set.mask & b_set.mask
                if inter and inter != a_set.mask and inter != b_set.mask:
                    crossing = (a_set, b_set)
                    break
            if crossing:
                break
        if crossing is None:
            return xv, {u: v for u, v in zv.items() if v > 0}
        a_set, b_set = crossing
        t = min(zv[a_set], zv[b_set])
        p1_before, p2_before = potentials()
        inter_mask = a_set.mask & b_set.mask
        inter_bn = bnorm_of_mask(inter_mask)
        zv[a_set] -= t
        zv[b_set] -= t
        for u in (a_set, b_set):
            if zv[u] == 0:
                del zv[u]
        if inter_bn % 2 == 0:
            for mask in (a_set.mask & ~b_set.mask, b_set.mask & ~a_set.mask):
                u = set_from_mask(mask)
                if u.bnorm % 2 != 1:
                    raise AssertionError("difference set lost odd capacity")
                zv[u] = zv.get(u, Fraction(0)) + t
            mm = inter_mask
            while mm:
                low = mm & (-mm)
                i = low.bit_length() - 1
                xv[i] = xv.get(i, Fraction(0)) + t
                mm ^= low
            p1_after, _ = potentials()
            if not p1_after < p1_before:
                raise AssertionError("even-intersection move failed to decrease potential")
        else:
            for mask in (a_set.mask | b_set.mask, inter_mask):
                u = set_from_mask(mask)
                if u.bnorm % 2 != 1:
                    raise AssertionError("union/intersection set lost odd capacity")
                zv[u] = zv.get(u, Fraction(0)) + t
            p1_after, p2_after = potentials()
            if p1_after != p1_before:
                raise AssertionError("odd-intersection move changed the linear potential")
            if not p2_after > p2_before:
                raise AssertionError("odd-intersection move failed to increase potential")
    raise AssertionError("uncrossing did not terminate within step budget")


def enumerate_cuts_check(
    n: int,
    edges_a: Sequence[tuple[int, int, float]],
    edges_b: Sequence[tuple[int, int, float]],
    xi: float,
    *,
    max_n: int = 16,
) -> tuple[bool, float]:
    """Compare every cut of two edge-weight assignments on ``n`` vertices.

    Pure-Python enumeration of all ``2^(n-1) - 1`` nontrivial cuts; used
    to cross-check the vectorized cut evaluator and to certify
    sparsifier outputs at desk scale.

    Returns
    -------
    (ok, worst)
        ``ok`` iff every cut of ``edges_b`` is within ``(1 +- xi)`` of
        the corresponding cut of ``edges_a``; ``worst`` is the largest
        relative deviation ``|cut_b - cut_a| / cut_a`` over cuts with
        ``cut_a > 0`` (and ``inf`` if some cut has ``cut_a = 0`` but
        ``cut_b != 0``).
    """
    if n > max_n:
        raise ValueError(f"cut enumeration capped at n <= {max_n}, got {n}")
    worst = 0.0
    for side in range(1, 1 << (n - 1)):
        # Vertex n-1 fixed on side 0; `side` picks the subset of 0..n-2.
        cut_a = math.fsum(
            w for (i, j, w) in edges_a if ((side >> i & 1) if i < n - 1 else 0) != ((side >> j & 1) if j < n - 1 else 0)
        )
        cut_b = math.fsum(
            w for (i, j, w) in edges_b if ((side >> i & 1) if i < n - 1 else 0) != ((side >> j & 1) if j < n - 1 else 0)
        )
        if cut_a <= 0.0:
            if abs(cut_b) > 0.0:
                return False, math.inf
            continue
        dev = abs(cut_b - cut_a) / cut_a
        worst = max(worst, dev)
    return worst <= xi * (1.0 + 1e-12), worst
