"""Acceptance gate: the nine headline guarantees, checked at desk scale.

Every test prints a single ``[PASS]``/``[FAIL]`` line naming its
criterion, then asserts.  The hundred-instance solver suite is solved
once (with every runtime self-check enabled) and shared across the
criteria that consume it.
"""

from __future__ import annotations

import itertools
import json
import time
from fractions import Fraction

import numpy as np
import pytest

import sketchmatch as sm
from sketchmatch.mwu import CoveringProblem, solve_covering
from sketchmatch.oddsets import build_auxiliary, collect_violated_sets, gomory_hu, max_flow
from sketchmatch.oracle import initial_solution
from sketchmatch.sketch import all_cut_values, prf_u64

from conftest import EPS, triangle_paper


def _verdict(ok: bool, label: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {label}")
    assert ok, label


@pytest.fixture(scope="session")
def suite_reports(suite_instances):
    """Solve the whole hundred-instance suite with self-checks on."""
    t0 = time.monotonic()
    reports = [
        sm.solve(g, sm.SolverConfig(assert_mode=True)) for g in suite_instances
    ]
    elapsed = time.monotonic() - t0
    return reports, elapsed


@pytest.fixture(scope="session")
def suite_optima(suite_instances):
    return [sm.brute_force_bmatching(g)[0] for g in suite_instances]


def test_criterion_1_ratio_floor_over_hundred_instances(
    suite_instances, suite_reports, suite_optima
):
    reports, elapsed = suite_reports
    floor = 1.0 - 14.0 * EPS
    worst = min(
        (rep.weight / opt if opt > 0 else 1.0)
        for rep, opt in zip(reports, suite_optima)
    )
    ok = worst >= floor - 1e-9 and elapsed < 300.0
    _verdict(
        ok,
        "criterion 1: 100 seeded instances reach (1 - 14 eps) of the "
        f"exact optimum (worst ratio {worst:.4f}, floor {floor:.4f}, "
        f"{elapsed:.1f}s)",
    )


def test_criterion_2_reference_triangle():
    g = triangle_paper()
    vals = sm.exact_lp_values(g, EPS)
    bip_ok = abs(vals.beta_bipartite - (Fraction(1) + 5 * Fraction(1, 16))) <= Fraction(
        1, 10**9
    )
    star_ok = vals.beta_star == 1
    rep = sm.solve(g, sm.SolverConfig())
    ok = bip_ok and star_ok and abs(rep.weight - 1.0) < 1e-9
    _verdict(
        ok,
        "criterion 2: reference triangle has bipartite value 1 + 5 eps, "
        "odd-set value 1, and the solver returns weight 1",
    )


def test_criterion_3_sparsifier_cut_fidelity():
    passing = total = 0
    for n, xi in itertools.product(range(5, 11), (0.25, 0.3)):
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
        weights = [1.0] * len(edges)
        base = all_cut_values(n, edges, weights)
        for seed in range(100):
            sp = sm.build_streaming_sparsifier(n, edges, weights, xi, seed=seed)
            cuts = all_cut_values(n, list(sp.endpoints), list(sp.weights))
            dev = float(np.max(np.abs(cuts - base) / base))
            total += 1
            passing += dev <= xi
    streaming_rate = passing / total

    adv_pass = adv_total = 0
    chi = 2.0
    for n in (5, 6):
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
        promise = [1.0] * len(edges)
        for seed in range(100):
            true = {
                e: (chi if prf_u64(seed, "acc3", e) % 2 else 1.0 / chi)
                for e in range(len(edges))
            }
            sk = sm.build_deferred(n, edges, promise, chi=chi, xi=0.25, seed=seed)
            got = sm.refine_deferred(
                sk, {e: true[e] for e in sk.stored_edge_ids()}
            )
            base = all_cut_values(
                n, edges, [true[e] for e in range(len(edges))]
            )
            cuts = all_cut_values(
                n, [edges[e] for e in got], list(got.values())
            )
            dev = float(np.max(np.abs(cuts - base) / base))
            adv_total += 1
            adv_pass += dev <= 0.25
    deferred_rate = adv_pass / adv_total

    ok = streaming_rate >= 0.99 and deferred_rate >= 0.99
    _verdict(
        ok,
        "criterion 3: cut sparsifiers stay within 1 +- xi on at least 99% "
        f"of seeds (streaming {streaming_rate:.3f}, deferred adversarial "
        f"{deferred_rate:.3f})",
    )


def test_criterion_4_covering_engine_on_random_lps():
    rng = np.random.default_rng(2026)
    solved = 0
    for trial in range(10):
        m = int(rng.integers(2, 6))
        dim = int(rng.integers(2, 5))
        a = rng.random((m, dim)) + 0.1
        x_bar = rng.random(dim) + 0.5
        c = a @ x_bar
        budget_sum = 2.0 * float(x_bar.sum())
        rho = float(
            max(budget_sum * a[l].max() / c[l] for l in range(m))
        )
        eps0 = float(rng.choice([0.1, 0.15, 0.2]))

        def oracle(u, state, a=a, budget_sum=budget_sum):
            gains = a.T @ u
            y = np.zeros(a.shape[1])
            y[int(np.argmax(gains))] = budget_sum
            return y

        problem = CoveringProblem(
            c=c,
            rho=rho,
            x0=x_bar / 2.0,
            matvec=lambda x, a=a: a @ x,
            combine=lambda x, y, s: (1.0 - s) * x + s * y,
            oracle=oracle,
        )
        out = solve_covering(problem, eps0)
        # per-step multiplier drift within e^{+-eps} is asserted inside
        # the engine; reaching here means every step obeyed it
        if out.feasible and out.lam >= 1.0 - 3.0 * eps0 and out.steps <= out.budget:
            solved += 1
    ok = solved == 10
    _verdict(
        ok,
        "criterion 4: ten random covering LPs certify coverage 1 - 3 eps "
        f"within the step budget with bounded per-step drift ({solved}/10)",
    )


def test_criterion_5_self_checked_suite(suite_instances, suite_reports):
    reports, _elapsed = suite_reports
    steps = sum(rep.steps for rep in reports)
    certs = sum(rep.certificates for rep in reports)
    # assert_mode solves verify every dual step and every certificate as
    # they are produced, and raise on the first violation — so the suite
    # having completed is the zero-violation statement.
    suite_ok = len(reports) == 100 and steps > 0

    # The harvest ratchet can keep the budget above certifiable range on
    # the whole suite, leaving the certificate half vacuous; force it at
    # an undersized budget so both answer kinds are exercised.
    from sketchmatch.oracle import (
        PrimalCertificate,
        check_primal_certificate,
        matching_oracle,
    )

    forced = 0
    cert_ok = True
    for g in suite_instances[:5]:
        lv = sm.discretize(g, EPS)
        index = sm.SystemIndex(lv, EPS, sm.enumerate_small_odd_sets(g, EPS))
        u = np.ones(len(index.rows))
        zeta = np.ones(len(index.vrows))
        out = matching_oracle(index, u, zeta, 1e-5, 1.0)
        if isinstance(out, PrimalCertificate):
            forced += 1
            passed, report = check_primal_certificate(index, out)
            if not passed or out.objective < (1.0 - EPS) * 1.0 - 1e-9:
                cert_ok = False

    ok = suite_ok and cert_ok and forced >= 5
    _verdict(
        ok,
        "criterion 5: all dual steps and certificates verified in-line "
        f"({steps} steps, {certs} in-suite certificates, {forced} forced "
        "certificates, zero violations)",
    )


def test_criterion_6_initial_solution_sandwich(suite_instances):
    checked = 0
    ok = True
    for g in suite_instances:
        if g.n > 10:
            continue
        lv = sm.discretize(g, EPS)
        index = sm.SystemIndex(lv, EPS, sm.enumerate_small_odd_sets(g, EPS))
        it0, beta0, _lam0 = initial_solution(index, 2.0, 0)
        vals = sm.exact_lp_values(g, EPS)
        bip = float(vals.beta_bipartite_discrete)
        lo = bip / (2048.0 * EPS**-2)
        hi = bip / 4.0
        cov = index.cover_values(it0)
        rhs = np.array([lv.level_weight(k) for (_e, _i, _j, k) in index.rows])
        if not (lo - 1e-12 <= beta0 <= hi + 1e-12):
            ok = False
        if not (cov >= (EPS / 256.0) * rhs * (1.0 - 1e-9)).all():
            ok = False
        checked += 1
        if checked >= 10:
            break
    ok = ok and checked >= 10
    _verdict(
        ok,
        "criterion 6: starting budgets sit inside the discrete-bipartite "
        f"sandwich and cover every row at eps/256 ({checked} instances)",
    )


def test_criterion_7_round_and_space_caps(suite_reports):
    reports, _elapsed = suite_reports
    cap = sm.round_cap_for(2.0, EPS)
    ok = True
    for rep in reports:
        d = rep.as_dict()
        if d["rounds"] > cap or d["rounds"] > d["round_cap"]:
            ok = False
        if d["peak_space"] > d["space_cap"]:
            ok = False
        if "rounds" not in d or "peak_space" not in d:
            ok = False
    _verdict(
        ok,
        "criterion 7: every suite run reports rounds and peak space "
        f"within its caps (round cap {cap})",
    )


def test_criterion_8_odd_set_detection_against_exhaustive_scan():
    # (a) direct selection: membership and exclusion bounds against the
    # fully enumerated small-odd-set family (strict mode re-verifies
    # both bounds internally on every call; we restate them here).
    g = sm.load_graph("0 1 4\n0 2 4\n1 2 4\n3 4 4\n3 5 4\n4 5 4\n")
    eps = 0.5
    lv = sm.discretize(g, eps)
    odd = sm.enumerate_small_odd_sets(g, eps)
    index = sm.SystemIndex(lv, eps, odd)
    q = np.full(len(index.rows), 0.95)
    q_hat = np.full(6, 2.0)
    selected, values = collect_violated_sets(index, q, q_hat)
    sel_members = [index.odd_sets[t].members for t in selected]
    direct_ok = sorted(sel_members) == [(0, 1, 2), (3, 4, 5)]
    touched = set().union(*(set(ms) for ms in sel_members)) if sel_members else set()
    for t, u in enumerate(index.odd_sets):
        bar = u.bnorm // 2 + eps / 2.0
        if t in selected:
            direct_ok = direct_ok and values[t] > bar - 1e-12
        elif not (set(u.members) & touched):
            direct_ok = direct_ok and values[t] <= bar + 1e-12

    # (b) the flow route's cut tree agrees with direct max-flow on all
    # vertex pairs of auxiliary graphs with at most ten nodes.
    rng = np.random.default_rng(8)
    flow_ok = True
    for _ in range(10):
        n = int(rng.integers(3, 9))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        take = [p for p in pairs if rng.random() < 0.7] or [pairs[0]]
        qv = [float(rng.integers(0, 3)) / 2.0 for _ in take]
        load = [0.0] * n
        for (i, j), v in zip(take, qv):
            load[i] += v
            load[j] += v
        qh = [max(1.0, load[i]) + 0.5 for i in range(n)]
        aux = build_auxiliary(n, take, qv, qh, 0.5)
        tree = gomory_hu(aux.cap)
        for aa, bb in itertools.combinations(range(n + 1), 2):
            value, _ = max_flow(aux.cap, aa, bb)
            if tree.mincut(aa, bb) != value:
                flow_ok = False

    ok = direct_ok and flow_ok
    _verdict(
        ok,
        "criterion 8: violated-set selection matches the exhaustive "
        "small-odd-set scan and the cut tree matches direct max-flow "
        "on every pair",
    )


def test_criterion_9_byte_identical_reports(suite_instances, suite_reports):
    reports, _elapsed = suite_reports
    ok = True
    for idx in (0, 13, 44, 71, 99):
        g = suite_instances[idx]
        again = sm.solve(g, sm.SolverConfig(assert_mode=True))
        first = json.dumps(reports[idx].as_dict(), sort_keys=True)
        second = json.dumps(again.as_dict(), sort_keys=True)
        if first.encode() != second.encode():
            ok = False
    _verdict(
        ok,
        "criterion 9: re-solving produces byte-identical reports on five "
        "spot-checked suite instances",
    )


def test_lp_ratio_invariant(suite_instances, suite_reports):
    """Weight reaches (1 - 7 eps) of the exact odd-set LP value."""
    reports, _elapsed = suite_reports
    floor = 1.0 - 7.0 * EPS
    worst = 2.0
    for g, rep in zip(suite_instances[:20], reports[:20]):
        vals = sm.exact_lp_values(g, EPS)
        star = float(vals.beta_star)
        if star <= 0:
            continue
        worst = min(worst, rep.weight / star)
    ok = worst >= floor - 1e-9
    _verdict(
        ok,
        "solver weight reaches (1 - 7 eps) of the exact relaxation value "
        f"(worst ratio {worst:.4f}, floor {floor:.4f})",
    )
