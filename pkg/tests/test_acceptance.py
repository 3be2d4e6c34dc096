"""Acceptance suite: ten primary criteria, one pass/fail line each.

The per-criterion lines are printed outside pytest's capture so they appear
in any run; every test enforces its numerical tolerance and runtime budget.
"""

import math
import time

import numpy as np

import linresp as lr
from linresp import catalog
from linresp.bvspaces import GridFunction, bvp_norm, var_p, var_p_bruteforce
from linresp.conjugacy import holder_norm, solve_tce_pullback, solve_tce_series
from linresp.density import integral_against_reconstruction
from linresp.maps import MapFamily, evaluate, family_map


def _report(capsys, n, ok, detail, elapsed, budget):
    status = "PASS" if ok and elapsed <= budget else "FAIL"
    with capsys.disabled():
        print(f"[criterion {n:2d}] {status}: {detail} "
              f"({elapsed:.1f}s / budget {budget:.0f}s)")
    assert ok, detail
    assert elapsed <= budget, f"runtime {elapsed:.1f}s over budget {budget}s"


def test_criterion_1_tent_srb_decomposition(capsys):
    t0 = time.time()
    dec = lr.srb_density(lr.tent_map(), 4096)
    xs = dec.regular.nodes
    dev = float(np.max(np.abs(dec.reconstruction(xs[1:-1]) - 0.5)))
    s1_err = abs(dec.jumps[0][1] + 0.5)
    c1_ok = dec.jumps[0][0] == 1.0
    merged = dict((round(c, 9), s) for c, s in dec.merged_jumps)
    merged_err = abs(merged.get(-1.0, np.inf) - 0.5)
    s1 = dec.jumps[0][1]
    prods = dec.orbit.derivative_products
    decay_err = max(abs(sk - s1 / prods[k])
                    for k, (_, sk) in enumerate(dec.jumps))
    ok = (dev <= 1e-6 and s1_err <= 1e-4 and c1_ok and merged_err <= 1e-4
          and decay_err <= 1e-12)
    _report(capsys, 1, ok, f"tent SRB: sup dev {dev:.1e}, s_1 err {s1_err:.1e}, "
            f"merged err {merged_err:.1e}, decay err {decay_err:.1e}",
            time.time() - t0, 10)


def test_criterion_2_conjugation_ground_truth(capsys):
    t0 = time.time()
    fam = MapFamily.additive(lr.tent_map(), catalog.BUMP)
    rep = lr.response_formula(fam, catalog.X, 4096)
    fd, _ = lr.response_finite_difference(fam, catalog.X, 4096)
    gt = 1.0 / 6.0
    worst = max(abs(rep.formula_value - fd), abs(rep.formula_value - gt),
                abs(fd - gt))
    _report(capsys, 2, worst <= 3e-3,
            f"formula {rep.formula_value:.8f}, fd {fd:.8f}, truth 1/6; "
            f"worst pairwise {worst:.1e} <= 3e-3", time.time() - t0, 60)


def test_criterion_3_tce_dual_solver(capsys):
    t0 = time.time()
    tent = lr.tent_map()
    skew = lr.skew_tent(1.9)
    nl = family_map(MapFamily.additive(tent, catalog.BUMP), 0.08)
    pairs = [(tent, catalog.SINPI), (tent, catalog.XBUMP),
             (skew, catalog.SINPI), (nl, catalog.SIN2PI),
             (skew, catalog.X2BUMP)]
    ok = True
    worst = 0.0
    for m, af in pairs:
        def v(x, m=m, af=af):
            return af.f(evaluate(m, x)) - m.derivative(x) * af.f(x)
        s = solve_tce_series(m, v, 2048)
        p = solve_tce_pullback(m, v, grid_size=2048)
        diff = float(np.max(np.abs(s.alpha.values - p.alpha.values)))
        budget = s.error_bound + p.error_bound
        ok &= diff <= budget
        ok &= s.residual <= budget + 1e-10 and p.residual <= budget + 1e-10
        worst = max(worst, diff / max(budget, 1e-300))
    _report(capsys, 3, ok, f"5 manufactured pairs: worst diff/bound ratio {worst:.2f}",
            time.time() - t0, 30)


def test_criterion_4_pressure_identity(capsys):
    t0 = time.time()
    fam = MapFamily.conjugation(lr.tent_map(), catalog.BUMP, t_max=0.06)
    worst = 0.0
    for psi in (catalog.X, catalog.X2):
        for t in (0.0, 0.05):
            dp = lr.pressure_derivative(fam, psi, t, grid_size=2048)
            ic = lr.integral_psi_dmu_t(fam, psi, t, 2048, "conjugation")
            worst = max(worst, abs(dp - ic))
    _report(capsys, 4, worst <= 1e-4,
            f"pressure identity worst defect {worst:.1e} <= 1e-4",
            time.time() - t0, 60)


def test_criterion_5_var_p_exactness(capsys):
    t0 = time.time()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(500):
        vals = rng.normal(size=int(rng.integers(2, 13)))
        for p in (1.0, 1.5, 2.0, 3.0):
            worst = max(worst, abs(var_p(vals, p) - var_p_bruteforce(vals, p)))
    _report(capsys, 5, worst <= 1e-12,
            f"var_p DP vs brute force on 500 sequences: worst {worst:.1e}",
            time.time() - t0, 10)


def test_criterion_6_product_bound(capsys):
    t0 = time.time()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(3, 33)) * 2
        u1 = GridFunction(rng.normal(size=n + 1))
        u2 = GridFunction(rng.normal(size=n + 1))
        prod = GridFunction(u1.values * u2.values)
        for p in (1.0, 1.5, 2.0):
            worst = max(worst, bvp_norm(prod, p)
                        / (bvp_norm(u1, p) * bvp_norm(u2, p)))
    _report(capsys, 6, worst <= 2.0,
            f"norm product bound on 200 pairs: worst ratio {worst:.3f} <= 2",
            time.time() - t0, 5)


def test_criterion_7_ccclaim_identity(capsys):
    t0 = time.time()
    # "tent plus bump": tent pushed into the nonlinear regime by the bump,
    # perturbed again in the bump direction; on the unperturbed (piecewise
    # linear) tent both sides coincide identically and no order is observable
    tent = lr.tent_map()
    base = family_map(MapFamily.additive(tent, catalog.BUMP), 0.08)
    fam = MapFamily.additive(base, catalog.BUMP, t_max=0.02)
    r2 = lr.ccclaim_check(fam, 2048).residual_sup
    r4 = lr.ccclaim_check(fam, 4096).residual_sup
    order = math.log2(r2 / r4)
    _report(capsys, 7, order >= 1.0,
            f"ccclaim residual {r2:.2e} -> {r4:.2e}, order {order:.2f} >= 1",
            time.time() - t0, 120)


def test_criterion_8_holder_stability(capsys):
    t0 = time.time()
    tent = lr.tent_map()
    ok = True
    detail = []
    for Xd in (catalog.BUMP, catalog.XBUMP):  # two horizontal directions
        fam = MapFamily.additive(tent, Xd)
        for beta in (0.5, 0.9):
            vals = [holder_norm(solve_tce_series(tent, fam.v, M).alpha,
                                beta).constant
                    for M in (512, 1024, 2048, 4096, 8192)]
            ratio = max(vals) / min(vals)
            ok &= ratio < 2.0
            detail.append(f"{Xd.name}/b={beta}:{ratio:.2f}")
    _report(capsys, 8, ok, "Holder norm grid stability " + " ".join(detail),
            time.time() - t0, 60)


def test_criterion_9_klbd_exponent(capsys):
    t0 = time.time()
    tent = lr.tent_map()
    exponent = lr.fit_l1_exponent(
        lambda t: lr.tangent_pair_l1_distance(
            tent, catalog.XBUMP, catalog.X2BUMP, t, 2048),
        (0.04, 0.02, 0.01, 0.005))
    _report(capsys, 9, exponent >= 1.5,
            f"tangent-pair L1 exponent {exponent:.3f} >= 1.5",
            time.time() - t0, 120)


def test_criterion_10_birkhoff_consistency(capsys):
    t0 = time.time()
    ok = True
    detail = []
    for m in (lr.tent_map(), lr.skew_tent(1.9)):
        dec = lr.srb_density(m, 8192)
        for psi in (catalog.X, catalog.X2):
            mean, se = lr.birkhoff_average(m, psi, n_orbits=200,
                                           orbit_len=100_000, seed=7)
            val = integral_against_reconstruction(dec, psi.f)
            z = abs(val - mean) / se
            ok &= z <= 3.0
            detail.append(f"{m.name}/{psi.name}:z={z:.2f}")
    _report(capsys, 10, ok, "Birkhoff vs density " + " ".join(detail),
            time.time() - t0, 60)
