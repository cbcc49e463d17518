"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one pass/fail line. Heavy Monte Carlo experiments are
shared through module-scoped fixtures; all randomness is seeded, so the
suite is deterministic.
"""

import json

import numpy as np
import pytest

from rsmd import bounds as bnd
from rsmd import certificate as cert
from rsmd import geometry as geo
from rsmd import harness
from rsmd import multistage as ms
from rsmd import problems as prob
from rsmd import solver as sol
from rsmd.geometry import CompositePenalty, FeasibleSet, GeometrySetup
from rsmd.truncation import TruncationConfig, threshold_tau

from conftest import grid_minimize, prox_objective, vi_residual
from test_solver import _assert_trajectory_chain, exact_anchor


def _finish(num, desc, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] criterion {num:02d} - {desc}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# shared experiments
# ---------------------------------------------------------------------------

COVERAGE_RAW = {
    "name": "acceptance-theorem1",
    "instance": {"dim": 10, "spectrum": {"min": 0.5, "max": 2.0},
                 "geometry": "euclidean",
                 "set": {"kind": "ball", "center": 0.0, "radius": 5.0},
                 "penalty": {"kind": "zero"}, "target": 0.3, "seed": 42},
    "noise": {"kind": "pareto", "alpha": 2.5},
    "sigma": 1.0, "method": "rsmd", "threshold": "tau",
    "N": 500, "taus": [2.0], "reps": 300, "seed": 777,
    "bounds": ["theorem1", "certificate", "sandwich", "corollary2"],
}


@pytest.fixture(scope="module")
def coverage_experiment():
    cfg = harness.config_from_dict(json.loads(json.dumps(COVERAGE_RAW)))
    report, coverage = harness.monte_carlo(cfg)
    return cfg, report, coverage


@pytest.fixture(scope="module")
def chain_runs():
    """100 seeded heavy-tail test-mode runs (Euclidean and l1 geometry)."""
    traces = []
    inst_e = prob.make_instance(5, np.linspace(0.5, 2.0, 5),
                                set_=FeasibleSet.ball(np.zeros(5), 3.0),
                                target=0.2, sigma=1.0, seed=8)
    noise_e = prob.calibrate_noise("pareto", 1.0, inst_e.geometry, alpha=2.5)
    traces += [_heavy_run(inst_e, noise_e, N=100, tau=2.0, seed=s)
               for s in range(90)]
    inst_l = prob.make_instance(3, [0.6, 1.0, 1.4], geometry_kind=geo.L1,
                                set_=FeasibleSet.simplex(1.0, 3),
                                sigma=0.8, seed=15)
    noise_l = prob.calibrate_noise("pareto", 0.8, inst_l.geometry, alpha=2.5)
    traces += [_heavy_run(inst_l, noise_l, N=30, tau=2.0, seed=1000 + s)
               for s in range(10)]
    return [(inst_e, t) for t in traces[:90]] + [(inst_l, t) for t in traces[90:]]


def _heavy_run(inst, noise, N, tau, seed, test_mode=True):
    setup = inst.geometry
    M = inst.L * setup.radius
    lam = threshold_tau(inst.sigma, N, tau, M)
    beta = sol.stepsize_constant(inst.L, inst.sigma, N, setup.radius,
                                 setup.capacity)
    cfg = sol.RsmdConfig(beta=beta, N=N, truncation=exact_anchor(inst, lam),
                         x0=setup.center.astype(float), test_mode=test_mode)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(101,)))
    trace = sol.run(cfg, inst, noise, rng)
    trace.meta.update({"lambda": lam, "tau": tau, "threshold_policy": "tau"})
    return trace


# ---------------------------------------------------------------------------
# criterion 1: prox correctness against grid oracles + variational inequality
# ---------------------------------------------------------------------------


def _prox_cases_for_geometry(kind, rng):
    cases = []
    if kind == geo.EUCLIDEAN:
        sets = [(2, FeasibleSet.ball(np.zeros(2), 2.0)),
                (2, FeasibleSet.box(-np.ones(2), np.ones(2))),
                (3, FeasibleSet.ball(np.zeros(3), 1.5)),
                (3, FeasibleSet.box(-np.ones(3), 2 * np.ones(3)))]
        pens = [CompositePenalty.zero(), CompositePenalty.l1(0.3),
                CompositePenalty.power(0.2, 1.5)]
    else:
        sets = [(2, FeasibleSet.simplex(1.0, 2)),
                (2, FeasibleSet.ball(np.zeros(2), 1.5)),
                (3, FeasibleSet.simplex(1.0, 3)),
                (3, FeasibleSet.ball(np.zeros(3), 1.5))]
        pens = [CompositePenalty.zero(), CompositePenalty.l1(0.3),
                CompositePenalty.power(0.2, 1.5), CompositePenalty.negentropy(0.1)]
    k = 0
    while len(cases) < 100:
        n, set_ = sets[k % len(sets)]
        pen = pens[k % len(pens)]
        k += 1
        if pen.kind == "negentropy" and set_.kind != "simplex":
            continue
        setup = GeometrySetup(kind, n, np.zeros(n),
                              set_.circumradius(GeometrySetup(kind, n, np.zeros(n), 1.0),
                                                np.zeros(n)))
        x = set_.sample(setup, rng, size=1)[0]
        xi = rng.normal(size=n) * 2.0
        beta = float(rng.uniform(0.5, 4.0))
        cases.append((setup, set_, pen, x, xi, beta))
    return cases


@pytest.mark.parametrize("kind", [geo.EUCLIDEAN, geo.L1])
def test_criterion_01_prox_grid_and_vi(kind, rng):
    cases = _prox_cases_for_geometry(kind, rng)
    worst_gap, worst_vi = 0.0, 0.0
    for setup, set_, pen, x, xi, beta in cases:
        z = geo.composite_prox(setup, set_, pen, x, xi, beta)
        fun = prox_objective(setup, set_, pen, x, xi, beta)
        n = set_.dim_of()
        pts, rounds = (19, 14) if n <= 2 else (17, 15)
        grid_val, _ = grid_minimize(fun, set_, setup, rounds=rounds, pts=pts)
        gap = abs(float(fun(z)[0]) - grid_val)
        worst_gap = max(worst_gap, gap)
        samples = set_.sample(setup, rng, size=1000)
        res = vi_residual(setup, set_, pen, x, xi, beta, z, samples)
        worst_vi = max(worst_vi, -res)
    ok = worst_gap <= 1e-6 and worst_vi <= 1e-8
    _finish(1, f"prox correctness [{kind}]", ok,
            f"max |obj-grid|={worst_gap:.2e}, worst VI violation={worst_vi:.2e}")


# ---------------------------------------------------------------------------
# criterion 2: proxy strong convexity, zero violations beyond 1e-9
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", [geo.EUCLIDEAN, geo.L1])
def test_criterion_02_proxy_strong_convexity(kind, rng):
    worst = np.inf
    violations = 0
    for n in (2, 10, 50):
        setup = GeometrySetup(kind, n, np.zeros(n), 1.0)
        ball = FeasibleSet.ball(np.zeros(n), 1.0)
        X = ball.sample(setup, rng, size=10 ** 4)
        Z = ball.sample(setup, rng, size=10 ** 4)
        U, V = X - setup.center, Z - setup.center
        if kind == geo.EUCLIDEAN:
            gXa, gZa = U, V
            rhs = ((X - Z) ** 2).sum(axis=1)
        else:
            c, p = setup.prox_coef, setup.p
            gXa = c * p * np.sign(U) * np.abs(U) ** (p - 1.0)
            gZa = c * p * np.sign(V) * np.abs(V) ** (p - 1.0)
            rhs = np.abs(X - Z).sum(axis=1) ** 2
        lhs = np.einsum("ij,ij->i", gXa - gZa, X - Z)
        slack = lhs - rhs
        violations += int(np.sum(slack < -1e-9))
        worst = min(worst, float(slack.min()))
    _finish(2, f"proxy strong convexity [{kind}]", violations == 0,
            f"violations={violations}, min slack={worst:.2e}")


# ---------------------------------------------------------------------------
# criterion 3: deterministic specialization (sigma = 0)
# ---------------------------------------------------------------------------


def test_criterion_03_deterministic_specialization():
    inst = prob.make_instance(4, np.linspace(0.5, 2.0, 4),
                              set_=FeasibleSet.ball(np.zeros(4), 2.0),
                              target=0.3, seed=12)
    setup = inst.geometry
    noise = prob.calibrate_noise("none", 0.0, setup)
    ok = True
    details = []
    for N in (10, 50, 200):
        beta = sol.stepsize_constant(inst.L, 0.0, N, setup.radius, setup.capacity)
        cfg = sol.RsmdConfig(beta=beta, N=N, truncation=exact_anchor(inst),
                             x0=setup.center.astype(float))
        trace = sol.run(cfg, inst, noise, np.random.default_rng(0))
        gap = prob.objective(inst, trace.xhat) - inst.Fstar
        bound = 2.0 * beta * setup.radius ** 2 * setup.capacity / N
        eq = abs(cert.eps_hat(trace, inst.L)
                 - cert.eps_true(trace, inst, inst.L)) <= 1e-10
        ok = ok and gap <= bound and eq
        details.append(f"N={N}: gap={gap:.2e} bound={bound:.2e}")
    _finish(3, "deterministic specialization", ok, "; ".join(details))


# ---------------------------------------------------------------------------
# criterion 4: the per-trajectory inequality chain on 100 heavy-tail runs
# ---------------------------------------------------------------------------


def test_criterion_04_trajectory_inequality_chain(chain_runs, rng):
    checked = 0
    for inst, trace in chain_runs:
        _assert_trajectory_chain(inst, trace, rng, n_z=10, slack=1e-8)
        checked += 1
    _finish(4, "trajectory inequality chain incl. auxiliary bound", checked == 100,
            f"{checked} runs x 10 comparison points, zero violations")


# ---------------------------------------------------------------------------
# criterion 5: truncation residual moment bounds
# ---------------------------------------------------------------------------


def test_criterion_05_truncation_moment_bounds(chain_runs, rng):
    # (a) per-sample bound on every iteration of every run, zero violations
    violations = 0
    for inst, trace in chain_runs:
        setup = inst.geometry
        M = inst.L * setup.radius
        lam = trace.meta["lambda"]
        cap = 2.0 * M + lam
        norms = np.array([geo.dual_norm(setup, xi) for xi in trace.xis])
        violations += int(np.sum(norms > cap * (1 + 1e-9)))
    ok_a = violations == 0

    # (b), (c): Monte Carlo at 5 fixed points, 1e5 samples, 10% slack
    inst = prob.make_instance(4, np.linspace(0.5, 2.0, 4),
                              set_=FeasibleSet.ball(np.zeros(4), 3.0),
                              target=0.2, sigma=1.0, seed=3)
    setup = inst.geometry
    noise = prob.calibrate_noise("pareto", 1.0, setup, alpha=2.5)
    N, tau = 100, 2.0
    M = inst.L * setup.radius
    lam = threshold_tau(1.0, N, tau, M)
    cfg = TruncationConfig(xbar=setup.center.astype(float),
                           gbar=inst.grad_phi(setup.center),
                           upsilon_sigma=0.0, lam=lam, L=inst.L)
    bound_b = M * (1.0 / lam) ** 2 + 1.0 / lam
    bound_c = 1.0 + M * 1.0 / lam
    ok_bc = True
    for x in inst.set_.sample(setup, rng, size=5):
        g_true = inst.grad_phi(x)
        G = g_true + noise.draw(rng, size=10 ** 5)
        cap = cfg.cap(setup, x)
        dev = np.linalg.norm(G - cfg.gbar, axis=1)
        Y = np.where(dev[:, None] <= cap, G, cfg.gbar)
        xi = Y - g_true
        ok_bc &= float(np.linalg.norm(xi.mean(axis=0))) <= 1.1 * bound_b
        ok_bc &= float(np.sqrt((xi ** 2).sum(axis=1).mean())) <= 1.1 * bound_c
    _finish(5, "truncation residual moment bounds", ok_a and ok_bc,
            f"per-sample violations={violations}; MC (b),(c) at 5 points ok={ok_bc}")


# ---------------------------------------------------------------------------
# criteria 6-8: high-probability bound coverage, certificate validity, sandwich
# ---------------------------------------------------------------------------


def test_criterion_06_high_probability_coverage(coverage_experiment):
    cfg, report, coverage = coverage_experiment
    row = next(r for r in coverage.rows if r.bound == "theorem1")
    budget = 2.0 * np.exp(-2.0) + 0.05
    ok = row.frequency <= budget
    _finish(6, "theorem1 bound coverage (n=10, Pareto 2.5, N=500, 300 reps)", ok,
            f"freq={row.frequency:.4f} <= {budget:.4f}")


def test_criterion_07_certificate_validity(coverage_experiment):
    cfg, report, coverage = coverage_experiment
    row = next(r for r in coverage.rows if r.bound == "certificate")
    sand = next(r for r in coverage.rows if r.bound == "sandwich")
    budget = 2.0 * np.exp(-2.0) + 0.05
    sand_required = 1.0 - 4.0 * np.exp(-2.0) - 0.05
    ok = row.frequency <= budget and (1.0 - sand.frequency) >= sand_required
    _finish(7, "certificate validity + two-sided sandwich", ok,
            f"P(gap>Delta)={row.frequency:.4f}<= {budget:.4f}; "
            f"sandwich freq={1 - sand.frequency:.4f}>={sand_required:.4f}")


def test_criterion_08_stepsize_certificate_sandwich(coverage_experiment):
    cfg, report, coverage = coverage_experiment
    row = next(r for r in coverage.rows if r.bound == "corollary2")
    required = 1.0 - 2.0 * np.exp(-2.0) - 0.05
    ok = (1.0 - row.frequency) >= required
    _finish(8, "certificate sandwich Delta(tau,beta) >= eps(beta)", ok,
            f"freq={1 - row.frequency:.4f} >= {required:.4f}")


# ---------------------------------------------------------------------------
# criterion 9: multistage contraction
# ---------------------------------------------------------------------------


def test_criterion_09_multistage_contraction():
    raw = {
        "name": "acceptance-multistage",
        "instance": {"dim": 3, "spectrum": [1.0, 1.0, 1.0],
                     "geometry": "euclidean",
                     "set": {"kind": "ball", "center": 0.0, "radius": 4.0},
                     "penalty": {"kind": "zero"}, "target": 0.3, "seed": 9},
        "noise": {"kind": "pareto", "alpha": 2.5},
        "sigma": 0.5, "method": "multistage", "N": 800, "taus": [2.0],
        "reps": 200, "seed": 4242, "bounds": [], "multistage": {"r0": 4.0},
    }
    cfg = harness.config_from_dict(raw)
    report, coverage = harness.monte_carlo(cfg)
    row = coverage.rows[0]
    # stage count from the (deterministic) plan
    inst = cfg.build_instance()
    plan = ms.stage_schedule(inst.kappa, inst.L, 0.5, 2.0,
                             inst.geometry.capacity, 4.0, 800)
    required = 1.0 - min(1.0, 2.0 * plan.m * np.exp(-2.0)) - 0.05
    ok_stoch = (1.0 - row.frequency) >= required and plan.m >= 2

    # sigma = 0: the contraction holds deterministically
    inst0 = prob.make_instance(3, [1.0, 1.0, 1.0],
                               set_=FeasibleSet.ball(np.zeros(3), 4.0),
                               target=0.3, sigma=0.0, seed=9)
    noise0 = prob.calibrate_noise("none", 0.0, inst0.geometry)
    plan0 = ms.stage_schedule(1.0, inst0.L, 0.0, 2.0, inst0.geometry.capacity,
                              4.0, 800)
    _, log0 = ms.run_multistage(inst0, noise0, plan0, np.random.default_rng(0))
    ok_det = all(e["dist"] ** 2 <= plan0.radii[e["stage"]] ** 2 * (1 + 1e-9)
                 for e in log0) and len(log0) == plan0.m
    _finish(9, "multistage contraction (kappa=1, tau=2, 200 reps)",
            ok_stoch and ok_det,
            f"m={plan.m}, all-stage freq={1 - row.frequency:.4f} >= {required:.4f}; "
            f"deterministic stages ok={ok_det}")


# ---------------------------------------------------------------------------
# criterion 10: robustness comparison under Pareto(2.2)
# ---------------------------------------------------------------------------


def test_criterion_10_robustness_comparison():
    raw = {
        "name": "acceptance-compare",
        "instance": {"dim": 10, "spectrum": {"min": 0.5, "max": 2.0},
                     "geometry": "euclidean",
                     "set": {"kind": "ball", "center": 0.0, "radius": 5.0},
                     "penalty": {"kind": "zero"}, "target": 0.3, "seed": 42},
        "noise": {"kind": "pareto", "alpha": 2.2},
        "sigma": 2.0, "method": "rsmd", "threshold": "tau",
        "N": 300, "taus": [2.0], "reps": 300, "seed": 31415, "bounds": [],
    }
    cfg = harness.config_from_dict(raw)
    result = harness.compare_methods(cfg)
    q = {r["method"]: r for r in result["quantiles"]}
    ok = q["rsmd"]["q99"] <= q["smd_untruncated"]["q99"]
    _finish(10, "99%-quantile robustness (Pareto 2.2, 300 paired reps)", ok,
            f"rsmd q99={q['rsmd']['q99']:.4g} <= "
            f"untruncated q99={q['smd_untruncated']['q99']:.4g}")


# ---------------------------------------------------------------------------
# criterion 11: closed-form mu-minimum in the deviation allowance
# ---------------------------------------------------------------------------


def test_criterion_11_rho_closed_form():
    inst = prob.make_instance(4, np.linspace(0.5, 2.0, 4),
                              set_=FeasibleSet.ball(np.zeros(4), 3.0),
                              target=0.2, sigma=1.5, seed=6)
    setup = inst.geometry
    noise = prob.calibrate_noise("pareto", 1.5, setup, alpha=2.5)
    R, Theta = setup.radius, setup.capacity
    M = inst.L * R
    mus = np.exp(np.linspace(np.log(1e-16), np.log(1e16), 30001))
    worst = 0.0
    for s in range(100):
        tau = [1.0, 2.0, 5.0][s % 3]
        trace = _heavy_run(inst, noise, N=30, tau=tau, seed=2000 + s)
        S = trace.bregman_sum()
        A_max = max(trace.N * inst.sigma ** 2, M ** 2 * tau)
        closed = cert.rho_bar(trace, tau, R, Theta, inst.sigma, M)
        grid = 4 * R * np.sqrt(5 * Theta * A_max) \
            + 16 * R * max(inst.sigma * np.sqrt(trace.N * tau), M * tau) \
            + float(np.min(20.0 * mus * A_max + S / mus))
        worst = max(worst, abs(closed - grid) / abs(grid))
    _finish(11, "rho-bar closed form vs mu-grid (100 traces)", worst <= 1e-6,
            f"max rel diff={worst:.2e}")


# ---------------------------------------------------------------------------
# criterion 12: byte-identical determinism
# ---------------------------------------------------------------------------


def test_criterion_12_determinism(tmp_path):
    raw = json.loads(json.dumps(COVERAGE_RAW))
    raw["reps"] = 10
    raw["N"] = 50
    d1, d2 = tmp_path / "a", tmp_path / "b"
    harness.monte_carlo(harness.config_from_dict(raw), out_dir=str(d1))
    harness.monte_carlo(harness.config_from_dict(raw), out_dir=str(d2))
    same = all((d1 / f).read_bytes() == (d2 / f).read_bytes()
               for f in ("report.json", "coverage.csv", "certificates.csv"))
    _finish(12, "byte-identical reports for identical (config, seed)", same)
