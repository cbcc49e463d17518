"""Config-driven experiment runner.

Monte Carlo replication engine with per-replication splittable RNG streams
(Philox, spawn-keyed by replication index: results are independent of
scheduling), coverage statistics with Wilson intervals, method comparison
under common random numbers, and deterministic CSV/JSON persistence.

Reports never contain wall-clock data: identical (config, seed) must produce
byte-identical files.
"""

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bnd
from . import certificate as cert
from . import geometry as geo
from . import multistage as ms
from . import problems as prob
from . import solver as sol
from ._kernels import BACKEND
from .geometry import CompositePenalty, FeasibleSet, GeometryError
from .truncation import (TruncationConfig, median_anchor, threshold_tau,
                         threshold_universal)

SCHEMA_VERSION = 1
DEFAULT_COVERAGE_SLACK = 0.05

KNOWN_BOUNDS = ("corollary1", "theorem1", "theorem2", "certificate",
                "sandwich", "corollary2")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    dim: int = 10
    spectrum: list = field(default_factory=lambda: [1.0])
    geometry: str = geo.EUCLIDEAN
    set_spec: dict = field(default_factory=lambda: {"kind": "ball", "center": 0.0,
                                                    "radius": 10.0})
    penalty_spec: dict = field(default_factory=lambda: {"kind": "zero"})
    target: object = None
    instance_seed: int = 0
    noise_kind: str = "gaussian"
    noise_params: dict = field(default_factory=dict)
    sigma: float = 1.0
    method: str = "rsmd"
    threshold: str = "tau"
    anchor: str = "exact"
    N: int = 100
    taus: list = field(default_factory=lambda: [2.0])
    reps: int = 100
    seed: int = 0
    bounds: list = field(default_factory=lambda: ["theorem1"])
    coverage_slack: float = DEFAULT_COVERAGE_SLACK
    save_traces: int = 0
    multistage: dict = field(default_factory=dict)
    assert_coverage: bool = True

    def canonical(self):
        """Stable dict representation used for hashing and report echoes."""
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "instance": {
                "dim": self.dim,
                "spectrum": list(map(float, self._spectrum_list())),
                "geometry": self.geometry,
                "set": self.set_spec,
                "penalty": self.penalty_spec,
                "target": self.target,
                "seed": self.instance_seed,
            },
            "noise": {"kind": self.noise_kind, **self.noise_params},
            "sigma": self.sigma,
            "method": self.method,
            "threshold": self.threshold,
            "anchor": self.anchor,
            "N": self.N,
            "taus": list(map(float, self.taus)),
            "reps": self.reps,
            "seed": self.seed,
            "bounds": list(self.bounds),
            "coverage_slack": self.coverage_slack,
            "save_traces": self.save_traces,
            "multistage": self.multistage,
        }

    def _spectrum_list(self):
        if isinstance(self.spectrum, dict):
            return list(np.linspace(float(self.spectrum["min"]),
                                    float(self.spectrum["max"]), self.dim))
        spec = list(map(float, np.atleast_1d(self.spectrum)))
        if len(spec) == 1:
            spec = spec * self.dim
        return spec

    def config_hash(self):
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def validate(self):
        if self.method not in ("rsmd", "smd_untruncated", "multistage"):
            raise GeometryError(f"unknown method {self.method!r}")
        if self.threshold not in ("tau", "universal"):
            raise GeometryError(f"unknown threshold policy {self.threshold!r}")
        if self.anchor not in ("exact", "interior", "median"):
            raise GeometryError(f"unknown anchor policy {self.anchor!r}")
        for b in self.bounds:
            if b not in KNOWN_BOUNDS:
                raise GeometryError(f"unknown bound {b!r}")
        if self.N < 1 or self.reps < 1:
            raise GeometryError("N and reps must be >= 1")
        for tau in self.taus:
            if tau <= 0:
                raise GeometryError("tau must be positive")

    def build_set(self):
        s = self.set_spec
        kind = s.get("kind", "ball")
        if kind == "ball":
            center = s.get("center", 0.0)
            center = np.full(self.dim, float(center)) if np.isscalar(center) \
                else np.asarray(center, dtype=float)
            return FeasibleSet.ball(center, float(s["radius"]))
        if kind == "box":
            lo, hi = s["lower"], s["upper"]
            lo = np.full(self.dim, float(lo)) if np.isscalar(lo) else np.asarray(lo, float)
            hi = np.full(self.dim, float(hi)) if np.isscalar(hi) else np.asarray(hi, float)
            return FeasibleSet.box(lo, hi)
        if kind == "simplex":
            return FeasibleSet.simplex(float(s.get("scale", 1.0)), self.dim)
        raise GeometryError(f"unknown set kind {kind!r}")

    def build_penalty(self):
        p = self.penalty_spec
        kind = p.get("kind", "zero")
        if kind == "zero":
            return CompositePenalty.zero()
        if kind == "l1":
            return CompositePenalty.l1(float(p["weight"]))
        if kind == "power":
            return CompositePenalty.power(float(p["weight"]), float(p["exponent"]))
        if kind == "negentropy":
            return CompositePenalty.negentropy(float(p["weight"]))
        raise GeometryError(f"unknown penalty kind {kind!r}")

    def build_instance(self):
        target = self.target
        if target is not None and np.isscalar(target):
            target = np.full(self.dim, float(target))
        kappa = self.multistage.get("kappa") if self.multistage else None
        return prob.make_instance(
            self.dim, self._spectrum_list(), geometry_kind=self.geometry,
            set_=self.build_set(), penalty=self.build_penalty(),
            sigma=self.sigma, seed=self.instance_seed, target=target,
            kappa=kappa)

    def build_noise(self, instance):
        params = dict(self.noise_params)
        return prob.calibrate_noise(self.noise_kind, self.sigma,
                                    instance.geometry,
                                    df=float(params.get("df", 3.0)),
                                    alpha=float(params.get("alpha", 2.5)))


def load_config(path):
    """Read a JSON or TOML config file into an ExperimentConfig."""
    text = open(path, "rb").read()
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        raw = tomllib.loads(text.decode())
    else:
        raw = json.loads(text.decode())
    return config_from_dict(raw)


def config_from_dict(raw):
    raw = dict(raw)
    inst = dict(raw.get("instance", {}))
    noise = dict(raw.get("noise", {"kind": "gaussian"}))
    noise_kind = noise.pop("kind", "gaussian")
    cfg = ExperimentConfig(
        name=raw.get("name", "experiment"),
        dim=int(inst.get("dim", 10)),
        spectrum=inst.get("spectrum", [1.0]),
        geometry=inst.get("geometry", geo.EUCLIDEAN),
        set_spec=dict(inst.get("set", {"kind": "ball", "center": 0.0, "radius": 10.0})),
        penalty_spec=dict(inst.get("penalty", {"kind": "zero"})),
        target=inst.get("target"),
        instance_seed=int(inst.get("seed", 0)),
        noise_kind=noise_kind,
        noise_params=noise,
        sigma=float(raw.get("sigma", 1.0)),
        method=raw.get("method", "rsmd"),
        threshold=raw.get("threshold", "tau"),
        anchor=raw.get("anchor", "exact"),
        N=int(raw.get("N", 100)),
        taus=list(raw.get("taus", [2.0])),
        reps=int(raw.get("reps", 100)),
        seed=int(raw.get("seed", 0)),
        bounds=list(raw.get("bounds", ["theorem1"])),
        coverage_slack=float(raw.get("coverage_slack", DEFAULT_COVERAGE_SLACK)),
        save_traces=int(raw.get("save_traces", 0)),
        multistage=dict(raw.get("multistage", {})),
        assert_coverage=bool(raw.get("assert_coverage", True)),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


def wilson_interval(k, n, z=1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class CoverageRow:
    bound: str
    tau: float
    budget: float           # theoretical violation budget, e.g. 2 exp(-tau)
    violations: int
    reps: int
    frequency: float
    wilson_low: float
    wilson_high: float
    slack: float

    @property
    def passed(self):
        return self.frequency <= self.budget + self.slack


@dataclass
class CoverageReport:
    rows: list
    reps: int

    def all_passed(self):
        return all(r.passed for r in self.rows)

    def to_csv(self, path, config_hash=None):
        with open(path, "w", newline="") as fh:
            if config_hash:
                fh.write(f"# config_hash={config_hash} schema_version={SCHEMA_VERSION}\n")
            w = csv.writer(fh)
            w.writerow(["bound", "tau", "budget", "violations", "reps",
                        "frequency", "wilson_low", "wilson_high", "passed"])
            for r in self.rows:
                w.writerow([r.bound, repr(r.tau), repr(r.budget), r.violations,
                            r.reps, repr(r.frequency), repr(r.wilson_low),
                            repr(r.wilson_high), int(r.passed)])


# ---------------------------------------------------------------------------
# replication engine
# ---------------------------------------------------------------------------


def replication_rng(master_seed, rep, stream=0):
    """Independent counter-based stream for one replication."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream, rep))
    return np.random.Generator(np.random.Philox(seq))


def build_truncation(cfg, instance, lam, rng=None):
    """Truncation config under the experiment's anchor policy."""
    setup = instance.geometry
    xbar = setup.center.astype(float).copy()
    if cfg.anchor == "interior":
        return TruncationConfig(
            xbar=xbar, gbar=np.zeros(instance.dim), upsilon_sigma=0.0, lam=lam,
            L=instance.L, interior_mode=True,
            diameter=instance.set_.diameter(setup))
    if cfg.anchor == "median":
        noise = cfg.build_noise(instance)
        gbar = median_anchor(instance, noise, xbar,
                             rng if rng is not None else replication_rng(cfg.seed, 0, stream=9),
                             tau=max(cfg.taus))
        us = geo.dual_norm(setup, gbar - instance.grad_phi(xbar))
        return TruncationConfig(xbar=xbar, gbar=gbar, upsilon_sigma=us,
                                lam=lam, L=instance.L)
    return TruncationConfig(xbar=xbar, gbar=instance.grad_phi(xbar),
                            upsilon_sigma=0.0, lam=lam, L=instance.L)


def _lambda_for(cfg, instance, tau):
    M = instance.L * instance.geometry.radius
    if cfg.method == "smd_untruncated":
        return math.inf
    if cfg.threshold == "universal":
        return threshold_universal(cfg.sigma, cfg.N, M)
    return threshold_tau(cfg.sigma, cfg.N, tau, M)


def run_one_replication(cfg, instance, noise, rep):
    """Everything one replication contributes; pure in (cfg, rep)."""
    setup = instance.geometry
    R, Theta = setup.radius, setup.capacity
    L, sigma, N = instance.L, cfg.sigma, cfg.N
    M = L * R
    beta_bar = sol.stepsize_constant(L, sigma, N, R, Theta)
    out = {"rep": rep}

    if cfg.method == "multistage":
        msc = cfg.multistage
        kappa = float(msc.get("kappa", instance.kappa))
        tau = float(cfg.taus[0])
        r0 = float(msc.get("r0", instance.set_.circumradius(setup, setup.center)))
        plan = ms.stage_schedule(kappa, L, sigma, tau, Theta, r0, N,
                                 C1=float(msc.get("C1", ms.DEFAULT_C1)),
                                 C2=float(msc.get("C2", ms.DEFAULT_C2)))
        rng = replication_rng(cfg.seed, rep)
        y, log = run_multistage_once(cfg, instance, noise, plan, rng)
        out["gap"] = float(prob.objective(instance, y) - instance.Fstar)
        out["stages"] = [{k: v for k, v in e.items() if k != "trace"} for e in log]
        out["radii"] = list(plan.radii)
        return out

    taus = [float(t) for t in cfg.taus]
    lam0 = _lambda_for(cfg, instance, taus[0])
    truncation = build_truncation(cfg, instance,
                                  lam0 if math.isfinite(lam0) else 1.0)
    per_tau = {}
    for tau in taus:
        lam = _lambda_for(cfg, instance, tau)
        trunc = truncation if lam == truncation.lam else TruncationConfig(
            xbar=truncation.xbar, gbar=truncation.gbar,
            upsilon_sigma=truncation.upsilon_sigma,
            lam=lam if math.isfinite(lam) else 1e300, L=truncation.L,
            interior_mode=truncation.interior_mode,
            diameter=truncation.diameter)
        if cfg.method == "smd_untruncated":
            trunc = TruncationConfig(
                xbar=truncation.xbar, gbar=truncation.gbar,
                upsilon_sigma=truncation.upsilon_sigma, lam=1e300,
                L=truncation.L, interior_mode=truncation.interior_mode,
                diameter=truncation.diameter)
        run_cfg = sol.RsmdConfig(beta=beta_bar, N=N, truncation=trunc,
                                 x0=setup.center.astype(float).copy())
        rng = replication_rng(cfg.seed, rep)
        trace = sol.run(run_cfg, instance, noise, rng)
        policy = "untruncated" if cfg.method == "smd_untruncated" else cfg.threshold
        trace.meta.update({"threshold_policy": policy, "tau": tau,
                           "lambda": trunc.lam, "method": cfg.method})
        gap = float(prob.objective(instance, trace.xhat) - instance.Fstar)
        row = {"gap": gap, "clip_count": int(np.sum(trace.clipped))}
        if "certificate" in cfg.bounds or "sandwich" in cfg.bounds \
                or "corollary2" in cfg.bounds:
            c = cert.delta(trace, tau, L, R, Theta, sigma, M, L=L)
            row["eps_hat_L"] = c.eps_hat
            row["rho_bar"] = c.rho_bar
            row["delta_L"] = c.delta
            row["eps_true_L"] = cert.eps_true(trace, instance, L)
            if "corollary2" in cfg.bounds:
                cb = cert.delta(trace, tau, beta_bar, R, Theta, sigma, M, L=L)
                row["delta_beta"] = cb.delta
                row["eps_true_beta"] = cert.eps_true(trace, instance, beta_bar)
        per_tau[tau] = row
    out["per_tau"] = per_tau
    out["gap"] = per_tau[taus[0]]["gap"]
    return out


def run_multistage_once(cfg, instance, noise, plan, rng):
    truncation = build_truncation(cfg, instance, 1.0)
    return ms.run_multistage(instance, noise, plan, rng,
                             x0=instance.geometry.center.astype(float).copy(),
                             truncation=truncation)


def _safe_replication(cfg, instance, noise, rep):
    """Replication failures are recorded, not fatal."""
    try:
        return run_one_replication(cfg, instance, noise, rep)
    except Exception as exc:  # noqa: BLE001 - deliberate catch-all per contract
        return {"rep": rep, "error": f"{type(exc).__name__}: {exc}"}


def _worker(args):
    cfg_dict, rep = args
    cfg = config_from_dict(cfg_dict)
    instance = cfg.build_instance()
    noise = cfg.build_noise(instance)
    return _safe_replication(cfg, instance, noise, rep)


def monte_carlo(cfg, out_dir=None, threads=1):
    """Run the replications, aggregate coverage, optionally persist outputs.

    Returns (report dict, CoverageReport). Deterministic given (cfg, seed):
    per-replication streams are spawn-keyed by index, aggregation is
    order-independent, and reports contain no wall-clock data.
    """
    cfg.validate()
    instance = cfg.build_instance()
    noise = cfg.build_noise(instance)

    if threads > 1:
        canonical = cfg.canonical()
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_worker, [(canonical, r) for r in range(cfg.reps)],
                                    chunksize=max(1, cfg.reps // (4 * threads))))
    else:
        results = [_safe_replication(cfg, instance, noise, r)
                   for r in range(cfg.reps)]
    results.sort(key=lambda r: r["rep"])
    failures = [r for r in results if "error" in r]
    results = [r for r in results if "error" not in r]
    if not results:
        raise GeometryError("every replication failed: "
                            + (failures[0]["error"] if failures else "unknown"))

    setup = instance.geometry
    R, Theta = setup.radius, setup.capacity
    L, sigma, N = instance.L, cfg.sigma, cfg.N
    gaps = np.array([r["gap"] for r in results])
    rows = []

    n_fail = len(failures)
    if cfg.method == "multistage":
        tau = float(cfg.taus[0])
        m_max = max((len(r["stages"]) for r in results), default=0)
        ok = 0
        for r in results:
            radii = r["radii"]
            good = all(e["dist"] ** 2 <= radii[e["stage"]] ** 2 * (1 + 1e-9)
                       for e in r["stages"] if "dist" in e)
            ok += bool(good and not any("aborted" in e for e in r["stages"]))
        viol = cfg.reps - ok  # failed replications count as violations
        budget = min(1.0, 2.0 * m_max * math.exp(-tau))
        lo, hi = wilson_interval(viol, cfg.reps)
        rows.append(CoverageRow("multistage_contraction", tau, budget, viol,
                                cfg.reps, viol / cfg.reps, lo, hi,
                                cfg.coverage_slack))
    else:
        for tau in [float(t) for t in cfg.taus]:
            budget = 2.0 * math.exp(-tau)
            for name in cfg.bounds:
                if name == "corollary1":
                    val = bnd.bound_corollary1(L, R, Theta, sigma, N)
                    mean_gap = float(np.mean(gaps))
                    viol = int(mean_gap > val)
                    lo, hi = wilson_interval(viol, 1)
                    rows.append(CoverageRow("corollary1_mean", tau, 0.0, viol, 1,
                                            float(viol), lo, hi, 0.0))
                    continue
                if name == "theorem1":
                    val = bnd.bound_theorem1(L, R, Theta, sigma, N, tau)
                    viol = int(np.sum([r["per_tau"][tau]["gap"] > val
                                       for r in results]))
                    bgt = budget
                elif name == "theorem2":
                    val = bnd.bound_theorem2(L, R, Theta, sigma, N, tau)
                    viol = int(np.sum([r["per_tau"][tau]["gap"] > val
                                       for r in results]))
                    bgt = budget
                elif name == "certificate":
                    viol = int(np.sum([r["per_tau"][tau]["gap"]
                                       > r["per_tau"][tau]["delta_L"]
                                       for r in results]))
                    bgt = budget
                elif name == "sandwich":
                    viol = int(np.sum([
                        abs(r["per_tau"][tau]["eps_true_L"]
                            - r["per_tau"][tau]["eps_hat_L"])
                        > r["per_tau"][tau]["rho_bar"] / N
                        for r in results]))
                    bgt = min(1.0, 4.0 * math.exp(-tau))
                elif name == "corollary2":
                    viol = int(np.sum([r["per_tau"][tau]["eps_true_beta"]
                                       > r["per_tau"][tau]["delta_beta"]
                                       for r in results]))
                    bgt = budget
                else:
                    continue
                viol += n_fail  # failed replications count as violations
                lo, hi = wilson_interval(viol, cfg.reps)
                rows.append(CoverageRow(name, tau, bgt, viol, cfg.reps,
                                        viol / cfg.reps, lo, hi,
                                        cfg.coverage_slack))

    coverage = CoverageReport(rows=rows, reps=cfg.reps)
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.canonical(),
        "config_hash": cfg.config_hash(),
        "backend": BACKEND,
        "instance": {
            "L": L, "R": R, "Theta": Theta, "Fstar": instance.Fstar,
            "kappa": instance.kappa,
        },
        "gap_quantiles": {
            "q50": float(np.quantile(gaps, 0.5)),
            "q90": float(np.quantile(gaps, 0.9)),
            "q99": float(np.quantile(gaps, 0.99)),
            "mean": float(np.mean(gaps)),
            "max": float(np.max(gaps)),
        },
        "coverage": [vars(r) | {"passed": r.passed} for r in rows],
        "failures": failures,
        "all_passed": coverage.all_passed(),
    }
    if out_dir is not None:
        _persist(cfg, report, coverage, results, instance, noise, out_dir)
    return report, coverage


def _persist(cfg, report, coverage, results, instance, noise, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    chash = cfg.config_hash()
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    coverage.to_csv(os.path.join(out_dir, "coverage.csv"), config_hash=chash)
    if cfg.method != "multistage" and any(
            b in cfg.bounds for b in ("certificate", "sandwich", "corollary2")):
        with open(os.path.join(out_dir, "certificates.csv"), "w", newline="") as fh:
            fh.write(f"# config_hash={chash} schema_version={SCHEMA_VERSION}\n")
            w = csv.writer(fh)
            w.writerow(["rep", "tau", "t", "eps_hat", "rho_over_N", "delta",
                        "gap", "violated"])
            for r in results:
                for tau, row in r["per_tau"].items():
                    if "delta_L" not in row:
                        continue
                    w.writerow([r["rep"], repr(tau), repr(instance.L),
                                repr(row["eps_hat_L"]),
                                repr(row["rho_bar"] / cfg.N),
                                repr(row["delta_L"]), repr(row["gap"]),
                                int(row["gap"] > row["delta_L"])])
    if cfg.save_traces > 0 and cfg.method == "multistage":
        sdir = os.path.join(out_dir, "stages")
        os.makedirs(sdir, exist_ok=True)
        for rep in range(min(cfg.save_traces, len(results))):
            entries = results[rep].get("stages", [])
            ms.export_stage_log_csv(entries,
                                    os.path.join(sdir, f"rep{rep:04d}.csv"),
                                    header_comment=f"config_hash={chash}")
    elif cfg.save_traces > 0:
        tdir = os.path.join(out_dir, "traces")
        os.makedirs(tdir, exist_ok=True)
        for rep in range(min(cfg.save_traces, cfg.reps)):
            tau = float(cfg.taus[0])
            lam = _lambda_for(cfg, instance, tau)
            trunc = build_truncation(cfg, instance,
                                     lam if math.isfinite(lam) else 1e300)
            run_cfg = sol.RsmdConfig(
                beta=sol.stepsize_constant(instance.L, cfg.sigma, cfg.N,
                                           instance.geometry.radius,
                                           instance.geometry.capacity),
                N=cfg.N, truncation=trunc,
                x0=instance.geometry.center.astype(float).copy())
            trace = sol.run(run_cfg, instance, noise,
                            replication_rng(cfg.seed, rep))
            sol.export_trace_csv(trace, os.path.join(tdir, f"rep{rep:04d}.csv"),
                                 header_comment=f"config_hash={chash}")


# ---------------------------------------------------------------------------
# method comparison (common random numbers)
# ---------------------------------------------------------------------------


def compare_methods(cfg, out_dir=None, threads=1):
    """Paired gap quantiles: truncated vs untruncated on shared noise seeds.

    Each replication index seeds one noise stream; both methods consume the
    identical pre-drawn noise, cutting comparison variance.
    """
    cfg.validate()
    instance = cfg.build_instance()
    noise = cfg.build_noise(instance)
    methods = ("rsmd", "smd_untruncated")
    gaps = {m: np.empty(cfg.reps) for m in methods}
    for rep in range(cfg.reps):
        for m in methods:
            mcfg = _with_method(cfg, m)
            res = run_one_replication(mcfg, instance, noise, rep)
            gaps[m][rep] = res["gap"]
    table = []
    for m in methods:
        g = gaps[m]
        table.append({
            "method": m,
            "q50": float(np.quantile(g, 0.5)),
            "q90": float(np.quantile(g, 0.9)),
            "q99": float(np.quantile(g, 0.99)),
            "mean": float(np.mean(g)),
            "max": float(np.max(g)),
        })
    result = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.canonical(),
        "config_hash": cfg.config_hash(),
        "backend": BACKEND,
        "quantiles": table,
        "robust_99_ordered": table[0]["q99"] <= table[1]["q99"],
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "compare.json"), "w") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(out_dir, "compare.csv"), "w", newline="") as fh:
            fh.write(f"# config_hash={cfg.config_hash()} "
                     f"schema_version={SCHEMA_VERSION}\n")
            w = csv.writer(fh)
            w.writerow(["method", "q50", "q90", "q99", "mean", "max"])
            for row in table:
                w.writerow([row["method"]] + [repr(row[k])
                                              for k in ("q50", "q90", "q99",
                                                        "mean", "max")])
    return result


def _with_method(cfg, method):
    import copy
    c = copy.deepcopy(cfg)
    c.method = method
    c.bounds = []
    return c
