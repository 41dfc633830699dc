"""Experiment harness: config ingestion, seeded replication, verification suites.

A JSON experiment config describes one scenario (iid training data, shifted
source data, contaminated data, or a fixed design), an instance, an estimator
and an optimizer.  `run_scenario` executes it over the sample-budget grid with
per-replication derived seeds, records exact final excess risks, aggregates
them with standard errors, attaches the closed-form bound report for each
budget, and fits the log-log rate.  Everything is deterministic given (config,
seed), independent of the parallelism degree (cap it with MMRISK_THREADS).

`verify_suite` packages the named acceptance/property suites as pass/fail
reports with measured values against their thresholds.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bnd
from . import estimators as est
from . import oracles as orc
from . import optimizer as opt
from . import problems as prb

SCHEMA = "mmrisk-experiment/1"

EXCESS_FLOOR = -1e-12

SUITES = (
    "divergences",
    "schedules",
    "estimators",
    "sandwich-sl",
    "sandwich-tl",
    "robust",
    "fixed-data",
    "pl",
    "federated",
)

_TOP_KEYS = {
    "schema",
    "scenario",
    "target",
    "source",
    "outliers",
    "eta",
    "function_class",
    "field",
    "mu",
    "L",
    "n_grid",
    "replications",
    "estimator",
    "optimizer",
    "seed",
    "design",
    "out_dir",
}


class ConfigError(ValueError):
    """An experiment config failed validation; the message names the field."""


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    target: prb.Distribution
    function_class: prb.FunctionClassSpec
    mu: float
    L: float
    field_spec: dict
    n_grid: tuple[int, ...]
    replications: int
    estimator_spec: dict
    optimizer_spec: dict
    seed: int
    source: prb.Distribution | None = None
    outliers: prb.Distribution | None = None
    eta: float | None = None
    design: np.ndarray | None = None
    out_dir: str | None = None


def _fail(fieldname: str, msg: str):
    raise ConfigError(f"config field {fieldname!r}: {msg}")


def config_from_obj(obj: dict) -> ExperimentConfig:
    """Validate a JSON config object (unknown keys rejected) and build the config."""
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if obj.get("schema") != SCHEMA:
        _fail("schema", f"expected {SCHEMA!r}, got {obj.get('schema')!r}")
    scenario = obj.get("scenario")
    if scenario not in (orc.SL, orc.TL, orc.RL, orc.FD):
        _fail("scenario", f"must be one of SL, TL, RL, FD; got {scenario!r}")
    for key in ("target", "function_class", "field", "mu", "L", "estimator",
                "optimizer", "seed"):
        if key not in obj:
            _fail(key, "is required")
    try:
        target = prb.distribution_from_obj(obj["target"])
    except Exception as exc:
        _fail("target", str(exc))
    fc = obj["function_class"]
    try:
        spec = prb.FunctionClassSpec(fc["kind"], float(fc["bound"]))
    except Exception as exc:
        _fail("function_class", str(exc))
    mu, L = float(obj["mu"]), float(obj["L"])
    if mu <= 0 or L < mu:
        _fail("mu/L", "need 0 < mu <= L")

    source = outliers = None
    eta = None
    design = None
    if scenario == orc.TL:
        if "source" not in obj:
            _fail("source", "is required for the TL scenario")
        source = prb.distribution_from_obj(obj["source"])
    if scenario == orc.RL:
        if "outliers" not in obj or "eta" not in obj:
            _fail("outliers/eta", "are required for the RL scenario")
        outliers = prb.distribution_from_obj(obj["outliers"])
        eta = float(obj["eta"])
        if not 0.0 <= eta <= 1.0:
            _fail("eta", "must lie in [0, 1]")
    if scenario == orc.FD:
        if "design" not in obj:
            _fail("design", "is required for the FD scenario")
        design = np.atleast_2d(np.asarray(obj["design"]["points"], dtype=float))

    if scenario == orc.FD:
        n_grid = tuple(int(v) for v in obj.get("n_grid", [design.shape[0]]))
    else:
        if "n_grid" not in obj:
            _fail("n_grid", "is required")
        n_grid = tuple(int(v) for v in obj["n_grid"])
        if len(n_grid) == 0 or any(v < 3 for v in n_grid):
            _fail("n_grid", "entries must all be >= 3")
        if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
            _fail("n_grid", "must be strictly increasing")
    replications = int(obj.get("replications", 1))
    if replications < 1:
        _fail("replications", "must be >= 1")
    return ExperimentConfig(
        scenario=scenario,
        target=target,
        function_class=spec,
        mu=mu,
        L=L,
        field_spec=dict(obj["field"]),
        n_grid=n_grid,
        replications=replications,
        estimator_spec=dict(obj["estimator"]),
        optimizer_spec=dict(obj["optimizer"]),
        seed=int(obj["seed"]),
        source=source,
        outliers=outliers,
        eta=eta,
        design=design,
        out_dir=obj.get("out_dir"),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_obj(json.load(fh))


# ---------------------------------------------------------------------------
# Runtime pieces built from a config
# ---------------------------------------------------------------------------

def _build_instance(cfg: ExperimentConfig) -> prb.QuadraticInstance:
    spec = cfg.field_spec
    kind = spec.get("kind")
    B = cfg.function_class.bound
    if kind == "hard_bnd":
        if not isinstance(cfg.target, prb.DiscreteDistribution):
            _fail("field", "hard_bnd needs a discrete target")
        return prb.hard_instance_bnd(
            B, cfg.mu, cfg.target, spec.get("split", []), L=cfg.L,
            dim=int(spec.get("dim", 1)),
        )
    if kind == "identity":
        g = prb.identity_field(cfg.target.dim, scale=float(spec.get("scale", 1.0)))
        return prb.QuadraticInstance(g, cfg.mu, cfg.L)
    if kind == "constant":
        g = prb.constant_field(np.asarray(spec.get("value"), dtype=float))
        return prb.QuadraticInstance(g, cfg.mu, cfg.L)
    _fail("field", f"unknown field kind {kind!r}")


def _build_estimator(cfg: ExperimentConfig, inst: prb.QuadraticInstance) -> est.Estimator:
    spec = dict(cfg.estimator_spec)
    kind = spec.pop("kind", None)
    B = cfg.function_class.bound
    if kind in ("SampleMean", "TLMean"):
        return est.Estimator(kind=kind)
    if kind == "RobustFilterMean":
        cv = None
        if spec.pop("known_variance", False):
            cv = B**2 * cfg.target.variance
        fc = est.FilterConfig(**spec.pop("filter", {}))
        return est.Estimator(
            kind=kind, eta=cfg.eta, filter_cfg=fc, clean_variance=cv
        )
    if kind == "FDBnd":
        masses, total = est.design_masses(cfg.target, cfg.design)
        return est.Estimator(kind=kind, masses=tuple(masses), total_mass=total)
    if kind == "FDLip":
        vor = est.voronoi_masses(cfg.target, cfg.design)
        return est.Estimator(kind=kind, voronoi=tuple(vor))
    if kind == "BayesTwoPoint":
        return est.Estimator(kind=kind, prior=tuple(spec.pop("prior")), bound=B)
    _fail("estimator", f"kind {kind!r} is not runnable in this scenario harness")


def _draw_sample(cfg: ExperimentConfig, n: int, seed: orc.Seed) -> orc.OracleSample:
    if cfg.scenario == orc.SL:
        return orc.draw_sl(cfg.target, n, seed)
    if cfg.scenario == orc.TL:
        return orc.draw_tl(cfg.source, n, seed)
    if cfg.scenario == orc.RL:
        return orc.draw_rl(cfg.target, cfg.outliers, cfg.eta, n, seed)
    if cfg.scenario == orc.FD:
        return orc.fixed_data(cfg.design)
    raise ValueError(f"unsupported scenario {cfg.scenario!r}")


def _run_one(cfg, inst, estimator, n: int, rep: int) -> tuple[float, int, int]:
    key = orc.derive_key(cfg.seed, n, rep)
    sample = _draw_sample(cfg, n, orc.Seed(key, orc.ORACLE_STREAM))
    ospec = cfg.optimizer_spec
    schedule = ospec.get("schedule", "exponential")
    if schedule == "single":
        traj = opt.estimator_gd(
            inst, cfg.target, sample, estimator, int(ospec.get("T", 0))
        )
    else:
        ocfg = opt.OptimizerConfig(
            mu=cfg.mu,
            L=cfg.L,
            n=n,
            schedule=schedule,
            epsilon=float(ospec.get("epsilon", 1e-8)),
            a=float(ospec.get("a", 1.0)),
            noise_norm_sq=ospec.get("noise_norm_sq"),
        )
        traj = opt.minibatch_gd_warmup(inst, cfg.target, sample, estimator, ocfg)
    return traj.final_excess, traj.samples_used, traj.warmup_steps


def _worker_block(cfg: ExperimentConfig, n: int, lo: int, hi: int) -> np.ndarray:
    inst = _build_instance(cfg)
    estimator = _build_estimator(cfg, inst)
    out = np.empty((hi - lo, 3))
    for i, rep in enumerate(range(lo, hi)):
        out[i] = _run_one(cfg, inst, estimator, n, rep)
    return out


def _thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("MMRISK_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    scenario: str
    class_kind: str
    n_values: tuple[int, ...]
    excess: dict[int, np.ndarray] = field(default_factory=dict)
    samples_used: dict[int, np.ndarray] = field(default_factory=dict)
    warmup_steps: dict[int, np.ndarray] = field(default_factory=dict)
    bound_reports: dict[int, bnd.BoundReport | None] = field(default_factory=dict)
    rate: tuple[float, float, float] | None = None

    def mean(self, n: int) -> float:
        return float(self.excess[n].mean())

    def stderr(self, n: int) -> float:
        e = self.excess[n]
        if e.size < 2:
            return 0.0
        return float(e.std(ddof=1) / math.sqrt(e.size))


def _bound_inputs(cfg: ExperimentConfig, n: int) -> tuple[str, dict] | None:
    kind = cfg.function_class.kind
    key = f"{cfg.scenario}-{kind}"
    base = {"B": cfg.function_class.bound, "mu": cfg.mu, "kappa": cfg.L / cfg.mu, "n": n}
    if key == "SL-Bnd":
        return key, base
    if key == "TL-Bnd":
        tv = bnd.divergences(cfg.target, cfg.source).tv
        return key, {**base, "tv": tv}
    if key == "RL-Bnd":
        return key, {**base, "eta": cfg.eta}
    if key == "RL-Lip":
        return key, {**base, "eta": cfg.eta, "var_xi": cfg.target.variance}
    if key == "FD-Bnd":
        _, total = est.design_masses(cfg.target, cfg.design)
        return key, {**base, "design_mass": total}
    if key == "FD-Lip":
        if not isinstance(cfg.target, prb.DiscreteDistribution):
            return None
        dist = np.linalg.norm(
            cfg.target.atoms[:, None, :] - cfg.design[None, :, :], axis=2
        ).min(axis=1)
        return key, {**base, "mean_min_dist": float(cfg.target.weights @ dist)}
    return None


def run_scenario(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute the configured experiment over its budget grid.

    Replication r at budget n derives its oracle seed from (seed, n, r), so
    results are reproducible and independent of execution order; the worker
    pool size (MMRISK_THREADS) changes only the wall time.
    """
    result = ExperimentResult(
        scenario=cfg.scenario,
        class_kind=cfg.function_class.kind,
        n_values=cfg.n_grid,
    )
    cap = _thread_cap()
    R = cfg.replications
    for n in cfg.n_grid:
        if cap > 1 and R >= 2 * cap:
            chunk = math.ceil(R / cap)
            blocks = [(lo, min(lo + chunk, R)) for lo in range(0, R, chunk)]
            with ProcessPoolExecutor(max_workers=cap) as pool:
                parts = list(
                    pool.map(_worker_block, *zip(*[(cfg, n, lo, hi) for lo, hi in blocks]))
                )
            rows = np.vstack(parts)
        else:
            rows = _worker_block(cfg, n, 0, R)
        result.excess[n] = rows[:, 0]
        result.samples_used[n] = rows[:, 1].astype(int)
        result.warmup_steps[n] = rows[:, 2].astype(int)
        if result.mean(n) < EXCESS_FLOOR:
            raise AssertionError(f"mean excess risk {result.mean(n)} below zero at n={n}")
        spec = _bound_inputs(cfg, n)
        result.bound_reports[n] = (
            bnd.table1_bounds(spec[0], spec[1]) if spec is not None else None
        )
    try:
        result.rate = fit_rate(result)
    except ValueError:
        result.rate = None
    if cfg.out_dir:
        write_outputs(cfg, result, cfg.out_dir)
    return result


# ---------------------------------------------------------------------------
# Rate fitting and output emission
# ---------------------------------------------------------------------------

def fit_loglog(ns, means) -> tuple[float, float, float]:
    """Ordinary least squares of ln(mean) on ln(n): (slope, intercept, r^2).

    Nonpositive means are excluded; fewer than 4 surviving points is an error.
    """
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    mask = means > 0
    if mask.sum() < 4:
        raise ValueError("need at least 4 grid points with positive mean excess")
    x, y = np.log(ns[mask]), np.log(means[mask])
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot < 1e-300 else 1.0 - float((resid**2).sum()) / ss_tot
    return slope, intercept, r2


def fit_rate(result: ExperimentResult) -> tuple[float, float, float]:
    ns = list(result.n_values)
    return fit_loglog(ns, [result.mean(n) for n in ns])


CSV_COLUMNS = ("scenario", "n", "rep", "excess_risk", "samples_used", "warmup_steps")


def result_to_csv(result: ExperimentResult) -> str:
    """Fixed-column CSV, rows ordered by (n, replication); byte-deterministic."""
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for n in result.n_values:
        e, s, w = result.excess[n], result.samples_used[n], result.warmup_steps[n]
        for rep in range(e.size):
            buf.write(
                f"{result.scenario},{n},{rep},{e[rep]!r},{int(s[rep])},{int(w[rep])}\n"
            )
    return buf.getvalue()


def result_summary(result: ExperimentResult) -> dict:
    per_n = {}
    for n in result.n_values:
        report = result.bound_reports[n]
        per_n[str(n)] = {
            "mean_excess": result.mean(n),
            "stderr": result.stderr(n),
            "lower_bound": None if report is None else report.lower,
            "upper_bound": None if report is None else report.upper,
        }
    rate = result.rate
    return {
        "schema": "mmrisk-result/1",
        "scenario": result.scenario,
        "class": result.class_kind,
        "per_n": per_n,
        "rate": None
        if rate is None
        else {"slope": rate[0], "intercept": rate[1], "r2": rate[2]},
    }


def write_outputs(cfg: ExperimentConfig, result: ExperimentResult, out_dir: str | Path):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(result_to_csv(result))
    (out / "summary.json").write_text(json.dumps(result_summary(result), indent=2) + "\n")


def fit_rate_from_csv(path: str | Path) -> tuple[float, float, float]:
    by_n: dict[int, list[float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            by_n.setdefault(int(row["n"]), []).append(float(row["excess_risk"]))
    ns = sorted(by_n)
    return fit_loglog(ns, [float(np.mean(by_n[n])) for n in ns])


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------

def _check(name: str, value, lo=None, hi=None) -> dict:
    ok = True
    if lo is not None:
        ok = ok and value >= lo
    if hi is not None:
        ok = ok and value <= hi
    return {"name": name, "value": value, "lo": lo, "hi": hi, "passed": bool(ok)}


def _report(name: str, seed: int, checks: list[dict], t0: float) -> dict:
    return {
        "suite": name,
        "seed": seed,
        "passed": all(c["passed"] for c in checks),
        "runtime_s": round(time.perf_counter() - t0, 3),
        "checks": checks,
    }


def _random_discrete_pair(rng) -> tuple[prb.DiscreteDistribution, prb.DiscreteDistribution]:
    k = int(rng.integers(2, 17))
    atoms = rng.normal(size=(k, 2))
    def draw_weights():
        w = rng.random(k)
        if rng.random() < 0.4:
            dead = rng.random(k) < 0.35
            if dead.all():
                dead[int(rng.integers(k))] = False
            w = np.where(dead, 0.0, w)
        return w / w.sum()
    return (
        prb.DiscreteDistribution(atoms, draw_weights()),
        prb.DiscreteDistribution(atoms, draw_weights()),
    )


def _suite_divergences(seed: int) -> list[dict]:
    rng = np.random.default_rng(orc.derive_key(seed, 1))
    worst_tv_gap = -math.inf
    worst_kl_gap = -math.inf
    symmetric = True
    for _ in range(1000):
        P, Q = _random_discrete_pair(rng)
        d = bnd.divergences(P, Q)
        worst_tv_gap = max(worst_tv_gap, d.lecam - d.tv)
        if math.isfinite(d.kl):
            worst_kl_gap = max(worst_kl_gap, d.lecam - d.kl)
        symmetric = symmetric and (d.lecam == bnd.divergences(Q, P).lecam)
    return [
        _check("lecam_minus_tv_max", worst_tv_gap, hi=1e-12),
        _check("lecam_minus_kl_max", worst_kl_gap, hi=1e-12),
        _check("lecam_symmetric", 1.0 if symmetric else 0.0, lo=1.0),
    ]


def _suite_schedules(seed: int) -> list[dict]:
    worst_slack = math.inf
    monotone = True
    for n in range(3, 2049):
        for kappa in (1.0, 1.5, 2.0, 4.0, 16.0):
            sched = opt.batch_schedule(n, kappa)
            worst_slack = min(worst_slack, (n - 1) - int(sched.sum()))
            monotone = monotone and bool(np.all(np.diff(sched) >= 0))
    example = opt.batch_schedule(9, 4.0)
    return [
        _check("min_budget_slack", worst_slack, lo=0),
        _check("nondecreasing_batches", 1.0 if monotone else 0.0, lo=1.0),
        _check(
            "n9_kappa4_schedule_is_1111",
            1.0 if example.tolist() == [1, 1, 1, 1] else 0.0,
            lo=1.0,
        ),
    ]


def _bayes_mc_risk(a: float, b: float, n: int, B: float, rng, reps: int = 10**5) -> float:
    p = rng.beta(a, b, size=reps)
    k = rng.binomial(n, p)
    estimate = (2.0 * (k + a) / (n + a + b) - 1.0) * B
    truth = (2.0 * p - 1.0) * B
    return float(np.mean((estimate - truth) ** 2))


def _suite_estimators(seed: int) -> list[dict]:
    rng = np.random.default_rng(orc.derive_key(seed, 2))
    checks = []
    B = 1.0
    for a, b, n in ((1.0, 1.0, 4), (2.0, 0.5, 16), (math.sqrt(64) / 2, math.sqrt(64) / 2, 64)):
        closed = bnd.bayes_risk_closed_form(a, b, n, B)
        mc = _bayes_mc_risk(a, b, n, B, rng)
        checks.append(
            _check(f"bayes_mc_ratio_a{a:g}_b{b:g}_n{n}", mc / closed, lo=0.97, hi=1.03)
        )
    gap = max(
        abs(
            bnd.bayes_risk_closed_form(math.sqrt(n) / 2, math.sqrt(n) / 2, n, B)
            - B**2 / (1.0 + math.sqrt(n)) ** 2
        )
        for n in (1, 4, 16, 64, 256)
    )
    checks.append(_check("closed_form_sqrtn_identity", gap, hi=1e-12))
    return checks


def _sl_experiment_config(seed: int, n_grid, replications: int) -> ExperimentConfig:
    return config_from_obj(
        {
            "schema": SCHEMA,
            "scenario": "SL",
            "target": {"atoms": [[0.0], [1.0]], "weights": [0.5, 0.5]},
            "function_class": {"kind": "Bnd", "bound": 1.0},
            "field": {"kind": "hard_bnd", "split": [0]},
            "mu": 1.0,
            "L": 4.0,
            "n_grid": list(n_grid),
            "replications": replications,
            "estimator": {"kind": "SampleMean"},
            "optimizer": {"schedule": "exponential", "epsilon": 1e-8},
            "seed": seed,
        }
    )


def _suite_sandwich_sl(seed: int) -> list[dict]:
    n_grid = (16, 32, 64, 128, 256, 512, 1024)
    B, mu, kappa = 1.0, 1.0, 4.0
    t0 = time.perf_counter()
    cfg = _sl_experiment_config(seed, n_grid, replications=2000)
    result = run_scenario(cfg)
    elapsed = time.perf_counter() - t0
    checks = []
    for n in n_grid:
        upper = 11.0 * kappa * B**2 / (mu * n)
        checks.append(
            _check(
                f"upper_sandwich_n{n}",
                result.mean(n) + 2.0 * result.stderr(n),
                hi=upper,
            )
        )
    rng = np.random.default_rng(orc.derive_key(seed, 3))
    for n in n_grid:
        a = math.sqrt(n) / 2.0
        closed = bnd.bayes_risk_closed_form(a, a, n, B)
        mc = _bayes_mc_risk(a, a, n, B, rng)
        checks.append(_check(f"bayes_floor_mc_ratio_n{n}", mc / closed, lo=0.97, hi=1.03))
    slope, _, r2 = result.rate
    checks.append(_check("rate_slope", slope, lo=-1.15, hi=-0.85))
    checks.append(_check("rate_r2", r2, lo=0.98))
    checks.append(_check("runtime_seconds", elapsed, hi=120.0))
    return checks


def _suite_sandwich_tl(seed: int) -> list[dict]:
    B, mu, kappa, tv = 1.0, 1.0, 4.0, 0.3
    cfg = config_from_obj(
        {
            "schema": SCHEMA,
            "scenario": "TL",
            "target": {"atoms": [[0.0], [1.0]], "weights": [0.8, 0.2]},
            "source": {"atoms": [[0.0], [1.0]], "weights": [0.5, 0.5]},
            "function_class": {"kind": "Bnd", "bound": 1.0},
            "field": {"kind": "hard_bnd", "split": [0]},
            "mu": 1.0,
            "L": 4.0,
            "n_grid": [64, 256, 1024],
            "replications": 500,
            "estimator": {"kind": "SampleMean"},
            "optimizer": {"schedule": "exponential", "epsilon": 1e-8},
            "seed": seed,
        }
    )
    exact_tv = bnd.divergences(cfg.target, cfg.source).tv
    result = run_scenario(cfg)
    lower = (2.0 - math.log(3.0)) / 32.0 * tv**2 * B**2 / mu * 0.9
    checks = [_check("exact_tv", abs(exact_tv - tv), hi=1e-15)]
    for n in cfg.n_grid:
        upper = bnd.excess_upper_envelope(
            4.0 * B**2 * tv**2, B**2, n, mu, kappa, 2.0 * B**2 / mu
        ) * 1.05
        checks.append(
            _check(f"upper_n{n}", result.mean(n) + 2.0 * result.stderr(n), hi=upper)
        )
        checks.append(
            _check(f"lower_n{n}", result.mean(n) - 2.0 * result.stderr(n), lo=lower)
        )
    ratio = result.mean(1024) / result.mean(256)
    checks.append(_check("plateau_ratio_1024_vs_256", ratio, lo=0.7, hi=1.3))
    return checks


def _suite_robust(seed: int) -> list[dict]:
    d, n, R = 4, 500, 200
    B = 1.0
    target = prb.GaussianDistribution(np.zeros(d), np.eye(d))
    outliers = prb.DiscreteDistribution(
        np.array([[100.0] + [0.0] * (d - 1)]), np.array([1.0])
    )
    g = prb.identity_field(d)
    var_xi = target.variance
    checks = []
    naive_sq = None
    for eta in (0.05, 0.10, 0.20):
        filt_err, naive_err = np.empty(R), np.empty(R)
        for rep in range(R):
            key = orc.derive_key(seed, 4, int(eta * 100), rep)
            sample = orc.draw_rl(target, outliers, eta, n, orc.Seed(key))
            obs = orc.observe(g, sample)
            filt = est.robust_filter_mean(obs, eta, clean_variance=B**2 * var_xi)
            filt_err[rep] = float(filt @ filt)
            naive = est.sample_mean(obs)
            naive_err[rep] = float(naive @ naive)
        envelope = 3200.0 * B**2 * var_xi * (eta + 1.0 / n) / 4.0
        checks.append(_check(f"filter_mse_eta{eta:g}", float(filt_err.mean()), hi=envelope))
        if eta == 0.20:
            naive_sq = float(naive_err.mean())
            checks.append(
                _check(
                    "filter_vs_naive_eta0.2",
                    float(filt_err.mean()),
                    hi=naive_sq / 10.0,
                )
            )
    return checks


def _fd_setup():
    D = prb.DiscreteDistribution(
        np.array([[0.0], [1.0], [2.0], [3.0], [4.0]]),
        np.array([0.15, 0.2, 0.3, 0.25, 0.1]),
    )
    design = np.array([[0.0], [2.0], [3.0]])
    return D, design


def _suite_fixed_data(seed: int) -> list[dict]:
    B, mu = 1.0, 1.0
    D, design = _fd_setup()
    sample = orc.fixed_data(design)
    masses, total = est.design_masses(D, design)

    def off_design(pts):
        hit = np.any(
            np.all(np.abs(pts[:, None, :] - design[None, :, :]) <= 1e-9, axis=2), axis=1
        )
        return np.where(hit, 0.0, 2.0 * B)[:, None]

    g_bnd = prb.GradientField(off_design, prb.FunctionClassSpec(prb.BND, B), 1)
    obs = orc.observe(g_bnd, sample)
    estimate = est.fd_bnd_estimator(obs, masses, total)
    err = g_bnd.mean(D) - estimate
    risk_bnd = float(err @ err) / (2.0 * mu)
    closed_bnd = bnd.table1_bounds(
        "FD-Bnd", {"B": B, "mu": mu, "design_mass": total}
    ).upper

    def min_dist_field(pts):
        dist = np.linalg.norm(pts[:, None, :] - design[None, :, :], axis=2).min(axis=1)
        return B * dist[:, None]

    g_lip = prb.GradientField(min_dist_field, prb.FunctionClassSpec(prb.LIP, B), 1)
    vor = est.voronoi_masses(D, design)
    obs_lip = orc.observe(g_lip, sample)
    estimate_lip = est.fd_lip_estimator(obs_lip, vor)
    err_lip = g_lip.mean(D) - estimate_lip
    risk_lip = float(err_lip @ err_lip) / (2.0 * mu)
    dists = np.linalg.norm(D.atoms[:, None, :] - design[None, :, :], axis=2).min(axis=1)
    closed_lip = bnd.table1_bounds(
        "FD-Lip", {"B": B, "mu": mu, "mean_min_dist": float(D.weights @ dists)}
    ).upper
    return [
        _check("fd_bnd_risk_gap", abs(risk_bnd - closed_bnd), hi=1e-9),
        _check("fd_lip_risk_gap", abs(risk_lip - closed_lip), hi=1e-9),
    ]


def _suite_pl(seed: int) -> list[dict]:
    inst = prb.pl_example()
    x0 = np.array([2.0])
    delta = inst.objective(x0) - inst.minimum
    kappa = inst.L / inst.mu
    T = math.ceil(kappa * math.log(delta / 1e-6))
    sample = orc.fixed_data(np.array([[0.0]]))
    traj = opt.estimator_gd(inst, None, sample, est.sample_mean, T, x0=x0)
    return [
        _check("pl_final_excess", traj.final_excess, hi=1e-6),
        _check("pl_steps", T, lo=1),
    ]


def _suite_federated(seed: int) -> list[dict]:
    B = 1.0
    spec = prb.FunctionClassSpec(prb.BND, B)
    D1 = prb.DiscreteDistribution(np.array([[0.0], [1.0]]), np.array([0.5, 0.5]))
    D2 = prb.DiscreteDistribution(np.array([[5.0], [6.0]]), np.array([0.5, 0.5]))
    budgets = [(D1, 10), (D2, 1000)]
    q_star, obj_star = est.optimal_fl_weights(spec, D1, budgets)

    def objective_at(q):
        q = np.asarray(q, dtype=float)
        bias = bnd.mixture_ipm(spec, D1, [D1, D2], q)
        svs = np.array([prb.sup_variance(spec, D1), prb.sup_variance(spec, D2)])
        ns = np.array([10.0, 1000.0])
        return bias**2 + float(np.sum(q**2 * svs / ns))

    candidates = min(
        objective_at([1.0, 0.0]), objective_at([0.0, 1.0]), objective_at([0.5, 0.5])
    )

    def hard_field(pts):
        return np.where(np.abs(pts[:, 0] - 0.0) <= 1e-9, B, -B)[:, None]

    g = prb.GradientField(hard_field, spec, 1)
    truth = g.mean(D1)
    R = 4000
    errs = np.empty(R)
    for rep in range(R):
        key = orc.derive_key(seed, 5, rep)
        sample = orc.draw_fl(budgets, orc.Seed(key))
        obs = orc.observe(g, sample)
        delta = est.fl_weighted_mean(obs, q_star, sample.agent_ids) - truth
        errs[rep] = float(delta @ delta)
    mc_risk = float(errs.mean())
    return [
        _check("weights_objective_vs_candidates", obj_star, hi=candidates),
        _check("mc_risk_over_objective", mc_risk / obj_star, lo=0.9, hi=1.1),
    ]


_SUITE_FNS = {
    "divergences": _suite_divergences,
    "schedules": _suite_schedules,
    "estimators": _suite_estimators,
    "sandwich-sl": _suite_sandwich_sl,
    "sandwich-tl": _suite_sandwich_tl,
    "robust": _suite_robust,
    "fixed-data": _suite_fixed_data,
    "pl": _suite_pl,
    "federated": _suite_federated,
}


def verify_suite(name: str, seed: int) -> dict:
    """Run one named property/acceptance suite; returns a pass/fail JSON report."""
    if name not in _SUITE_FNS:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(_SUITE_FNS)}")
    t0 = time.perf_counter()
    checks = _SUITE_FNS[name](seed)
    return _report(name, seed, checks, t0)
