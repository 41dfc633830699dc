"""First-order methods that see the objective only through a frozen sample.

Two drivers are provided.  `estimator_gd` applies an estimator to the whole
sample at every step (step size 1/L).  `minibatch_gd_warmup` first contracts
the initialization error using a single reserved observation, then takes main
steps whose minibatches consume fresh sample points exactly once, with either
a fixed batch size or exponentially increasing ones.  Budgets are tracked
exactly: the main phase never touches more than n - 1 points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import Estimator
from .oracles import OracleSample, observe
from .problems import BND, PLInstance, QuadraticInstance

SCHEDULES = ("exponential", "fixed", "single")


@dataclass(frozen=True)
class OptimizerConfig:
    """Step rule 1/L plus the sampling schedule for one run at budget n."""

    mu: float
    L: float
    n: int
    schedule: str = "exponential"
    epsilon: float = 1e-8
    a: float = 1.0
    T: int | None = None
    noise_norm_sq: float | None = None

    def __post_init__(self):
        if self.mu <= 0 or self.L < self.mu:
            raise ValueError("need 0 < mu <= L")
        if self.epsilon <= 0:
            raise ValueError("warmup target precision must be positive")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "single":
            if self.T is None or self.T < 0:
                raise ValueError("the single-oracle schedule needs T >= 0")
        elif self.n < 3:
            raise ValueError("batch schedules need a budget of at least 3")
        if self.schedule == "fixed" and self.a <= 0:
            raise ValueError("the fixed-batch parameter a must be positive")

    @property
    def kappa(self) -> float:
        return self.L / self.mu

    def batches(self) -> np.ndarray:
        if self.schedule == "exponential":
            return batch_schedule(self.n, self.kappa)
        if self.schedule == "fixed":
            return fixed_batch_schedule(self.n, self.kappa, self.a)
        raise ValueError("the single-oracle schedule has no minibatches")


@dataclass(frozen=True)
class Trajectory:
    """Iterates, exact excess risk per iterate, and the sample budget used."""

    iterates: np.ndarray
    excess: np.ndarray
    samples_used: int
    warmup_steps: int

    def __post_init__(self):
        it = np.atleast_2d(np.asarray(self.iterates, dtype=float))
        ex = np.asarray(self.excess, dtype=float).ravel()
        it.flags.writeable = False
        ex.flags.writeable = False
        object.__setattr__(self, "iterates", it)
        object.__setattr__(self, "excess", ex)

    @property
    def final_excess(self) -> float:
        return float(self.excess[-1])


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

def _truncate_to_budget(sizes: np.ndarray, budget: int) -> np.ndarray:
    kept, used = [], 0
    for v in sizes:
        v = int(v)
        if used + v > budget:
            v = budget - used
        if v <= 0:
            break
        kept.append(v)
        used += v
    return np.asarray(kept, dtype=int)


def batch_schedule(n: int, kappa: float) -> np.ndarray:
    """Exponentially increasing minibatch sizes for a budget of n - 1 points.

    T = floor((n-1)/2) steps with n_t = ceil((n-1)(1-c) c^(T-t-1) / 2) where
    c = sqrt(1 - 1/kappa); zero-size batches are clamped to 1 and the schedule
    is truncated once the budget is exhausted, so sum n_t <= n - 1 always.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if kappa < 1:
        raise ValueError("need kappa >= 1")
    c = math.sqrt(1.0 - 1.0 / kappa)
    T = (n - 1) // 2
    raw = (n - 1) * (1.0 - c) * c ** np.arange(T - 1, -1, -1, dtype=float) / 2.0
    sizes = np.maximum(1, np.ceil(raw - 1e-9).astype(int))
    return _truncate_to_budget(sizes, n - 1)


def fixed_batch_schedule(n: int, kappa: float, a: float) -> np.ndarray:
    """T = ceil(a kappa ln n) steps of size floor((n-1)/(1 + a kappa ln n)).

    Sizes below 1 are clamped to 1 and the schedule truncated at the budget.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if kappa < 1 or a <= 0:
        raise ValueError("need kappa >= 1 and a > 0")
    log_n = math.log(n)
    ntilde = max(1, int((n - 1) / (1.0 + a * kappa * log_n)))
    T = int(math.ceil(a * kappa * log_n))
    return _truncate_to_budget(np.full(T, ntilde, dtype=int), n - 1)


def warmup_length(
    first_obs_estimate: np.ndarray,
    noise_norm_sq: float,
    eps: float,
    kappa: float,
    mu: float,
) -> int:
    """ceil(kappa * ln((||estimate||^2 + noise) / (eps mu))), floored at 0."""
    if eps <= 0 or mu <= 0:
        raise ValueError("eps and mu must be positive")
    est = np.asarray(first_obs_estimate, dtype=float).ravel()
    arg = (float(est @ est) + noise_norm_sq) / (eps * mu)
    if arg <= 1.0:
        return 0
    return int(math.ceil(kappa * math.log(arg)))


def default_noise_norm_sq(inst: QuadraticInstance) -> float:
    """A-priori bound on the single-observation estimation error.

    For a bounded-deviation field every value is within 2B of the mean, so
    4 B^2 bounds the squared error of using one observed gradient.
    """
    if inst.g.spec.kind == BND:
        return 4.0 * inst.g.spec.bound**2
    raise ValueError(
        "no default single-observation error bound for this class; "
        "set noise_norm_sq explicitly"
    )


# ---------------------------------------------------------------------------
# Trajectory drivers
# ---------------------------------------------------------------------------

def _resolve_phi(phi):
    return phi.as_function() if isinstance(phi, Estimator) else phi


def _excess_fn(inst, D):
    if isinstance(inst, QuadraticInstance):
        eg = inst.g.mean(D)
        mu = inst.mu
        lstar = -float(eg @ eg) / (2.0 * mu)

        def excess(x: np.ndarray) -> float:
            return 0.5 * mu * float(x @ x) + float(x @ eg) - lstar

        return excess
    if isinstance(inst, PLInstance):
        return lambda x: inst.objective(x) - inst.minimum
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def _frozen_gradient_view(inst, sample: OracleSample):
    """Observations of the loss gradient at x on a slice of the frozen sample.

    For the quadratic family the data part g(xi) is evaluated once and reused
    for every model parameter, which is exactly the frozen-randomness contract.
    """
    if isinstance(inst, QuadraticInstance):
        gvals = observe(inst.g, sample).values
        mu = inst.mu

        def view(x: np.ndarray, lo: int, hi: int) -> np.ndarray:
            return mu * x + gvals[lo:hi]

        return view
    if isinstance(inst, PLInstance):
        grad = inst.gradient

        def view(x: np.ndarray, lo: int, hi: int) -> np.ndarray:
            return np.broadcast_to(grad(x), (hi - lo, inst.dim))

        return view
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def estimator_gd(
    inst,
    D,
    oracle_sample: OracleSample,
    phi,
    T: int,
    x0: np.ndarray | None = None,
) -> Trajectory:
    """T steps of x <- x - phi(observations at x) / L using the whole sample."""
    if T < 0:
        raise ValueError("need T >= 0")
    phi_fn = _resolve_phi(phi)
    excess = _excess_fn(inst, D)
    view = _frozen_gradient_view(inst, oracle_sample)
    n = len(oracle_sample)
    x = np.zeros(inst.dim) if x0 is None else np.asarray(x0, dtype=float).ravel()
    iterates = np.empty((T + 1, inst.dim))
    errs = np.empty(T + 1)
    iterates[0], errs[0] = x, excess(x)
    inv_L = 1.0 / inst.L
    for t in range(T):
        x = x - inv_L * np.asarray(phi_fn(view(x, 0, n)), dtype=float).ravel()
        iterates[t + 1], errs[t + 1] = x, excess(x)
    return Trajectory(iterates, errs, samples_used=n if T > 0 else 0, warmup_steps=0)


def minibatch_gd_warmup(
    inst: QuadraticInstance,
    D,
    oracle_sample: OracleSample,
    phis,
    cfg: OptimizerConfig,
) -> Trajectory:
    """Warmup on the first observation, then fresh-sample minibatch steps.

    Phase 1 repeatedly queries the reserved first point until the
    initialization term is contracted below the target precision.  Phase 2
    walks the schedule, step t consuming its n_t points exactly once (indices
    2..n of the sample; the budget arithmetic guarantees they suffice).
    `phis` is applied to every batch size.
    """
    if abs(cfg.mu - inst.mu) > 1e-12 or abs(cfg.L - inst.L) > 1e-12:
        raise ValueError("optimizer config (mu, L) must match the instance")
    if len(oracle_sample) < cfg.n:
        raise ValueError(f"sample has {len(oracle_sample)} points, budget is {cfg.n}")
    phi_fn = _resolve_phi(phis)
    excess = _excess_fn(inst, D)
    view = _frozen_gradient_view(inst, oracle_sample)
    schedule = cfg.batches()
    noise = cfg.noise_norm_sq
    if noise is None:
        noise = default_noise_norm_sq(inst)
    kappa, inv_L = cfg.kappa, 1.0 / cfg.L

    x = np.zeros(inst.dim)
    first = np.asarray(phi_fn(view(x, 0, 1)), dtype=float).ravel()
    t_wu = warmup_length(first, noise, cfg.epsilon, kappa, cfg.mu)

    total = t_wu + schedule.size
    iterates = np.empty((total + 1, inst.dim))
    errs = np.empty(total + 1)
    iterates[0], errs[0] = x, excess(x)
    step = 0
    for _ in range(t_wu):
        x = x - inv_L * np.asarray(phi_fn(view(x, 0, 1)), dtype=float).ravel()
        step += 1
        iterates[step], errs[step] = x, excess(x)

    m = 1
    for n_t in schedule:
        x = x - inv_L * np.asarray(phi_fn(view(x, m, m + int(n_t))), dtype=float).ravel()
        m += int(n_t)
        step += 1
        iterates[step], errs[step] = x, excess(x)
    assert m <= cfg.n, "schedule overran the sample budget"
    return Trajectory(iterates, errs, samples_used=m, warmup_steps=t_wu)
