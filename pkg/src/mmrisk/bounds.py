"""Closed-form risk bounds, divergences, and integral probability metrics.

Everything here is the theory side of the laboratory: exact discrete
divergence sums, class-specific worst-case mean gaps (total-variation,
Wasserstein, or mean-distance flavored), the indistinguishability lower bound
built from two candidate fields, and the per-scenario lower/upper excess-risk
values with explicit constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .problems import (
    AFF,
    BND,
    LIP,
    DiscreteDistribution,
    FunctionClassSpec,
    GradientField,
)


# ---------------------------------------------------------------------------
# Divergences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Divergences:
    tv: float
    kl: float
    lecam: float

    def __post_init__(self):
        if not (0.0 <= self.tv <= 1.0 + 1e-12 and 0.0 <= self.lecam <= 1.0 + 1e-12):
            raise ValueError("tv and lecam must lie in [0, 1]")
        if self.kl < 0:
            raise ValueError("kl must be nonnegative")


def _union_support(dists: list[DiscreteDistribution]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Shared atom list (sorted, so results are order-independent) and the
    weight vector of every input distribution on it."""
    dim = dists[0].atoms.shape[1]
    rows = {}
    for D in dists:
        for a in D.atoms:
            rows[a.tobytes()] = a
    atoms = np.array(list(rows.values())).reshape(-1, dim)
    order = np.lexsort(atoms.T[::-1])
    atoms = atoms[order]
    index = {a.tobytes(): i for i, a in enumerate(atoms)}
    weights = []
    for D in dists:
        w = np.zeros(atoms.shape[0])
        for a, p in zip(D.atoms, D.weights):
            w[index[a.tobytes()]] = p
        weights.append(w)
    return atoms, weights


def divergences(P: DiscreteDistribution, Q: DiscreteDistribution) -> Divergences:
    """Exact total-variation, KL, and squared-difference-over-sum distances.

    KL is +inf when P charges an atom that Q does not; 0 * ln(0) counts as 0.
    """
    _, (p, q) = _union_support([P, Q])
    tv = 0.5 * float(np.abs(p - q).sum())
    pos = p > 0
    if np.any(pos & (q == 0)):
        kl = math.inf
    else:
        kl = float(np.sum(p[pos] * np.log(p[pos] / q[pos])))
        kl = max(kl, 0.0)
    live = (p + q) > 0  # 0/0 terms count as 0
    lecam = 0.5 * float(np.sum((p[live] - q[live]) ** 2 / (p[live] + q[live])))
    return Divergences(tv=min(tv, 1.0), kl=kl, lecam=min(lecam, 1.0))


# ---------------------------------------------------------------------------
# Transportation problem (exact LP) and class-specific mean-gap metrics
# ---------------------------------------------------------------------------

def transport_cost(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    """Exact minimum-cost transport between nonnegative mass vectors of equal total."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        return 0.0
    k, l = a.size, b.size
    A_eq = np.zeros((k + l, k * l))
    for i in range(k):
        A_eq[i, i * l : (i + 1) * l] = 1.0
    for j in range(l):
        A_eq[k + j, j::l] = 1.0
    res = linprog(
        np.asarray(cost, dtype=float).ravel(),
        A_eq=A_eq,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


def wasserstein(P: DiscreteDistribution, Q: DiscreteDistribution) -> float:
    """Exact 1-Wasserstein distance on finite supports (Euclidean ground metric)."""
    cost = np.linalg.norm(P.atoms[:, None, :] - Q.atoms[None, :, :], axis=2)
    return transport_cost(P.weights, Q.weights, cost)


def mixture_ipm(
    spec: FunctionClassSpec,
    target: DiscreteDistribution,
    components: list[DiscreteDistribution],
    q,
) -> float:
    """Class-worst gap between E_target[g] and sum_i q_i E_{component_i}[g].

    Infinite when the weights do not sum to one: every class here contains
    arbitrary constant shifts, which make the gap unbounded otherwise.
    """
    q = np.asarray(q, dtype=float).ravel()
    if len(components) != q.size:
        raise ValueError("one weight per component distribution is required")
    if abs(q.sum() - 1.0) > 1e-9:
        return math.inf
    atoms, weights = _union_support([target] + list(components))
    nu = weights[0] - sum(q_i * w for q_i, w in zip(q, weights[1:]))
    B = spec.bound
    if spec.kind == BND:
        return B * float(np.abs(nu).sum())
    if spec.kind == AFF:
        return B * float(np.linalg.norm(nu @ atoms))
    if spec.kind == LIP:
        pos = np.clip(nu, 0.0, None)
        neg = np.clip(-nu, 0.0, None)
        total = 0.5 * (pos.sum() + neg.sum())
        if total <= 1e-15:
            return 0.0
        pos *= total / pos.sum()
        neg *= total / neg.sum()
        cost = np.linalg.norm(atoms[:, None, :] - atoms[None, :, :], axis=2)
        return B * transport_cost(pos, neg, cost)
    raise ValueError(f"unsupported class kind {spec.kind!r}")


def ipm(spec: FunctionClassSpec, P: DiscreteDistribution, Q: DiscreteDistribution) -> float:
    """sup over the class of ||E_P[g] - E_Q[g]||.

    Two-valued fields make this 2B * tv for the bounded-deviation class; it is
    B times the Wasserstein distance for the Lipschitz class and B times the
    mean gap for the affine class.
    """
    return mixture_ipm(spec, P, [Q], np.array([1.0]))


# ---------------------------------------------------------------------------
# Lower bounds
# ---------------------------------------------------------------------------

def two_point_lower(
    g: GradientField,
    gprime: GradientField,
    P_obs_g: DiscreteDistribution,
    P_obs_gprime: DiscreteDistribution,
    D: DiscreteDistribution,
) -> float:
    """Estimation-error floor from a pair of candidate fields.

    If the two fields' observation laws are hard to tell apart, no estimator
    can track both expectations: the squared error is at least
    (1 - lecam) / 4 * ||E_D[g] - E_D[g']||^2.
    """
    gap = g.mean(D) - gprime.mean(D)
    lc = divergences(P_obs_g, P_obs_gprime).lecam
    return (1.0 - lc) / 4.0 * float(gap @ gap)


def fd_observation_law(field: GradientField, points: np.ndarray) -> DiscreteDistribution:
    """Point mass at the (deterministic) observation of a fixed design."""
    obs = field(np.atleast_2d(np.asarray(points, dtype=float))).ravel()
    return DiscreteDistribution(obs[None, :], np.array([1.0]))


def sl_observation_law(
    field: GradientField, D: DiscreteDistribution, n: int
) -> DiscreteDistribution:
    """Exact law of n iid observations of the field, atoms in R^(n*d).

    Enumerates the k^n index tuples of the support, so only small cases are
    accepted.
    """
    k = D.atoms.shape[0]
    if k**n > 200_000:
        raise ValueError("observation space too large to enumerate exactly")
    values = field(D.atoms)
    atoms, weights = {}, {}
    for idx in np.ndindex(*([k] * n)):
        obs = values[list(idx)].ravel()
        w = float(np.prod(D.weights[list(idx)]))
        key = obs.tobytes()
        atoms[key] = obs
        weights[key] = weights.get(key, 0.0) + w
    stacked = np.array([atoms[key] for key in atoms])
    mass = np.array([weights[key] for key in atoms])
    return DiscreteDistribution(stacked, mass / mass.sum())


def bayes_risk_closed_form(a: float, b: float, n: int, B: float) -> float:
    """Exact average squared error of the posterior-mean rule for two-valued
    fields: 4 B^2 a b / ((a + b)(1 + a + b)(n + a + b)).

    At a = b = sqrt(n)/2 this equals B^2 / (1 + sqrt(n))^2.
    """
    if a <= 0 or b <= 0:
        raise ValueError("prior parameters must be positive")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return 4.0 * B**2 * a * b / ((a + b) * (1.0 + a + b) * (n + a + b))


# ---------------------------------------------------------------------------
# Per-scenario bound reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    scenario: str
    lower: float | None
    upper: float | None
    constants: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if (
            self.lower is not None
            and self.upper is not None
            and math.isfinite(self.lower)
            and math.isfinite(self.upper)
            and self.lower > self.upper + 1e-12
        ):
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")


def excess_upper_envelope(
    a: float, b: float, n: int, mu: float, kappa: float, delta_tilde: float
) -> float:
    """Excess-risk guarantee of the exponential-batch schedule when the
    per-sample estimation error is bounded by a + b/n:
    a/(2 mu) + 6 kappa b / (mu n) + delta_tilde exp(-n / (6 kappa))."""
    return a / (2.0 * mu) + 6.0 * kappa * b / (mu * n) + delta_tilde * math.exp(
        -n / (6.0 * kappa)
    )


def _require(inputs: dict, keys: list[str], scenario: str) -> list[float]:
    missing = [k for k in keys if k not in inputs]
    if missing:
        raise ValueError(f"{scenario} bounds need inputs {missing}")
    return [inputs[k] for k in keys]


def table1_bounds(scenario: str, inputs: dict) -> BoundReport:
    """Lower/upper excess-risk values with explicit constants for one scenario.

    Scenarios: SL-Bnd, TL-Bnd, RL-Bnd, RL-Lip, FL, FD-Bnd, FD-Lip.  All
    formulas are exact-constant versions (no hidden multiplicative factors).
    """
    if scenario == "SL-Bnd":
        B, mu, kappa, n = _require(inputs, ["B", "mu", "kappa", "n"], scenario)
        lower = B**2 / (8.0 * mu * n)
        upper = 11.0 * kappa * B**2 / (mu * n)
        constants = {"lower_coef": 1.0 / 8.0, "upper_coef": 11.0}
    elif scenario in ("TL-Bnd", "RL-Bnd"):
        B, mu, kappa, n = _require(inputs, ["B", "mu", "kappa", "n"], scenario)
        tv = inputs["eta"] if scenario == "RL-Bnd" else inputs.get("tv")
        if tv is None:
            raise ValueError(f"{scenario} bounds need inputs ['tv']")
        delta_tilde = inputs.get("delta_tilde", 2.0 * B**2 / mu)
        lower = (2.0 - math.log(3.0)) * B**2 * (tv**2 + 1.0 / n) / (32.0 * mu)
        upper = excess_upper_envelope(
            4.0 * B**2 * tv**2, B**2, int(n), mu, kappa, delta_tilde
        )
        constants = {
            "lower_coef": (2.0 - math.log(3.0)) / 32.0,
            "bias_envelope": 4.0 * B**2 * tv**2,
            "variance_envelope": B**2,
            "delta_tilde": delta_tilde,
        }
    elif scenario == "RL-Lip":
        B, mu, n, eta, var_xi = _require(inputs, ["B", "mu", "n", "eta", "var_xi"], scenario)
        lower = None
        upper = 3200.0 * B**2 * var_xi * (eta + 1.0 / n) / (2.0 * mu)
        constants = {"upper_coef": 3200.0}
    elif scenario == "FL":
        B, mu, kappa, n, bias_sq, var_term = _require(
            inputs, ["B", "mu", "kappa", "n", "fl_bias_sq", "fl_var"], scenario
        )
        delta_tilde = inputs.get("delta_tilde", 2.0 * B**2 / mu)
        lower = None
        upper = bias_sq / (2.0 * mu) + 6.0 * kappa * var_term / mu + delta_tilde * math.exp(
            -n / (6.0 * kappa)
        )
        constants = {"variance_coef": 6.0, "delta_tilde": delta_tilde}
    elif scenario == "FD-Bnd":
        B, mu, mass = _require(inputs, ["B", "mu", "design_mass"], scenario)
        value = 2.0 * B**2 * (1.0 - mass) ** 2 / mu
        lower = upper = value
        constants = {"coef": 2.0}
    elif scenario == "FD-Lip":
        B, mu, mean_min = _require(inputs, ["B", "mu", "mean_min_dist"], scenario)
        value = B**2 * mean_min**2 / (2.0 * mu)
        lower = upper = value
        constants = {"coef": 0.5}
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    return BoundReport(
        scenario=scenario, lower=lower, upper=upper, constants=constants, inputs=dict(inputs)
    )
