"""Gradient estimators: scenario-specific maps from oracle output to R^d.

Covers the plain and weighted sample means, the eigenvalue-filter robust mean,
the two fixed-design estimators that exploit known point masses, and the
Bayes-optimal rule for two-valued fields used by lower-bound computations.
All estimators are translation-equivariant: shifting every observed gradient
by a constant shifts the output by the same constant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import bounds as _bounds
from .oracles import Observation
from .problems import (
    DiscreteDistribution,
    Distribution,
    FunctionClassSpec,
    sup_variance,
)

KINDS = (
    "SampleMean",
    "TLMean",
    "FLWeightedMean",
    "RobustFilterMean",
    "FDBnd",
    "FDLip",
    "BayesTwoPoint",
)

ROBUST_ETA_LIMIT = 0.25


class GuaranteeVoidWarning(UserWarning):
    """The estimator still ran, but its error guarantee does not apply."""


def _values(obs) -> np.ndarray:
    if isinstance(obs, Observation):
        return obs.values
    vals = np.asarray(obs, dtype=float)
    return np.atleast_2d(vals)


# ---------------------------------------------------------------------------
# Means
# ---------------------------------------------------------------------------

def sample_mean(obs) -> np.ndarray:
    """Arithmetic mean of the observed gradients."""
    vals = _values(obs)
    if vals.shape[0] == 0:
        raise ValueError("empty observation")
    return vals.mean(axis=0)


def fl_weighted_mean(obs, q, agent_ids=None) -> np.ndarray:
    """sum_i q_i * (mean of agent i's observations).

    The weights need not be positive or sum to one.  agent_ids holds the
    1-based agent tag of each observation row; with a single agent it may be
    omitted.
    """
    vals = _values(obs)
    q = np.asarray(q, dtype=float).ravel()
    if not np.all(np.isfinite(q)):
        raise ValueError("weights must be finite")
    if agent_ids is None:
        if q.size != 1:
            raise ValueError("agent ids are required for more than one agent")
        agent_ids = np.ones(vals.shape[0], dtype=int)
    agent_ids = np.asarray(agent_ids, dtype=int)
    out = np.zeros(vals.shape[1])
    for i, q_i in enumerate(q, start=1):
        if q_i == 0.0:
            continue
        rows = vals[agent_ids == i]
        if rows.shape[0] == 0:
            raise ValueError(f"agent {i} has weight {q_i} but no observations")
        out += q_i * rows.mean(axis=0)
    return out


# ---------------------------------------------------------------------------
# Robust filter mean
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FilterConfig:
    max_rounds: int = 50
    power_iters: int = 100
    threshold: float = 20.0

    def __post_init__(self):
        if self.max_rounds <= 0 or self.power_iters <= 0 or self.threshold <= 0:
            raise ValueError("filter configuration values must be positive")


def _top_eigenpair(cov: np.ndarray, iters: int) -> tuple[float, np.ndarray]:
    d = cov.shape[0]
    v = cov @ np.ones(d)
    norm = np.linalg.norm(v)
    v = v / norm if norm > 0 else np.ones(d) / np.sqrt(d)
    for _ in range(iters):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v
        v = w / norm
    return float(v @ cov @ v), v


def _weighted_median(vals: np.ndarray, w: np.ndarray) -> np.ndarray:
    # per-coordinate weighted median; robust center for the scale estimate
    out = np.empty(vals.shape[1])
    for j in range(vals.shape[1]):
        order = np.argsort(vals[:, j], kind="stable")
        cum = np.cumsum(w[order])
        out[j] = vals[order[np.searchsorted(cum, 0.5 * w.sum())], j]
    return out


def _trimmed_scale(vals: np.ndarray, w: np.ndarray, eta: float) -> float:
    """Trace-covariance of the (1 - 2 eta) weight mass closest to a robust center."""
    center = _weighted_median(vals, w)
    r2 = np.einsum("ij,ij->i", vals - center, vals - center)
    order = np.argsort(r2, kind="stable")
    cum = np.cumsum(w[order])
    keep = order[: np.searchsorted(cum, (1.0 - 2.0 * eta) * w.sum()) + 1]
    wk = w[keep] / w[keep].sum()
    mu_k = wk @ vals[keep]
    centered = vals[keep] - mu_k
    return float(wk @ np.einsum("ij,ij->i", centered, centered))


def robust_filter_mean(
    obs,
    eta: float,
    cfg: FilterConfig | None = None,
    clean_variance: float | None = None,
) -> np.ndarray:
    """Iterative eigenvalue filter against an eta fraction of outliers.

    Repeats: weighted mean and covariance of the current weights, top
    eigenpair by power iteration, stop when the top eigenvalue falls below
    threshold * sigma0^2, otherwise downweight points in proportion to their
    squared projection onto the top eigenvector.  sigma0^2 is the known clean
    trace-covariance when provided, else a trimmed estimate from the current
    weighted sample (the untrimmed trace is inflated by the very outliers the
    filter must detect).  Always terminates within max_rounds.
    """
    vals = _values(obs)
    if vals.shape[0] == 0:
        raise ValueError("empty observation")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("contamination rate must lie in [0, 1]")
    if eta > ROBUST_ETA_LIMIT:
        warnings.warn(
            f"contamination {eta} exceeds {ROBUST_ETA_LIMIT}; the filter's "
            "error guarantee is void",
            GuaranteeVoidWarning,
            stacklevel=2,
        )
    cfg = cfg or FilterConfig()
    n = vals.shape[0]
    w = np.ones(n) / n
    mu_w = vals.mean(axis=0)
    for _ in range(cfg.max_rounds):
        wn = w / w.sum()
        mu_w = wn @ vals
        centered = vals - mu_w
        cov = centered.T @ (centered * wn[:, None])
        top, v = _top_eigenpair(cov, cfg.power_iters)
        if clean_variance is not None:
            sigma0 = clean_variance
        else:
            sigma0 = _trimmed_scale(vals, wn, min(eta, 0.25))
        if top <= cfg.threshold * sigma0:
            return mu_w
        tau = (centered @ v) ** 2
        tau_max = tau[w > 0].max()
        if tau_max <= 0.0:
            return mu_w
        w = w * (1.0 - tau / tau_max)
        if w.sum() <= 1e-12:
            return mu_w
    return mu_w


# ---------------------------------------------------------------------------
# Fixed-design estimators
# ---------------------------------------------------------------------------

def fd_bnd_estimator(obs, masses, total_mass: float) -> np.ndarray:
    """sum_i P({xi_i}) g_i + (1 - P({xi_i}_i)) * mean(g).

    masses are the target law's exact singleton masses at the design points;
    total_mass is the mass of the design as a set (their sum once duplicates
    are removed).
    """
    vals = _values(obs)
    masses = np.asarray(masses, dtype=float).ravel()
    if vals.shape[0] == 0:
        raise ValueError("empty observation")
    if masses.shape[0] != vals.shape[0]:
        raise ValueError("one mass per design point is required")
    if np.any(masses < 0):
        raise ValueError("negative mass")
    if abs(masses.sum() - total_mass) > 1e-9 or total_mass > 1.0 + 1e-12:
        raise ValueError("total_mass must equal the sum of the masses (<= 1)")
    return masses @ vals + (1.0 - total_mass) * vals.mean(axis=0)


def fd_lip_estimator(obs, voronoi_masses) -> np.ndarray:
    """Mean of the observed gradients weighted by nearest-design-point masses."""
    vals = _values(obs)
    vor = np.asarray(voronoi_masses, dtype=float).ravel()
    if vor.shape[0] != vals.shape[0]:
        raise ValueError("one cell mass per design point is required")
    if abs(vor.sum() - 1.0) > 1e-12:
        raise ValueError(f"cell masses sum to {vor.sum()!r}, not 1")
    return vor @ vals


def design_masses(D: Distribution, design_points: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact singleton masses of the design points and their set mass.

    Continuous laws put zero mass on singletons.
    """
    pts = np.atleast_2d(np.asarray(design_points, dtype=float))
    if not isinstance(D, DiscreteDistribution):
        return np.zeros(pts.shape[0]), 0.0
    masses = np.array([D.mass_of(p) for p in pts])
    return masses, float(masses.sum())


def voronoi_masses(
    D: Distribution,
    design_points: np.ndarray,
    rng: np.random.Generator | None = None,
    draws: int = 10**6,
) -> np.ndarray:
    """Mass of each design point's nearest-neighbor cell under D.

    Exact on discrete laws; Monte Carlo (default 1e6 draws) otherwise.
    Distance ties go to the lowest design index.
    """
    pts = np.atleast_2d(np.asarray(design_points, dtype=float))
    if isinstance(D, DiscreteDistribution):
        dist = np.linalg.norm(D.atoms[:, None, :] - pts[None, :, :], axis=2)
        cells = np.argmin(dist, axis=1)
        out = np.zeros(pts.shape[0])
        np.add.at(out, cells, D.weights)
        return out
    rng = rng if rng is not None else np.random.default_rng(0)
    out = np.zeros(pts.shape[0])
    block = 10**5
    remaining = draws
    while remaining > 0:
        k = min(block, remaining)
        sample = D.sample(rng, k)
        dist = np.linalg.norm(sample[:, None, :] - pts[None, :, :], axis=2)
        out += np.bincount(np.argmin(dist, axis=1), minlength=pts.shape[0])
        remaining -= k
    return out / draws


# ---------------------------------------------------------------------------
# Bayes-optimal two-point rule
# ---------------------------------------------------------------------------

def bayes_two_point(obs, prior: tuple[float, float], B: float) -> np.ndarray:
    """Posterior-mean estimate of E[g] when g only takes the values +/- B e1.

    With K successes (+B e1) among n observations and a Beta(a, b) prior on
    the success probability, the estimate is (2 (K + a)/(n + a + b) - 1) B e1.
    """
    a, b = prior
    if a <= 0 or b <= 0:
        raise ValueError("prior parameters must be positive")
    vals = _values(obs)
    n, d = vals.shape
    e1 = np.zeros(d if d > 0 else 1)
    e1[0] = 1.0
    if n:
        first = vals[:, 0]
        if np.any(np.abs(np.abs(first) - B) > 1e-9) or (
            d > 1 and np.any(np.abs(vals[:, 1:]) > 1e-9)
        ):
            raise ValueError("observations must lie in {-B e1, +B e1}")
        K = int(np.sum(first > 0))
    else:
        K = 0
    return (2.0 * (K + a) / (n + a + b) - 1.0) * B * e1


# ---------------------------------------------------------------------------
# Collaboration weights
# ---------------------------------------------------------------------------

def optimal_fl_weights(
    spec: FunctionClassSpec,
    D: DiscreteDistribution,
    locals_: list[tuple[DiscreteDistribution, int]],
) -> tuple[np.ndarray, float]:
    """Minimize bias(q)^2 + sum_i q_i^2 SV_i / n_i over collaboration weights.

    bias(q) is the class-worst gap between E_D[g] and sum_i q_i E_{D_i}[g];
    it is infinite unless the weights sum to one (the classes admit arbitrary
    constant shifts), so the search runs on that hyperplane: a grid of 21
    points per free axis in [-1, 2], then coordinate descent to 1e-6.
    Returns the weights and the attained objective value.
    """
    if not isinstance(D, DiscreteDistribution) or any(
        not isinstance(D_i, DiscreteDistribution) for D_i, _ in locals_
    ):
        raise TypeError("exact bias computation needs discrete distributions")
    m = len(locals_)
    dists = [D_i for D_i, _ in locals_]
    budgets = np.array([n_i for _, n_i in locals_], dtype=float)
    svs = np.array([sup_variance(spec, D_i) for D_i in dists])

    def objective(q: np.ndarray) -> float:
        active = q != 0.0
        if np.any(active & (budgets <= 0)):
            return np.inf
        bias = _bounds.mixture_ipm(spec, D, dists, q)
        if not np.isfinite(bias):
            return np.inf
        var = float(np.sum(q[active] ** 2 * svs[active] / budgets[active]))
        return bias**2 + var

    def embed(free: np.ndarray) -> np.ndarray:
        return np.append(free, 1.0 - free.sum())

    if m == 1:
        q = np.array([1.0])
        return q, objective(q)

    axis = np.linspace(-1.0, 2.0, 21)
    grids = np.meshgrid(*([axis] * (m - 1)), indexing="ij")
    candidates = np.stack([g.ravel() for g in grids], axis=1)
    best_free, best_val = None, np.inf
    for free in candidates:
        val = objective(embed(free))
        if val < best_val:
            best_free, best_val = free.copy(), val

    free = best_free
    for _ in range(200):
        moved = 0.0
        for j in range(m - 1):
            def line(t: float) -> float:
                trial = free.copy()
                trial[j] = t
                return objective(embed(trial))

            res = minimize_scalar(
                line, bounds=(-2.0, 3.0), method="bounded",
                options={"xatol": 1e-9},
            )
            if res.fun < best_val - 1e-15:
                moved = max(moved, abs(res.x - free[j]))
                free[j] = res.x
                best_val = res.fun
        if moved < 1e-6:
            break
    q = embed(free)
    return q, objective(q)


# ---------------------------------------------------------------------------
# Config-style wrapper used by the experiment harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Estimator:
    """An estimator kind plus the parameters it needs, as one serializable unit."""

    kind: str
    q: tuple[float, ...] | None = None
    agent_ids: tuple[int, ...] | None = None
    masses: tuple[float, ...] | None = None
    total_mass: float | None = None
    voronoi: tuple[float, ...] | None = None
    prior: tuple[float, float] | None = None
    bound: float | None = None
    eta: float | None = None
    filter_cfg: FilterConfig = field(default_factory=FilterConfig)
    clean_variance: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "FLWeightedMean" and self.q is not None:
            if not np.all(np.isfinite(self.q)):
                raise ValueError("weights must be finite")
        if self.kind == "RobustFilterMean" and self.eta is not None:
            if self.eta > ROBUST_ETA_LIMIT:
                warnings.warn(
                    "filter guarantee requires contamination <= 1/4",
                    GuaranteeVoidWarning,
                    stacklevel=2,
                )

    def as_function(self):
        """A plain callable on raw (n, d) value arrays, for tight loops."""
        if self.kind in ("SampleMean", "TLMean"):
            return sample_mean
        if self.kind == "FLWeightedMean":
            q, ids = np.asarray(self.q), np.asarray(self.agent_ids)
            return lambda vals: fl_weighted_mean(vals, q, ids)
        if self.kind == "RobustFilterMean":
            eta, cfg, cv = self.eta, self.filter_cfg, self.clean_variance
            return lambda vals: robust_filter_mean(vals, eta, cfg, cv)
        if self.kind == "FDBnd":
            masses, total = np.asarray(self.masses), self.total_mass
            return lambda vals: fd_bnd_estimator(vals, masses, total)
        if self.kind == "FDLip":
            vor = np.asarray(self.voronoi)
            return lambda vals: fd_lip_estimator(vals, vor)
        if self.kind == "BayesTwoPoint":
            prior, B = self.prior, self.bound
            return lambda vals: bayes_two_point(vals, prior, B)
        raise ValueError(f"unknown estimator kind {self.kind!r}")
