"""Data distributions, gradient-field classes, and the quadratic/PL test objectives.

A learning problem here is a loss whose gradient in the data argument belongs
to a declared regularity class (affine / Lipschitz / bounded deviation from a
center).  The canonical hard objective is the quadratic

    loss(x, xi) = mu/2 ||x||^2 + <x, g(xi)>,

which is mu-strongly convex and mu-smooth in x for any field g, with
population minimum -||E[g]||^2 / (2 mu).  Expectations over discrete laws are
always computed exactly (weighted sums), never sampled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Union

import numpy as np

AFF = "Aff"
LIP = "Lip"
BND = "Bnd"
CLASS_KINDS = (AFF, LIP, BND)

_ATOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite-support law with exact masses.

    atoms: (k, D) array of pairwise-distinct points; weights: (k,) masses
    summing to one.  All expectations are exact weighted sums.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError(
                f"{atoms.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if atoms.shape[0] == 0:
            raise ValueError("empty atom list")
        if np.any(weights < 0):
            raise ValueError("negative probability mass")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {weights.sum()!r}, not 1")
        if len({a.tobytes() for a in atoms}) != atoms.shape[0]:
            raise ValueError("atoms must be pairwise distinct")
        object.__setattr__(self, "atoms", _readonly(atoms))
        object.__setattr__(self, "weights", _readonly(weights))

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    @property
    def variance(self) -> float:
        """E ||xi - E xi||^2."""
        centered = self.atoms - self.mean
        return float(self.weights @ np.einsum("ij,ij->i", centered, centered))

    def expect(self, values: np.ndarray) -> np.ndarray:
        """Exact expectation of per-atom values (k, ...) -> (...)."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.weights.shape[0]:
            raise ValueError("values are not aligned with the atoms")
        return np.tensordot(self.weights, values, axes=1)

    def mass_of(self, point: np.ndarray) -> float:
        """Exact mass of a single point (0 if off the support)."""
        point = np.asarray(point, dtype=float).ravel()
        hits = np.all(np.abs(self.atoms - point) <= _ATOL, axis=1)
        return float(self.weights[hits].sum())

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = rng.choice(self.atoms.shape[0], size=n, p=self.weights)
        return self.atoms[idx]


@dataclass(frozen=True)
class GaussianDistribution:
    """Gaussian sampler with exact first and second moments."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValueError("covariance is not symmetric")
        eigvals, eigvecs = np.linalg.eigh(cov)
        if eigvals.min() < -1e-10:
            raise ValueError(f"covariance has negative eigenvalue {eigvals.min()}")
        factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "covariance", _readonly(cov))
        object.__setattr__(self, "_factor", _readonly(factor))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def variance(self) -> float:
        """E ||xi - E xi||^2 = trace of the covariance."""
        return float(np.trace(self.covariance))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self._factor.T


Distribution = Union[DiscreteDistribution, GaussianDistribution]


def distribution_from_obj(obj: dict) -> Distribution:
    """Build a distribution from its JSON object form.

    {"atoms": [[...], ...], "weights": [...]} or
    {"gaussian": {"mean": [...], "cov": [[...], ...]}}
    """
    if "gaussian" in obj:
        g = obj["gaussian"]
        return GaussianDistribution(np.asarray(g["mean"]), np.asarray(g["cov"]))
    if "atoms" in obj:
        return DiscreteDistribution(np.asarray(obj["atoms"]), np.asarray(obj["weights"]))
    raise ValueError("distribution object needs 'atoms'/'weights' or 'gaussian'")


def load_distribution(path: str | Path) -> Distribution:
    """Load a distribution from a JSON document on disk."""
    with open(path) as fh:
        return distribution_from_obj(json.load(fh))


# ---------------------------------------------------------------------------
# Function classes and gradient fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionClassSpec:
    """Regularity class of a data-to-gradient map, with its constant."""

    kind: str
    bound: float

    def __post_init__(self):
        if self.kind not in CLASS_KINDS:
            raise ValueError(f"unknown class kind {self.kind!r}")
        if self.bound < 0:
            raise ValueError("class bound must be nonnegative")


@dataclass(frozen=True)
class GradientField:
    """A map from data points to gradient vectors, with declared regularity.

    evaluator takes a (n, D) batch of points and returns (n, d) values.
    mean_under, when given, supplies the exact population mean for
    non-discrete laws (discrete laws are always summed exactly).
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    spec: FunctionClassSpec
    dim: int
    mean_under: Callable[[Distribution], np.ndarray] | None = None

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.asarray(self.evaluator(pts), dtype=float)
        if values.shape != (pts.shape[0], self.dim):
            raise ValueError(
                f"field returned shape {values.shape}, expected {(pts.shape[0], self.dim)}"
            )
        return values

    def mean(self, D: Distribution) -> np.ndarray:
        """Exact E_D[g]."""
        if isinstance(D, DiscreteDistribution):
            return D.expect(self(D.atoms))
        if self.mean_under is not None:
            return np.asarray(self.mean_under(D), dtype=float)
        raise TypeError("no exact mean available for this field/distribution pair")

    def variance(self, D: DiscreteDistribution) -> float:
        """Exact var(g(xi)) on a discrete law."""
        values = self(D.atoms)
        centered = values - D.expect(values)
        return float(D.weights @ np.einsum("ij,ij->i", centered, centered))


def constant_field(c: np.ndarray) -> GradientField:
    c = np.asarray(c, dtype=float).ravel()
    return GradientField(
        evaluator=lambda pts: np.tile(c, (pts.shape[0], 1)),
        spec=FunctionClassSpec(BND, 0.0),
        dim=c.size,
        mean_under=lambda D: c,
    )


def identity_field(dim: int, scale: float = 1.0) -> GradientField:
    """g(xi) = scale * xi; |scale|-Lipschitz, exact mean under any law."""
    return GradientField(
        evaluator=lambda pts: scale * pts,
        spec=FunctionClassSpec(LIP, abs(scale)),
        dim=dim,
        mean_under=lambda D: scale * np.asarray(D.mean, dtype=float),
    )


def affine_field(A: np.ndarray, b: np.ndarray) -> GradientField:
    """g(xi) = A xi + b with the nuclear norm of A as class constant."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    nuclear = float(np.linalg.svd(A, compute_uv=False).sum())
    return GradientField(
        evaluator=lambda pts: pts @ A.T + b,
        spec=FunctionClassSpec(AFF, nuclear),
        dim=b.size,
        mean_under=lambda D: A @ np.asarray(D.mean, dtype=float) + b,
    )


def membership_on_support(field: GradientField, atoms: np.ndarray) -> bool:
    """Check the declared class membership by brute force on a finite support.

    Bnd: enclosing-ball test with the per-coordinate midpoint-of-extremes
    center (exact for two-valued fields and loose otherwise; a mean-centered
    radius > 2B rejects outright).  Lip: all atom pairs.  Aff: least-squares
    fit must be exact with nuclear norm within the bound.
    """
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    values = field(atoms)
    B = field.spec.bound
    if field.spec.kind == BND:
        centered = values - values.mean(axis=0)
        if np.max(np.linalg.norm(centered, axis=1)) > 2 * B + _ATOL:
            return False
        center = 0.5 * (values.max(axis=0) + values.min(axis=0))
        return bool(np.max(np.linalg.norm(values - center, axis=1)) <= B + _ATOL)
    if field.spec.kind == LIP:
        dv = np.linalg.norm(values[:, None, :] - values[None, :, :], axis=2)
        dx = np.linalg.norm(atoms[:, None, :] - atoms[None, :, :], axis=2)
        return bool(np.all(dv <= B * dx + _ATOL))
    if field.spec.kind == AFF:
        design = np.hstack([atoms, np.ones((atoms.shape[0], 1))])
        coef, _, _, _ = np.linalg.lstsq(design, values, rcond=None)
        if np.max(np.abs(design @ coef - values)) > 1e-8:
            return False
        nuclear = np.linalg.svd(coef[:-1].T, compute_uv=False).sum()
        return bool(nuclear <= B + _ATOL)
    raise ValueError(f"unknown class kind {field.spec.kind!r}")


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticInstance:
    """loss(x, xi) = mu/2 ||x||^2 + <x, g(xi)>.

    The objective is mu-strongly convex and mu-smooth regardless of g; L is
    the smoothness constant handed to optimizers (L >= mu, kappa = L/mu).
    """

    g: GradientField
    mu: float
    L: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.L < self.mu:
            raise ValueError("L must be at least mu")

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def kappa(self) -> float:
        return self.L / self.mu

    def with_smoothness(self, L: float) -> "QuadraticInstance":
        return replace(self, L=L)

    def mean_gradient_field(self, D: Distribution) -> np.ndarray:
        return self.g.mean(D)

    def minimum(self, D: Distribution) -> float:
        """Population minimum -||E[g]||^2 / (2 mu)."""
        eg = self.g.mean(D)
        return -float(eg @ eg) / (2.0 * self.mu)


@dataclass(frozen=True)
class PLInstance:
    """A smooth objective satisfying f - inf f <= ||grad f||^2 / (2 mu)."""

    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    mu: float
    L: float
    minimum: float
    dim: int = 1


def population_loss(inst: QuadraticInstance, x: np.ndarray, D: Distribution) -> float:
    """Exact population risk mu/2 ||x||^2 + <x, E_D[g]>."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != inst.dim:
        raise ValueError(f"x has dim {x.size}, instance has dim {inst.dim}")
    eg = inst.g.mean(D)
    return 0.5 * inst.mu * float(x @ x) + float(x @ eg)


def population_grad(inst: QuadraticInstance, x: np.ndarray, D: Distribution) -> np.ndarray:
    """Exact population gradient mu x + E_D[g]."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != inst.dim:
        raise ValueError(f"x has dim {x.size}, instance has dim {inst.dim}")
    return inst.mu * x + inst.g.mean(D)


def sup_variance(spec: FunctionClassSpec, D: Distribution) -> float:
    """Largest gradient variance over the class: B^2 var(xi) for Aff/Lip, B^2 for Bnd."""
    if spec.kind == BND:
        return spec.bound**2
    return spec.bound**2 * D.variance


def hard_instance_bnd(
    B: float,
    mu: float,
    D: DiscreteDistribution,
    split,
    L: float | None = None,
    dim: int = 1,
) -> QuadraticInstance:
    """Quadratic instance whose field takes value +B e1 on the atoms in `split`
    and -B e1 elsewhere.  A half-mass split attains the class-worst variance B^2.
    """
    if not isinstance(D, DiscreteDistribution):
        raise TypeError("the two-valued hard field needs a discrete support")
    split_idx = np.asarray(sorted(set(int(i) for i in split)), dtype=int)
    if split_idx.size and (split_idx.min() < 0 or split_idx.max() >= D.atoms.shape[0]):
        raise ValueError("split indices outside the support")
    in_atoms = D.atoms[split_idx]

    def evaluate(pts: np.ndarray) -> np.ndarray:
        out = np.full((pts.shape[0], dim), 0.0)
        if in_atoms.shape[0]:
            hit = np.any(
                np.all(np.abs(pts[:, None, :] - in_atoms[None, :, :]) <= _ATOL, axis=2),
                axis=1,
            )
        else:
            hit = np.zeros(pts.shape[0], dtype=bool)
        out[:, 0] = np.where(hit, B, -B)
        return out

    field = GradientField(evaluate, FunctionClassSpec(BND, B), dim)
    return QuadraticInstance(field, mu, mu if L is None else L)


def pl_example() -> PLInstance:
    """Fixed nonconvex 1-d objective f(x) = x^2 + 3 sin^2(x).

    Satisfies the gradient-dominance inequality with mu = 1/32 and is 8-smooth
    (|f''| = |2 + 6 cos 2x| <= 8); both constants are certified numerically on
    the grid [-10, 10] with step 1e-3 at construction time.
    """
    mu, L = 1.0 / 32.0, 8.0

    def f(x) -> float:
        x = float(np.asarray(x).ravel()[0])
        return x * x + 3.0 * np.sin(x) ** 2

    def grad(x) -> np.ndarray:
        x = float(np.asarray(x).ravel()[0])
        return np.array([2.0 * x + 3.0 * np.sin(2.0 * x)])

    xs = np.arange(-10.0, 10.0 + 1e-9, 1e-3)
    fx = xs**2 + 3.0 * np.sin(xs) ** 2
    gx = 2.0 * xs + 3.0 * np.sin(2.0 * xs)
    if np.any(fx > gx**2 / (2.0 * mu) + 1e-9):
        raise AssertionError("gradient-dominance constant violated on the grid")
    return PLInstance(objective=f, gradient=grad, mu=mu, L=L, minimum=0.0)
