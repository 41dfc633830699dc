"""Distributions, gradient fields, and the quadratic/PL objectives."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmrisk.problems import (
    BND,
    DiscreteDistribution,
    FunctionClassSpec,
    GaussianDistribution,
    GradientField,
    QuadraticInstance,
    affine_field,
    constant_field,
    distribution_from_obj,
    hard_instance_bnd,
    identity_field,
    load_distribution,
    membership_on_support,
    pl_example,
    population_grad,
    population_loss,
    sup_variance,
)

UNIFORM2 = DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])


def make_instance(mu=1.0, g_vals=((1.0, 0.0), (1.0, 0.0))):
    """Two-atom instance whose field takes the given values on the atoms."""
    vals = np.asarray(g_vals, dtype=float)

    def ev(pts):
        idx = (pts[:, 0] > 0.5).astype(int)
        return vals[idx]

    field = GradientField(ev, FunctionClassSpec(BND, 10.0), vals.shape[1])
    return QuadraticInstance(field, mu, mu)


class TestDistributions:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum"):
            DiscreteDistribution([[0.0], [1.0]], [0.6, 0.6])

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            DiscreteDistribution([[0.0], [1.0]], [1.5, -0.5])

    def test_duplicate_atoms_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            DiscreteDistribution([[1.0], [1.0]], [0.5, 0.5])

    def test_empty_support_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            DiscreteDistribution(np.zeros((0, 1)), np.zeros(0))

    def test_moments(self):
        D = DiscreteDistribution([[0.0], [2.0]], [0.25, 0.75])
        assert D.mean == pytest.approx([1.5])
        # E|xi - 1.5|^2 = 0.25*2.25 + 0.75*0.25
        assert D.variance == pytest.approx(0.75)

    def test_mass_of(self):
        D = DiscreteDistribution([[0.0], [2.0]], [0.25, 0.75])
        assert D.mass_of([2.0]) == 0.75
        assert D.mass_of([1.0]) == 0.0

    def test_gaussian_requires_symmetry(self):
        with pytest.raises(ValueError, match="symmetric"):
            GaussianDistribution([0.0, 0.0], [[1.0, 0.5], [0.2, 1.0]])

    def test_gaussian_requires_psd(self):
        with pytest.raises(ValueError, match="eigenvalue"):
            GaussianDistribution([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])

    def test_gaussian_variance_is_trace(self):
        G = GaussianDistribution([0.0, 0.0], [[2.0, 0.0], [0.0, 3.0]])
        assert G.variance == pytest.approx(5.0)

    def test_gaussian_sampling_moments(self):
        G = GaussianDistribution([1.0, -1.0], [[2.0, 0.5], [0.5, 1.0]])
        pts = G.sample(np.random.default_rng(0), 200_000)
        assert np.allclose(pts.mean(axis=0), [1.0, -1.0], atol=0.02)
        assert np.allclose(np.cov(pts.T), [[2.0, 0.5], [0.5, 1.0]], atol=0.03)

    def test_json_discrete(self):
        D = distribution_from_obj({"atoms": [[0.0], [1.0]], "weights": [0.5, 0.5]})
        assert isinstance(D, DiscreteDistribution)

    def test_json_gaussian(self):
        G = distribution_from_obj({"gaussian": {"mean": [0.0], "cov": [[1.0]]}})
        assert isinstance(G, GaussianDistribution)

    def test_json_unknown_shape(self):
        with pytest.raises(ValueError):
            distribution_from_obj({"points": [[0.0]]})

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "d.json"
        path.write_text(json.dumps({"atoms": [[0.0], [1.0]], "weights": [0.3, 0.7]}))
        D = load_distribution(path)
        assert D.weights.tolist() == [0.3, 0.7]


class TestPopulationLoss:
    def test_zero_at_origin(self):
        inst = make_instance()
        assert population_loss(inst, [0.0, 0.0], UNIFORM2) == 0.0

    def test_minimum_value(self):
        # mu=1, g = (1,0) everywhere: minimum -|Eg|^2/2 = -0.5 at x = -Eg
        inst = make_instance()
        assert population_loss(inst, [-1.0, 0.0], UNIFORM2) == pytest.approx(-0.5)
        assert inst.minimum(UNIFORM2) == pytest.approx(-0.5)

    def test_direct_evaluation(self):
        # mu=2, g values (2,0) and (-2,0): Eg = 0, loss(x=(1,0)) = 1
        inst = make_instance(mu=2.0, g_vals=((2.0, 0.0), (-2.0, 0.0)))
        assert population_loss(inst, [1.0, 0.0], UNIFORM2) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        inst = make_instance()
        with pytest.raises(ValueError, match="dim"):
            population_loss(inst, [1.0, 0.0, 0.0], UNIFORM2)


class TestPopulationGrad:
    def test_zero_at_minimizer(self):
        inst = make_instance()
        x_star = -inst.g.mean(UNIFORM2) / inst.mu
        assert np.allclose(population_grad(inst, x_star, UNIFORM2), 0.0)

    def test_at_origin(self):
        inst = make_instance(g_vals=((3.0, 4.0), (3.0, 4.0)))
        assert population_grad(inst, [0.0, 0.0], UNIFORM2).tolist() == [3.0, 4.0]

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        inst = make_instance(mu=1.7, g_vals=rng.normal(size=(2, 3)))
        x = rng.normal(size=3)
        grad = population_grad(inst, x, UNIFORM2)
        h = 1e-5
        fd = np.empty(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fd[i] = (
                population_loss(inst, x + e, UNIFORM2)
                - population_loss(inst, x - e, UNIFORM2)
            ) / (2 * h)
        assert np.linalg.norm(fd - grad) <= 1e-6 * max(1.0, np.linalg.norm(grad))


class TestSupVariance:
    def test_bnd(self):
        assert sup_variance(FunctionClassSpec("Bnd", 2.0), UNIFORM2) == 4.0

    def test_lip_scales_with_data_variance(self):
        D = DiscreteDistribution([[0.0], [2.0]], [0.75, 0.25])  # var 0.75
        got = sup_variance(FunctionClassSpec("Lip", 2.0), D)
        assert got == pytest.approx(4.0 * 0.75)

    def test_zero_bound(self):
        assert sup_variance(FunctionClassSpec("Bnd", 0.0), UNIFORM2) == 0.0

    def test_brute_force_never_exceeds_closed_form(self):
        # worst variance over two-valued fields +/-B e1 on <= 6 atoms
        rng = np.random.default_rng(5)
        B = 1.5
        for _ in range(25):
            k = int(rng.integers(2, 7))
            w = rng.random(k)
            w /= w.sum()
            D = DiscreteDistribution(rng.normal(size=(k, 1)), w)
            best = 0.0
            for signs in range(1, 2**k - 1):
                s = np.array([(1 if signs >> j & 1 else -1) for j in range(k)])
                p = w[s > 0].sum()
                best = max(best, 4 * B**2 * p * (1 - p))
            assert best <= sup_variance(FunctionClassSpec("Bnd", B), D) + 1e-12

    def test_brute_force_attains_bound_with_half_mass_split(self):
        D = DiscreteDistribution([[0.0], [1.0], [2.0]], [0.5, 0.3, 0.2])
        inst = hard_instance_bnd(1.0, 1.0, D, split=[0])
        assert inst.g.variance(D) == pytest.approx(
            sup_variance(FunctionClassSpec("Bnd", 1.0), D)
        )


class TestHardInstance:
    def test_half_mass_variance(self):
        inst = hard_instance_bnd(1.0, 1.0, UNIFORM2, split=[0])
        assert inst.g.variance(UNIFORM2) == pytest.approx(1.0)

    def test_constant_field_when_all_mass(self):
        inst = hard_instance_bnd(1.0, 1.0, UNIFORM2, split=[0, 1])
        assert inst.g.variance(UNIFORM2) == pytest.approx(0.0)

    def test_quarter_mass(self):
        D = DiscreteDistribution([[0.0], [1.0], [2.0], [3.0]], [0.25] * 4)
        inst = hard_instance_bnd(2.0, 1.0, D, split=[0])
        assert inst.g.variance(D) == pytest.approx(3.0)

    def test_membership(self):
        inst = hard_instance_bnd(1.0, 1.0, UNIFORM2, split=[0])
        assert membership_on_support(inst.g, UNIFORM2.atoms)

    def test_needs_discrete_support(self):
        G = GaussianDistribution([0.0], [[1.0]])
        with pytest.raises(TypeError):
            hard_instance_bnd(1.0, 1.0, G, split=[0])

    def test_smoothness_ordering_enforced(self):
        with pytest.raises(ValueError, match="L"):
            hard_instance_bnd(1.0, 2.0, UNIFORM2, split=[0], L=1.0)


class TestMembership:
    def test_identity_is_lipschitz(self):
        atoms = np.random.default_rng(0).normal(size=(5, 2))
        assert membership_on_support(identity_field(2), atoms)

    def test_affine_nuclear_norm(self):
        A = np.diag([2.0, 1.0])  # nuclear norm 3
        f = affine_field(A, [0.0, 0.0])
        assert f.spec.bound == pytest.approx(3.0)
        atoms = np.random.default_rng(1).normal(size=(6, 2))
        assert membership_on_support(f, atoms)

    def test_bnd_violation_detected(self):
        f = GradientField(
            lambda pts: 10.0 * pts[:, :1], FunctionClassSpec("Bnd", 1.0), 1
        )
        assert not membership_on_support(f, np.array([[0.0], [1.0]]))

    def test_constant_field_is_tightest_member(self):
        f = constant_field([3.0, -1.0])
        assert membership_on_support(f, np.zeros((3, 2)))
        assert f.spec.bound == 0.0


class TestConvexityProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_strong_convexity_and_smoothness(self, seed):
        rng = np.random.default_rng(seed)
        mu = float(rng.uniform(0.1, 3.0))
        inst = make_instance(mu=mu, g_vals=rng.normal(size=(2, 2)))
        x, y = rng.normal(size=2), rng.normal(size=2)
        lx = population_loss(inst, x, UNIFORM2)
        ly = population_loss(inst, y, UNIFORM2)
        gx = population_grad(inst, x, UNIFORM2)
        gy = population_grad(inst, y, UNIFORM2)
        gap = ly - lx - gx @ (y - x)
        assert gap >= 0.5 * mu * (y - x) @ (y - x) - 1e-9
        assert np.linalg.norm(gx - gy) <= inst.L * np.linalg.norm(x - y) + 1e-9


class TestPLExample:
    def test_minimum_at_origin(self):
        inst = pl_example()
        assert inst.objective(np.zeros(1)) == 0.0
        assert inst.minimum == 0.0

    def test_gradient_dominance_at_half_pi(self):
        inst = pl_example()
        x = np.array([np.pi / 2])
        lhs = inst.objective(x) - inst.minimum
        g = inst.gradient(x)
        assert lhs == pytest.approx(np.pi**2 / 4 + 3.0)
        assert lhs <= float(g @ g) / (2 * inst.mu)

    def test_gradient_matches_finite_differences(self):
        inst = pl_example()
        h = 1e-6
        fd = (inst.objective(np.array([1.0 + h])) - inst.objective(np.array([1.0 - h]))) / (2 * h)
        assert fd == pytest.approx(float(inst.gradient(np.array([1.0]))[0]), rel=1e-6)

    def test_gradient_dominance_on_grid(self):
        inst = pl_example()
        xs = np.arange(-10.0, 10.0, 1e-3)
        fx = xs**2 + 3 * np.sin(xs) ** 2
        gx = 2 * xs + 3 * np.sin(2 * xs)
        assert np.all(fx <= gx**2 / (2 * inst.mu) + 1e-9)
