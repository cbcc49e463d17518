"""Problem instances and the stochastic oracle."""

import numpy as np
import pytest

from rsmd import geometry as geo
from rsmd import problems as prob
from rsmd.geometry import CompositePenalty, FeasibleSet, GeometryError, GeometrySetup


def test_make_instance_1d_hand_solvable():
    inst = prob.make_instance(1, [1.0], set_=FeasibleSet.box([0.0], [2.0]),
                              b=np.array([0.0]))
    assert inst.xstar == pytest.approx([0.0], abs=1e-10)
    assert inst.Fstar == pytest.approx(0.0, abs=1e-12)
    assert inst.L == pytest.approx(1.0)


def test_make_instance_2d_interior_minimum():
    inst = prob.make_instance(2, [1.0, 1.0], set_=FeasibleSet.ball([0.0, 0.0], 10.0),
                              b=np.array([1.0, 0.0]))
    np.testing.assert_allclose(inst.xstar, [1.0, 0.0], atol=1e-9)
    assert inst.Fstar == pytest.approx(-0.5, abs=1e-12)


def test_make_instance_optimality_by_sampling(rng):
    inst = prob.make_instance(10, rng.uniform(0.5, 3.0, 10),
                              set_=FeasibleSet.ball(np.zeros(10), 2.0), seed=3)
    X = inst.set_.sample(inst.geometry, rng, size=10 ** 4)
    vals = 0.5 * np.einsum("ij,jk,ik->i", X, inst.A, X) - X @ inst.b
    assert inst.Fstar <= vals.min() + 1e-10


def test_objective_values():
    inst = prob.make_instance(1, [1.0], set_=FeasibleSet.box([0.0], [2.0]),
                              b=np.array([0.0]))
    assert prob.objective(inst, np.array([0.5])) == pytest.approx(0.125)
    assert prob.objective(inst, inst.xstar) == pytest.approx(inst.Fstar, abs=1e-12)


def test_objective_membership_check():
    inst = prob.make_instance(1, [1.0], set_=FeasibleSet.box([0.0], [2.0]),
                              b=np.array([0.0]))
    with pytest.raises(GeometryError):
        prob.objective(inst, np.array([3.0]))


def test_objective_convexity_midpoints(rng):
    inst = prob.make_instance(4, [0.5, 1.0, 2.0, 3.0],
                              set_=FeasibleSet.ball(np.zeros(4), 5.0),
                              penalty=CompositePenalty.l1(0.3), seed=1)
    X = inst.set_.sample(inst.geometry, rng, size=1000)
    Z = inst.set_.sample(inst.geometry, rng, size=1000)
    for x, z in zip(X, Z):
        mid = prob.objective(inst, 0.5 * (x + z))
        assert mid <= 0.5 * (prob.objective(inst, x) + prob.objective(inst, z)) + 1e-12


def test_lipschitz_property_sampled(rng):
    for kind in (geo.EUCLIDEAN, geo.L1):
        inst = prob.make_instance(6, rng.uniform(0.2, 2.0, 6), geometry_kind=kind,
                                  set_=FeasibleSet.ball(np.zeros(6), 3.0), seed=5)
        setup = inst.geometry
        X = inst.set_.sample(setup, rng, size=2000)
        Z = inst.set_.sample(setup, rng, size=2000)
        for x, z in zip(X, Z):
            lhs = geo.dual_norm(setup, inst.grad_phi(x) - inst.grad_phi(z))
            assert lhs <= inst.L * setup.norm(x - z) + 1e-9


def test_quadratic_growth_for_kappa_instances(rng):
    inst = prob.make_instance(5, np.full(5, 1.0),
                              set_=FeasibleSet.ball(np.zeros(5), 4.0),
                              target=np.full(5, 0.2), seed=2)
    assert inst.kappa == pytest.approx(1.0)
    X = inst.set_.sample(inst.geometry, rng, size=10 ** 4)
    gaps = np.array([prob.objective(inst, x) - inst.Fstar for x in X])
    dists = np.linalg.norm(X - inst.xstar, axis=1)
    assert np.all(gaps >= 0.5 * inst.kappa * dists ** 2 - 1e-9)


# ---------------------------------------------------------------------------
# noise calibration and the oracle
# ---------------------------------------------------------------------------


def _euclid_setup(n):
    return GeometrySetup(geo.EUCLIDEAN, n, np.zeros(n), 1.0)


def test_zero_sigma_gives_none_model():
    assert prob.calibrate_noise("gaussian", 0.0, _euclid_setup(3)).kind == "none"


def test_none_noise_returns_exact_gradient(rng):
    inst = prob.make_instance(3, [1.0, 1.0, 1.0],
                              set_=FeasibleSet.ball(np.zeros(3), 5.0), seed=4)
    noise = prob.calibrate_noise("none", 0.0, inst.geometry)
    x = np.array([0.1, -0.2, 0.3])
    np.testing.assert_array_equal(prob.sample_gradient(inst, noise, x, rng),
                                  inst.grad_phi(x))


def test_student_t_scale_variance_algebra():
    model = prob.calibrate_noise("student_t", 1.0, _euclid_setup(1), df=3.0)
    assert model.scale ** 2 == pytest.approx(1.0 / 3.0)


def test_infinite_variance_parameters_rejected():
    with pytest.raises(GeometryError):
        prob.calibrate_noise("pareto", 1.0, _euclid_setup(2), alpha=2.0)
    with pytest.raises(GeometryError):
        prob.calibrate_noise("student_t", 1.0, _euclid_setup(2), df=1.5)


def test_gaussian_oracle_unbiased(rng):
    inst = prob.make_instance(2, [1.0, 1.0], set_=FeasibleSet.ball(np.zeros(2), 5.0),
                              b=np.array([0.3, -0.4]), sigma=1.0)
    noise = prob.calibrate_noise("gaussian", 1.0, inst.geometry)
    x = np.array([0.5, 0.5])
    draws = inst.grad_phi(x) + noise.draw(rng, size=10 ** 5)
    np.testing.assert_allclose(draws.mean(axis=0), inst.grad_phi(x), atol=0.02)


def test_pareto_calibration_heavy_tail_band(rng):
    # raw empirical second moment at 1e6 draws sits in the asymmetric band
    setup = _euclid_setup(2)
    model = prob.calibrate_noise("pareto", 1.0, setup, alpha=2.5)
    d = model.draw(rng, size=10 ** 6)
    emp = float(np.mean((d * d).sum(axis=1)))
    assert 0.8 <= emp <= 1.05


def test_gaussian_calibration_tight(rng):
    for setup in (_euclid_setup(3), GeometrySetup(geo.L1, 5, np.zeros(5), 1.0)):
        model = prob.calibrate_noise("gaussian", 2.0, setup)
        d = model.draw(rng, size=10 ** 6)
        if setup.kind == geo.EUCLIDEAN:
            emp = float(np.mean((d * d).sum(axis=1)))
        else:
            emp = float(np.mean(np.max(np.abs(d), axis=1) ** 2))
        assert emp == pytest.approx(4.0, rel=0.02)


@pytest.mark.parametrize("kind,param", [("pareto", {"alpha": 2.2}),
                                        ("student_t", {"df": 3.0})])
def test_linf_calibration_two_sample_truncated(kind, param, rng):
    """Two-sample audit at 2%: the truncated second moment has finite
    variance even for heavy tails, so the fitted scale is checkable."""
    setup = GeometrySetup(geo.L1, 10, np.zeros(10), 1.0)
    model = prob.calibrate_noise(kind, 1.0, setup, **param)
    T = 50.0 * model.scale
    d = model.draw(rng, size=10 ** 6)
    emp = float(np.mean(np.minimum(np.max(np.abs(d), axis=1), T) ** 2))
    # quadrature reference for the truncated moment at the fitted scale
    ref = _truncated_linf_moment(kind, 10, T / model.scale,
                                 param.get("df", 3.0), param.get("alpha", 2.5)) \
        * model.scale ** 2
    assert emp == pytest.approx(ref, rel=0.02)
    # and the untruncated quadrature moment reproduces sigma^2 exactly
    full = prob.dual_second_moment(kind, 10, "linf", df=param.get("df", 3.0),
                                   alpha=param.get("alpha", 2.5))
    assert full * model.scale ** 2 == pytest.approx(1.0, rel=1e-6)


def _truncated_linf_moment(kind, n, T, df, alpha):
    import math
    lo, m = 1e-8, 20001
    grid = np.exp(np.linspace(math.log(lo), math.log(T), m))
    mids = np.sqrt(grid[:-1] * grid[1:])
    h = (math.log(T) - math.log(lo)) / (m - 1)

    def integ(x):
        S = prob._abs_tail(kind, x, df, alpha)
        return 2.0 * x * x * (1.0 - (1.0 - S) ** n)

    total = float(np.sum((h / 6.0) * (integ(grid[:-1]) + integ(grid[1:])
                                      + 4.0 * integ(mids))))
    return total + lo * lo


def test_symmetrized_draws_have_exact_zero_mean_structure(rng):
    model = prob.calibrate_noise("pareto", 1.0, _euclid_setup(1), alpha=2.5)
    d = model.draw(rng, size=200000)[:, 0]
    # signs are symmetric by construction: the sign field is independent
    assert abs(np.mean(np.sign(d))) < 0.01


def test_draw_shapes():
    model = prob.calibrate_noise("gaussian", 1.0, _euclid_setup(4))
    rng = np.random.default_rng(0)
    assert model.draw(rng).shape == (4,)
    assert model.draw(rng, size=7).shape == (7, 4)
