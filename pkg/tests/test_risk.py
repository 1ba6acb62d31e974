import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import linear_net, random_net, threshold_net
from srrisk.data import Dataset
from srrisk.errors import CapabilityError, ConfigurationError, DomainError, NonDifferentiableLossError
from srrisk.metrics import LossSpec, pointwise_loss
from srrisk.nn import forward
from srrisk.perturb import PerturbationSpec, sample_points
from srrisk.risk import (
    MetricSpec,
    PgdConfig,
    adversarial_risk,
    brute_force_adversarial_risk,
    empirical_risk,
    pgd_attack,
    pointwise_violation_prob,
    srr_estimate,
    tsrm_estimate,
)
from srrisk.rng import Purpose, branch, point_streams

ZO = LossSpec("zero_one")
CE = LossSpec("cross_entropy")


def copies(x, y, n):
    return Dataset(np.full((n, 1), x), np.full(n, y), 2)


def test_threshold_pointwise_probability():
    n = 100_000
    est = pointwise_violation_prob(threshold_net(), [0.1], 1, PerturbationSpec.uniform_linf(0.2), n, seed=0)
    assert abs(est.mean - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / n)
    assert est.std_error == pytest.approx(np.sqrt(est.mean * (1 - est.mean) / n))


def test_threshold_tsrm_matches_pointwise():
    est = tsrm_estimate(threshold_net(), copies(0.1, 1, 400), PerturbationSpec.uniform_linf(0.2), seed=1, k=250)
    assert abs(est.mean - 0.25) <= 3 * est.std_error


def test_tsrm_in_unit_interval(rng):
    net = random_net(rng, [3, 5, 4])
    data = Dataset(rng.normal(size=(30, 3)), rng.integers(0, 4, 30), 4)
    for spec in (PerturbationSpec.gaussian(1.0), PerturbationSpec.uniform_linf(0.5)):
        est = tsrm_estimate(net, data, spec, k=20)
        assert 0 <= est.mean <= 1


def test_dirac_collapses_bitwise(rng):
    net = random_net(rng, [4, 6, 3])
    data = Dataset(rng.normal(size=(50, 4)), rng.integers(0, 3, 50), 3)
    for loss in (ZO, CE):
        a = srr_estimate(net, data, PerturbationSpec.dirac(), loss, k=7, seed=3)
        b = empirical_risk(net, data, loss)
        assert a.mean == b.mean and a.std_error == b.std_error


@pytest.mark.parametrize("k", [1, 2])
def test_srr_against_reference_loop(rng, k):
    net = random_net(rng, [2, 5, 3])
    data = Dataset(rng.normal(size=(25, 2)), rng.integers(0, 3, 25), 3)
    spec = PerturbationSpec.gaussian(0.4)
    terms = []
    for i in range(len(data)):
        g = branch(11, Purpose.EVAL_PERTURB, i)
        for _ in range(k):
            xp = data.inputs[i] + g.normal(0.0, 0.4, size=2)
            terms.append(pointwise_loss(CE, forward(net, xp[None])[0], data.labels[i]))
    est = srr_estimate(net, data, spec, CE, k=k, seed=11)
    ref = np.array(terms)
    assert est.n_terms == len(data) * k
    assert est.mean == pytest.approx(ref.mean(), rel=1e-12)
    assert est.std_error == pytest.approx(ref.std() / np.sqrt(ref.size), rel=1e-10)


def test_std_error_scaling():
    data = copies(0.1, 1, 400)
    spec = PerturbationSpec.uniform_linf(0.2)
    for k in (1, 10, 100):
        est = tsrm_estimate(threshold_net(), data, spec, seed=k, k=k)
        assert est.std_error * np.sqrt(400 * k) == pytest.approx(np.sqrt(0.25 * 0.75), rel=0.2)


def test_partition_and_thread_invariance(rng):
    net = random_net(rng, [5, 8, 3])
    data = Dataset(rng.normal(size=(301, 5)), rng.integers(0, 3, 301), 3)
    spec = PerturbationSpec.uniform_linf(0.3)
    base = srr_estimate(net, data, spec, CE, k=9, seed=5)
    for per, jobs in ((1, 1), (17, 4), (300, 2), (1000, 3)):
        other = srr_estimate(net, data, spec, CE, k=9, seed=5, points_per_chunk=per, n_jobs=jobs)
        assert other.mean == base.mean and other.std_error == base.std_error
    assert empirical_risk(net, data, CE, chunk=7, n_jobs=3).mean == empirical_risk(net, data, CE).mean


def test_srr_seed_changes_draws(rng):
    net = random_net(rng, [2, 4, 2])
    data = Dataset(rng.normal(size=(40, 2)), rng.integers(0, 2, 40), 2)
    spec = PerturbationSpec.gaussian(0.5)
    assert srr_estimate(net, data, spec, CE, 5, seed=0).mean != srr_estimate(net, data, spec, CE, 5, seed=1).mean


def test_estimator_errors(rng):
    net = random_net(rng, [2, 3, 2])
    empty = Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int), 2)
    with pytest.raises(DomainError):
        empirical_risk(net, empty, CE)
    with pytest.raises(DomainError):
        empirical_risk(net, Dataset(np.zeros((3, 5)), np.zeros(3, dtype=int), 2), CE)
    with pytest.raises(ConfigurationError):
        srr_estimate(net, Dataset(np.zeros((3, 2)), np.zeros(3, dtype=int), 2), PerturbationSpec.gaussian(1), CE, k=0)


def test_brute_force_threshold_examples():
    net = threshold_net()
    assert brute_force_adversarial_risk(net, copies(0.1, 1, 1), 0.2).mean == 1
    assert brute_force_adversarial_risk(net, copies(0.5, 1, 1), 0.2).mean == 0
    # the ball edge sits exactly on the boundary, where ties count as violations
    assert brute_force_adversarial_risk(net, copies(0.25, 1, 1), 0.25).mean == 1


def test_brute_force_dimension_limit():
    net = linear_net(np.zeros((2, 4)), np.zeros(2))
    with pytest.raises(CapabilityError):
        brute_force_adversarial_risk(net, Dataset(np.zeros((1, 4)), np.zeros(1, dtype=int), 2), 0.1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 2]), st.sampled_from([0.05, 0.1, 0.3]))
def test_tsrm_below_adversarial(seed, dim, eps):
    rng = np.random.default_rng(seed)
    net = random_net(rng, [dim, 6, 2])
    data = Dataset(rng.uniform(-1, 1, (20, dim)), rng.integers(0, 2, 20), 2)
    tsrm = tsrm_estimate(net, data, PerturbationSpec.uniform_linf(eps), seed=seed, k=50)
    adv = brute_force_adversarial_risk(net, data, eps)
    assert tsrm.mean <= adv.mean + 3 * tsrm.std_error
    assert empirical_risk(net, data, ZO).mean <= adv.mean


def test_pgd_linear_one_step_is_analytic_worst_case(linear2d, rng):
    x = rng.uniform(-1, 1, (50, 2))
    y = rng.integers(0, 2, 50)
    eps = 0.1
    cfg = PgdConfig(eps, steps=1, step_size=eps, random_start=False)
    xa = pgd_attack(linear2d, x, y, cfg)
    # d(CE)/dx points along w_other - w_label
    w = linear2d.weights[0]
    direction = np.where(y[:, None] == 1, w[0] - w[1], w[1] - w[0])
    np.testing.assert_array_equal(xa, x + eps * np.sign(direction))


def test_pgd_matches_brute_force_on_linear(linear2d, points2d):
    for eps in (0.05, 0.1, 0.3):
        cfg = PgdConfig(eps, steps=1, step_size=2 * eps, random_start=False)
        assert adversarial_risk(linear2d, points2d, cfg).mean == brute_force_adversarial_risk(linear2d, points2d, eps).mean


def test_pgd_stays_in_ball(rng):
    net = random_net(rng, [4, 8, 3])
    x = rng.uniform(0, 1, (30, 4))
    y = rng.integers(0, 3, 30)
    cfg = PgdConfig(0.2, steps=5)
    xa = pgd_attack(net, x, y, cfg, rng=branch(0, Purpose.PGD_START))
    assert np.abs(xa - x).max() <= 0.2 + 1e-12
    xc = pgd_attack(net, x, y, PgdConfig(0.2, clip_to_unit_box=True), rng=branch(0, Purpose.PGD_START))
    assert xc.min() >= 0 and xc.max() <= 1


def test_pgd_zero_radius_is_identity(rng):
    net = random_net(rng, [3, 4, 2])
    x = rng.normal(size=(5, 3))
    assert pgd_attack(net, x, np.zeros(5, dtype=int), PgdConfig(0.0)).tobytes() == x.tobytes()
    data = Dataset(x, np.zeros(5, dtype=int), 2)
    assert adversarial_risk(net, data, PgdConfig(0.0)).mean == empirical_risk(net, data, ZO).mean


def test_pgd_increases_loss(rng):
    net = random_net(rng, [6, 10, 3])
    data = Dataset(rng.normal(size=(100, 6)), rng.integers(0, 3, 100), 3)
    adv = adversarial_risk(net, data, PgdConfig(0.3), loss_eval=CE)
    assert adv.mean > empirical_risk(net, data, CE).mean


def test_pgd_errors(rng):
    net = random_net(rng, [2, 3, 2])
    with pytest.raises(NonDifferentiableLossError):
        pgd_attack(net, np.zeros((1, 2)), [0], PgdConfig(0.1, random_start=False), loss=ZO)
    with pytest.raises(ConfigurationError):
        pgd_attack(net, np.zeros((1, 2)), [0], PgdConfig(0.1))
    with pytest.raises(ConfigurationError):
        PgdConfig(-0.1)
    with pytest.raises(ConfigurationError):
        PgdConfig(0.1, steps=0)
    assert PgdConfig(0.3).step_size == pytest.approx(2.5 * 0.3 / 7)


def test_adversarial_risk_partition_invariant(rng):
    net = random_net(rng, [3, 6, 2])
    data = Dataset(rng.normal(size=(90, 3)), rng.integers(0, 2, 90), 2)
    a = adversarial_risk(net, data, PgdConfig(0.2), loss_eval=CE, seed=2)
    b = adversarial_risk(net, data, PgdConfig(0.2), loss_eval=CE, seed=2, chunk=13, n_jobs=3)
    assert a.mean == b.mean


def test_metric_spec_evaluate(rng):
    net = random_net(rng, [2, 4, 2])
    data = Dataset(rng.normal(size=(20, 2)), rng.integers(0, 2, 20), 2)
    m = MetricSpec("atsrm", ZO, PerturbationSpec.uniform_linf(0.1), k=5)
    est = m.evaluate(net, data, seed=4)
    assert est.spec["metric"] == "atsrm"
    assert est.mean == tsrm_estimate(net, data, PerturbationSpec.uniform_linf(0.1), seed=4, k=5).mean
    adv = MetricSpec("adv", ZO, pgd=PgdConfig(0.1)).evaluate(net, data, seed=4)
    assert adv.mean == adversarial_risk(net, data, PgdConfig(0.1), seed=4).mean


def test_sample_points_used_by_srr_are_the_streams(rng):
    xs = rng.uniform(size=(3, 2))
    a = sample_points(PerturbationSpec.gaussian(0.1), xs, point_streams(0, Purpose.EVAL_PERTURB, range(3)), 2)
    b = np.stack([xs[i] + branch(0, Purpose.EVAL_PERTURB, i).normal(0, 0.1, (2, 2)) for i in range(3)])
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


@pytest.mark.parametrize("m", [
    MetricSpec("a", ZO),
    MetricSpec("b", CE, PerturbationSpec.uniform_linf(0.3), k=17),
    MetricSpec("c", ZO, pgd=PgdConfig(0.157, steps=3)),
])
def test_metric_spec_description_round_trip(m):
    assert MetricSpec.from_dict(m.describe()) == m
