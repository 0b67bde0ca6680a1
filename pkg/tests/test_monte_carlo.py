import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limpapr import asymptotics as asy
from limpapr import monte_carlo as mc
from limpapr import special_cases as sc
from limpapr.exceptions import EmptyBranchError, InsufficientDataError
from limpapr.saddle_point import SystemParams, solve_saddle

BASE = SystemParams.from_sigma(delta=1.5, rho=1, lam=0.01, p_max=1, sigma=0.1)


def _record(value, seed=0, size=4):
    x = np.full(size, value)
    s = np.where(np.arange(size) % 2 == 0, 1.0, -1.0)
    return mc.TrialRecord(pb=value, pd=2 * value, ber=0.1, sinr_lb_est=value + 1, sinr_up_est=value + 2,
                          x_entries=x, distortion=x, symbols=s, seed=seed)


def test_generate_instance_statistics():
    inst = mc.generate_instance(400, 600, seed=5)
    assert inst.h.shape == (600, 400)
    assert np.var(inst.h) * 400 == pytest.approx(1.0, rel=0.01)
    assert abs(np.mean(inst.h)) < 3 / math.sqrt(inst.h.size) / math.sqrt(400)
    assert set(np.unique(inst.s)) == {-1.0, 1.0}
    assert abs(np.mean(inst.s)) < 0.1


def test_generate_instance_deterministic():
    a, b = mc.generate_instance(8, 12, seed=3), mc.generate_instance(8, 12, seed=3)
    np.testing.assert_array_equal(a.h, b.h)
    np.testing.assert_array_equal(a.s, b.s)
    c = mc.generate_instance(8, 12, seed=4)
    assert not np.array_equal(a.h, c.h)
    with pytest.raises(ValueError):
        mc.generate_instance(0, 3, seed=1)
    with pytest.raises(ValueError):
        mc.generate_instance(3, 3, seed=-1)


def test_user_count():
    assert mc.user_count(1.5, 256) == 384
    with pytest.raises(ValueError):
        mc.user_count(1e-3, 10)


def test_bit_error_rate_example():
    assert mc.bit_error_rate(np.array([0.3, -0.2, 1.0]), np.array([1.0, 1.0, 1.0])) == pytest.approx(1 / 3)
    # zero received value decodes as +1
    assert mc.bit_error_rate(np.array([0.0]), np.array([1.0])) == 0.0


def test_trial_metrics_definitions():
    inst = mc.generate_instance(4, 6, seed=0)
    x = np.array([0.5, -0.5, 0.25, 0.0])
    noise = np.zeros(6)
    rec = mc.trial_metrics(inst, x, rho=2.0, sigma2=0.01, noise=noise, seed=0)
    e = inst.h @ x - math.sqrt(2.0) * inst.s
    assert rec.pb == pytest.approx(np.mean(x ** 2))
    assert rec.pd == pytest.approx(np.mean(e ** 2))
    assert rec.sinr_lb_est == pytest.approx(2.0 / (rec.pd + 0.01))
    assert rec.sinr_up_est == pytest.approx(np.mean(2.0 / (e ** 2 + 0.01)))
    assert rec.sinr_up_est >= rec.sinr_lb_est
    assert rec.distortion_pairs.shape == (6, 2)


def test_aggregate_basic():
    with pytest.raises(InsufficientDataError):
        mc.aggregate([_record(1.0)])
    same = mc.aggregate([_record(1.0), _record(1.0), _record(1.0)])
    assert same.metrics["pb"].se == 0.0
    assert same.metrics["pb"].mean == 1.0
    assert same.x_pool.size == 12
    rep = mc.aggregate([_record(1.0), _record(3.0)])
    assert rep.metrics["pd"].mean == pytest.approx(4.0)
    assert rep.metrics["pb"].se == pytest.approx(1.0)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 10), min_size=2, max_size=12), st.randoms())
def test_aggregate_permutation_invariant(values, rnd):
    records = [_record(v, seed=i) for i, v in enumerate(values)]
    shuffled = list(records)
    rnd.shuffle(shuffled)
    a, b = mc.aggregate(records), mc.aggregate(shuffled)
    for name in mc.METRICS:
        assert a.metrics[name].mean == pytest.approx(b.metrics[name].mean, rel=1e-12, abs=1e-12)
        assert a.metrics[name].se == pytest.approx(b.metrics[name].se, rel=1e-9, abs=1e-12)


def test_z_score():
    assert mc.MetricSummary(1.0, 0.5, 3, theory=0.0).z == 2.0
    assert mc.MetricSummary(1.0, 0.0, 3, theory=1.0).z == 0.0
    assert mc.MetricSummary(1.0, 0.0, 3, theory=0.0).z == math.inf
    assert mc.MetricSummary(1.0, 0.5, 3).z is None


def test_w2_properties():
    sp = solve_saddle(BASE)
    a = mc.sample_theta(sp, BASE, 2000, seed=1)
    assert mc._w2_sorted(a, a) == 0.0
    assert mc._w2_sorted(a + 0.3, a) == pytest.approx(0.3)
    self_distance = mc.w2_self_distance(sp, BASE, 100_000, seed=2, replicates=3)
    assert self_distance < 0.02
    with pytest.raises(ValueError):
        mc.wasserstein2_solution(a, sp, BASE, law_samples=10)
    # larger law sample: quantiles read at midpoint levels
    assert mc.wasserstein2_solution(a, sp, BASE, law_samples=20000, seed=9) < 0.1


def test_ks_on_law_samples():
    sp = solve_saddle(BASE)
    law = asy.distortion_law(sp, BASE)
    rng = np.random.default_rng(0)
    s = rng.choice([-1.0, 1.0], size=4000)
    e = np.where(s > 0, law.mean_given_s_plus, law.mean_given_s_minus) + law.std * rng.standard_normal(s.size)
    plus, minus = mc.distortion_ks(e, s, law)
    assert plus < 1.63 / math.sqrt(np.sum(s > 0))
    assert minus < 1.63 / math.sqrt(np.sum(s < 0))
    # swapping the branches moves each by twice the conditional mean
    swapped = mc.distortion_ks(e, -s, law)
    assert min(swapped) > 0.1


def test_ks_point_mass_and_empty_branch():
    law = asy.DistortionLaw(mean_given_s_plus=-0.5, mean_given_s_minus=0.5, std=0.0)
    e = np.array([-0.5, -0.5, 0.5, 0.5])
    s = np.array([1.0, 1.0, -1.0, -1.0])
    assert mc.distortion_ks(e, s, law) == (0.0, 0.0)
    assert mc.distortion_ks(e + 1.0, s, law) == (1.0, 1.0)
    with pytest.raises(EmptyBranchError):
        mc.distortion_ks(np.zeros(3), np.ones(3), asy.distortion_law(solve_saddle(BASE), BASE))


def test_run_experiment_rejects_single_trial():
    with pytest.raises(InsufficientDataError):
        mc.run_experiment(BASE, n=16, trials=1)


def test_one_bit_power():
    rep = mc.run_experiment(BASE.replace(p_max=2.5), n=32, trials=3, method="onebit")
    assert rep.metrics["pb"].mean == pytest.approx(2.5)
    assert rep.metrics["pb"].se == 0.0


def test_rzf_consistent_with_limit():
    p = SystemParams.from_sigma(delta=2, rho=1, lam=1, p_max=1, sigma=0.1)
    rep = mc.run_experiment(p, n=256, trials=20, method="rzf")
    lim = sc.rzf_limit(p)
    for name, value in (("pb", lim.pb), ("pd", lim.pd), ("sinr_lb_est", lim.sinr_lb)):
        assert abs(rep.metrics[name].mean - value) < 4 * rep.metrics[name].se + 0.01 * value


def test_limited_papr_against_theory():
    sp = solve_saddle(BASE)
    rep = mc.run_experiment(BASE, n=128, trials=10, base_seed=3, saddle=sp)
    assert rep.theory == asy.report_from_saddle(sp, BASE)
    for name in ("pb", "pd", "sinr_lb_est"):
        assert abs(rep.metrics[name].z) < 4
    assert rep.wasserstein2_x < 3 * rep.w2_self_distance
    assert rep.ks_distortion_plus < 2 * rep.ks_critical_plus


def test_parallel_equals_serial():
    serial = mc.run_experiment(BASE, n=24, trials=4, base_seed=5, n_jobs=1)
    parallel = mc.run_experiment(BASE, n=24, trials=4, base_seed=5, n_jobs=2)
    for name in mc.METRICS:
        assert serial.metrics[name].mean == parallel.metrics[name].mean
        assert serial.metrics[name].se == parallel.metrics[name].se
    np.testing.assert_array_equal(serial.x_pool, parallel.x_pool)


def test_trial_keyed_by_seed():
    a = mc.run_trial(BASE, 16, seed=7)
    b = mc.run_trial(BASE, 16, seed=7)
    np.testing.assert_array_equal(a.x_entries, b.x_entries)
    assert a.ber == b.ber
