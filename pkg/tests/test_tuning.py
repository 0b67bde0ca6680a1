import pytest

from limpapr import tuning
from limpapr.exceptions import NonMonotoneError, TargetUnreachableError
from limpapr.saddle_point import SystemParams

TUNE_BASE = SystemParams.from_sigma(delta=1.5, rho=1, lam=0.01, p_max=2, sigma=0.1)


def test_zf_large_cap():
    # with the cap far away pb_star = rho / (delta - 1) = rho
    p = SystemParams.from_sigma(delta=2, rho=5, lam=0, p_max=100, sigma=0.1)
    res = tuning.rho_for_target_pb(1.0, p)
    assert res.rho == pytest.approx(1.0, rel=1e-5)
    assert abs(res.achieved_pb - 1.0) <= 1e-6


@pytest.mark.parametrize("fraction", [0.05, 0.3, 0.7, 0.95])
def test_round_trip(fraction):
    target = fraction * TUNE_BASE.p_max
    res = tuning.rho_for_target_pb(target, TUNE_BASE)
    assert abs(tuning.pb_star(TUNE_BASE, res.rho) - target) <= 1e-6
    lo, hi = res.bracket
    assert lo <= res.rho <= hi
    assert res.iterations > 0


def test_unreachable_and_invalid():
    with pytest.raises(TargetUnreachableError):
        tuning.rho_for_target_pb(TUNE_BASE.p_max, TUNE_BASE)
    with pytest.raises(TargetUnreachableError):
        tuning.rho_for_target_pb(3 * TUNE_BASE.p_max, TUNE_BASE)
    with pytest.raises(ValueError):
        tuning.rho_for_target_pb(0.0, TUNE_BASE)


def test_tiny_target_extends_bracket_down():
    res = tuning.rho_for_target_pb(1e-8, TUNE_BASE, tol=1e-10)
    assert res.bracket[0] < 1e-6
    assert abs(res.achieved_pb - 1e-8) <= 1e-10


def test_non_monotone_detected(monkeypatch):
    real = tuning.pb_star

    def bumpy(params, rho):
        value = real(params, rho)
        # a dip inside the final bracket [1, 4]
        return value - 0.5 if 2.0 < rho < 3.5 else value

    monkeypatch.setattr(tuning, "pb_star", bumpy)
    with pytest.raises(NonMonotoneError):
        tuning.rho_for_target_pb(1.0, TUNE_BASE)
