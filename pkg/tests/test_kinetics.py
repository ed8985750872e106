import numpy as np
import pytest
from hypothesis import given, strategies as st

from reptaxis.kinetics import ModelParams, chi, reaction_f, reaction_g, removed_update

BASELINE = ModelParams(K=15.0, lambda_S=0.5, lambda_I=0.5, mu_S=0.01, mu_I=0.05)
unit = st.floats(0, 1)
nonneg = st.floats(0, 10)


@pytest.mark.parametrize("S, expected", [(1.0, 0.0), (0.0, 15.0), (0.5, 7.5)])
def test_chi(S, expected):
    assert chi(S, 15.0) == expected


def test_chi_constant_reading():
    assert chi(0.3, 15.0, mode="constant") == 15.0


def test_f_values():
    assert reaction_f(0.0, 0.7, BASELINE) == 0.0
    assert reaction_f(1.0, 0.0, BASELINE) == 0.0
    assert reaction_f(0.5, 0.5, BASELINE) == pytest.approx(-0.1225, abs=1e-16)


def test_g_values():
    assert reaction_g(0.0, 1.0, BASELINE) == pytest.approx(-0.05, abs=1e-16)
    assert reaction_g(1.0, 0.0, BASELINE) == 0.0
    assert reaction_g(0.5, 0.5, BASELINE) == pytest.approx(0.1, abs=1e-16)


def test_origin_is_not_a_division_fault():
    with np.errstate(all="raise"):
        assert reaction_f(0.0, 0.0, BASELINE) == 0.0
        assert reaction_g(np.zeros(3), np.zeros(3), BASELINE).tolist() == [0, 0, 0]


def test_removed_update():
    R = np.zeros(4)
    assert np.array_equal(removed_update(R, np.zeros(4), 0.05, 0.1), R)
    np.testing.assert_allclose(removed_update(R, np.ones(4), 0.05, 0.1), 0.005, rtol=1e-15)
    assert np.array_equal(removed_update(R + 0.3, np.ones(4), 0.0, 0.1), R + 0.3)


@pytest.mark.parametrize("field", ["K", "lambda_S", "lambda_I", "mu_S", "mu_I", "eps_reg"])
def test_params_reject_negative(field):
    with pytest.raises(ValueError, match=field):
        ModelParams(**{field: -1.0})


def test_params_reject_large_eps_and_unknown_mode():
    with pytest.raises(ValueError):
        ModelParams(eps_reg=1.5)
    with pytest.raises(ValueError):
        ModelParams(chi_mode="linear")


def test_f_bounded_on_lattice():
    s, i = np.meshgrid(np.linspace(0, 1, 101), np.linspace(0, 5, 101), indexing="ij")
    bound = (BASELINE.lambda_S + BASELINE.mu_S) * s
    assert np.all(np.abs(reaction_f(s, i, BASELINE)) <= bound + 1e-15)


@given(S=unit)
def test_g_vanishes_without_infected(S):
    assert reaction_g(S, 0.0, BASELINE) == 0.0


@given(I=nonneg)
def test_f_vanishes_without_susceptibles(I):
    assert reaction_f(0.0, I, BASELINE) == 0.0


@given(R=st.floats(0, 5), I=nonneg, mu=st.floats(0, 1), dt=st.floats(1e-6, 1))
def test_removed_monotone(R, I, mu, dt):
    assert removed_update(R, I, mu, dt) >= R


@given(s1=unit, s2=unit, K=st.floats(0, 50))
def test_chi_decreasing(s1, s2, K):
    lo, hi = min(s1, s2), max(s1, s2)
    assert chi(lo, K) >= chi(hi, K)
