import math

import numpy as np
import pytest

from hcvsim import ModelParams, State, incidence, infected_fraction, rates, scale
from hcvsim.model import rates_along


def test_param_validation():
    with pytest.raises(ValueError):
        ModelParams(r=-1, lam=5, p_i=0.8, alpha=1, p=0.5, mu1=0.1, mu2=0.2)
    with pytest.raises(ValueError):
        ModelParams(r=1, lam=5, p_i=1.5, alpha=1, p=0.5, mu1=0.1, mu2=0.2)
    with pytest.raises(ValueError):
        ModelParams(r=1, lam=5, p_i=0.8, alpha=1, p=-0.1, mu1=0.1, mu2=0.2)
    with pytest.raises(ValueError):
        ModelParams(r=1, lam=5, p_i=0.8, alpha=1, p=0.5, mu1=0.0, mu2=0.2)


def test_state_validation():
    with pytest.raises(ValueError):
        State(-1, 0)
    assert State(3, 4).total == 7


def test_infected_fraction():
    assert infected_fraction(State(0, 7)) == 0.0
    assert infected_fraction(State(3, 1)) == 0.75
    # empty-population convention
    assert infected_fraction(State(0, 0)) == 0.0


def test_rates_no_infected(ref_params):
    # f = 0 kills both infection-linked terms
    assert np.array_equal(rates(ref_params, State(0, 10)),
                          [1.0, 0.0, 0.0, 5.0, 2.0])


def test_rates_no_susceptible(ref_params):
    # f = 1 and n2 = 0
    assert np.array_equal(rates(ref_params, State(10, 0)),
                          [5.0, 1.0, 0.0, 1.0, 0.0])


def test_rates_mixed_state(ref_params):
    got = rates(ref_params, State(10, 10))
    assert np.allclose(got, [3.0, 1.0, 2.5, 3.0, 2.0], rtol=1e-15, atol=0)


def test_rates_empty_state(ref_params):
    assert np.array_equal(rates(ref_params, State(0, 0)),
                          [1.0, 0.0, 0.0, 5.0, 0.0])


def test_rates_along_matches_pointwise(ref_params):
    n1 = np.array([0, 3, 10, 0])
    n2 = np.array([0, 5, 10, 4])
    block = rates_along(ref_params, n1, n2)
    for i in range(len(n1)):
        assert np.array_equal(block[i], rates(ref_params, State(n1[i], n2[i])))


def test_scale(ref_params):
    s = scale(ref_params, 100)
    assert (s.r, s.lam) == (100.0, 500.0)
    assert (s.p_i, s.alpha, s.p, s.mu1, s.mu2) == (0.8, 1.0, 0.5, 0.1, 0.2)
    z = ModelParams(r=0, lam=5, p_i=0.8, alpha=1, p=0.5, mu1=0.1, mu2=0.2)
    assert scale(z, 10).r == 0.0 and scale(z, 10).lam == 50.0


def test_scale_composition(ref_params):
    assert scale(scale(ref_params, 2), 3) == scale(ref_params, 6)


def test_scale_rejects_bad_n(ref_params):
    with pytest.raises(ValueError):
        scale(ref_params, 0)


def test_incidence(ref_params):
    assert incidence(ref_params, State(50, 50)) == 0.06
    dead = ModelParams(r=0, lam=0, p_i=0.8, alpha=1, p=0.5, mu1=0.1, mu2=0.2)
    assert incidence(dead, State(3, 4)) == 0.0
    with pytest.raises(ValueError):
        incidence(ref_params, State(0, 0))


def test_arrival_split_identity(ref_params):
    for s in [State(0, 0), State(1, 0), State(0, 1), State(17, 3), State(2, 998)]:
        q = rates(ref_params, s)
        assert math.isclose(q[0] + q[3], ref_params.r + ref_params.lam,
                            rel_tol=1e-14)
