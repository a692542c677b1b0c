import io
import math

import numpy as np
import pytest

from hcvsim import ModelParams, PsiState, equilibrium, integrate, prevalence, rhs
from hcvsim.odesys import (
    BRANCH_INTERIOR,
    BRANCH_R0_DISEASE_FREE,
    BRANCH_R0_ENDEMIC,
    EquilibriumPoint,
    total_equal_exit,
)


def test_psistate_validation():
    with pytest.raises(ValueError):
        PsiState(-0.1, 1.0)
    with pytest.raises(ValueError):
        PsiState(0.0, 0.0)
    assert PsiState(0.3, 0.7).total == 1.0


def test_rhs_hand_values(ref_params):
    f = rhs(ref_params, (1.0, 1.0))
    assert f[0] == pytest.approx(3.15, rel=1e-15)
    assert f[1] == pytest.approx(2.55, rel=1e-15)


def test_rhs_disease_free_point_is_fixed():
    p = ModelParams(r=0, lam=5, p_i=0.8, alpha=1, p=0.5, mu1=0.1, mu2=0.2)
    f = rhs(p, (0.0, p.lam / p.mu2))
    assert f[0] == 0.0
    assert f[1] == pytest.approx(0.0, abs=1e-14)


def test_rhs_rejects_zero_total(ref_params):
    with pytest.raises(ValueError):
        rhs(ref_params, (0.0, 0.0))


@pytest.mark.parametrize("psi", [(1.0, 1.0), (0.01, 7.3), (120.0, 0.5)])
def test_rhs_total_balance(ref_params, psi):
    # the two components always sum to the linear total-density field
    f = rhs(ref_params, psi)
    expect = (ref_params.r + ref_params.lam - ref_params.mu1 * psi[0]
              - ref_params.mu2 * psi[1])
    assert f[0] + f[1] == pytest.approx(expect, rel=1e-13, abs=1e-13)


def test_integrate_equal_exit_closed_form():
    p = ModelParams(r=1, lam=5, p_i=0.8, alpha=1, p=0.5, mu1=0.3, mu2=0.3)
    x0 = PsiState(2.0, 3.0)
    path = integrate(p, x0, 30.0)
    ts = np.linspace(0.0, 30.0, 101)
    totals = path.sample(ts).sum(axis=1)
    assert np.allclose(totals, total_equal_exit(p, x0, ts), atol=1e-8, rtol=0)


def test_integrate_axis_invariant():
    p = ModelParams(r=0, lam=5, p_i=0.8, alpha=1, p=0.9, mu1=0.1, mu2=0.2)
    path = integrate(p, PsiState(0.0, 1.0), 100.0)
    vals = path.sample(np.linspace(0.0, 100.0, 57))
    assert (vals[:, 0] == 0.0).all()
    assert vals[-1, 1] == pytest.approx(p.lam / p.mu2, rel=1e-6)


def test_integrate_reaches_equilibrium(ref_params):
    path = integrate(ref_params, PsiState(1.0, 1.0), 200.0)
    eq = equilibrium(ref_params)
    psi1, psi2 = path.at(200.0)
    assert math.hypot(psi1 - eq.xi1, psi2 - eq.xi2) < 1e-6


def test_integrate_validation(ref_params):
    with pytest.raises(ValueError):
        integrate(ref_params, PsiState(1, 1), 0.0)
    path = integrate(ref_params, PsiState(1, 1), 1.0)
    with pytest.raises(ValueError):
        path.at(1.5)
    with pytest.raises(ValueError):
        path.at(-0.1)


def test_total_density_derivative_matches_balance(ref_params):
    path = integrate(ref_params, PsiState(1.0, 1.0), 20.0)
    h = 1e-4
    for t in np.linspace(0.5, 19.5, 9):
        lo = path.at(t - h)
        hi = path.at(t + h)
        deriv = (hi[0] + hi[1] - lo[0] - lo[1]) / (2 * h)
        psi1, psi2 = path.at(t)
        expect = ref_params.r + ref_params.lam - ref_params.mu1 * psi1 \
            - ref_params.mu2 * psi2
        assert deriv == pytest.approx(expect, abs=1e-3)


def test_psipath_integral_of(ref_params):
    path = integrate(ref_params, PsiState(1.0, 1.0), 10.0)
    assert path.integral_of(lambda a, b: np.ones_like(a)) == pytest.approx(10.0)
    # linear functions are integrated exactly by Simpson panels
    total = path.integral_of(lambda a, b: a + b, t=4.0)
    assert total > 0


def test_psipath_csv(ref_params):
    path = integrate(ref_params, PsiState(1.0, 1.0), 2.0)
    buf = io.StringIO()
    path.to_csv(np.array([0.0, 1.0, 2.0]), buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "t,psi1,psi2"
    assert len(lines) == 4
    t0, a, b = lines[1].split(",")
    assert (float(t0), float(a), float(b)) == (0.0, 1.0, 1.0)


def test_equilibrium_reference_point(ref_params):
    eq = equilibrium(ref_params)
    assert eq.branch == BRANCH_INTERIOR
    # hand-built intermediates: a = 0.6, b = 6, c = 0.3
    xi1_closed = (3.3 + math.sqrt(3.3**2 + 4 * 0.6 * 0.1 * 6 * 1)) / (2 * 0.6 * 0.1)
    assert eq.xi1 == pytest.approx(xi1_closed, rel=1e-14)
    assert eq.xi1 == pytest.approx(56.76174977679907, rel=1e-14)
    assert eq.xi2 == pytest.approx(1.6191251116004635, rel=1e-13)
    assert np.linalg.norm(rhs(ref_params, (eq.xi1, eq.xi2))) < 1e-10 * 7


def test_equilibrium_total_balance(ref_params):
    for p_val in (0.05, 0.3, 0.8, 1.0):
        pp = ModelParams(r=1, lam=5, p_i=0.8, alpha=1, p=p_val, mu1=0.1, mu2=0.2)
        eq = equilibrium(pp)
        assert pp.mu1 * eq.xi1 + pp.mu2 * eq.xi2 == pytest.approx(
            pp.r + pp.lam, rel=1e-12)


def test_equilibrium_negative_a_branch():
    # alpha*p + mu2 < mu1 makes the quadratic coefficient negative; the
    # returned root must still be the attractor with both coordinates >= 0
    p = ModelParams(r=1, lam=5, p_i=0.8, alpha=0.6, p=0.5, mu1=1.0, mu2=0.2)
    a = p.alpha * p.p - p.mu1 + p.mu2
    assert a < 0
    eq = equilibrium(p)
    assert eq.xi1 >= 0 and eq.xi2 >= 0
    assert np.linalg.norm(rhs(p, (eq.xi1, eq.xi2))) < 1e-10 * (p.r + p.lam + 1)
    path = integrate(p, PsiState(3.0, 3.0), 400.0)
    psi1, psi2 = path.at(400.0)
    assert math.hypot(psi1 - eq.xi1, psi2 - eq.xi2) < 1e-6


def test_equilibrium_degenerate_a():
    # alpha*p = mu1 - mu2 collapses the quadratic to a linear equation
    p = ModelParams(r=1, lam=5, p_i=0.8, alpha=0.6, p=0.5, mu1=0.5, mu2=0.2)
    assert p.alpha * p.p - p.mu1 + p.mu2 == 0.0
    eq = equilibrium(p)
    b = p.r + p.lam
    c = p.r * p.mu1 + p.lam * (1 - p.p_i) * p.mu2
    assert eq.xi1 == pytest.approx(b * p.r / c, rel=1e-14)
    assert np.linalg.norm(rhs(p, (eq.xi1, eq.xi2))) < 1e-10 * (p.r + p.lam + 1)


def test_equilibrium_r0_disease_free():
    p = ModelParams(r=0, lam=5, p_i=0.1, alpha=0.2, p=0.5, mu1=0.5, mu2=0.2)
    assert p.alpha * p.p + p.mu2 * p.p_i <= p.mu1
    eq = equilibrium(p)
    assert eq.branch == BRANCH_R0_DISEASE_FREE
    assert (eq.xi1, eq.xi2) == (0.0, p.lam / p.mu2)


def test_equilibrium_r0_endemic():
    p = ModelParams(r=0, lam=5, p_i=0.8, alpha=1, p=0.5, mu1=0.1, mu2=0.2)
    rho = p.alpha * p.p + p.mu2 * p.p_i - p.mu1
    assert rho > 0
    eq = equilibrium(p)
    assert eq.branch == BRANCH_R0_ENDEMIC
    a = p.alpha * p.p - p.mu1 + p.mu2
    assert eq.xi1 == pytest.approx(p.lam * rho / (a * p.mu1), rel=1e-13)
    assert np.linalg.norm(rhs(p, (eq.xi1, eq.xi2))) < 1e-10 * (p.lam + 1)


def test_prevalence(ref_params):
    eq = equilibrium(ref_params)
    assert prevalence(eq) == pytest.approx(0.9722661725317483, rel=1e-13)
    free = EquilibriumPoint(0.0, 25.0, BRANCH_R0_DISEASE_FREE)
    assert prevalence(free) == 0.0
    for c in (0.5, 3.0):
        scaled = EquilibriumPoint(c * eq.xi1, c * eq.xi2, eq.branch)
        assert prevalence(scaled) == pytest.approx(prevalence(eq), rel=1e-15)
    # an empty fixed point (possible when r = lam = 0) has no infected mass
    assert prevalence(EquilibriumPoint(0.0, 0.0, BRANCH_R0_DISEASE_FREE)) == 0.0
