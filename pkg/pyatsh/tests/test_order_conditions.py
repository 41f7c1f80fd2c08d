import numpy as np
import pytest

import pyatsh

pyatsh.set_loggers('ERROR')

ORDERS = {'numerov4': 4, 'atsh5-minerr': 5, 'atsh5-pl8': 5, 'atsh4-zd': 4}


@pytest.mark.parametrize("nu", [0.0, 0.1, 1.0, 2.5])
@pytest.mark.parametrize("method, p", ORDERS.items())
def test_verify_order(method, p, nu):
    assert pyatsh.verify_order(pyatsh.build(method, nu)) == p


@pytest.mark.parametrize("method, p", ORDERS.items())
def test_classical_companion_order(method, p):
    assert pyatsh.verify_order(pyatsh.build('classical:' + method)) == p


@pytest.mark.parametrize("nu", [0.1, 1.0, 2.5])
@pytest.mark.parametrize("method, p", ORDERS.items())
def test_residual_pattern(method, p, nu):
    res = pyatsh.residuals(pyatsh.build(method, nu))
    assert max(abs(r.residual) for r in res if r.rho <= p + 1) <= 1e-11
    assert max(abs(r.residual) for r in res if r.rho == p + 2) > 1e-6


def test_residuals_selection():
    t = pyatsh.build('numerov4', 0.3)
    assert len(pyatsh.residuals(t)) == 23
    assert [r.tree_id for r in pyatsh.residuals(t, 4)] == ['t21', 't31', 't41', 't42']
    with pytest.raises(ValueError):
        pyatsh.residuals(t, 8)
    with pytest.raises(ValueError):
        pyatsh.residuals(t, 1)


def test_first_conditions():
    nu = 0.8
    t = pyatsh.build('atsh5-pl8', nu)
    res = {r.tree_id: r for r in pyatsh.residuals(t, 4)}
    assert res['t21'].rhs == pytest.approx(2 * pyatsh.phi(2, nu))
    assert res['t41'].rhs == pytest.approx(4 * pyatsh.phi(4, nu))
    assert res['t31'].rhs == 0.0


def test_residual_table():
    df = pyatsh.residual_table(pyatsh.build('atsh4-zd', 1.0))
    assert list(df.columns) == ['tree_id', 'rho', 'lhs', 'rhs', 'residual', 'passed']
    assert len(df) == 23
    assert df.loc[df.rho <= 5, 'passed'].all()
    assert not df.loc[df.rho == 6, 'passed'].all()


def test_perturbation_breaks_order():
    t = pyatsh.build('numerov4', 1.0)
    assert pyatsh.verify_order(t.perturbed(2, 1, 1e-3)) == 2


def test_simplifying_assumption():
    assert pyatsh.simplifying_check(pyatsh.build('numerov4', 0.7)) == 0.0
    t = pyatsh.build('atsh5-minerr', 0.7)
    c = t.c
    np.testing.assert_allclose(t.A[2].sum(), (c[2] ** 2 + c[2]) / 2, rtol=1e-14)
