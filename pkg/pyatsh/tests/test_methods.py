import math

import numpy as np
import pytest

import pyatsh
from pyatsh import Classical, MethodId

pyatsh.set_loggers('ERROR')

ADAPTED = [m.value for m in MethodId]


def test_classical_numerov():
    t = pyatsh.build('classical:numerov4')
    np.testing.assert_allclose(t.b, [1 / 12, 10 / 12, 1 / 12], rtol=1e-15)
    np.testing.assert_array_equal(t.c, [-1, 0, 1])
    assert not t.adapted
    assert t.two_phi0 == 2.0


@pytest.mark.parametrize("method", ADAPTED)
def test_classical_limit(method):
    adapted = pyatsh.build(method, 1e-6)
    classical = pyatsh.build('classical:' + method)
    assert adapted.max_abs_diff(classical) <= 1e-10


@pytest.mark.parametrize("nu", [0.0, 0.5, 2.0])
@pytest.mark.parametrize("method", ADAPTED)
def test_structure(method, nu):
    t = pyatsh.build(method, nu)
    assert t.is_explicit()
    np.testing.assert_array_equal(t.c[:2], [-1, 0])
    assert not t.A[:2].any()
    assert t.two_phi0 == pytest.approx(2 * math.cos(nu), rel=1e-15)


def test_nodes():
    assert pyatsh.build('atsh5-minerr', 0.4).c[2] == 0.63
    assert pyatsh.build('atsh5-pl8', 0.4).c[2] == 25 / 28
    np.testing.assert_array_equal(pyatsh.build('atsh4-zd', 0.4).c, [-1, 0, 13 / 20, -5 / 7])


def test_read_only():
    t = pyatsh.build('atsh5-minerr', 0.2)
    with pytest.raises(ValueError):
        t.A[0, 0] = 1.0


def test_perturbed():
    t = pyatsh.build('numerov4', 1.0)
    p = t.perturbed(2, 1, 1e-3)
    assert p.A[2, 1] == t.A[2, 1] + 1e-3
    assert t.A[2, 1] == 1.0
    assert t.max_abs_diff(p) == pytest.approx(1e-3)


def test_declared_orders():
    assert [(t.p, t.q, t.r) for t in map(pyatsh.build, ADAPTED)] == [
        (4, 4, math.inf), (5, 6, 5), (5, 8, 5), (4, 6, math.inf)]
    assert pyatsh.build('atsh4-zd').zero_dissipative
    assert not pyatsh.build('atsh5-pl8').zero_dissipative


@pytest.mark.parametrize("name, expected", [
    ('numerov4', MethodId.ADAPTED_NUMEROV4),
    (' ATSH5-MinErr ', MethodId.ATSH5_MIN_ERR),
    ('classical:atsh4-zd', Classical(MethodId.ATSH4_ZERO_DISS)),
    (MethodId.ATSH5_PHASE8, MethodId.ATSH5_PHASE8),
])
def test_parse_method(name, expected):
    assert pyatsh.parse_method(name) == expected


def test_parse_method_errors():
    with pytest.raises(ValueError, match='Choose from'):
        pyatsh.parse_method('rk4')
    with pytest.raises(TypeError):
        pyatsh.parse_method(5)
    with pytest.raises(TypeError):
        Classical('numerov4')


def test_names_and_labels():
    assert pyatsh.method_name(Classical(MethodId.ATSH5_MIN_ERR)) == 'classical:atsh5-minerr'
    assert pyatsh.method_label('atsh5-minerr') == 'ATSH5(6,5)'
    assert pyatsh.method_label('classical:atsh4-zd') == 'classical ATSH4(6,inf)'
    assert len(pyatsh.available_methods()) == 8
    assert pyatsh.available_methods(classical=False) == ADAPTED


def test_build_errors():
    with pytest.raises(ValueError):
        pyatsh.build('numerov4', -0.1)
    with pytest.raises(ValueError):
        pyatsh.build('numerov4', float('inf'))


def test_classical_ignores_nu():
    assert pyatsh.build('classical:atsh4-zd', 2.0).nu == 0.0


def test_singular_coefficient(monkeypatch):
    # Every phi_4 check fails with this tolerance
    monkeypatch.setattr(pyatsh.config, 'singular_rtol', 10.0)
    with pytest.raises(pyatsh.SingularCoefficient) as e:
        pyatsh.build('atsh5-minerr', 0.314159)
    assert e.value.factor == 'phi_4'
    assert isinstance(e.value, ValueError)
    # numerov4 has no denominators
    pyatsh.build('numerov4', 0.314159)


def test_to_frame():
    df = pyatsh.build('atsh5-pl8', 0.5).to_frame()
    assert list(df.columns) == ['c', 'a_1', 'a_2', 'a_3', 'a_4', 'b']
    assert df.shape == (4, 6)
