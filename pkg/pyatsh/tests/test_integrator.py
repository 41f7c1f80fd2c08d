import numpy as np
import pytest

import pyatsh
from pyatsh.integrator import _grid

pyatsh.set_loggers('ERROR')
pyatsh.set_pbars(hide=True)

ADAPTED = ['numerov4', 'atsh5-minerr', 'atsh5-pl8', 'atsh4-zd']
ORDER = {'numerov4': 4, 'atsh5-minerr': 5, 'atsh5-pl8': 5, 'atsh4-zd': 4}


@pytest.fixture(scope='module')
def problem1():
    return pyatsh.make_problem('problem1')


@pytest.fixture(scope='module')
def problem4():
    return pyatsh.make_problem('problem4')


@pytest.mark.parametrize("method", ADAPTED)
def test_unperturbed_is_exact(method):
    p = pyatsh.make_problem('harmonic')
    res = pyatsh.integrate(method, p, 0.1)
    assert res.steps == 1000
    assert res.max_global_error <= 1e-9


@pytest.mark.parametrize("mode", ['oracle', 'series'])
def test_starters(problem1, mode):
    h = 0.125
    exact, cost = pyatsh.start_value(problem1, h, 'exact')
    assert cost == 0
    y1, cost = pyatsh.start_value(problem1, h, mode)
    assert cost > 0
    np.testing.assert_allclose(y1, exact, rtol=0, atol=1e-12)


def test_starter_errors(problem1):
    with pytest.raises(pyatsh.ExactUnavailable):
        pyatsh.start_value(pyatsh.make_problem('problem3'), 0.1, 'exact')
    with pytest.raises(ValueError, match='Unknown starter'):
        pyatsh.start_value(problem1, 0.1, 'taylor')
    with pytest.raises(ValueError):
        pyatsh.start_value(problem1, 0.0)


@pytest.mark.parametrize("method, evals", [('numerov4', 1599), ('atsh5-minerr', 2398),
                                           ('atsh4-zd', 2398),
                                           ('classical:atsh5-pl8', 2398)])
def test_g_evals(problem1, method, evals):
    res = pyatsh.integrate(method, problem1, 0.125)
    assert res.steps == 800
    assert res.g_evals == evals
    assert res.starter_evals == 0
    assert res.total_evals(count_starter=True) == evals


def test_step_reuses_g(problem1):
    tableau = pyatsh.build('atsh5-minerr', 10 * 0.125)
    state = pyatsh.TwoStepState(x_n=0.125, y_prev=problem1.y0,
                                y_curr=problem1.exact(0.125))
    state = pyatsh.step(tableau, problem1, state, 0.125)
    assert state.g_evals == 4
    state = pyatsh.step(tableau, problem1, state, 0.125)
    assert state.g_evals == 7
    np.testing.assert_allclose(state.y_curr, problem1.exact(0.375), atol=1e-5)


def test_shortened_final_step(problem1):
    assert _grid(problem1, 0.03) == (3333, pytest.approx(0.01))
    res = pyatsh.integrate('numerov4', problem1, 0.03)
    assert len(res.xs) == 3335
    assert res.xs[-1] == 100.0
    assert res.max_global_error < 1e-8

    res = pyatsh.integrate('atsh5-minerr', problem1, 0.03)
    assert res.errors[-1] < 1e-9


def test_grid_exact_division(problem1):
    assert _grid(problem1, 0.1) == (1000, 0.0)
    with pytest.raises(ValueError):
        _grid(problem1, 200.0)


@pytest.mark.parametrize("method, lo, hi", [
    ('numerov4', 3.8, 4.2),
    # Faster than p between h = 1/8 and 1/32 (about 5.8)
    ('atsh5-minerr', 5.5, 6.1),
    ('atsh5-pl8', 4.8, 5.4),
    ('atsh4-zd', 5.5, 6.1),
])
def test_convergence_problem1(problem1, method, lo, hi):
    hs = [2.0 ** -j for j in range(3, 6)]
    order = pyatsh.convergence_order(method, problem1, hs)
    assert order >= ORDER[method] - 0.3
    assert lo <= order <= hi


@pytest.mark.parametrize("method, expected", [('numerov4', 4), ('atsh5-minerr', 5),
                                              ('atsh5-pl8', 5), ('atsh4-zd', 6)])
def test_convergence_problem1_classical(problem1, method, expected):
    hs = [2.0 ** -j for j in range(5, 8)]
    order = pyatsh.convergence_order('classical:' + method, problem1, hs)
    assert order == pytest.approx(expected, abs=0.2)


@pytest.mark.parametrize("method, lo, hi", [
    ('numerov4', 3.8, 4.2),
    ('classical:numerov4', 3.8, 4.2),
    ('atsh4-zd', 3.8, 4.2),
    ('classical:atsh4-zd', 5.5, 6.1),
    ('atsh5-minerr', 5.0, 5.6),
    ('classical:atsh5-minerr', 4.8, 5.2),
    ('atsh5-pl8', 4.8, 5.2),
    ('classical:atsh5-pl8', 4.8, 5.2),
])
def test_convergence_problem4(problem4, method, lo, hi):
    hs = [2.0 ** -j for j in range(4, 7)]
    order = pyatsh.convergence_order(method, problem4, hs)
    assert lo <= order <= hi


@pytest.mark.parametrize("method, lo, hi", [('classical:atsh4-zd', 5.4, 6.2),
                                            ('atsh5-minerr', 5.0, 5.7)])
def test_error_ratios_problem4(problem4, method, lo, hi):
    errors = [pyatsh.integrate(method, problem4, 2.0 ** -j).max_global_error
              for j in range(4, 7)]
    ratios = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all((ratios >= lo) & (ratios <= hi))


@pytest.mark.parametrize("method", ADAPTED)
@pytest.mark.parametrize("problem, h",[('problem1', 2 ** -3), ('problem2', 1.0),
                                        ('problem4', 2 ** -4)])
def test_adapted_beats_classical(method, problem, h):
    p = pyatsh.make_problem(problem)
    adapted = pyatsh.integrate(method, p, h).max_global_error
    classical = pyatsh.integrate('classical:' + method, p, h).max_global_error
    assert adapted < classical / 10


def test_complex_form_matches_real_pair():
    real = pyatsh.integrate('atsh5-minerr', pyatsh.make_problem('problem2'), 0.5)
    cplx = pyatsh.integrate('atsh5-minerr', pyatsh.make_problem('problem2', complex_form=True),
                            0.5)
    assert np.iscomplexobj(cplx.ys)
    np.testing.assert_allclose(cplx.ys[:, 0].real, real.ys[:, 0], atol=1e-10)
    np.testing.assert_allclose(cplx.ys[:, 0].imag, real.ys[:, 1], atol=1e-10)
    assert cplx.max_global_error == pytest.approx(real.max_global_error, rel=1e-6)


def test_classical_blows_up(problem1):
    with pytest.raises(pyatsh.NonFiniteState) as e:
        pyatsh.integrate('classical:atsh5-minerr', problem1, 0.5)
    assert isinstance(e.value, ArithmeticError)
    assert e.value.x < problem1.x_end


def test_step_stops_finite_blow_up():
    p = pyatsh.make_problem('harmonic')
    assert p.growth_bound == 1e100
    tableau = pyatsh.build('numerov4', 1.0)
    state = pyatsh.TwoStepState(x_n=0.1, y_prev=np.array([2e100]), y_curr=np.array([1.0]))
    with pytest.raises(pyatsh.NonFiniteState) as e:
        pyatsh.step(tableau, p, state, 0.1)
    assert e.value.where == 'stage 1'

    state = pyatsh.TwoStepState(x_n=0.1, y_prev=np.array([1.0]), y_curr=np.array([np.nan]))
    with pytest.raises(pyatsh.NonFiniteState):
        pyatsh.step(tableau, p, state, 0.1)


def test_error_norm_does_not_overflow():
    res = pyatsh.IntegrationResult(method='numerov4', problem='harmonic', h=0.1,
                                   xs=np.array([0.0, 0.1]),
                                   ys=np.array([[0.0, 0.0], [3e200, 4e200]]), g_evals=0)
    res.set_reference(np.zeros((2, 2)))
    assert res.errors[0] == 0
    assert res.errors[1] == pytest.approx(5e200)
    assert np.isfinite(res.max_global_error)


@pytest.mark.parametrize("method", ADAPTED)
def test_unperturbed_recurrence_is_reversible(method):
    p = pyatsh.make_problem('harmonic', x_end=10.0)
    h = 0.1
    res = pyatsh.integrate(method, p, h)
    tableau = pyatsh.build(method, p.omega * h)

    # Run the recurrence backward from the last two values
    state = pyatsh.TwoStepState(x_n=res.xs[-2], y_prev=res.ys[-1], y_curr=res.ys[-2])
    back = [state.y_curr]
    for _ in range(len(res.xs) - 2):
        state = pyatsh.step(tableau, p, state, -h)
        back.append(state.y_curr)
    np.testing.assert_allclose(np.array(back[::-1]), res.ys[:-1], rtol=0, atol=1e-12)


def test_convergence_order_arguments(problem1):
    with pytest.raises(ValueError):
        pyatsh.convergence_order('numerov4', problem1, [0.1, 0.05])
    with pytest.raises(ValueError):
        pyatsh.convergence_order('numerov4', problem1, [0.05, 0.1, 0.025])
    with pytest.raises(pyatsh.ExactUnavailable):
        pyatsh.convergence_order('numerov4', pyatsh.make_problem('problem3'),
                                 [0.5, 0.25, 0.125])


def test_no_reference_no_errors():
    p = pyatsh.make_problem('cubic')
    res = pyatsh.integrate('atsh5-minerr', p, 0.1, starter='oracle')
    assert res.errors is None
    assert res.max_global_error is None
    assert res.starter_evals > 0
    assert np.all(np.abs(res.ys) < 2)


def test_problem_validation():
    with pytest.raises(ValueError):
        pyatsh.Problem(name='bad', omega=1.0, g=lambda x, y: y, x0=1.0, x_end=0.0,
                       y0=[1.0], dy0=[0.0])
    with pytest.raises(ValueError):
        pyatsh.Problem(name='bad', omega=1.0, g=lambda x, y: y, x0=0.0, x_end=1.0,
                       y0=[1.0], dy0=[0.0, 1.0])
    with pytest.raises(ValueError):
        pyatsh.Problem(name='bad', omega=1.0, g=lambda x, y: np.zeros(2), x0=0.0, x_end=1.0,
                       y0=[1.0], dy0=[0.0])
