"""Optimizer arithmetic against hand-derived values and analytic gradients."""

import numpy as np
import pytest

from gaqc import opt


def _trig_objective(amps, phases, batch=True):
    """f(theta) = sum_i amps_i cos(theta_i + phases_i); the two-term shift
    rule is exact for this family, with gradient -amps_i sin(theta_i + phases_i)."""
    amps = np.asarray(amps, dtype=np.float64)
    phases = np.asarray(phases, dtype=np.float64)

    def single(theta):
        return float(np.sum(amps * np.cos(theta + phases)))

    def many(thetas):
        return np.sum(amps * np.cos(thetas + phases), axis=1)

    m = amps.size
    return opt.Objective(single, m, (True,) * m, many if batch else None)


# ---------------------------------------------------------------------------
# Adam update

def test_adam_first_step_hand_computed():
    state = opt.AdamState(1)
    grad = np.array([1.0])
    new_state, new_params = opt.adam_step(state, np.array([0.0]), grad)
    # beta1=0.8, beta2=0.999: m=0.2, v=0.001; bias correction at k=1 divides
    # by 0.2 and 0.001, so m_hat=1, v_hat=1 and the update is -alpha/(1+eps)
    want = -0.2 / (1.0 + 1e-8)
    assert new_params[0] == pytest.approx(want, rel=1e-15)
    assert new_state.step == 1
    assert new_state.m[0] == pytest.approx(0.2)
    assert new_state.v[0] == pytest.approx(0.001)


def test_adam_second_step_hand_computed():
    state = opt.AdamState(1, alpha=0.1)
    state, p = opt.adam_step(state, np.array([1.0]), np.array([2.0]))
    state, p = opt.adam_step(state, p, np.array([-1.0]))
    m2 = 0.8 * 0.4 + 0.2 * (-1.0)              # 0.12
    v2 = 0.999 * 0.004 + 0.001 * 1.0           # 0.004996
    m_hat = m2 / (1.0 - 0.8 ** 2)
    v_hat = v2 / (1.0 - 0.999 ** 2)
    p1 = 1.0 - 0.1 * (0.4 / (1 - 0.8)) / (np.sqrt(0.004 / (1 - 0.999)) + 1e-8)
    want = p1 - 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8)
    assert p[0] == pytest.approx(want, rel=1e-14)
    assert state.step == 2


def test_adam_rejects_shape_mismatch():
    state = opt.AdamState(2)
    with pytest.raises(ValueError):
        opt.adam_step(state, np.zeros(3), np.zeros(2))
    with pytest.raises(ValueError):
        opt.AdamState(2, m=np.zeros(3))


# ---------------------------------------------------------------------------
# parameter-shift gradients

def test_shift_rule_matches_analytic_gradient(rng):
    amps = rng.normal(size=4)
    phases = rng.uniform(0, 2 * np.pi, 4)
    theta = rng.uniform(0, 2 * np.pi, 4)
    want = -amps * np.sin(theta + phases)
    for batch in (True, False):
        got = opt.parameter_shift_grad(_trig_objective(amps, phases, batch), theta)
        assert np.allclose(got, want, atol=1e-12)


def test_shift_rule_refuses_unshiftable_parameter():
    obj = opt.Objective(lambda t: 0.0, 2, (True, False))
    with pytest.raises(ValueError):
        opt.parameter_shift_grad(obj, np.zeros(2))


def test_shift_rule_empty_parameters():
    obj = opt.Objective(lambda t: 1.0, 0, ())
    assert opt.parameter_shift_grad(obj, np.zeros(0)).shape == (0,)


def test_objective_validates_flag_count():
    with pytest.raises(ValueError):
        opt.Objective(lambda t: 0.0, 2, (True,))


# ---------------------------------------------------------------------------
# descent driver

def test_vqa_optimize_converges_on_cosine_bowl():
    obj = _trig_objective([-1.0, -1.0], [0.0, 0.0])  # min -2 at theta = 0
    best, trace = opt.vqa_optimize(obj, np.array([1.0, -0.7]), 200)
    assert trace[0] == pytest.approx(-np.cos(1.0) - np.cos(0.7))
    assert min(trace) <= -2.0 + 1e-6
    assert obj.evaluate(best) == pytest.approx(min(trace), abs=1e-15)


def test_vqa_optimize_returns_best_seen_not_last():
    obj = _trig_objective([1.0], [0.0])  # min -1 at theta = pi; Adam overshoots
    best, trace = opt.vqa_optimize(obj, np.array([2.0]), 60)
    assert obj.evaluate(best) == pytest.approx(min(trace), abs=1e-15)
    assert min(trace) < trace[-1] + 1e-12


def test_vqa_optimize_early_stop():
    obj = _trig_objective([1.0], [0.0])
    _, trace = opt.vqa_optimize(obj, np.array([2.5]), 500, threshold=-0.5)
    assert len(trace) < 501
    assert trace[-1] <= -0.5


def test_vqa_optimize_threshold_met_at_init():
    obj = _trig_objective([1.0], [0.0])
    best, trace = opt.vqa_optimize(obj, np.array([np.pi]), 500, threshold=-0.5)
    assert len(trace) == 1
    assert np.array_equal(best, [np.pi])


def test_vqa_optimize_no_parameters():
    obj = opt.Objective(lambda t: 3.5, 0, ())
    best, trace = opt.vqa_optimize(obj, np.zeros(0), 100)
    assert trace == [3.5] and best.shape == (0,)


def test_vqa_optimize_rejects_shape_mismatch():
    obj = _trig_objective([1.0], [0.0])
    with pytest.raises(ValueError):
        opt.vqa_optimize(obj, np.zeros(2), 10)


# ---------------------------------------------------------------------------
# simplex fallback

def test_nelder_mead_quadratic_bowl():
    target = np.array([1.25, -0.5, 0.75])
    point, value = opt.nelder_mead(lambda x: float(np.sum((x - target) ** 2)),
                                   np.zeros(3), max_evals=2000)
    assert value < 1e-10
    assert np.allclose(point, target, atol=1e-4)


def test_nelder_mead_banana_valley():
    def rosenbrock(x):
        return float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)

    point, value = opt.nelder_mead(rosenbrock, np.array([-1.0, 1.0]), max_evals=4000)
    assert value < 1e-6
    assert np.allclose(point, [1.0, 1.0], atol=1e-2)


def test_nelder_mead_zero_dimensional():
    point, value = opt.nelder_mead(lambda x: 7.0, np.zeros(0))
    assert value == 7.0 and point.shape == (0,)


def test_nelder_mead_respects_budget():
    calls = 0

    def fn(x):
        nonlocal calls
        calls += 1
        return float(np.sum(x ** 2))

    opt.nelder_mead(fn, np.ones(3), max_evals=50)
    assert calls <= 50 + 3  # one simplex move may finish past the cap
