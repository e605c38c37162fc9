import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilosim import NumericError
from dilosim.optim import (AdamState, NesterovState, adam_step,
                           nesterov_outer_step, sgd_step)


def scalar_adam_trace(gs, lr=0.1, b1=0.9, b2=0.99, eps=1e-8, theta=0.0):
    """Independent scalar recurrence used as the hand-trace oracle."""
    m = v = 0.0
    t = 0
    out = []
    for g in gs:
        t += 1
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        theta = theta - lr * m_hat / (v_hat ** 0.5 + eps)
        out.append(theta)
    return out


def test_adam_zero_gradient_keeps_params():
    state = AdamState.init(3, lr=0.1)
    new_state, theta = adam_step(state, np.array([1.0, -2.0, 0.5]), np.zeros(3))
    assert np.array_equal(theta, [1.0, -2.0, 0.5])
    assert new_state.t == 1


def test_adam_first_step_bias_corrections_cancel():
    state = AdamState.init(1, lr=0.1)
    _, theta = adam_step(state, np.array([0.0]), np.array([1.0]))
    # at t=1 both bias corrections cancel: step = lr * 1 / (1 + eps)
    expected = scalar_adam_trace([1.0])[0]
    assert theta[0] == expected
    assert abs(theta[0] + 0.1 / (1 + 1e-8)) < 1e-15


def test_adam_two_steps_match_hand_trace():
    state = AdamState.init(1, lr=0.1)
    theta = np.array([0.0])
    seen = []
    for _ in range(2):
        state, theta = adam_step(state, theta, np.array([1.0]))
        seen.append(theta[0])
    assert seen == scalar_adam_trace([1.0, 1.0])


def test_adam_random_sequence_matches_oracle():
    rng = np.random.default_rng(2)
    gs = rng.standard_normal(10)
    state = AdamState.init(1, lr=0.05)
    theta = np.array([0.3])
    for g in gs:
        state, theta = adam_step(state, theta, np.array([g]))
    oracle = scalar_adam_trace(list(gs), lr=0.05, theta=0.3)[-1]
    assert abs(theta[0] - oracle) < 1e-14


def test_adam_zero_gradient_is_fixed_point():
    state = AdamState.init(2, lr=0.3)
    theta = np.array([0.7, -0.1])
    for _ in range(5):
        prev_t = state.t
        state, theta = adam_step(state, theta, np.zeros(2))
        assert state.t == prev_t + 1
    assert np.array_equal(theta, [0.7, -0.1])
    assert np.all(state.v >= 0)


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=20),
       st.sampled_from([0.001, 0.1, 1.0]))
@settings(max_examples=80)
def test_adam_update_magnitude_bounded(gs, lr):
    # with beta2 = 0.99 the per-coordinate step is bounded by lr / sqrt(1 - beta2) = 10 lr
    state = AdamState.init(1, lr=lr)
    theta = np.array([0.0])
    for g in gs:
        prev = theta[0]
        state, theta = adam_step(state, theta, np.array([g]))
        assert abs(theta[0] - prev) <= lr * 10 + 1e-12


def test_adam_rejects_nonfinite_gradient():
    state = AdamState.init(1)
    with pytest.raises(NumericError):
        adam_step(state, np.array([0.0]), np.array([np.nan]))


def test_adam_does_not_mutate_inputs():
    state = AdamState.init(2, lr=0.1)
    theta = np.array([1.0, 2.0])
    g = np.array([0.5, -0.5])
    adam_step(state, theta, g)
    assert np.array_equal(theta, [1.0, 2.0])
    assert np.array_equal(state.m, [0.0, 0.0])
    assert state.t == 0


def test_nesterov_momentum_off_is_sgd():
    state = NesterovState.init(2, lr=0.4, momentum=0.0)
    anchor = np.array([1.0, -1.0])
    delta = np.array([0.5, 0.25])
    _, out = nesterov_outer_step(state, anchor, delta)
    assert np.array_equal(out, sgd_step(anchor, delta, 0.4))


def test_nesterov_null_update():
    state = NesterovState.init(2, lr=0.4, momentum=0.9)
    anchor = np.array([3.0, 4.0])
    new_state, out = nesterov_outer_step(state, anchor, np.zeros(2))
    assert np.array_equal(out, anchor)
    assert np.array_equal(new_state.velocity, np.zeros(2))


def test_nesterov_two_rounds_hand_trace():
    # scalar oracle: v' = mu v + d ; out = a - lr (mu v' + d), anchor held at a=0
    lr, mu = 0.4, 0.9
    v = 0.0
    expected = []
    for _ in range(2):
        v = mu * v + 1.0
        expected.append(0.0 - lr * (mu * v + 1.0))
    assert expected == [-0.76, -1.084]

    state = NesterovState.init(1, lr=lr, momentum=mu)
    anchor = np.array([0.0])
    outs = []
    for _ in range(2):
        state, out = nesterov_outer_step(state, anchor, np.array([1.0]))
        outs.append(out[0])
    assert np.allclose(outs, expected, rtol=0, atol=1e-15)


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=6),
       st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=6),
       st.floats(0, 2, allow_nan=False))
def test_nesterov_mu_zero_equals_sgd(anchor_vals, delta_vals, lr):
    n = min(len(anchor_vals), len(delta_vals))
    anchor = np.array(anchor_vals[:n])
    delta = np.array(delta_vals[:n])
    state = NesterovState.init(n, lr=lr, momentum=0.0)
    _, out = nesterov_outer_step(state, anchor, delta)
    assert np.array_equal(out, sgd_step(anchor, delta, lr))


def test_sgd_examples():
    assert np.array_equal(sgd_step(np.array([2.0]), np.array([2.0]), 1.0), [0.0])
    theta = np.array([1.0, 2.0])
    assert np.array_equal(sgd_step(theta, np.array([5.0, 5.0]), 0.0), theta)


def test_sgd_matches_linear_combine():
    from dilosim.tensorcore import linear_combine
    rng = np.random.default_rng(3)
    theta, g = rng.standard_normal(5), rng.standard_normal(5)
    assert np.array_equal(sgd_step(theta, g, 0.7), linear_combine(1.0, theta, -0.7, g))
