import math
from types import SimpleNamespace as NS

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stripscot.core import instantiate, state
from stripscot.losses import (
    DEFAULT_WEIGHTS,
    LossReport,
    LossWeights,
    bce,
    loss_feedback,
    loss_final,
    loss_plan,
    loss_reasoning,
    loss_report,
    loss_step,
)
from stripscot.validator import validate_step


def test_default_weights():
    w = DEFAULT_WEIGHTS
    assert (w.alpha_precond, w.alpha_effect, w.alpha_goal) == (1.0, 1.0, 1.5)
    assert (w.lambda_feedback, w.beta, w.alpha) == (0.1, 2.0, 0.5)


def test_feedback_loss_per_status():
    assert [loss_feedback(s) for s in ("valid", "precondition_violation", "effect_mismatch",
                                       "goal_failure")] == [0.0, 1.0, 1.0, 1.5]


# hand-computed: 2 + 0.5 ln 2, 0.5 (-ln 0.9), ln 2
def test_plan_loss_values():
    assert loss_plan(NS(v=0, v_hat=0.5)) == pytest.approx(2.3466, abs=1e-4)
    assert loss_plan(NS(v=1, v_hat=0.9)) == pytest.approx(0.05268, abs=1e-5)
    assert bce(0, 0.5) == pytest.approx(math.log(2))
    assert loss_final([NS(v=0, v_hat=0.5), NS(v=1, v_hat=1.0)]) == pytest.approx(1.1733,
                                                                                  abs=1e-4)


def test_bce_is_clamped():
    assert math.isfinite(bce(1, 0.0))
    assert bce(1, 0.0) == pytest.approx(-math.log(1e-6))


def test_step_loss_values(bw, two_blocks):
    stack = instantiate(bw, "stack", ("b", "a"), two_blocks.object_types)
    # claims two atoms that are not there, and the action is inapplicable
    v = validate_step(bw, two_blocks.init, stack, two_blocks.init | state("(on b a)", "(p)"))
    assert loss_step(v) == pytest.approx(2.1)
    pick = instantiate(bw, "pick-up", ("b",), two_blocks.object_types)
    s1 = (two_blocks.init - pick.dele) | pick.add
    v = validate_step(bw, two_blocks.init, pick, s1, two_blocks.goal, is_final=True)
    assert loss_step(v) == pytest.approx(0.15)
    assert loss_step(validate_step(bw, two_blocks.init, pick, s1)) == 0.0


def test_empty_datasets_rejected():
    with pytest.raises(ValueError):
        loss_reasoning([])
    with pytest.raises(ValueError):
        loss_final([])


def test_weights_validated():
    with pytest.raises(ValueError):
        LossWeights(beta=-1)
    with pytest.raises(ValueError):
        LossWeights(bce_epsilon=0)


@given(st.integers(0, 1), st.floats(0, 1))
def test_plan_loss_bounds(v, v_hat):
    loss = loss_plan(NS(v=v, v_hat=v_hat))
    assert loss >= (2.0 if v == 0 else 0.0)
    assert loss <= 2.0 + 0.5 * -math.log(1e-6) + 1e-9


def test_report_round_trip():
    rep = loss_report([], [NS(v=0, v_hat=0.5, error_class="goal_not_achieved")])
    assert rep.loss_reasoning is None
    assert rep.error_class_counts == {"goal_not_achieved": 1}
    assert LossReport.from_dict(rep.to_dict()) == rep
