import pytest

from stripscot.errors import PromptError
from stripscot.pddl import print_domain, print_problem
from stripscot.prompts import TEMPLATE_NAMES, TEMPLATES, TRACE_FORMAT_INSTRUCTIONS, render_prompt


def test_all_templates_exist():
    assert set(TEMPLATES) == set(TEMPLATE_NAMES)
    assert TEMPLATES["cot_feedback_detailed"].placeholders == (
        "domain", "problem", "prior_trace", "feedback")


def test_generate_prompt_has_pddl_verbatim(bw, two_blocks):
    dt, pt = print_domain(bw), print_problem(two_blocks)
    text = render_prompt("cot_generate", {"domain": dt, "problem": pt})
    assert dt in text and pt in text
    assert text.endswith(TRACE_FORMAT_INSTRUCTIONS)


def test_feedback_inserted_verbatim():
    fb = "invalid\nstep 2: action (stack a b): missing preconditions: (holding a)"
    text = render_prompt("cot_feedback_detailed", {"domain": "D", "problem": "P",
                                                   "prior_trace": "T {feedback}",
                                                   "feedback": fb})
    assert fb in text
    # substituted values are not re-scanned for placeholders
    assert "T {feedback}" in text


def test_missing_binding():
    with pytest.raises(PromptError):
        render_prompt("cot_feedback_binary", {"domain": "D", "problem": "P", "prior_trace": "T"})
    with pytest.raises(PromptError):
        render_prompt("nope", {})


def test_phase1_prompts_have_no_trace_grammar():
    text = render_prompt("phase1_correct", {"domain": "D", "problem": "P", "prior_trace": "T",
                                            "feedback": "F"})
    assert TRACE_FORMAT_INSTRUCTIONS not in text
