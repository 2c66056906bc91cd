"""Scripted completions shared by the loop, evaluation and acceptance tests."""

from stripscot.datagen import corrupt_plan, gen_instance
from stripscot.planner import solve
from stripscot.trace import build_trace, render_trace


def instances(n, kinds=("blocksworld", "mystery_blocksworld", "logistics"), seed=0):
    out = []
    for i in range(n):
        kind = kinds[i % len(kinds)]
        out.append(gen_instance(kind, f"{seed}:{i}", problem_id=f"{kind}-{i:03d}"))
    return out


def good_text(inst):
    plan = solve(inst.domain, inst.problem)
    return render_trace(build_trace(inst.problem.init, plan, True, 0.9))


def bad_text(inst, kind="precondition_unsatisfied", seed=0):
    plan = solve(inst.domain, inst.problem)
    return render_trace(corrupt_plan(inst.domain, inst.problem, plan, kind, seed))
