import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stripscot import kernels
from stripscot.core import Problem, atom, simulate, satisfies_goal
from stripscot.datagen import GeneratorSizes, gen_instance
from stripscot.domains import blocksworld_problem
from stripscot.errors import DeadEnd, LimitExceeded, Unsolvable
from stripscot.planner import SearchLimits, random_walk, reachable_states, solve
from stripscot.validator import validate_plan

import oracles

KERNELS = [kernels.python_kernels] + (
    [kernels.compiled_kernels] if kernels.compiled_kernels is not None else [])
kernel_ids = [k.__name__.rsplit(".", 1)[-1] for k in KERNELS]


def table_problem(n):
    return blocksworld_problem([[f"b{i}"] for i in range(n)], [], name=f"table{n}")


@pytest.mark.parametrize("kernel", KERNELS, ids=kernel_ids)
def test_two_block_plan(bw, two_blocks, kernel):
    plan = solve(bw, two_blocks, kernel=kernel)
    assert [str(a) for a in plan] == ["(pick-up b)", "(stack b a)"]


@pytest.mark.parametrize("kernel", KERNELS, ids=kernel_ids)
def test_sussman_anomaly_is_six_steps(bw, sussman, kernel):
    plan = solve(bw, sussman, kernel=kernel)
    assert len(plan) == 6
    assert validate_plan(bw, sussman, plan).valid


def test_goal_already_true(bw, two_blocks):
    p = Problem("done", "blocksworld", two_blocks.objects, two_blocks.init,
                frozenset({atom("(ontable a)")}))
    assert solve(bw, p) == ()


# Blocksworld state counts with n blocks (hand empty or holding one block):
# the number of "forests of towers" plus the held-block variants. Values
# below were produced by the brute-force oracle and are frozen here.
REACHABLE = {1: 2, 2: 5, 3: 22, 4: 125}


@pytest.mark.parametrize("n", sorted(REACHABLE))
def test_reachable_state_counts(bw, n):
    p = table_problem(n)
    assert len(oracles.reachable(bw, p)) == REACHABLE[n]
    for kernel in KERNELS:
        ours = reachable_states(bw, p, kernel=kernel)
        assert {oracles.tstate(s) for s in ours} == oracles.reachable(bw, p)


def test_reachable_bound(bw):
    p = table_problem(3)
    for b in range(4):
        ours = reachable_states(bw, p, bound=b)
        assert {oracles.tstate(s) for s in ours} == oracles.reachable(bw, p, bound=b)


def test_unsolvable(bw):
    # a block cannot be on itself: the goal atom is unreachable
    p = Problem("bad", "blocksworld", (("a", "block"),),
                frozenset({atom("(ontable a)"), atom("(clear a)"), atom("(handempty)")}),
                frozenset({atom("(on a a)")}))
    with pytest.raises(Unsolvable):
        solve(bw, p)


def test_limits(bw, sussman):
    with pytest.raises(LimitExceeded) as exc:
        solve(bw, sussman, SearchLimits(max_expanded_states=3))
    assert exc.value.reason == "max_expanded_states"
    with pytest.raises(LimitExceeded) as exc:
        solve(bw, sussman, SearchLimits(max_plan_length=4))
    assert exc.value.reason == "max_plan_length"
    with pytest.raises(ValueError):
        SearchLimits(timeout=0)


def test_random_walk(bw, sussman):
    w1 = random_walk(bw, sussman, 12, seed=5)
    assert w1 == random_walk(bw, sussman, 12, seed=5)
    assert validate_plan(bw, sussman, w1, check_goal=False).valid
    empty = Problem("stuck", "blocksworld", (("a", "block"),), frozenset(), frozenset())
    with pytest.raises(DeadEnd):
        random_walk(bw, empty, 1, seed=0)


SMALL = GeneratorSizes(blocks=(2, 4), cities=1, locations_per_city=2, packages=1,
                       trucks=1, airplanes=1)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["blocksworld", "mystery_blocksworld", "logistics"]),
       st.integers(0, 100_000))
def test_plans_are_valid_and_shortest(kind, seed):
    inst = gen_instance(kind, seed, SMALL)
    plan = solve(inst.domain, inst.problem)
    assert satisfies_goal(simulate(inst.problem.init, plan), inst.problem.goal)
    assert len(plan) == oracles.shortest_length(inst.domain, inst.problem)


@pytest.mark.skipif(kernels.compiled_kernels is None, reason="compiled kernels not built")
@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["blocksworld", "logistics"]), st.integers(0, 100_000))
def test_kernel_parity(kind, seed):
    inst = gen_instance(kind, seed)
    py = solve(inst.domain, inst.problem, kernel=kernels.python_kernels)
    cy = solve(inst.domain, inst.problem, kernel=kernels.compiled_kernels)
    assert py == cy
    assert (reachable_states(inst.domain, inst.problem, bound=3, kernel=kernels.python_kernels)
            == reachable_states(inst.domain, inst.problem, bound=3,
                                kernel=kernels.compiled_kernels))


def test_backend_selection_env(monkeypatch):
    import importlib
    monkeypatch.setenv("STRIPSCOT_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.active is mod.python_kernels
    finally:
        monkeypatch.delenv("STRIPSCOT_PURE_PYTHON")
        importlib.reload(kernels)
