import pytest
from hypothesis import given
from hypothesis import strategies as st

from stripscot.core import (
    Atom,
    apply,
    apply_unchecked,
    applicable,
    atom,
    format_atoms,
    ground,
    instantiate,
    missing_preconditions,
    satisfies_goal,
    simulate,
    state,
    state_distance,
)
from stripscot.datagen import gen_problem
from stripscot.domains import blocksworld_problem
from stripscot.errors import ArityMismatch, InapplicableAction, TypeMismatch, UndeclaredObject, UnknownAction

import oracles


def test_atom_text_and_ordering():
    assert str(atom("(on a b)")) == "(on a b)"
    assert str(Atom("HandEmpty")) == "(handempty)"
    assert atom("(ON A B)") == Atom("on", ("a", "b"))
    assert format_atoms([atom("(on b c)"), atom("(clear a)")]) == "(clear a), (on b c)"


def test_instantiate_two_block_pickup(bw, two_blocks):
    a = instantiate(bw, "pick-up", ("b",), two_blocks.object_types)
    assert set(a.pre) == state("(clear b)", "(ontable b)", "(handempty)")
    assert a.add == state("(holding b)")
    assert a.dele == state("(clear b)", "(ontable b)", "(handempty)")
    assert applicable(two_blocks.init, a)
    s = apply(two_blocks.init, a)
    assert s == state("(holding b)", "(clear a)", "(ontable a)")


def test_instantiate_errors(bw, logistics, two_blocks):
    with pytest.raises(UnknownAction):
        instantiate(bw, "teleport", ("a",), two_blocks.object_types)
    with pytest.raises(ArityMismatch):
        instantiate(bw, "stack", ("a",), two_blocks.object_types)
    with pytest.raises(UndeclaredObject):
        instantiate(bw, "pick-up", ("z",), two_blocks.object_types)
    p = gen_problem("logistics", 1)
    pkg = next(o for o, t in p.objects if t == "package")
    with pytest.raises(TypeMismatch):
        instantiate(logistics, "drive-truck", (pkg, "l0-0", "l0-1", "c0"), p.object_types)


def test_apply_rejects_inapplicable(bw, two_blocks):
    a = instantiate(bw, "stack", ("b", "a"), two_blocks.object_types)
    assert missing_preconditions(two_blocks.init, a) == (atom("(holding b)"),)
    with pytest.raises(InapplicableAction) as exc:
        apply(two_blocks.init, a)
    assert exc.value.missing == (atom("(holding b)"),)


def test_add_wins_over_delete(bw):
    # an action deleting and adding the same atom keeps it
    from stripscot.core import GroundAction
    p = atom("(p)")
    a = GroundAction("toggle", (), (), frozenset({p}), frozenset({p}))
    assert apply_unchecked(frozenset(), a) == {p}
    assert apply_unchecked(frozenset({p}), a) == {p}


def test_grounding_matches_bruteforce(bw, logistics):
    for d, p in [(bw, gen_problem("blocksworld", 4)), (logistics, gen_problem("logistics", 2))]:
        ours = {(a.name, a.args): (frozenset(oracles.tup(x) for x in a.pre),
                                   oracles.tstate(a.add), oracles.tstate(a.dele))
                for a in ground(d, p)}
        assert ours == oracles.ground_all(d, p)


@given(st.integers(1, 6))
def test_blocksworld_grounding_cardinality(n):
    from stripscot.domains import blocksworld_domain
    d = blocksworld_domain()
    p = blocksworld_problem([[f"b{i}"] for i in range(n)], [])
    # pick-up and put-down take one block, stack and unstack take two
    assert len(ground(d, p)) == 2 * n + 2 * n * n


atoms_st = st.frozensets(st.sampled_from([atom(f"(p{i})") for i in range(8)]))


@given(atoms_st, atoms_st, atoms_st)
def test_state_distance_is_a_metric(a, b, c):
    assert state_distance(a, a) == 0
    assert state_distance(a, b) == state_distance(b, a)
    assert (state_distance(a, b) == 0) == (a == b)
    assert state_distance(a, c) <= state_distance(a, b) + state_distance(b, c)


@given(atoms_st, atoms_st, atoms_st, atoms_st)
def test_transition_identity_and_frame(s, pre, add, dele):
    from stripscot.core import GroundAction
    a = GroundAction("x", (), tuple(sorted(pre)), add, dele)
    t = apply_unchecked(s, a)
    assert t == (s - dele) | add
    assert add <= t
    untouched = s - dele - add
    assert untouched <= t
    assert (t - s) <= add
    assert applicable(s, a) == (pre <= s)


def test_simulate_and_goal(bw, sussman):
    objs = sussman.object_types
    plan = [instantiate(bw, n, args, objs) for n, args in [
        ("unstack", ("c", "a")), ("put-down", ("c",)), ("pick-up", ("b",)),
        ("stack", ("b", "c")), ("pick-up", ("a",)), ("stack", ("a", "b"))]]
    end = simulate(sussman.init, plan)
    assert satisfies_goal(end, sussman.goal)
    assert oracles.simulate(bw, sussman, [(a.name, a.args) for a in plan]) == ("valid", None)
