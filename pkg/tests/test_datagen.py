import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stripscot.datagen import (
    CORRECT,
    CORRUPTION_KINDS,
    LABEL_CLASS,
    FinalRecord,
    GeneratorSizes,
    Phase1Record,
    ProblemRecord,
    ReasoningRecord,
    SplitSpec,
    TraceAttempt,
    allocate,
    build_final_dataset,
    build_reasoning_dataset,
    corrupt_plan,
    format_state,
    gen_instance,
    make_phase1_dataset,
    make_problem_pool,
    obfuscate,
    parse_state,
    read_jsonl,
    split_dataset,
    split_sizes,
    verdict_to_dict,
    write_jsonl,
)
from stripscot.domains import gen_blocksworld, gen_logistics
from stripscot.errors import Uncorruptible
from stripscot.planner import solve
from stripscot.trace import build_trace, parse_trace, predicted_validity
from stripscot.validator import classify_error, validate_plan, validate_trace


def test_generators_are_seeded(bw):
    assert gen_blocksworld(4, 7) == gen_blocksworld(4, 7)
    assert gen_blocksworld(4, 7) != gen_blocksworld(4, 8)
    p = gen_logistics(2, 2, 2, 2, 1, seed=3)
    assert gen_logistics(2, 2, 2, 2, 1, seed=3) == p
    types = dict(p.objects)
    assert sum(t == "package" for t in types.values()) == 2
    assert sum(t == "airport" for t in types.values()) == 2
    with pytest.raises(ValueError):
        gen_logistics(0, 2, 1, 1, 1, seed=0)


def test_generated_goals_are_reachable_and_unmet():
    for kind in ("blocksworld", "mystery_blocksworld", "logistics"):
        for seed in range(10):
            inst = gen_instance(kind, seed)
            plan = solve(inst.domain, inst.problem)
            assert validate_plan(inst.domain, inst.problem, plan).valid


def test_obfuscation_is_a_bijection(bw):
    p = gen_blocksworld(4, 1)
    d2, p2, ren = obfuscate(bw, p, seed=0)
    assert ren.is_bijective()
    assert d2.name == "mystery"
    names = {a.name for a in d2.actions} | {q.name for q in d2.predicates}
    assert not names & {"pick-up", "stack", "on", "clear", "holding"}
    assert all(o.startswith("obj-") for o, _ in p2.objects)
    inv = ren.inverse()
    assert inv.problem(p2).init == p.init and inv.problem(p2).goal == p.goal
    assert len(solve(d2, p2)) == len(solve(bw, p))
    assert obfuscate(bw, p, seed=0)[2] == ren


@pytest.mark.parametrize("kind", CORRUPTION_KINDS)
def test_corruptions_have_their_class(kind):
    for seed in range(15):
        inst = gen_instance("blocksworld", seed)
        plan = solve(inst.domain, inst.problem)
        tr = corrupt_plan(inst.domain, inst.problem, plan, kind, seed)
        v = validate_trace(inst.domain, inst.problem, tr)
        assert not v.valid
        assert classify_error(v) is LABEL_CLASS[kind]


def test_corruption_impossible_cases(bw, two_blocks):
    from stripscot.core import Problem
    done = Problem("done", "blocksworld", two_blocks.objects, two_blocks.init, frozenset())
    for kind in ("goal_not_reached", "effect_misapplied", "frame_violation"):
        with pytest.raises(Uncorruptible):
            corrupt_plan(bw, done, (), kind, 0)
    with pytest.raises(ValueError):
        corrupt_plan(bw, two_blocks, (), "typo", 0)


def test_state_text_round_trip():
    from stripscot.core import state
    s = state("(on a b)", "(handempty)")
    assert format_state(s) == "{(handempty), (on a b)}"
    assert parse_state(format_state(s)) == s
    assert parse_state("{}") == frozenset()


def test_allocate_and_split_sizes():
    assert allocate(40, {"a": 0.5, "b": 0.125, "c": 0.125, "d": 0.125, "e": 0.125}) == \
        {"a": 20, "b": 5, "c": 5, "d": 5, "e": 5}
    assert sum(allocate(7, {"a": 1 / 3, "b": 1 / 3, "c": 1 / 3}).values()) == 7
    assert split_sizes(10, (0.5, 0.3, 0.2)) == [5, 3, 2]
    assert split_sizes(11, (0.5, 0.3, 0.2)) == [6, 3, 2]
    assert split_sizes(2, (0.5, 0.3, 0.2)) == [2, 0, 0]  # leftovers go to the largest share


@given(st.integers(0, 300), st.integers(0, 100))
def test_split_partitions_by_problem(n, seed):
    recs = [{"problem_id": f"p{i // 2}", "k": i} for i in range(n)]
    parts = split_dataset(recs, SplitSpec((0.5, 0.3, 0.2), seed))
    assert sorted(r["k"] for part in parts for r in part) == list(range(n))
    ids = [{r["problem_id"] for r in part} for part in parts]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])


def test_phase1_dataset(tmp_path):
    mix = {CORRECT: 0.5, **{k: 0.125 for k in CORRUPTION_KINDS}}
    recs = make_phase1_dataset(["blocksworld", "logistics"], 8, mix, seed=1)
    assert len(recs) == 16
    labels = [r.label for r in recs if r.domain_kind == "blocksworld"]
    assert labels.count(CORRECT) == 4
    for k in CORRUPTION_KINDS:
        assert labels.count(k) == 1
    path = tmp_path / "p1.jsonl"
    assert write_jsonl(path, recs) == 16
    back = read_jsonl(path, Phase1Record)
    assert back == recs
    for r in back:
        from stripscot.pddl import parse_domain, parse_problem
        d = parse_domain(r.domain)
        p = parse_problem(r.problem, d)
        v = validate_trace(d, p, parse_trace(r.trace, d))
        assert v.valid == (r.label == CORRECT)
        assert r.explanation.splitlines()[0] == ("valid" if v.valid else "invalid")
    with pytest.raises(ValueError):
        make_phase1_dataset(["blocksworld"], 2, {"correct": 0.7}, seed=0)


def test_records_reject_unknown_fields():
    with pytest.raises(ValueError):
        ProblemRecord.from_dict({"problem_id": "x", "domain_kind": "b", "domain": "",
                                 "problem": "", "oops": 1})


def _attempt(inst, trace, iteration=1):
    v = validate_trace(inst.domain, inst.problem, trace)
    return TraceAttempt(inst.problem_id, iteration, inst.domain, inst.problem, trace, v,
                        predicted_validity(trace))


def test_loop_records_revalidate(tmp_path):
    attempts = []
    for seed in range(6):
        inst = gen_instance("logistics" if seed % 2 else "blocksworld", seed)
        plan = solve(inst.domain, inst.problem)
        if not plan:
            continue
        attempts.append(_attempt(inst, build_trace(inst.problem.init, plan, True, 0.8)))
        kind = CORRUPTION_KINDS[seed % 4]
        attempts.append(_attempt(inst, corrupt_plan(inst.domain, inst.problem, plan, kind, seed),
                                 2))
    reasoning = build_reasoning_dataset(attempts)
    final = build_final_dataset(attempts)
    assert len(final) == len(attempts)
    assert len(reasoning) == sum(len(a.trace) for a in attempts)
    write_jsonl(tmp_path / "r.jsonl", reasoning)
    write_jsonl(tmp_path / "f.jsonl", final)
    for r in read_jsonl(tmp_path / "r.jsonl", ReasoningRecord):
        assert verdict_to_dict(r.revalidate()) == r.feedback
    for r in read_jsonl(tmp_path / "f.jsonl", FinalRecord):
        assert r.revalidate() == r.v
    # records are stable text
    line = (tmp_path / "f.jsonl").read_text().splitlines()[0]
    assert json.loads(line)["schema"] == "v1"


def test_problem_pool():
    pool = make_problem_pool(["blocksworld", "logistics"], 3, seed=2,
                             sizes=GeneratorSizes(blocks=3))
    assert [r.problem_id for r in pool][:3] == ["blocksworld-2-0000", "blocksworld-2-0001",
                                               "blocksworld-2-0002"]
    for r in pool:
        d, p = r.load()
        from stripscot.pddl import parse_plan
        assert validate_plan(d, p, parse_plan(r.plan, d, p)).valid
