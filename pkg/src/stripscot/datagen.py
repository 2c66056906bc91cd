"""Instance generation, mystery obfuscation, plan corruption and the
JSONL dataset records built from them."""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .core import Atom, Domain, GroundAction, Problem, applicable, apply_unchecked, ground
from .domains import blocksworld_domain, gen_blocksworld, gen_logistics, logistics_domain
from .errors import ContractViolation, ParseError, Uncorruptible
from .pddl import parse_domain, parse_problem, print_domain, print_plan, print_problem
from .planner import SearchLimits, Task, solve
from .trace import (
    CoTTrace,
    ReasoningStep,
    _fmt_state,
    _parse_state,
    build_trace,
    parse_trace,
    render_trace,
)
from .validator import (
    ErrorClass,
    PlanVerdict,
    StepVerdict,
    classify_error,
    render_feedback,
    validate_plan,
    validate_step,
    validate_trace,
)

SCHEMA_VERSION = "v1"

CORRECT = "correct"
PRECONDITION_UNSATISFIED = "precondition_unsatisfied"
EFFECT_MISAPPLIED = "effect_misapplied"
FRAME_VIOLATION = "frame_violation"
GOAL_NOT_REACHED = "goal_not_reached"

LABELS = (CORRECT, PRECONDITION_UNSATISFIED, EFFECT_MISAPPLIED, FRAME_VIOLATION,
          GOAL_NOT_REACHED)
CORRUPTION_KINDS = LABELS[1:]
LABEL_CLASS = {
    CORRECT: None,
    PRECONDITION_UNSATISFIED: ErrorClass.PRECONDITION_VIOLATION,
    EFFECT_MISAPPLIED: ErrorClass.INCORRECT_EFFECT,
    FRAME_VIOLATION: ErrorClass.INCORRECT_EFFECT,
    GOAL_NOT_REACHED: ErrorClass.GOAL_NOT_ACHIEVED,
}


def format_state(s: Iterable[Atom]) -> str:
    return _fmt_state(s)


def parse_state(text: str) -> frozenset:
    return _parse_state(text, 0, text)


# --------------------------------------------------------------------------
# mystery obfuscation

@dataclass(frozen=True)
class Renaming:
    predicates: Mapping[str, str]
    actions: Mapping[str, str]
    objects: Mapping[str, str]
    domain_name: tuple = ("", "")

    def is_bijective(self) -> bool:
        return all(len(set(m.values())) == len(m)
                   for m in (self.predicates, self.actions, self.objects))

    def inverse(self) -> "Renaming":
        inv = lambda m: {v: k for k, v in m.items()}  # noqa: E731
        return Renaming(inv(self.predicates), inv(self.actions), inv(self.objects),
                        self.domain_name[::-1])

    def atom(self, a: Atom) -> Atom:
        return Atom(self.predicates.get(a.predicate, a.predicate),
                    tuple(self.objects.get(x, x) for x in a.args))

    def state(self, s: Iterable[Atom]) -> frozenset:
        return frozenset(self.atom(a) for a in s)

    def action(self, a: GroundAction) -> GroundAction:
        return GroundAction(self.actions.get(a.name, a.name),
                            tuple(self.objects.get(x, x) for x in a.args),
                            tuple(self.atom(x) for x in a.pre),
                            self.state(a.add), self.state(a.dele))

    def plan(self, plan: Iterable[GroundAction]) -> tuple:
        return tuple(self.action(a) for a in plan)

    def trace(self, trace: CoTTrace) -> CoTTrace:
        steps = tuple(ReasoningStep(st.index, self.state(st.s_prev), self.action(st.action),
                                    self.state(st.s_next), st.justification)
                      for st in trace.steps)
        return CoTTrace(steps, trace.declared_final_valid, trace.confidence)

    def domain(self, d: Domain) -> Domain:
        actions = []
        for a in d.actions:
            actions.append(type(a)(self.actions[a.name], a.params,
                                   tuple(self.atom(x) for x in a.pre),
                                   tuple(self.atom(x) for x in a.add),
                                   tuple(self.atom(x) for x in a.dele)))
        preds = tuple(type(p)(self.predicates[p.name], p.param_types) for p in d.predicates)
        return Domain(self.domain_name[1] or d.name, d.types, preds, tuple(actions),
                      d.requirements)

    def problem(self, p: Problem) -> Problem:
        return Problem(p.name, self.domain_name[1] or p.domain_name,
                       tuple((self.objects[o], t) for o, t in p.objects),
                       self.state(p.init), self.state(p.goal))


def _token_map(names: Sequence[str], prefix: str, rng: random.Random) -> dict:
    numbers = list(range(1, len(names) + 1))
    rng.shuffle(numbers)
    return {name: f"{prefix}-{k}" for name, k in zip(sorted(names), numbers)}


def obfuscate(domain: Domain, problem: Problem, seed=0) -> tuple:
    """Rename predicates, actions and objects to meaningless tokens.

    Returns ``(domain, problem, renaming)``; the structure (arities, schemas,
    types) is untouched.
    """
    rng = random.Random(f"obfuscate:{seed}")
    renaming = Renaming(
        _token_map([p.name for p in domain.predicates], "pred", rng),
        _token_map([a.name for a in domain.actions], "act", rng),
        _token_map([o for o, _ in problem.objects], "obj", rng),
        (domain.name, "mystery"),
    )
    return renaming.domain(domain), renaming.problem(problem), renaming


# --------------------------------------------------------------------------
# instances

@dataclass(frozen=True)
class GeneratorSizes:
    """Per-instance sizes; a ``(lo, hi)`` pair is sampled uniformly."""

    blocks: Union[int, tuple] = (2, 5)
    cities: Union[int, tuple] = (1, 2)
    locations_per_city: Union[int, tuple] = 2
    packages: Union[int, tuple] = (1, 2)
    trucks: Union[int, tuple] = 2
    airplanes: Union[int, tuple] = 1
    walk_length: int = 0


def _pick(value, rng: random.Random) -> int:
    if isinstance(value, (tuple, list)):
        lo, hi = value
        return rng.randint(lo, hi)
    return int(value)


@dataclass(frozen=True)
class Instance:
    problem_id: str
    kind: str
    domain: Domain
    problem: Problem
    renaming: Optional[Renaming] = None

    @property
    def domain_text(self) -> str:
        return print_domain(self.domain)

    @property
    def problem_text(self) -> str:
        return print_problem(self.problem)


MYSTERY_SEED = 0


def gen_instance(kind: str, seed, sizes: GeneratorSizes = GeneratorSizes(),
                 problem_id: str = "") -> Instance:
    rng = random.Random(f"instance:{kind}:{seed}")
    pid = problem_id or f"{kind}-{seed}"
    if kind in ("blocksworld", "mystery_blocksworld"):
        problem = gen_blocksworld(_pick(sizes.blocks, rng), rng.randrange(2**31),
                                  sizes.walk_length, name=pid)
        domain = blocksworld_domain()
        if kind == "mystery_blocksworld":
            domain, problem, renaming = obfuscate(domain, problem, MYSTERY_SEED)
            return Instance(pid, kind, domain, problem, renaming)
        return Instance(pid, kind, domain, problem)
    if kind == "logistics":
        problem = gen_logistics(_pick(sizes.cities, rng), _pick(sizes.locations_per_city, rng),
                                _pick(sizes.packages, rng), _pick(sizes.trucks, rng),
                                _pick(sizes.airplanes, rng), rng.randrange(2**31),
                                sizes.walk_length, name=pid)
        return Instance(pid, kind, logistics_domain(), problem)
    raise ValueError(f"unknown domain kind {kind!r}")


def gen_problem(kind: str, seed, sizes: GeneratorSizes = GeneratorSizes()) -> Problem:
    return gen_instance(kind, seed, sizes).problem


# --------------------------------------------------------------------------
# corruption

def _states_along(init: frozenset, plan: Sequence[GroundAction]) -> list:
    out = [init]
    for a in plan:
        out.append(apply_unchecked(out[-1], a))
    return out


def _trace_with_wrong_result(init, plan, index, result) -> CoTTrace:
    """Trace along ``plan`` whose claimed result at ``index`` (0-based) is
    ``result``; later steps continue from that wrong belief."""
    steps = []
    s = init
    for j, a in enumerate(plan):
        nxt = result if j == index else apply_unchecked(s, a)
        steps.append(ReasoningStep(j + 1, s, a, nxt))
        s = nxt
    return CoTTrace(tuple(steps))


def corrupt_plan(domain: Domain, problem: Problem, plan: Sequence[GroundAction],
                 kind: str, seed) -> CoTTrace:
    """Deliberately broken claimed trace derived from a valid ``plan``.

    precondition_unsatisfied
        swap two adjacent actions, else insert an inapplicable one.
    effect_misapplied
        at one step drop an add effect or keep a deleted atom.
    frame_violation
        at one step flip an atom the action does not touch.
    goal_not_reached
        drop a suffix of the plan.

    The last two effect-level kinds leave the action sequence valid and
    only corrupt the claimed states.
    """
    rng = random.Random(f"corrupt:{kind}:{seed}")
    plan = list(plan)
    if kind == PRECONDITION_UNSATISFIED:
        positions = list(range(len(plan) - 1))
        rng.shuffle(positions)
        for i in positions:
            cand = plan[:i] + [plan[i + 1], plan[i]] + plan[i + 2:]
            v = validate_plan(domain, problem, cand)
            if not v.valid and v.error_class is ErrorClass.PRECONDITION_VIOLATION:
                return build_trace(problem.init, cand)
        states = _states_along(problem.init, plan)
        actions = ground(domain, problem)
        order = list(range(len(plan) + 1))
        rng.shuffle(order)
        for i in order:
            bad = [a for a in actions if not applicable(states[i], a)]
            if bad:
                cand = plan[:i] + [rng.choice(bad)] + plan[i:]
                return build_trace(problem.init, cand)
        raise Uncorruptible(kind, "every ground action is applicable everywhere")
    if kind == GOAL_NOT_REACHED:
        # keep at least one step when possible; an empty trace is a last resort
        cuts = list(range(1, len(plan)))
        rng.shuffle(cuts)
        cuts.append(len(plan))
        for k in cuts:
            cand = plan[:-k]
            v = validate_plan(domain, problem, cand)
            if not v.valid and v.error_class is ErrorClass.GOAL_NOT_ACHIEVED:
                return build_trace(problem.init, cand)
        raise Uncorruptible(kind, "no truncation leaves the goal unmet" if plan
                            else "cannot truncate an empty plan")
    if kind in (EFFECT_MISAPPLIED, FRAME_VIOLATION):
        if not plan:
            raise Uncorruptible(kind, "plan has no steps to corrupt")
        states = _states_along(problem.init, plan)
        universe = Task(domain, problem).atoms if kind == FRAME_VIOLATION else ()
        order = list(range(len(plan)))
        rng.shuffle(order)
        for i in order:
            a, before, after = plan[i], states[i], states[i + 1]
            if kind == EFFECT_MISAPPLIED:
                options = [("drop", x) for x in sorted(a.add)]
                options += [("keep", x) for x in sorted(a.dele - a.add)]
            else:
                touched = a.add | a.dele
                options = [("drop", x) for x in sorted(before - touched)]
                options += [("keep", x) for x in universe
                            if x not in before and x not in touched]
            if not options:
                continue
            how, x = rng.choice(options)
            wrong = after - {x} if how == "drop" else after | {x}
            return _trace_with_wrong_result(problem.init, plan, i, wrong)
        raise Uncorruptible(kind, "no step offers an atom to corrupt")
    raise ValueError(f"unknown corruption kind {kind!r}")


# --------------------------------------------------------------------------
# records

class _Record:
    @classmethod
    def from_dict(cls, data: dict):
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown fields for {cls.__name__}: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Phase1Record(_Record):
    record_id: str
    problem_id: str
    domain_kind: str
    domain: str
    problem: str
    plan: str
    trace: str
    label: str
    explanation: str
    schema: str = SCHEMA_VERSION


@dataclass(frozen=True)
class ProblemRecord(_Record):
    problem_id: str
    domain_kind: str
    domain: str
    problem: str
    plan: Optional[str] = None
    schema: str = SCHEMA_VERSION

    def load(self) -> tuple:
        d = parse_domain(self.domain)
        return d, parse_problem(self.problem, d)


def verdict_to_dict(v: StepVerdict) -> dict:
    return {
        "status": v.status.value,
        "missing_preconditions": [str(a) for a in v.missing_preconditions],
        "expected_state": format_state(v.expected_state),
        "claimed_state": format_state(v.claimed_state),
        "state_diff": {"missing": [str(a) for a in sorted(v.missing)],
                       "extra": [str(a) for a in sorted(v.extra)]},
        "unmet_goals": [str(a) for a in v.unmet_goals],
    }


@dataclass(frozen=True)
class ReasoningRecord(_Record):
    problem_id: str
    iteration: int
    step: int
    domain: str
    s_prev: str
    action: str
    s_claimed: str
    is_final: bool
    goal: str
    feedback: dict
    schema: str = SCHEMA_VERSION

    def revalidate(self, domain: Optional[Domain] = None) -> StepVerdict:
        d = domain or parse_domain(self.domain)
        trace = parse_trace(f"STATE: {self.s_prev}\nACTION: {self.action}\n"
                            f"RESULT: {self.s_claimed}\n", d)
        st = trace.steps[0]
        return validate_step(d, st.s_prev, st.action, st.s_next, parse_state(self.goal),
                             self.is_final, self.step)


@dataclass(frozen=True)
class FinalRecord(_Record):
    problem_id: str
    iteration: int
    domain: str
    problem: str
    plan: Optional[str]
    trace: Optional[str]
    v: int
    v_hat: float
    error_class: Optional[str] = None
    schema: str = SCHEMA_VERSION

    def revalidate(self) -> int:
        if self.trace is None:
            return 0
        d = parse_domain(self.domain)
        p = parse_problem(self.problem, d)
        try:
            trace = parse_trace(self.trace, d)
        except ParseError:
            return 0
        return int(validate_trace(d, p, trace).valid)


@dataclass(frozen=True)
class TraceAttempt:
    """One generated trace for one problem at one loop iteration."""

    problem_id: str
    iteration: int
    domain: Domain
    problem: Problem
    trace: Optional[CoTTrace]
    verdict: PlanVerdict
    v_hat: float
    domain_text: str = ""
    problem_text: str = ""
    raw: str = field(default="", compare=False)


def reasoning_records(attempt: TraceAttempt) -> list:
    """Step-level records; each claimed triple is judged on its own."""
    if attempt.trace is None:
        return []
    d, p = attempt.domain, attempt.problem
    dtext = attempt.domain_text or print_domain(d)
    goal = format_state(p.goal)
    out = []
    n = len(attempt.trace.steps)
    for st in attempt.trace.steps:
        try:
            v = validate_step(d, st.s_prev, st.action, st.s_next, p.goal, st.index == n, st.index)
        except ParseError:
            continue  # unresolvable action: no step-level judgement possible
        out.append(ReasoningRecord(attempt.problem_id, attempt.iteration, st.index, dtext,
                                   format_state(st.s_prev), str(v.action),
                                   format_state(st.s_next), st.index == n, goal,
                                   verdict_to_dict(v)))
    return out


def final_record(attempt: TraceAttempt) -> FinalRecord:
    d, p = attempt.domain, attempt.problem
    trace = attempt.trace
    return FinalRecord(
        attempt.problem_id, attempt.iteration,
        attempt.domain_text or print_domain(d), attempt.problem_text or print_problem(p),
        print_plan(st.action for st in trace.steps) if trace is not None else None,
        render_trace(trace) if trace is not None else None,
        int(attempt.verdict.valid), float(attempt.v_hat),
        None if attempt.verdict.valid else classify_error(attempt.verdict).value)


def build_reasoning_dataset(attempts: Iterable[TraceAttempt]) -> list:
    return [r for a in attempts for r in reasoning_records(a)]


def build_final_dataset(attempts: Iterable[TraceAttempt]) -> list:
    return [final_record(a) for a in attempts]


# --------------------------------------------------------------------------
# phase-1 data

def allocate(total: int, proportions: Mapping[str, float]) -> dict:
    """Largest-remainder allocation of ``total`` items to labels."""
    labels = list(proportions)
    raw = {k: total * proportions[k] for k in labels}
    out = {k: math.floor(raw[k] + 1e-9) for k in labels}
    left = total - sum(out.values())
    ranked = sorted(labels, key=lambda k: (-(raw[k] - out[k]), labels.index(k)))
    for k in ranked[:left]:
        out[k] += 1
    return out


def _check_mix(mix: Mapping[str, float]) -> None:
    unknown = set(mix) - set(LABELS)
    if unknown:
        raise ValueError(f"unknown labels in mix: {sorted(unknown)}")
    if any(v < 0 for v in mix.values()) or not math.isclose(sum(mix.values()), 1.0,
                                                            abs_tol=1e-9):
        raise ValueError("mix proportions must be nonnegative and sum to 1")


def phase1_record(inst: Instance, plan: Sequence[GroundAction], label: str, seed,
                  record_id: str = "") -> Phase1Record:
    d, p = inst.domain, inst.problem
    if label == CORRECT:
        trace = build_trace(p.init, plan)
    else:
        trace = corrupt_plan(d, p, plan, label, seed)
    verdict = validate_trace(d, p, trace)
    expected = LABEL_CLASS[label]
    got = None if verdict.valid else classify_error(verdict)
    if got is not expected:
        raise ContractViolation(f"{label} record classified as {got}")
    return Phase1Record(record_id or f"{inst.problem_id}:{label}", inst.problem_id, inst.kind,
                        inst.domain_text, inst.problem_text,
                        print_plan(st.action for st in trace.steps), render_trace(trace),
                        label, render_feedback(verdict, "detailed").text)


def make_phase1_dataset(kinds: Sequence[str], counts: Union[int, Mapping[str, int]],
                        mix: Mapping[str, float], seed: int = 0,
                        sizes: GeneratorSizes = GeneratorSizes(),
                        limits: SearchLimits = SearchLimits()) -> list:
    """Correct and deliberately corrupted plans with detailed explanations.

    One record per generated problem; labels are allocated exactly from
    ``mix`` per domain kind, then shuffled.
    """
    _check_mix(mix)
    rng = random.Random(f"phase1:{seed}")
    records = []
    for kind in kinds:
        n = counts if isinstance(counts, int) else counts[kind]
        alloc = allocate(n, mix)
        labels = [k for k in mix for _ in range(alloc[k])]
        rng.shuffle(labels)
        attempt = 0
        for i, label in enumerate(labels):
            while True:
                inst = gen_instance(kind, f"{seed}:{i}:{attempt}", sizes,
                                    problem_id=f"{kind}-{seed}-{i:04d}")
                attempt += 1
                plan = solve(inst.domain, inst.problem, limits)
                if not plan and label != CORRECT:
                    continue
                try:
                    records.append(phase1_record(inst, plan, label, f"{seed}:{i}"))
                except Uncorruptible:
                    continue
                break
    return records


def make_problem_pool(kinds: Sequence[str], counts: Union[int, Mapping[str, int]],
                      seed: int = 0, sizes: GeneratorSizes = GeneratorSizes(),
                      limits: SearchLimits = SearchLimits(),
                      nontrivial: bool = True) -> list:
    """Solved problem instances (for loop training and evaluation)."""
    out = []
    for kind in kinds:
        n = counts if isinstance(counts, int) else counts[kind]
        attempt = 0
        for i in range(n):
            while True:
                inst = gen_instance(kind, f"pool:{seed}:{i}:{attempt}", sizes,
                                    problem_id=f"{kind}-{seed}-{i:04d}")
                attempt += 1
                plan = solve(inst.domain, inst.problem, limits)
                if plan or not nontrivial:
                    break
            out.append(ProblemRecord(inst.problem_id, kind, inst.domain_text,
                                     inst.problem_text, print_plan(plan)))
    return out


# --------------------------------------------------------------------------
# splitting and files

@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple = (0.5, 0.3, 0.2)
    seed: int = 0

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ValueError("need three positive ratios")
        if not math.isclose(sum(self.ratios), 1.0, abs_tol=1e-9):
            raise ValueError("split ratios must sum to 1")


def split_sizes(n: int, ratios: Sequence[float]) -> list:
    """Floor each share; leftovers go one each to the largest ratios first."""
    sizes = [math.floor(n * r + 1e-9) for r in ratios]
    order = sorted(range(len(ratios)), key=lambda i: (-ratios[i], i))
    k = 0
    while sum(sizes) < n:
        sizes[order[k % len(order)]] += 1
        k += 1
    return sizes


def _pid(record) -> str:
    return record["problem_id"] if isinstance(record, dict) else record.problem_id


def split_dataset(records: Sequence, spec: SplitSpec = SplitSpec()) -> tuple:
    """Partition records into (D1, D2, D_test) by problem identity."""
    ids = sorted({_pid(r) for r in records})
    random.Random(f"split:{spec.seed}").shuffle(ids)
    sizes = split_sizes(len(ids), spec.ratios)
    where = {}
    start = 0
    for part, size in enumerate(sizes):
        for pid in ids[start:start + size]:
            where[pid] = part
        start += size
    parts = ([], [], [])
    for r in records:
        parts[where[_pid(r)]].append(r)
    return parts


def write_jsonl(path, records: Iterable) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            data = r.to_dict() if hasattr(r, "to_dict") else r
            fh.write(json.dumps(data, sort_keys=True, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_jsonl(path, cls=None) -> list:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                data = json.loads(line)
                out.append(cls.from_dict(data) if cls is not None else data)
    return out
