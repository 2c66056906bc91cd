"""Breadth-first oracle planner, reachability, and random walks."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Optional

from . import kernels
from .core import Domain, GroundAction, Problem, applicable, ground
from .errors import DeadEnd, LimitExceeded, Unsolvable


@dataclass(frozen=True)
class SearchLimits:
    max_expanded_states: int = 2_000_000
    max_plan_length: int = 100
    timeout: float = 120.0

    def __post_init__(self):
        for name in ("max_expanded_states", "max_plan_length", "timeout"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class Task:
    """A problem compiled to bitmasks: one bit per ground atom."""

    def __init__(self, domain: Domain, problem: Problem):
        self.domain = domain
        self.problem = problem
        self.actions = ground(domain, problem)
        atoms = set(problem.init) | set(problem.goal)
        for a in self.actions:
            atoms.update(a.pre)
            atoms.update(a.add)
            atoms.update(a.dele)
        self.atoms = sorted(atoms)
        self.index = {a: i for i, a in enumerate(self.atoms)}
        self.pre = [self.encode(a.pre) for a in self.actions]
        self.add = [self.encode(a.add) for a in self.actions]
        self.dele = [self.encode(a.dele) for a in self.actions]
        self.init = self.encode(problem.init)
        self.goal = self.encode(problem.goal)

    @property
    def nbits(self) -> int:
        return len(self.atoms)

    def encode(self, atoms) -> int:
        mask = 0
        for a in atoms:
            mask |= 1 << self.index[a]
        return mask

    def decode(self, mask: int) -> frozenset:
        out = []
        i = 0
        while mask:
            if mask & 1:
                out.append(self.atoms[i])
            mask >>= 1
            i += 1
        return frozenset(out)


def solve(domain: Domain, problem: Problem, limits: SearchLimits = SearchLimits(),
          kernel=None) -> tuple:
    """Return a length-minimal plan as a tuple of ground actions.

    Raises Unsolvable when the reachable space is exhausted and
    LimitExceeded when a search limit stops the search first.
    """
    kernel = kernel or kernels.active
    task = Task(domain, problem)
    deadline = time.monotonic() + limits.timeout
    status, path, expanded, generated = kernel.bfs(
        task.init, task.goal, task.pre, task.add, task.dele, task.nbits,
        limits.max_expanded_states, limits.max_plan_length, deadline)
    if status == kernels.FOUND:
        return tuple(task.actions[i] for i in path)
    if status == kernels.EXHAUSTED:
        raise Unsolvable(expanded)
    reason = {kernels.NODE_LIMIT: "max_expanded_states",
              kernels.TIME_LIMIT: "timeout",
              kernels.DEPTH_LIMIT: "max_plan_length"}[status]
    raise LimitExceeded(reason, expanded, generated)


def reachable_states(domain: Domain, problem: Problem, bound: Optional[int] = None,
                     max_states: int = 1_000_000, kernel=None) -> set:
    """States reachable from the initial state within ``bound`` steps."""
    if bound is not None and bound < 0:
        raise ValueError("bound must be nonnegative")
    kernel = kernel or kernels.active
    task = Task(domain, problem)
    status, states, expanded = kernel.reachable(
        task.init, task.pre, task.add, task.dele, task.nbits,
        -1 if bound is None else bound, max_states)
    if status != kernels.FOUND:
        raise LimitExceeded("max_states", expanded, len(states))
    return {task.decode(s) for s in states}


def random_walk(domain: Domain, problem: Problem, length: int, seed) -> tuple:
    """Uniformly random applicable actions from the initial state."""
    if length < 0:
        raise ValueError("length must be nonnegative")
    rng = random.Random(seed)
    actions = ground(domain, problem)
    s = problem.init
    plan: list[GroundAction] = []
    for step in range(length):
        options = [a for a in actions if applicable(s, a)]
        if not options:
            raise DeadEnd(step + 1)
        a = rng.choice(options)
        plan.append(a)
        s = (s - a.dele) | a.add
    return tuple(plan)
