"""STRIPS planning formalism: atoms, states, actions, transitions.

States are plain ``frozenset`` objects of :class:`Atom`. Every type here is
an immutable value and every function is pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    ArityMismatch,
    InapplicableAction,
    TypeMismatch,
    UndeclaredObject,
    UnknownAction,
    UnknownType,
)

ROOT_TYPE = "object"

State = frozenset  # frozenset[Atom]


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple = ()

    def __post_init__(self):
        if not self.predicate:
            raise ValueError("atom predicate must be nonempty")
        if self.predicate != self.predicate.lower():
            object.__setattr__(self, "predicate", self.predicate.lower())
        if not isinstance(self.args, tuple) or any(a != a.lower() for a in self.args):
            object.__setattr__(self, "args", tuple(a.lower() for a in self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        if not self.args:
            return f"({self.predicate})"
        return f"({self.predicate} {' '.join(self.args)})"

    def substitute(self, binding: Mapping[str, str]) -> "Atom":
        return Atom(self.predicate, tuple(binding.get(a, a) for a in self.args))


def atom(text: str) -> Atom:
    """Build an atom from ``"(on a b)"`` or ``"on a b"`` shorthand."""
    parts = text.strip().strip("()").split()
    return Atom(parts[0], tuple(parts[1:]))


def state(*atoms) -> frozenset:
    return frozenset(atom(a) if isinstance(a, str) else a for a in atoms)


def sorted_atoms(atoms: Iterable[Atom]) -> list:
    return sorted(atoms)


def format_atoms(atoms: Iterable[Atom], sort: bool = True) -> str:
    items = sorted(atoms) if sort else list(atoms)
    return ", ".join(str(a) for a in items)


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    param_types: tuple = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("predicate name must be nonempty")
        object.__setattr__(self, "name", self.name.lower())

    @property
    def arity(self) -> int:
        return len(self.param_types)


@dataclass(frozen=True)
class ActionSchema:
    """A lifted STRIPS action. ``params`` is a tuple of ``(variable, type)``."""

    name: str
    params: tuple
    pre: tuple = ()
    add: tuple = ()
    dele: tuple = ()

    def __post_init__(self):
        variables = {v for v, _ in self.params}
        for a in itertools.chain(self.pre, self.add, self.dele):
            for arg in a.args:
                if arg.startswith("?") and arg not in variables:
                    raise ValueError(f"variable {arg} in action {self.name} "
                                     "is not a parameter")

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple
    pre: tuple = ()
    add: frozenset = frozenset()
    dele: frozenset = frozenset()

    @property
    def binding(self) -> dict:
        # populated lazily by instantiate(); kept out of equality
        return dict(self._binding)

    _binding: tuple = field(default=(), compare=False, repr=False)

    def __str__(self) -> str:
        if not self.args:
            return f"({self.name})"
        return f"({self.name} {' '.join(self.args)})"

    def signature(self) -> tuple:
        return (self.name, self.args)


Plan = tuple  # tuple[GroundAction, ...]


@dataclass(frozen=True)
class Domain:
    name: str
    types: tuple = ()  # ((type, parent), ...)
    predicates: tuple = ()
    actions: tuple = ()
    requirements: tuple = (":strips", ":typing")

    def __post_init__(self):
        names = [p.name for p in self.predicates]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate predicate names in domain {self.name}")
        names = [a.name for a in self.actions]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate action names in domain {self.name}")

    @cached_property
    def parent(self) -> dict:
        return dict(self.types)

    @cached_property
    def schemas(self) -> dict:
        return {a.name: a for a in self.actions}

    @cached_property
    def predicate_map(self) -> dict:
        return {p.name: p for p in self.predicates}

    def type_names(self) -> set:
        return {ROOT_TYPE} | set(self.parent) | set(self.parent.values())

    def check_type(self, name: str) -> None:
        if name not in self.type_names():
            raise UnknownType(f"unknown type {name!r}")

    def is_subtype(self, sub: str, sup: str) -> bool:
        if sup == ROOT_TYPE:
            return True
        seen = set()
        t: Optional[str] = sub
        while t is not None and t not in seen:
            if t == sup:
                return True
            seen.add(t)
            t = self.parent.get(t)
        return False

    def schema(self, name: str) -> ActionSchema:
        try:
            return self.schemas[name.lower()]
        except KeyError:
            raise UnknownAction(f"unknown action {name!r}") from None


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple = ()  # ((name, type), ...)
    init: frozenset = frozenset()
    goal: frozenset = frozenset()

    @cached_property
    def object_types(self) -> dict:
        return dict(self.objects)


def instantiate(domain: Domain, name: str, args: Sequence[str],
                objects: Optional[Mapping[str, str]] = None) -> GroundAction:
    """Ground schema ``name`` with ``args``.

    When ``objects`` (name -> type) is given, arguments must be declared
    objects of a compatible type.
    """
    schema = domain.schema(name)
    args = tuple(a.lower() for a in args)
    if len(args) != schema.arity:
        raise ArityMismatch(f"action {schema.name} takes {schema.arity} "
                            f"arguments, got {len(args)}")
    if objects is not None:
        for arg, (var, typ) in zip(args, schema.params):
            if arg not in objects:
                raise UndeclaredObject(f"undeclared object {arg!r} in "
                                       f"({schema.name} {' '.join(args)})")
            if not domain.is_subtype(objects[arg], typ):
                raise TypeMismatch(f"object {arg} of type {objects[arg]} "
                                   f"cannot bind {var} - {typ}")
    binding = dict(zip((v for v, _ in schema.params), args))
    return _ground(schema, args, binding)


def _ground(schema: ActionSchema, args: tuple, binding: dict) -> GroundAction:
    pre = tuple(dict.fromkeys(a.substitute(binding) for a in schema.pre))
    return GroundAction(
        schema.name,
        args,
        pre,
        frozenset(a.substitute(binding) for a in schema.add),
        frozenset(a.substitute(binding) for a in schema.dele),
        tuple(binding.items()),
    )


def objects_by_type(domain: Domain, objects: Iterable) -> dict:
    """Map each type name to the sorted objects compatible with it."""
    objects = list(objects)
    for _, typ in objects:
        domain.check_type(typ)
    out = {}
    for typ in domain.type_names():
        out[typ] = sorted(o for o, t in objects if domain.is_subtype(t, typ))
    return out


def ground(domain: Domain, objects) -> list:
    """Every type-consistent instantiation of every schema.

    Order: schema declaration order, then lexicographic binding order.
    ``objects`` is a Problem or a sequence of ``(name, type)`` pairs.
    """
    if isinstance(objects, Problem):
        objects = objects.objects
    by_type = objects_by_type(domain, objects)
    out = []
    for schema in domain.actions:
        for _, typ in schema.params:
            domain.check_type(typ)
        pools = [by_type[typ] for _, typ in schema.params]
        variables = [v for v, _ in schema.params]
        for combo in itertools.product(*pools):
            out.append(_ground(schema, combo, dict(zip(variables, combo))))
    return out


def applicable(s: frozenset, a: GroundAction) -> bool:
    return all(p in s for p in a.pre)


def missing_preconditions(s: frozenset, a: GroundAction) -> tuple:
    return tuple(p for p in a.pre if p not in s)


def apply_unchecked(s: frozenset, a: GroundAction) -> frozenset:
    """``(s - del) | add`` regardless of applicability."""
    return (s - a.dele) | a.add


def apply(s: frozenset, a: GroundAction) -> frozenset:
    missing = missing_preconditions(s, a)
    if missing:
        raise InapplicableAction(a, missing)
    return (s - a.dele) | a.add


def satisfies_goal(s: frozenset, goal: Iterable[Atom]) -> bool:
    return all(g in s for g in goal)


def state_distance(s: frozenset, other: frozenset) -> int:
    return len(s - other) + len(other - s)


def simulate(s: frozenset, plan: Iterable[GroundAction]) -> frozenset:
    for a in plan:
        s = apply(s, a)
    return s
