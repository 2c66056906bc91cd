"""Reader and printer for the STRIPS+typing fragment of PDDL.

Symbols are lowercased on read. Source spans are kept on every token so
error messages can point at the offending text.
"""

from __future__ import annotations

from typing import Iterable, List, Optional, Union

from .core import (
    ROOT_TYPE,
    ActionSchema,
    Atom,
    Domain,
    GroundAction,
    PredicateDecl,
    Problem,
    instantiate,
)
from .errors import (
    ArityMismatch,
    ParseError,
    SourceSpan,
    TypeMismatch,
    UndeclaredObject,
    UnknownAction,
    UnknownType,
    UnsupportedFeature,
)

SUPPORTED_REQUIREMENTS = (":strips", ":typing")

# keywords that mark constructs outside STRIPS+typing
_UNSUPPORTED_FORMULAS = {
    "not": "negative preconditions",
    "=": "equality preconditions",
    "or": "disjunctive preconditions",
    "imply": "disjunctive preconditions",
    "exists": "existential preconditions",
    "forall": "universal preconditions",
    "when": "conditional effects",
    "increase": "numeric fluents",
    "decrease": "numeric fluents",
    "assign": "numeric fluents",
    "scale-up": "numeric fluents",
    "scale-down": "numeric fluents",
    "either": "either types",
}
_UNSUPPORTED_SECTIONS = {
    ":functions": "numeric fluents",
    ":constants": "domain constants",
    ":derived": "derived predicates",
    ":durative-action": "durative actions",
    ":constraints": "state trajectory constraints",
    ":metric": "plan metrics",
}


class Symbol(str):
    span: Optional[SourceSpan] = None


class SList(list):
    span: Optional[SourceSpan] = None


Node = Union[Symbol, SList]


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self._line_starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self._line_starts.append(i + 1)

    def span(self, start: int, end: int) -> SourceSpan:
        lo, hi = 0, len(self._line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._line_starts[mid] <= start:
                lo = mid
            else:
                hi = mid - 1
        return SourceSpan(start, end, lo + 1, start - self._line_starts[lo] + 1)

    def _skip(self) -> None:
        text, n = self.text, len(self.text)
        while self.pos < n:
            ch = text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == ";":
                while self.pos < n and text[self.pos] != "\n":
                    self.pos += 1
            else:
                break

    def read_all(self) -> List[Node]:
        out = []
        while True:
            self._skip()
            if self.pos >= len(self.text):
                return out
            out.append(self.read())

    def read(self) -> Node:
        self._skip()
        start = self.pos
        if start >= len(self.text):
            raise ParseError("unexpected end of input", self.span(start, start), "an expression")
        ch = self.text[start]
        if ch == ")":
            raise ParseError("unbalanced ')'", self.span(start, start + 1))
        if ch == "(":
            self.pos += 1
            node = SList()
            while True:
                self._skip()
                if self.pos >= len(self.text):
                    raise ParseError("unclosed '('", self.span(start, start + 1), "')'")
                if self.text[self.pos] == ")":
                    self.pos += 1
                    break
                node.append(self.read())
            node.span = self.span(start, self.pos)
            return node
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c.isspace() or c in "();":
                break
            self.pos += 1
        sym = Symbol(self.text[start:self.pos].lower())
        sym.span = self.span(start, self.pos)
        return sym


def read_sexprs(text: str) -> List[Node]:
    return _Reader(text).read_all()


def _span(node) -> Optional[SourceSpan]:
    return getattr(node, "span", None)


def _expect_list(node: Node, what: str) -> SList:
    if not isinstance(node, SList):
        raise ParseError(f"expected {what}, found {node!r}", _span(node), "'('")
    return node


def _expect_symbol(node: Node, what: str) -> Symbol:
    if not isinstance(node, Symbol):
        raise ParseError(f"expected {what}", _span(node), "a name")
    return node


def _head(node: SList) -> str:
    return node[0] if node and isinstance(node[0], Symbol) else ""


def _one_toplevel(text: str, kind: str) -> SList:
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ParseError(f"expected exactly one {kind} definition, found {len(nodes)}",
                         _span(nodes[1]) if len(nodes) > 1 else None)
    top = _expect_list(nodes[0], f"({kind} definition)")
    if _head(top) != "define" or len(top) < 2:
        raise ParseError(f"{kind} must start with (define ...)", top.span, "define")
    header = _expect_list(top[1], f"({kind} name)")
    if len(header) != 2 or _head(header) != kind:
        raise ParseError(f"expected ({kind} <name>)", header.span)
    return top


def _typed_list(nodes: Iterable[Node], what: str) -> list:
    """Parse ``a b - t c`` into ``[(a, t), (b, t), (c, object)]``."""
    out, pending = [], []
    nodes = list(nodes)
    i = 0
    while i < len(nodes):
        node = nodes[i]
        if isinstance(node, SList):
            if _head(node) == "either":
                raise UnsupportedFeature("unsupported feature: either types", node.span)
            raise ParseError(f"unexpected list in {what}", node.span, "a name")
        if node == "-":
            if i + 1 >= len(nodes):
                raise ParseError(f"missing type after '-' in {what}", node.span, "a type name")
            typ = nodes[i + 1]
            if isinstance(typ, SList) and _head(typ) == "either":
                raise UnsupportedFeature("unsupported feature: either types", typ.span)
            typ = _expect_symbol(typ, "a type name")
            if not pending:
                raise ParseError(f"type {typ} has nothing to annotate in {what}", node.span)
            out.extend((p, str(typ)) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(node)
        i += 1
    out.extend((p, ROOT_TYPE) for p in pending)
    return [(str(n), t) for n, t in out]


def _check_formula_head(node: SList) -> None:
    head = _head(node)
    if head in _UNSUPPORTED_FORMULAS:
        feature = _UNSUPPORTED_FORMULAS[head]
        raise UnsupportedFeature(f"unsupported feature: {feature} ({head})", node.span)


def _atom(node: Node, predicates: dict, variables: Optional[dict] = None) -> Atom:
    node = _expect_list(node, "an atom")
    _check_formula_head(node)
    name = _expect_symbol(node[0] if node else node, "a predicate name")
    decl = predicates.get(str(name))
    if decl is None:
        raise ParseError(f"undeclared predicate {name!r}", node.span)
    args = []
    for arg in node[1:]:
        arg = _expect_symbol(arg, "an argument")
        if isinstance(arg, SList):
            raise ParseError("nested expression in atom", _span(arg))
        if variables is not None and arg.startswith("?") and arg not in variables:
            raise ParseError(f"variable {arg} is not a parameter", arg.span)
        args.append(str(arg))
    if len(args) != decl.arity:
        raise ArityMismatch(f"predicate {name} takes {decl.arity} arguments, got {len(args)}",
                            node.span)
    return Atom(str(name), tuple(args))


def _conjunction(node: Node) -> List[Node]:
    node = _expect_list(node, "a formula")
    if not node:
        return []
    if _head(node) == "and":
        return list(node[1:])
    return [node]


def _parse_types(section: SList) -> tuple:
    pairs = []
    seen = {}
    for name, parent in _typed_list(section[1:], ":types"):
        if name == ROOT_TYPE:
            continue
        if name in seen and seen[name] != parent:
            raise ParseError(f"type {name} declared with two parents", section.span)
        if name not in seen:
            seen[name] = parent
            pairs.append((name, parent))
    for name, parent in list(pairs):
        if parent != ROOT_TYPE and parent not in seen:
            seen[parent] = ROOT_TYPE
            pairs.append((parent, ROOT_TYPE))
    return tuple(pairs)


def _parse_action(node: SList, predicates: dict, known_types: set) -> ActionSchema:
    if len(node) < 2:
        raise ParseError("action needs a name", node.span)
    name = str(_expect_symbol(node[1], "an action name"))
    fields = {}
    i = 2
    while i < len(node):
        key = _expect_symbol(node[i], "an action field keyword")
        if i + 1 >= len(node):
            raise ParseError(f"missing value for {key}", key.span)
        fields[str(key)] = node[i + 1]
        i += 2
    for key in fields:
        if key not in (":parameters", ":precondition", ":effect"):
            raise ParseError(f"unknown action field {key}", node.span)
    params = _typed_list(_expect_list(fields.get(":parameters", SList()), "parameter list"),
                         f"parameters of {name}")
    for var, typ in params:
        if not var.startswith("?"):
            raise ParseError(f"parameter {var} of {name} must start with '?'", node.span)
        if typ not in known_types:
            raise UnknownType(f"unknown type {typ!r} in action {name}", node.span)
    variables = dict(params)
    if len(variables) != len(params):
        raise ParseError(f"duplicate parameter in action {name}", node.span)

    pre = []
    if ":precondition" in fields:
        for part in _conjunction(fields[":precondition"]):
            pre.append(_atom(part, predicates, variables))
    add, dele = [], []
    if ":effect" in fields:
        for part in _conjunction(fields[":effect"]):
            part = _expect_list(part, "an effect")
            if _head(part) == "not":
                if len(part) != 2:
                    raise ParseError("malformed (not ...) effect", part.span)
                dele.append(_atom(part[1], predicates, variables))
            else:
                add.append(_atom(part, predicates, variables))
    dedup = lambda xs: tuple(dict.fromkeys(xs))  # noqa: E731
    return ActionSchema(name, tuple(params), dedup(pre), dedup(add), dedup(dele))


def parse_domain(text: str) -> Domain:
    top = _one_toplevel(text, "domain")
    name = str(_expect_symbol(top[1][1], "a domain name"))
    requirements: tuple = ()
    types: tuple = ()
    predicates: dict = {}
    actions = []
    for section in top[2:]:
        section = _expect_list(section, "a domain section")
        head = _head(section)
        if head == ":requirements":
            reqs = []
            for r in section[1:]:
                r = _expect_symbol(r, "a requirement flag")
                if r not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedFeature(f"unsupported feature: requirement {r}", r.span)
                reqs.append(str(r))
            requirements = tuple(reqs)
        elif head == ":types":
            types = _parse_types(section)
        elif head == ":predicates":
            known = {ROOT_TYPE} | {t for t, _ in types} | {p for _, p in types}
            for decl in section[1:]:
                decl = _expect_list(decl, "a predicate declaration")
                pname = str(_expect_symbol(decl[0] if decl else decl, "a predicate name"))
                params = _typed_list(decl[1:], f"predicate {pname}")
                for _, typ in params:
                    if typ not in known:
                        raise UnknownType(f"unknown type {typ!r} in predicate {pname}", decl.span)
                if pname in predicates:
                    raise ParseError(f"duplicate predicate {pname}", decl.span)
                predicates[pname] = PredicateDecl(pname, tuple(t for _, t in params))
        elif head == ":action":
            known = {ROOT_TYPE} | {t for t, _ in types} | {p for _, p in types}
            action = _parse_action(section, predicates, known)
            if any(a.name == action.name for a in actions):
                raise ParseError(f"duplicate action {action.name}", section.span)
            actions.append(action)
        elif head in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeature(f"unsupported feature: {_UNSUPPORTED_SECTIONS[head]} ({head})",
                                     section.span)
        else:
            raise ParseError(f"unknown domain section {head or section!r}", section.span)
    return Domain(name, types, tuple(predicates.values()), tuple(actions), requirements)


def _ground_atom(node: Node, domain: Domain, objects: dict) -> Atom:
    a = _atom(node, domain.predicate_map)
    decl = domain.predicate_map[a.predicate]
    for arg, typ in zip(a.args, decl.param_types):
        if arg not in objects:
            raise UndeclaredObject(f"undeclared object {arg!r} in {a}", _span(node))
        if not domain.is_subtype(objects[arg], typ):
            raise TypeMismatch(f"object {arg} of type {objects[arg]} does not fit {typ} in {a}",
                               _span(node))
    return a


def parse_problem(text: str, domain: Domain) -> Problem:
    top = _one_toplevel(text, "problem")
    name = str(_expect_symbol(top[1][1], "a problem name"))
    domain_name = None
    objects: list = []
    init: list = []
    goal: list = []
    sections = {}
    for section in top[2:]:
        section = _expect_list(section, "a problem section")
        head = _head(section)
        if head in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeature(f"unsupported feature: {_UNSUPPORTED_SECTIONS[head]} ({head})",
                                     section.span)
        if head not in (":domain", ":objects", ":init", ":goal", ":requirements"):
            raise ParseError(f"unknown problem section {head or section!r}", section.span)
        sections[head] = section
    if ":domain" not in sections or len(sections[":domain"]) != 2:
        raise ParseError("problem must name its domain", top.span, "(:domain <name>)")
    domain_name = str(sections[":domain"][1])
    if domain_name != domain.name:
        raise ParseError(f"problem is for domain {domain_name!r}, not {domain.name!r}",
                         sections[":domain"].span)
    if ":objects" in sections:
        objects = _typed_list(sections[":objects"][1:], ":objects")
        names = [o for o, _ in objects]
        if len(names) != len(set(names)):
            raise ParseError("duplicate object declaration", sections[":objects"].span)
        for _, typ in objects:
            if typ not in domain.type_names():
                raise UnknownType(f"unknown type {typ!r}", sections[":objects"].span)
    table = dict(objects)
    for node in sections.get(":init", SList())[1:]:
        init.append(_ground_atom(node, domain, table))
    if ":goal" in sections:
        goal_sec = sections[":goal"]
        if len(goal_sec) > 2:
            raise ParseError("goal must be a single formula", goal_sec.span)
        if len(goal_sec) == 2:
            for node in _conjunction(goal_sec[1]):
                goal.append(_ground_atom(node, domain, table))
    return Problem(name, domain_name, tuple(objects), frozenset(init), frozenset(goal))


def parse_action_node(node: Node, domain: Domain, objects: Optional[dict] = None) -> GroundAction:
    node = _expect_list(node, "an action")
    if not node:
        raise ParseError("empty action", node.span, "(name args...)")
    parts = [_expect_symbol(n, "an action name or argument") for n in node]
    try:
        return instantiate(domain, parts[0], [str(p) for p in parts[1:]], objects)
    except ParseError as exc:
        exc.span = node.span
        raise type(exc)(exc.message, node.span) from None


def parse_plan(text: str, domain: Domain, problem: Problem, strict: bool = True) -> tuple:
    """Read one action per s-expression.

    With ``strict=False`` actions that do not ground (unknown name, wrong
    arity or types) are kept as bare ``GroundAction(name, args)`` so a
    validator can report them instead of the reader rejecting the file.
    """
    objects = problem.object_types
    out = []
    for node in read_sexprs(text):
        try:
            out.append(parse_action_node(node, domain, objects))
        except (UnknownAction, ArityMismatch, UndeclaredObject, TypeMismatch):
            if strict:
                raise
            out.append(GroundAction(str(node[0]), tuple(str(x) for x in node[1:])))
    return tuple(out)


def _group_typed(pairs) -> str:
    chunks, run, run_type = [], [], None
    for name, typ in pairs:
        if typ != run_type and run:
            chunks.append(" ".join(run) + f" - {run_type}")
            run = []
        run_type = typ
        run.append(name)
    if run:
        chunks.append(" ".join(run) + f" - {run_type}")
    return " ".join(chunks)


def _fmt_and(atoms) -> str:
    items = [str(a) for a in atoms]
    return f"(and {' '.join(items)})" if items else "(and)"


def print_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        lines.append(f"  (:types {_group_typed(domain.types)})")
    lines.append("  (:predicates")
    for p in domain.predicates:
        params = " ".join(f"?x{i} - {t}" for i, t in enumerate(p.param_types))
        lines.append(f"    ({p.name}{' ' + params if params else ''})")
    lines[-1] += ")"
    for a in domain.actions:
        lines.append(f"  (:action {a.name}")
        lines.append(f"    :parameters ({_group_typed(a.params)})")
        lines.append(f"    :precondition {_fmt_and(a.pre)}")
        effects = [str(x) for x in a.add] + [f"(not {x})" for x in a.dele]
        lines.append(f"    :effect {'(and ' + ' '.join(effects) + ')' if effects else '(and)'})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def print_problem(problem: Problem) -> str:
    lines = [f"(define (problem {problem.name})",
             f"  (:domain {problem.domain_name})"]
    if problem.objects:
        lines.append(f"  (:objects {_group_typed(problem.objects)})")
    lines.append("  (:init")
    for a in sorted(problem.init):
        lines.append(f"    {a}")
    lines[-1] += ")"
    lines.append(f"  (:goal {_fmt_and(sorted(problem.goal))})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def print_plan(plan: Iterable[GroundAction]) -> str:
    return "".join(f"{a}\n" for a in plan)
