"""Canonical Blocksworld and Logistics encodings and problem generators."""

from __future__ import annotations

import random
from functools import lru_cache

from .core import Atom, Domain, Problem
from .pddl import parse_domain

BLOCKSWORLD_PDDL = """\
(define (domain blocksworld)
  (:requirements :strips :typing)
  (:types block)
  (:predicates
    (on ?x - block ?y - block)
    (ontable ?x - block)
    (clear ?x - block)
    (handempty)
    (holding ?x - block))
  (:action pick-up
    :parameters (?x - block)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x)
                 (not (ontable ?x)) (not (clear ?x)) (not (handempty))))
  (:action put-down
    :parameters (?x - block)
    :precondition (and (holding ?x))
    :effect (and (ontable ?x) (clear ?x) (handempty)
                 (not (holding ?x))))
  (:action stack
    :parameters (?x - block ?y - block)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty)
                 (not (holding ?x)) (not (clear ?y))))
  (:action unstack
    :parameters (?x - block ?y - block)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y)
                 (not (on ?x ?y)) (not (clear ?x)) (not (handempty))))
)
"""

LOGISTICS_PDDL = """\
(define (domain logistics)
  (:requirements :strips :typing)
  (:types truck airplane - vehicle
          package vehicle - physobj
          airport - location
          location city physobj - object)
  (:predicates
    (at ?obj - physobj ?loc - location)
    (in ?pkg - package ?veh - vehicle)
    (in-city ?loc - location ?city - city))
  (:action load-truck
    :parameters (?pkg - package ?truck - truck ?loc - location)
    :precondition (and (at ?truck ?loc) (at ?pkg ?loc))
    :effect (and (in ?pkg ?truck) (not (at ?pkg ?loc))))
  (:action unload-truck
    :parameters (?pkg - package ?truck - truck ?loc - location)
    :precondition (and (at ?truck ?loc) (in ?pkg ?truck))
    :effect (and (at ?pkg ?loc) (not (in ?pkg ?truck))))
  (:action drive-truck
    :parameters (?truck - truck ?from - location ?to - location ?city - city)
    :precondition (and (at ?truck ?from) (in-city ?from ?city) (in-city ?to ?city))
    :effect (and (at ?truck ?to) (not (at ?truck ?from))))
  (:action load-airplane
    :parameters (?pkg - package ?airplane - airplane ?loc - airport)
    :precondition (and (at ?pkg ?loc) (at ?airplane ?loc))
    :effect (and (in ?pkg ?airplane) (not (at ?pkg ?loc))))
  (:action unload-airplane
    :parameters (?pkg - package ?airplane - airplane ?loc - airport)
    :precondition (and (in ?pkg ?airplane) (at ?airplane ?loc))
    :effect (and (at ?pkg ?loc) (not (in ?pkg ?airplane))))
  (:action fly-airplane
    :parameters (?airplane - airplane ?from - airport ?to - airport)
    :precondition (and (at ?airplane ?from))
    :effect (and (at ?airplane ?to) (not (at ?airplane ?from))))
)
"""

DOMAIN_KINDS = ("blocksworld", "mystery_blocksworld", "logistics")


@lru_cache(maxsize=None)
def blocksworld_domain() -> Domain:
    return parse_domain(BLOCKSWORLD_PDDL)


@lru_cache(maxsize=None)
def logistics_domain() -> Domain:
    return parse_domain(LOGISTICS_PDDL)


def blocksworld_problem(tower_lists, goal_on, name: str = "bw") -> Problem:
    """Build a hand-empty Blocksworld problem.

    ``tower_lists`` is a list of towers, each listed bottom to top.
    ``goal_on`` is an iterable of ``(upper, lower)`` pairs.
    """
    blocks = sorted(b for tower in tower_lists for b in tower)
    init = {Atom("handempty")}
    for tower in tower_lists:
        init.add(Atom("ontable", (tower[0],)))
        init.add(Atom("clear", (tower[-1],)))
        for lower, upper in zip(tower, tower[1:]):
            init.add(Atom("on", (upper, lower)))
    goal = frozenset(Atom("on", (u, l)) for u, l in goal_on)
    return Problem(name, "blocksworld", tuple((b, "block") for b in blocks),
                   frozenset(init), goal)


def _random_towers(blocks, rng: random.Random) -> list:
    order = list(blocks)
    rng.shuffle(order)
    towers = []
    for b in order:
        # new tower or on top of an existing one, uniformly over choices
        k = rng.randrange(len(towers) + 1)
        if k == len(towers):
            towers.append([b])
        else:
            towers[k].append(b)
    return towers


def _walk_goal(domain, problem, rng, length, goal_of, tries: int = 8):
    """Goal read off a state visited by a random walk.

    Several walks are drawn and every state along them is a candidate; the
    goal with the most atoms false in the initial state wins (first one on
    ties), so trivial goals are only returned when nothing better exists.
    """
    from .planner import random_walk

    best, best_score = frozenset(), -1
    for _ in range(tries):
        plan = random_walk(domain, problem, length, rng.randrange(2**31))
        s = problem.init
        for a in plan:
            s = (s - a.dele) | a.add
            goal = goal_of(s)
            score = len(goal - problem.init)
            if goal and score > best_score:
                best, best_score = goal, score
    return best


def gen_blocksworld(n: int, seed: int, walk_length: int = 0, name: str = "") -> Problem:
    """Random ``n``-block problem whose goal comes from a random walk."""
    if n < 1:
        raise ValueError("need at least one block")
    rng = random.Random(f"blocksworld:{n}:{seed}")
    blocks = [f"b{i + 1}" for i in range(n)]
    towers = _random_towers(blocks, rng)
    start = blocksworld_problem(towers, (), name or f"bw-{n}-{seed}")
    walk_length = walk_length or 4 * n

    def goal_of(s):
        on = frozenset(a for a in s if a.predicate == "on")
        return on or frozenset(a for a in s if a.predicate == "ontable")

    goal = _walk_goal(blocksworld_domain(), start, rng, walk_length, goal_of)
    return Problem(start.name, start.domain_name, start.objects, start.init, goal)


def gen_logistics(cities: int, locations_per_city: int, packages: int, trucks: int,
                  airplanes: int, seed: int, walk_length: int = 0, name: str = "") -> Problem:
    """Random Logistics problem. The first location of each city is its airport.

    Trucks are assigned to cities round-robin. With a truck in every city
    each package gets a random new destination; otherwise (or when
    ``walk_length`` is given) goals come from a random walk. Either way the
    problem is solvable by construction.
    """
    for label, value in (("cities", cities), ("locations_per_city", locations_per_city),
                         ("packages", packages), ("trucks", trucks), ("airplanes", airplanes)):
        if value < 1:
            raise ValueError(f"{label} must be positive")
    rng = random.Random(f"logistics:{cities}:{locations_per_city}:{packages}:"
                        f"{trucks}:{airplanes}:{seed}")
    objects, init = [], set()
    city_locs = []
    for c in range(cities):
        city = f"c{c + 1}"
        objects.append((city, "city"))
        locs = []
        for k in range(locations_per_city):
            loc = f"l{c + 1}-{k + 1}"
            objects.append((loc, "airport" if k == 0 else "location"))
            init.add(Atom("in-city", (loc, city)))
            locs.append(loc)
        city_locs.append(locs)
    all_locs = [loc for locs in city_locs for loc in locs]
    for t in range(trucks):
        truck = f"t{t + 1}"
        objects.append((truck, "truck"))
        init.add(Atom("at", (truck, rng.choice(city_locs[t % cities]))))
    for p in range(airplanes):
        plane = f"a{p + 1}"
        objects.append((plane, "airplane"))
        init.add(Atom("at", (plane, rng.choice([locs[0] for locs in city_locs]))))
    pkgs = []
    for p in range(packages):
        pkg = f"p{p + 1}"
        pkgs.append(pkg)
        objects.append((pkg, "package"))
        init.add(Atom("at", (pkg, rng.choice(all_locs))))
    start = Problem(name or f"log-{cities}-{locations_per_city}-{packages}-{seed}",
                    "logistics", tuple(objects), frozenset(init), frozenset())
    pkg_set = set(pkgs)

    def goal_of(s):
        return frozenset(a for a in s if a.predicate == "at" and a.args[0] in pkg_set)

    if trucks >= cities and not walk_length:
        # every city has a truck and there is a plane, so any package can
        # reach any location: draw a fresh destination for each package
        where = {a.args[0]: a.args[1] for a in init if a.predicate == "at"}
        goal = frozenset(Atom("at", (pkg, rng.choice([x for x in all_locs if x != where[pkg]])))
                         for pkg in pkgs) if len(all_locs) > 1 else goal_of(init)
    else:
        goal = _walk_goal(logistics_domain(), start, rng, walk_length or 6 * packages + 4,
                          goal_of)
    return Problem(start.name, start.domain_name, start.objects, start.init, goal)
