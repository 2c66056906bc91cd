"""Pure-Python search kernels over bitmask-encoded states.

States are Python ints, one bit per ground atom. Actions are given as
parallel lists of precondition / add / delete masks. This module is the
fallback for the compiled ``_kernels`` extension and must stay
behaviourally identical to it.
"""

from time import monotonic

FOUND = 0
EXHAUSTED = 1
NODE_LIMIT = 2
TIME_LIMIT = 3
DEPTH_LIMIT = 4


def _path(parent, node):
    out = []
    while True:
        prev, action = parent[node]
        if prev is None:
            break
        out.append(action)
        node = prev
    out.reverse()
    return out


def bfs(init, goal, pre, add, dele, nbits, max_expanded, max_depth, deadline):
    """Breadth-first search from ``init`` to any state covering ``goal``.

    Returns ``(status, action_indices, expanded, generated)``. Goal test
    happens at generation, which keeps plans length-minimal.
    """
    if init & goal == goal:
        return FOUND, [], 0, 1
    n = len(pre)
    keep = [~d for d in dele]
    parent = {init: (None, -1)}
    frontier = [init]
    depth = 0
    expanded = 0
    while frontier:
        if depth >= max_depth:
            return DEPTH_LIMIT, [], expanded, len(parent)
        nxt = []
        for s in frontier:
            if expanded >= max_expanded:
                return NODE_LIMIT, [], expanded, len(parent)
            expanded += 1
            if deadline > 0 and (expanded & 1023) == 0 and monotonic() > deadline:
                return TIME_LIMIT, [], expanded, len(parent)
            for i in range(n):
                p = pre[i]
                if s & p == p:
                    t = (s & keep[i]) | add[i]
                    if t not in parent:
                        parent[t] = (s, i)
                        if t & goal == goal:
                            return FOUND, _path(parent, t), expanded, len(parent)
                        nxt.append(t)
        frontier = nxt
        depth += 1
    return EXHAUSTED, [], expanded, len(parent)


def reachable(init, pre, add, dele, nbits, bound, max_states):
    """All states within ``bound`` steps of ``init`` (``bound < 0``: no bound).

    Returns ``(status, states, expanded)`` with states in discovery order.
    """
    n = len(pre)
    keep = [~d for d in dele]
    seen = {init: None}
    frontier = [init]
    depth = 0
    expanded = 0
    while frontier and (bound < 0 or depth < bound):
        nxt = []
        for s in frontier:
            expanded += 1
            for i in range(n):
                p = pre[i]
                if s & p == p:
                    t = (s & keep[i]) | add[i]
                    if t not in seen:
                        if len(seen) >= max_states:
                            return NODE_LIMIT, list(seen), expanded
                        seen[t] = None
                        nxt.append(t)
        frontier = nxt
        depth += 1
    return FOUND, list(seen), expanded
