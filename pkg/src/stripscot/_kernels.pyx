# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernels; same contract as ``_kernels_py``.

States are fixed-width arrays of 64-bit words. Visited states are keyed by
their raw bytes in a Python dict, so deduplication order matches the pure
Python kernels exactly.
"""

from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy
from cpython.bytes cimport PyBytes_FromStringAndSize, PyBytes_AS_STRING
from time import monotonic

_WORD_MASK = 0xFFFFFFFFFFFFFFFF

FOUND = 0
EXHAUSTED = 1
NODE_LIMIT = 2
TIME_LIMIT = 3
DEPTH_LIMIT = 4


cdef void _to_words(object mask, uint64_t* out, int nw):
    cdef int w
    for w in range(nw):
        out[w] = <uint64_t>((mask >> (64 * w)) & _WORD_MASK)


cdef object _from_words(const uint64_t* words, int nw):
    cdef int w
    value = 0
    for w in range(nw - 1, -1, -1):
        value = (value << 64) | words[w]
    return value


cdef class _Actions:
    cdef int n
    cdef int nw
    cdef uint64_t* pre
    cdef uint64_t* add
    cdef uint64_t* keep

    def __cinit__(self, pre, add, dele, int nbits):
        cdef int i, w
        self.n = len(pre)
        self.nw = max(1, (nbits + 63) // 64)
        size = max(1, self.n * self.nw) * sizeof(uint64_t)
        self.pre = <uint64_t*>malloc(size)
        self.add = <uint64_t*>malloc(size)
        self.keep = <uint64_t*>malloc(size)
        if self.pre == NULL or self.add == NULL or self.keep == NULL:
            raise MemoryError()
        for i in range(self.n):
            _to_words(pre[i], self.pre + i * self.nw, self.nw)
            _to_words(add[i], self.add + i * self.nw, self.nw)
            _to_words(dele[i], self.keep + i * self.nw, self.nw)
            for w in range(self.nw):
                self.keep[i * self.nw + w] = ~self.keep[i * self.nw + w]

    def __dealloc__(self):
        free(self.pre)
        free(self.add)
        free(self.keep)


cdef inline bint _covers(const uint64_t* s, const uint64_t* p, int nw) nogil:
    cdef int w
    for w in range(nw):
        if (s[w] & p[w]) != p[w]:
            return False
    return True


cdef inline void _step(const uint64_t* s, const uint64_t* keep, const uint64_t* add,
                       uint64_t* out, int nw) nogil:
    cdef int w
    for w in range(nw):
        out[w] = (s[w] & keep[w]) | add[w]


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


def bfs(init, goal, pre, add, dele, int nbits, long long max_expanded,
        long long max_depth, double deadline):
    cdef _Actions acts = _Actions(pre, add, dele, nbits)
    cdef int nw = acts.nw
    cdef int n = acts.n
    cdef int i
    cdef long long expanded = 0
    cdef long long depth = 0
    cdef Py_ssize_t nbytes = nw * sizeof(uint64_t)
    cdef uint64_t* cur = <uint64_t*>malloc(nbytes)
    cdef uint64_t* nxt_state = <uint64_t*>malloc(nbytes)
    cdef uint64_t* goal_w = <uint64_t*>malloc(nbytes)
    if cur == NULL or nxt_state == NULL or goal_w == NULL:
        free(cur); free(nxt_state); free(goal_w)
        raise MemoryError()
    try:
        if init & goal == goal:
            return FOUND, [], 0, 1
        _to_words(goal, goal_w, nw)
        _to_words(init, cur, nw)
        root = PyBytes_FromStringAndSize(<char*>cur, nbytes)
        parent = {root: (None, -1)}
        frontier = [root]
        while frontier:
            if depth >= max_depth:
                return DEPTH_LIMIT, [], expanded, len(parent)
            nxt = []
            for key in frontier:
                if expanded >= max_expanded:
                    return NODE_LIMIT, [], expanded, len(parent)
                expanded += 1
                if deadline > 0 and (expanded & 1023) == 0 and monotonic() > deadline:
                    return TIME_LIMIT, [], expanded, len(parent)
                memcpy(cur, PyBytes_AS_STRING(key), nbytes)
                for i in range(n):
                    if _covers(cur, acts.pre + i * nw, nw):
                        _step(cur, acts.keep + i * nw, acts.add + i * nw, nxt_state, nw)
                        child = PyBytes_FromStringAndSize(<char*>nxt_state, nbytes)
                        if child not in parent:
                            parent[child] = (key, i)
                            if _covers(nxt_state, goal_w, nw):
                                return FOUND, _path(parent, child), expanded, len(parent)
                            nxt.append(child)
            frontier = nxt
            depth += 1
        return EXHAUSTED, [], expanded, len(parent)
    finally:
        free(cur)
        free(nxt_state)
        free(goal_w)


def reachable(init, pre, add, dele, int nbits, long long bound, long long max_states):
    cdef _Actions acts = _Actions(pre, add, dele, nbits)
    cdef int nw = acts.nw
    cdef int n = acts.n
    cdef int i
    cdef long long expanded = 0
    cdef long long depth = 0
    cdef Py_ssize_t nbytes = nw * sizeof(uint64_t)
    cdef uint64_t* cur = <uint64_t*>malloc(nbytes)
    cdef uint64_t* nxt_state = <uint64_t*>malloc(nbytes)
    if cur == NULL or nxt_state == NULL:
        free(cur); free(nxt_state)
        raise MemoryError()
    try:
        _to_words(init, cur, nw)
        root = PyBytes_FromStringAndSize(<char*>cur, nbytes)
        seen = {root: None}
        frontier = [root]
        status = FOUND
        while frontier and (bound < 0 or depth < bound):
            nxt = []
            for key in frontier:
                expanded += 1
                memcpy(cur, PyBytes_AS_STRING(key), nbytes)
                for i in range(n):
                    if _covers(cur, acts.pre + i * nw, nw):
                        _step(cur, acts.keep + i * nw, acts.add + i * nw, nxt_state, nw)
                        child = PyBytes_FromStringAndSize(<char*>nxt_state, nbytes)
                        if child not in seen:
                            if len(seen) >= max_states:
                                status = NODE_LIMIT
                                break
                            seen[child] = None
                            nxt.append(child)
                if status != FOUND:
                    break
            if status != FOUND:
                break
            frontier = nxt
            depth += 1
        states = [_from_words(<uint64_t*>PyBytes_AS_STRING(k), nw) for k in seen]
        return status, states, expanded
    finally:
        free(cur)
        free(nxt_state)
