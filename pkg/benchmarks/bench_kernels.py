"""Compare the compiled and pure-Python search kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Workloads: full reachable-state enumeration for 5 and 6 table blocks, and
BFS solves over a batch of generated Blocksworld / Logistics problems.
"""

import argparse
import statistics
import time

from stripscot import kernels
from stripscot.datagen import GeneratorSizes, gen_instance
from stripscot.domains import blocksworld_domain, blocksworld_problem
from stripscot.planner import reachable_states, solve


def workloads():
    bw = blocksworld_domain()
    for n in (5, 6):
        p = blocksworld_problem([[f"b{i}"] for i in range(n)], [], name=f"table{n}")
        yield f"reachable, {n} blocks", lambda k, p=p: reachable_states(bw, p, kernel=k)
    big = GeneratorSizes(blocks=(6, 7), cities=2, locations_per_city=3, packages=(2, 3))
    for kind in ("blocksworld", "logistics"):
        batch = [gen_instance(kind, s, big) for s in range(10)]
        yield (f"solve 10 {kind}",
               lambda k, batch=batch: [solve(i.domain, i.problem, kernel=k) for i in batch])


def timed(fn, kernel, repeat):
    runs = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(kernel)
        runs.append(time.perf_counter() - t)
    return statistics.median(runs)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled_kernels is None:
        print("compiled kernels are not built; only the Python kernel is timed")
    print(f"{'workload':<26}{'python s':>10}{'cython s':>10}{'speedup':>9}")
    for name, fn in workloads():
        py = timed(fn, kernels.python_kernels, args.repeat)
        if kernels.compiled_kernels is None:
            print(f"{name:<26}{py:>10.3f}{'-':>10}{'-':>9}")
            continue
        cy = timed(fn, kernels.compiled_kernels, args.repeat)
        print(f"{name:<26}{py:>10.3f}{cy:>10.3f}{py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
