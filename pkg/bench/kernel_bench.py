"""Benchmark the compiled kernels against the pure-Python fallback.

Run:  python3 bench/kernel_bench.py
"""

import random
import time

from teamcount import _kernels_py
from teamcount.formula_core import NormalFormDescriptor, DepAtom, EqAtom
from teamcount.reductions import dep_to_sigma1cnf_neg
from teamcount.structures import Structure

try:
    from teamcount import _kernels
    BACKENDS = [("python", _kernels_py), ("cython", _kernels)]
except ImportError:
    BACKENDS = [("python", _kernels_py)]
    print("compiled extension not built; benchmarking the fallback only")


def random_3cnf(rng, n, m):
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), 3)
        clauses.append(frozenset(v * rng.choice((-1, 1)) for v in vs))
    return clauses


def workload_model_count():
    rng = random.Random(0)
    cases = [random_3cnf(rng, 28, 56) for _ in range(8)]
    def run(mod):
        total = 0
        for cl in cases:
            total += mod.count_projected(28, cl, range(1, 29))[0]
        return total
    return "model counting, 8x random 3CNF n=28 m=56", run


def workload_projected_reduction():
    # star-counting the emitted formula of a dependence reduction instance:
    # m=2, k=1, l=1, n=3 gives 9 free and 108 bound propositional variables.
    a = Structure(3, ())
    d = NormalFormDescriptor("dependence", ("x1", "x2"), ("y1",), ("z1",),
                             dep_atoms=(DepAtom(("y1",), "z1"),),
                             matrix=EqAtom("z1", "x1"))
    f = dep_to_sigma1cnf_neg(a, d)
    free = sorted(f.free)
    def run(mod):
        total = 0
        for _ in range(40):
            total += mod.count_projected(f.num_vars, f.clauses, free)[0]
        return total
    return "projected counting, 40x reduction output (117 vars, 9 free)", run


def workload_dualhorn():
    rng = random.Random(1)
    cases = []
    for _ in range(300):
        n = 60
        clauses = [frozenset({-i, i + 1}) for i in range(1, n)]
        clauses.append(frozenset({-rng.randrange(1, n + 1)}))
        cases.append((n, clauses))
    def run(mod):
        total = 0
        for n, cl in cases:
            total += mod.dualhorn_sat(n, cl)
        return total
    return "dualhorn propagation, 300x implication chains n=60", run


def main():
    workloads = [workload_model_count(), workload_projected_reduction(), workload_dualhorn()]
    print(f"{'workload':55s} " + " ".join(f"{name:>10s}" for name, _ in BACKENDS))
    for label, run in workloads:
        times = []
        results = []
        for _, mod in BACKENDS:
            t0 = time.perf_counter()
            results.append(run(mod))
            times.append(time.perf_counter() - t0)
        assert len(set(results)) == 1, f"backend results disagree: {results}"
        cells = " ".join(f"{t:9.3f}s" for t in times)
        print(f"{label:55s} {cells}")
    if len(BACKENDS) == 2:
        print("(both backends produced identical results on every workload)")


if __name__ == "__main__":
    main()
