"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--qubits 20] [--repeat 5]

Reports the best of ``--repeat`` runs per kernel and backend, plus a whole
partitioned run of a 4x4 depth-16 circuit.
"""
import argparse
import time

import numpy as np

from gridsplit import _kernels
from gridsplit.circuit import Gate, GridTopology, RandomCircuitSpec, generate_random_circuit
from gridsplit.executor import iter_copy_results
from gridsplit.planner import plan_bipartition
from gridsplit.sampler import AmplitudeAccumulator


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernels(n, repeat):
    rng = np.random.default_rng(0)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    half = n // 2
    upper = amps[: 1 << half].copy()
    lower = amps[: 1 << (n - half)].copy()
    acc = np.zeros(1 << n, dtype=complex)
    idx = np.sort(rng.choice(1 << n, size=1 << (n - 4), replace=False))
    xu, xl = idx >> (n - half), idx & ((1 << (n - half)) - 1)
    gather_acc = np.zeros(idx.size, dtype=complex)
    cz_a = np.array([1 << (n - 1), 1 << 5], dtype=np.int64)
    cz_b = np.array([1 << (n - 2), 1 << 4], dtype=np.int64)
    m = Gate.SX.matrix
    return {
        "single-qubit (low bit)": lambda: _kernels.apply_single_qubit(amps, 0, m),
        "single-qubit (high bit)": lambda: _kernels.apply_single_qubit(amps, n - 1, m),
        "fused diagonal": lambda: _kernels.apply_fused_diagonal(amps, 0b1011 << 6, 0b11, 1 << 3, 0, cz_a, cz_b),
        "fold outer": lambda: _kernels.fold_outer(acc, upper, lower),
        "fold gather (1/16)": lambda: _kernels.fold_gather(gather_acc, upper, lower, xu, xl),
    }


def pipeline():
    c = generate_random_circuit(RandomCircuitSpec(GridTopology(4, 4), 16, 0))
    plan = plan_bipartition(c)
    acc = AmplitudeAccumulator(8, 8, np.arange(1 << 16))
    for r in iter_copy_results(c, plan):
        acc.accumulate(r)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--qubits", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["numba", "numpy"] if _kernels.NUMBA_AVAILABLE else ["numpy"]

    results = {}
    for name in backends:
        _kernels.set_backend(name)
        for label, fn in kernels(args.qubits, args.repeat).items():
            fn()  # compile / warm up
            results[label, name] = best_of(fn, args.repeat)
        pipeline()
        results["4x4 depth-16 pipeline", name] = best_of(pipeline, max(1, args.repeat // 2))

    labels = list(dict.fromkeys(k[0] for k in results))
    print(f"{args.qubits}-qubit vectors, best of {args.repeat}")
    print(f"{'kernel':28s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for label in labels:
        row = [results[label, b] for b in backends]
        line = f"{label:28s}" + "".join(f"{t * 1e3:10.2f}ms" for t in row)
        if len(row) == 2:
            line += f"{row[1] / row[0]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
