"""Acceptance criteria, one test each (criterion 3 and 6 are split by part).

A ``criterion N: PASS|FAIL`` line per criterion is printed in the terminal
summary (see conftest.py).
"""
import json

import numpy as np
import pytest

import oracle
from gridsplit import _kernels, cli
from gridsplit.circuit import GridTopology, RandomCircuitSpec, generate_random_circuit
from gridsplit.executor import iter_copy_results, prefix_count
from gridsplit.planner import complexity_report, plan_bipartition, plan_from_pattern, sweep_complexity
from gridsplit.sampler import AmplitudeAccumulator, SampleSet, read_amplitude_csv, resolve_samples
from gridsplit.statevector import DiagonalLayerPlan, StateVector, apply_fused_diagonal
from gridsplit.stats import histogram_and_fit, log_transform

CRITERIA = {
    1: "runtime estimates reproduce all 12 reference runtimes within 1%",
    2: "8x7 cut increments, cumulative cuts and N_e match the reference sweep",
    3: "partitioned reconstruction matches the dense oracle within 1e-10 (23 configurations, 4x2 example has 2 cuts)",
    4: "fused diagonal pass equals sequential gates within 1e-12, with 2^n reads and 2^n writes",
    5: "N_e = 7 for the 4x2 example and 49 for 8x8 depth 22",
    6: "Porter-Thomas: synthetic KS < 0.005, 5x4 depth-24 KS < 0.02, sample-count independence",
    7: "prefix cache transparent within 1e-12; 2^c_prefix prefixes, 256 for 8x8 at layer 14",
    8: "outputs with 1 and 8 workers are identical",
}

criterion = pytest.mark.criterion


def _circuit(rows, cols, depth, seed):
    return generate_random_circuit(RandomCircuitSpec(GridTopology(rows, cols), depth, seed))


def _reconstruct_all(circuit, plan=None, indices=None, **kwargs):
    plan = plan or plan_bipartition(circuit)
    sizes = [len(p) for p in plan.parts]
    if indices is None:
        indices = np.arange(1 << circuit.n_qubits)
    acc = AmplitudeAccumulator(sizes[0], sizes[1], indices)
    for r in iter_copy_results(circuit, plan, **kwargs):
        acc.accumulate(r)
    return acc.values


# ---------------------------------------------------------------------------
# 1. cost model
# ---------------------------------------------------------------------------

RUNTIME_ESTIMATES = [
    ("56q", 22, 52.3),
    ("56q", 23, 7.33 * 60),
    ("56q", 30, 2.62 * 3600),
    ("56q", 31, 21.7 * 3600),
    ("56q", 38, 18.0 * 86400),
    ("56q", 39, 148 * 86400),
    ("64q", 22, 6.59 * 60),
    ("64q", 23, 1.85 * 3600),
    ("64q", 30, 1.65 * 86400),
    ("64q", 31, 27.4 * 86400),
    ("72q", 22, 55.5 * 60),
    ("72q", 23, 15.6 * 3600),
]


@criterion(1)
def test_criterion1_cost_model(capsys):
    worst = 0.0
    for preset, depth, expected in RUNTIME_ESTIMATES:
        assert cli.main(["estimate", "--preset", preset, "--depth", str(depth), "--nodes", "24576"]) == 0
        got = json.loads(capsys.readouterr().out)["seconds"]
        rel = abs(got - expected) / expected
        worst = max(worst, rel)
        assert rel <= 0.01, f"{preset} depth {depth}: {got} s vs {expected} s"
    print(f"worst relative error {worst:.4%}")


# ---------------------------------------------------------------------------
# 2. cut sweep for the 8x7 grid
# ---------------------------------------------------------------------------


@criterion(2)
def test_criterion2_cut_sweep(tmp_path, capsys):
    breakpoints = [6, 7, 14, 15, 22, 23, 30, 31, 38]
    cuts = [0, 3, 7, 10, 14, 17, 21, 24, 28]
    n_e = [29, 32, 36, 39, 43, 46, 50, 53, 57]
    increments = [0, 3, 4, 3, 4, 3, 4, 3, 4]
    topo = GridTopology(8, 7)
    reports = {r.depth: r for r in sweep_complexity(topo, range(1, 39))}
    assert [reports[d].c_t for d in breakpoints] == cuts
    assert [reports[d].complexity for d in breakpoints] == n_e
    assert [b - a for a, b in zip([0] + cuts, cuts)] == increments
    for d in breakpoints:
        rep = complexity_report(plan_from_pattern(topo, d), 26)
        assert rep.N_e == reports[d].complexity
        assert rep.copy_count == 2 ** reports[d].c_t
    # the CLI CSV carries the same numbers
    path = tmp_path / "sweep.csv"
    assert cli.main(["plan", "--preset", "56q", "--depth", "38", "--csv", str(path)]) == 0
    capsys.readouterr()
    rows = {int(r.split(",")[0]): r.split(",") for r in path.read_text().splitlines()[1:]}
    assert [int(rows[d][1]) for d in breakpoints] == n_e
    assert [int(rows[d][2]) for d in breakpoints] == [2**c for c in cuts]


# ---------------------------------------------------------------------------
# 3. partitioned reconstruction vs dense oracle
# ---------------------------------------------------------------------------

CONFIGS = [
    (4, 2, 8, 0),
    (2, 1, 9, 1),
    (2, 2, 10, 2),
    (3, 2, 12, 3),
    (2, 3, 15, 4),
    (3, 3, 16, 5),
    (4, 2, 24, 6),
    (4, 3, 8, 7),
    (3, 4, 23, 8),
    (4, 3, 17, 9),
    (5, 2, 24, 10),
    (2, 5, 22, 11),
    (4, 4, 7, 12),
    (4, 4, 16, 13),
    (4, 4, 24, 14),
    (5, 3, 16, 15),
    (5, 3, 24, 16),
    (3, 5, 20, 17),
    (5, 4, 8, 18),
    (5, 4, 15, 19),
    (5, 4, 16, 20),
    (4, 5, 20, 21),
    (5, 4, 24, 22),
]


@criterion(3)
@pytest.mark.parametrize("rows, cols, depth, seed", CONFIGS)
def test_criterion3_partition_correctness(rows, cols, depth, seed):
    c = _circuit(rows, cols, depth, seed)
    plan = plan_bipartition(c)
    got = _reconstruct_all(c, plan)
    expect = oracle.simulate_circuit(c)
    err = np.abs(got - expect).max()
    print(f"{rows}x{cols} depth {depth} seed {seed}: cuts {plan.c}, max |diff| {err:.2e}")
    assert err < 1e-10


@criterion(3)
def test_criterion3_grid4x2_shape():
    c = _circuit(4, 2, 8, 0)
    plan = plan_bipartition(c)
    assert plan.c == 2 and plan.copy_count == 4
    assert sum(1 for _ in iter_copy_results(c, plan)) == 4


# ---------------------------------------------------------------------------
# 4. diagonal fusion
# ---------------------------------------------------------------------------


class _Counting:
    def __init__(self, data):
        self.data, self.shape, self.reads, self.writes = data, data.shape, 0, 0

    def __getitem__(self, i):
        self.reads += 1
        return self.data[i]

    def __setitem__(self, i, v):
        self.writes += 1
        self.data[i] = v


def _random_layer(rng):
    n = int(rng.integers(2, 13))
    order = [int(q) for q in rng.permutation(n)]
    roles = {"t": [], "z": [], "p0": [], "p1": [], "cz": []}
    i = 0
    while i < n:
        role = ["t", "z", "p0", "p1", "cz", "idle"][int(rng.integers(6))]
        if role == "cz" and i + 1 < n:
            roles["cz"].append((order[i], order[i + 1]))
            i += 2
            continue
        if role in roles and role != "cz":
            roles[role].append(order[i])
        i += 1
    return n, roles


@criterion(4)
def test_criterion4_fusion():
    rng = np.random.default_rng(20240)
    worst = 0.0
    for _ in range(100):
        n, roles = _random_layer(rng)
        v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        psi = v.reshape((2,) * n)
        for key, gate in (("t", "T"), ("z", "Z"), ("p0", "P0"), ("p1", "P1")):
            for q in roles[key]:
                psi = oracle.apply_1q(psi, oracle.MATRICES[gate], q)
        for a, b in roles["cz"]:
            psi = oracle.apply_cz(psi, a, b)
        expect = psi.reshape(-1)
        plan = DiagonalLayerPlan(roles["t"], roles["cz"], roles["p0"], roles["p1"], roles["z"])
        for name in ("numba", "numpy") if _kernels.NUMBA_AVAILABLE else ("numpy",):
            prev = _kernels.set_backend(name)
            try:
                s = apply_fused_diagonal(StateVector(n, v.copy()), plan)
            finally:
                _kernels.set_backend(prev)
            worst = max(worst, np.abs(s.amps - expect).max())
        counted = _Counting(v.copy())
        _kernels._fused_diagonal_loop(counted, *plan.kernel_args(n), _kernels.EIGHTH_ROOTS)
        assert counted.reads == 1 << n and counted.writes == 1 << n
        assert np.abs(counted.data - expect).max() < 1e-12
    print(f"worst |diff| over 100 layers: {worst:.2e}")
    assert worst < 1e-12


# ---------------------------------------------------------------------------
# 5. equivalent-qubit anchors
# ---------------------------------------------------------------------------


@criterion(5)
def test_criterion5_equivalent_qubits():
    small = complexity_report(plan_bipartition(_circuit(4, 2, 8, 0)), 26)
    assert small.N_e == 7 and small.m == 8 and small.max_part_size == 4
    big = complexity_report(plan_bipartition(_circuit(8, 8, 22, 0)), 26)
    assert big.N_e == 49


# ---------------------------------------------------------------------------
# 6. Porter-Thomas checks
# ---------------------------------------------------------------------------


@criterion(6)
def test_criterion6a_synthetic():
    rng = np.random.default_rng(6)
    rep = histogram_and_fit(log_transform(rng.exponential(size=10**6) / 2**20, 20))
    print(f"KS {rep.ks:.5f}")
    assert rep.ks < 0.005


@criterion(6)
def test_criterion6b_pipeline(tmp_path, capsys):
    out = tmp_path / "amps.csv"
    report = tmp_path / "fit.json"
    assert cli.main(["run", "--rows", "5", "--cols", "4", "--depth", "24", "--seed", "24", "-o", str(out)]) == 0
    assert cli.main(["analyze", str(out), "--report", str(report)]) == 0
    capsys.readouterr()
    data = json.loads(report.read_text())
    print(f"KS {data['ks']:.5f}")
    assert data["samples"] == 2**20
    assert data["ks"] < 0.02


@criterion(6)
def test_criterion6c_sampling_count_independence():
    c = _circuit(5, 4, 24, 24)
    plan = plan_bipartition(c)
    n_upper, n_lower = (len(p) for p in plan.parts)
    results = list(iter_copy_results(c, plan))

    def reconstruct(indices):
        acc = AmplitudeAccumulator(n_upper, n_lower, indices)
        for r in results:
            acc.accumulate(r)
        return acc.values

    everything = reconstruct(np.arange(1 << c.n_qubits))
    batch = resolve_samples(SampleSet.uniform(2**10, 1), c.n_qubits)
    assert np.array_equal(reconstruct(batch), everything[batch])
    for x in batch[::64]:
        assert np.array_equal(reconstruct(np.array([x])), everything[[x]])


# ---------------------------------------------------------------------------
# 7. prefix cache
# ---------------------------------------------------------------------------


@criterion(7)
def test_criterion7_prefix_cache():
    c = _circuit(4, 4, 16, 7)
    plan = plan_bipartition(c)
    used = []
    cached = _reconstruct_all(c, plan, checkpoint_layer=8, on_cache=used.append)
    plain = _reconstruct_all(c, plan)
    assert np.abs(cached - plain).max() < 1e-12
    assert used == [2 ** plan.cuts_up_to(8)] == [prefix_count(plan, 8)]
    assert prefix_count(plan_bipartition(_circuit(8, 8, 22, 0)), 14) == 256


# ---------------------------------------------------------------------------
# 8. determinism across worker counts
# ---------------------------------------------------------------------------


@criterion(8)
def test_criterion8_determinism(tmp_path):
    outs = []
    for workers in (1, 8):
        path = tmp_path / f"w{workers}.csv"
        assert cli.main([
            "run", "--rows", "5", "--cols", "4", "--depth", "16", "--seed", "8", "--samples", "4096",
            "--sample-seed", "3", "--checkpoint", "auto", "--workers", str(workers), "-o", str(path),
        ]) == 0
        outs.append(path)
    a, b = (read_amplitude_csv(p) for p in outs)
    assert np.array_equal(a[1], b[1])
    assert np.abs(a[2] - b[2]).max() < 1e-12
    assert outs[0].read_bytes() == outs[1].read_bytes()
