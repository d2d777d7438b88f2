"""Command-line front end: ``gen``, ``plan``, ``estimate``, ``run``, ``analyze``.

Exit codes: 0 success, 2 invalid input, 3 resource limit, 4 numeric sanity
failure (norm drift above 1e-6).  Only flags are consulted; the kernel
backend is chosen with ``--backend``, not from the environment.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time

import numpy as np

from . import _kernels
from .circuit import (
    Circuit,
    CircuitFormatError,
    CircuitValidationError,
    Gate,
    GridTopology,
    RandomCircuitSpec,
    gate_counts,
    generate_random_circuit,
    load_circuit,
    serialize_circuit,
)
from .executor import ResourceError, dense_state, iter_copy_results, prefix_count
from .planner import (
    DEFAULT_NODES,
    PRESETS,
    TimeEstimateParams,
    complexity_report,
    default_checkpoint_layer,
    estimate_time,
    format_duration,
    plan_bipartition,
    plan_from_pattern,
)
from .sampler import (
    AmplitudeAccumulator,
    SampleSet,
    read_amplitude_csv,
    resolve_samples,
    write_amplitude_csv,
)
from .statevector import MemoryOpStats
from .stats import (
    PT_KS_THRESHOLD,
    GumbelParams,
    histogram_and_fit,
    log_transform,
    write_histogram_csv,
    write_report_json,
)

log = logging.getLogger("gridsplit")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_NUMERIC = 4
NORM_TOLERANCE = 1e-6
DEFAULT_MAX_QUBITS = 26
DEFAULT_CACHE_BUDGET = 1 << 30


class NumericError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# shared helpers
# --------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(x, 0) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _add_circuit_source(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("circuit source (a file, or generator flags)")
    g.add_argument("--circuit", metavar="FILE", help="circuit JSON file")
    g.add_argument("--rows", type=_positive_int, help="grid rows")
    g.add_argument("--cols", type=_positive_int, help="grid columns")
    g.add_argument("--depth", type=_positive_int, help="circuit depth (with --circuit: truncate to this depth)")
    g.add_argument("--seed", type=_seed, default=0, help="generator seed (default 0)")


def _circuit_from_args(args) -> Circuit:
    if args.circuit is not None:
        if args.rows is not None or args.cols is not None:
            raise ValueError("--circuit cannot be combined with --rows/--cols")
        circuit = load_circuit(args.circuit)
        if args.depth is not None:
            circuit = circuit.truncated(args.depth)
        return circuit
    if args.rows is None or args.cols is None or args.depth is None:
        raise ValueError("give --circuit FILE, or all of --rows, --cols and --depth")
    return generate_random_circuit(RandomCircuitSpec(GridTopology(args.rows, args.cols), args.depth, args.seed))


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit_json(obj, path) -> None:
    fh, close = _open_out(path)
    try:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()


def _write_sweep_csv(rows, path) -> None:
    fh, close = _open_out(path)
    try:
        fh.write("depth,N_e,copies,estimate_seconds\n")
        for r in rows:
            est = "" if r["estimate_seconds"] is None else repr(float(r["estimate_seconds"]))
            fh.write(f"{r['depth']},{r['N_e']},{r['copies']},{est}\n")
    finally:
        if close:
            fh.close()


def _layer_passes(circuit: Circuit, parts) -> tuple[int, ...]:
    """Kernel passes per layer in the busiest part: one per non-diagonal gate, one fused diagonal pass."""
    counts = []
    for layer in circuit.layers:
        best = 0
        for part in parts:
            members = set(part)
            passes = sum(1 for q, g in layer.singles if q in members and g is not Gate.I and not g.diagonal)
            diag = any(q in members and g.diagonal and g is not Gate.I for q, g in layer.singles)
            diag = diag or any(a in members or b in members for a, b in layer.edges)
            best = max(best, passes + int(diag))
        counts.append(max(best, 1))
    return tuple(counts)


def _sweep_rows(topology: GridTopology, depth: int, parts: int, layer_gates, gate_time, nodes, cut_row=None):
    full = plan_from_pattern(topology, depth, parts, cut_row)
    rows = []
    for d in range(1, depth + 1):
        c = full.cuts_up_to(d)
        m = parts << c
        n_e = full.max_part_size + math.log2(m)
        n_e = int(n_e) if n_e == int(n_e) else round(n_e, 6)
        est = None
        if layer_gates is not None and gate_time is not None:
            est = estimate_time(TimeEstimateParams(layer_gates, d, m, gate_time, nodes))
        rows.append({"depth": d, "N_e": n_e, "copies": 1 << c, "estimate_seconds": est})
    return rows


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.circuit is not None:
        raise ValueError("gen takes generator flags, not --circuit")
    circuit = _circuit_from_args(args)
    text = serialize_circuit(circuit)
    fh, close = _open_out(args.output)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()
    counts = gate_counts(circuit)
    log.info("%dx%d depth %d: %s", circuit.topology.rows, circuit.topology.cols, circuit.depth,
             ", ".join(f"{g.value}={counts[g]}" for g in (Gate.H, Gate.SX, Gate.SY, Gate.T, Gate.CZ)))
    return EXIT_OK


def cmd_plan(args) -> int:
    n_m = args.memory_qubits
    if args.preset is not None:
        if args.circuit is not None or args.rows is not None:
            raise ValueError("--preset cannot be combined with a circuit source")
        if args.depth is None:
            raise ValueError("--preset needs --depth")
        preset = PRESETS[args.preset]
        topology, depth = preset.topology, args.depth
        layer_gates, gate_time = preset.layer_gates(depth), preset.gate_time
        circuit = None
    elif args.circuit is None and args.rows is not None and args.cols is not None and args.depth is not None and args.pattern_only:
        topology, depth = GridTopology(args.rows, args.cols), args.depth
        layer_gates, gate_time, circuit = None, None, None
    else:
        circuit = _circuit_from_args(args)
        topology, depth = circuit.topology, circuit.depth
        layer_gates, gate_time = None, args.gate_time
    if args.gate_time is not None:
        gate_time = args.gate_time

    if args.parts == 2:
        if circuit is not None:
            plan = plan_bipartition(circuit, depth, args.cut_row)
        else:
            plan = plan_from_pattern(topology, depth, 2, args.cut_row)
    else:
        if args.cut_row is not None:
            raise ValueError("--cut-row applies to two-part plans only")
        plan = plan_from_pattern(topology, depth, args.parts)
    if circuit is not None and layer_gates is None:
        layer_gates = _layer_passes(circuit, plan.parts)

    report = complexity_report(plan, n_m).as_dict()
    report.update({
        "rows": topology.rows,
        "cols": topology.cols,
        "depth": depth,
        "parts": [len(p) for p in plan.parts],
        "cut_gate_list": [[g.layer, g.upper_qubit, g.lower_qubit] for g in plan.cut_gates],
    })
    if args.parts == 2:
        checkpoint = default_checkpoint_layer(depth) if args.checkpoint is None else args.checkpoint
        if not 0 <= checkpoint <= depth:
            raise ValueError(f"checkpoint layer {checkpoint} outside 0..{depth}")
        report["checkpoint_layer"] = checkpoint
        report["prefixes"] = prefix_count(plan, checkpoint)
    if layer_gates is not None and gate_time is not None:
        sec = estimate_time(TimeEstimateParams(layer_gates, depth, plan.half_circuit_count, gate_time, args.nodes))
        report["estimate_seconds"] = sec
        report["estimate"] = format_duration(sec)
    _emit_json(report, args.output)
    if args.csv is not None:
        if circuit is not None:
            rows = []
            for d in range(1, depth + 1):
                sub = plan_bipartition(circuit, d, args.cut_row) if args.parts == 2 else plan_from_pattern(topology, d, args.parts)
                m = sub.half_circuit_count
                n_e = sub.max_part_size + math.log2(m)
                n_e = int(n_e) if n_e == int(n_e) else round(n_e, 6)
                est = None
                if gate_time is not None:
                    est = estimate_time(TimeEstimateParams(layer_gates, d, m, gate_time, args.nodes))
                rows.append({"depth": d, "N_e": n_e, "copies": sub.copy_count, "estimate_seconds": est})
        else:
            rows = _sweep_rows(topology, depth, args.parts, layer_gates, gate_time, args.nodes,
                               args.cut_row if args.parts == 2 else None)
        _write_sweep_csv(rows, args.csv)
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.preset is not None:
        preset = PRESETS[args.preset]
        topology = preset.topology
        gate_time = preset.gate_time if args.gate_time is None else args.gate_time
        per_layer = preset.gates_per_layer if args.gates_per_layer is None else args.gates_per_layer
        label = preset.name
    else:
        if args.rows is None or args.cols is None:
            raise ValueError("give --preset, or --rows and --cols")
        if args.gate_time is None:
            raise ValueError("--gate-time is required without --preset")
        if args.gates_per_layer is None and args.layer_gates is None:
            raise ValueError("--gates-per-layer or --layer-gates is required without --preset")
        topology = GridTopology(args.rows, args.cols)
        gate_time = args.gate_time
        per_layer = args.gates_per_layer
        label = f"{topology.rows}x{topology.cols}"

    def gates_for(d):
        if args.layer_gates is not None:
            return tuple(args.layer_gates)
        return (1, 2, 2)[:d] + (per_layer,) * max(0, d - 3)

    depth = args.depth
    full = plan_from_pattern(topology, depth)
    m = full.half_circuit_count if args.half_circuits is None else args.half_circuits
    params = TimeEstimateParams(gates_for(depth), depth, m, gate_time, args.nodes)
    sec = estimate_time(params)
    _emit_json({
        "target": label,
        "depth": depth,
        "nodes": args.nodes,
        "gate_time": gate_time,
        "half_circuits": m,
        "layer_gates": list(params.layer_gates[:depth]),
        "seconds": sec,
        "formatted": format_duration(sec),
    }, args.output)
    if args.csv is not None:
        rows = []
        for d in range(1, depth + 1):
            c = full.cuts_up_to(d)
            md = 2 << c if args.half_circuits is None else args.half_circuits
            n_e = full.max_part_size + math.log2(md)
            n_e = int(n_e) if n_e == int(n_e) else round(n_e, 6)
            layer = gates_for(depth)
            est = estimate_time(TimeEstimateParams(layer, d, md, gate_time, args.nodes))
            rows.append({"depth": d, "N_e": n_e, "copies": 1 << c, "estimate_seconds": est})
        _write_sweep_csv(rows, args.csv)
    return EXIT_OK


def _sample_set(args) -> SampleSet:
    if args.indices is not None:
        if args.samples != "all":
            raise ValueError("--indices and --samples are mutually exclusive")
        return SampleSet.explicit(args.indices)
    if args.samples == "all":
        return SampleSet.all()
    try:
        count = int(args.samples)
    except ValueError as exc:
        raise ValueError(f"--samples takes 'all' or a count, got {args.samples!r}") from exc
    return SampleSet.uniform(count, args.sample_seed)


def cmd_run(args) -> int:
    circuit = _circuit_from_args(args)
    n = circuit.n_qubits
    plan = None
    if args.dense:
        if n > args.max_qubits:
            raise ResourceError(f"dense run needs {n} qubits, above the limit of {args.max_qubits}")
    else:
        plan = plan_bipartition(circuit, None, args.cut_row)
        sizes = [len(p) for p in plan.parts]
        for i, s in enumerate(sizes):
            if s > args.max_qubits:
                raise ResourceError(f"part {i} has {s} qubits, above the limit of {args.max_qubits}")
    indices = resolve_samples(_sample_set(args), n)
    if plan is not None and indices.size >= 1 << max(n - 3, 0) and n > args.max_qubits:
        raise ResourceError(f"reconstructing {indices.size} samples needs a {n}-qubit buffer, "
                            f"above the limit of {args.max_qubits}")
    start = time.perf_counter()
    stats = MemoryOpStats()

    if plan is None:
        state = dense_state(circuit, fuse=False)
        amps = state.amps[indices]
        copies = 1
    else:
        checkpoint = None
        if args.checkpoint is not None:
            checkpoint = default_checkpoint_layer(circuit.depth) if args.checkpoint == "auto" else int(args.checkpoint)
        acc = AmplitudeAccumulator(sizes[0], sizes[1], indices)
        for result in iter_copy_results(
            circuit, plan, workers=args.workers, checkpoint_layer=checkpoint, cache_budget=args.cache_budget,
            max_qubits=args.max_qubits, stats=stats, dump_dir=args.dump_dir, progress_stride=args.progress_stride,
        ):
            acc.accumulate(result)
        amps = acc.values
        copies = plan.copy_count

    probs = amps.real**2 + amps.imag**2
    total = float(probs.sum())
    elapsed = time.perf_counter() - start
    log.info("copies=%d samples=%d wall=%.3fs fused_passes=%d amp_reads=%d amp_writes=%d sum_p=%.15g",
             copies, indices.size, elapsed, stats.fused_passes, stats.amplitude_reads, stats.amplitude_writes, total)
    fh, close = _open_out(args.output)
    try:
        write_amplitude_csv(fh, n, indices, amps)
    finally:
        if close:
            fh.close()
    if indices.size == 1 << n:
        if abs(total - 1.0) > NORM_TOLERANCE:
            raise NumericError(f"probabilities sum to {total!r}, drift above {NORM_TOLERANCE}")
    elif total > 1.0 + NORM_TOLERANCE:
        raise NumericError(f"sampled probabilities sum to {total!r} > 1")
    return EXIT_OK


def cmd_analyze(args) -> int:
    n, _, _, probs = read_amplitude_csv(args.amplitudes)
    if args.n_qubits is not None:
        n = args.n_qubits
    sample = log_transform(probs, n)
    report = histogram_and_fit(sample, args.bins, GumbelParams(args.alpha), (args.z_min, args.z_max))
    if args.histogram is not None:
        write_histogram_csv(report, args.histogram)
    if args.report is None or args.report == "-":
        _emit_json(report.as_dict(), None)
    else:
        write_report_json(report, args.report)
    if report.ks is None:
        verdict = f"only {sample.z.shape[0]} non-zero samples; KS distance needs at least 1000"
    elif report.porter_thomas:
        verdict = f"KS distance {report.ks:.4g}: consistent with Porter-Thomas"
    else:
        verdict = (f"KS distance {report.ks:.4g} >= {PT_KS_THRESHOLD:g}: "
                   "not consistent with Porter-Thomas (non-chaotic output)")
    print(verdict, file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridsplit", description="Partitioned state-vector simulation of grid random circuits.")
    p.add_argument("--backend", choices=("numba", "numpy"), default=None,
                   help="kernel implementation (default: numba when installed)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    p.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random grid circuit")
    _add_circuit_source(g)
    g.add_argument("-o", "--output", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    pl = sub.add_parser("plan", help="cut plan and complexity report")
    _add_circuit_source(pl)
    pl.add_argument("--preset", choices=sorted(PRESETS), help="plan a named configuration against the fixed CZ pattern")
    pl.add_argument("--pattern-only", action="store_true",
                    help="with --rows/--cols/--depth: plan from the CZ pattern without generating gates")
    pl.add_argument("--parts", type=int, choices=(2, 3, 4), default=2, help="number of parts (default 2)")
    pl.add_argument("--cut-row", type=_positive_int, help="rows above the cut (default: the upper half)")
    pl.add_argument("--checkpoint", type=int, help="checkpoint layer for the prefix count (default: auto)")
    pl.add_argument("--memory-qubits", type=_positive_int, default=DEFAULT_MAX_QUBITS,
                    help="N_m, qubits that fit in memory (default 26)")
    pl.add_argument("--gate-time", type=float, help="seconds per gate (presets carry their own)")
    pl.add_argument("--nodes", type=_positive_int, default=DEFAULT_NODES, help=f"node count (default {DEFAULT_NODES})")
    pl.add_argument("-o", "--output", help="JSON report file (default stdout)")
    pl.add_argument("--csv", help="per-depth CSV: depth,N_e,copies,estimate_seconds")
    pl.set_defaults(func=cmd_plan)

    e = sub.add_parser("estimate", help="runtime estimate")
    e.add_argument("--preset", choices=sorted(PRESETS), help="named configuration")
    e.add_argument("--rows", type=_positive_int)
    e.add_argument("--cols", type=_positive_int)
    e.add_argument("--depth", type=_positive_int, required=True)
    e.add_argument("--nodes", type=_positive_int, default=DEFAULT_NODES, help=f"node count (default {DEFAULT_NODES})")
    e.add_argument("--gate-time", type=float, help="seconds per gate")
    e.add_argument("--gates-per-layer", type=_positive_int, help="gates per part layer after the third")
    e.add_argument("--layer-gates", type=_int_list, help="explicit per-layer gate counts, comma separated")
    e.add_argument("--half-circuits", type=_positive_int, help="override m, the number of part circuits")
    e.add_argument("-o", "--output", help="JSON report file (default stdout)")
    e.add_argument("--csv", help="per-depth CSV: depth,N_e,copies,estimate_seconds")
    e.set_defaults(func=cmd_estimate)

    r = sub.add_parser("run", help="simulate and write sampled amplitudes")
    _add_circuit_source(r)
    r.add_argument("--samples", default="all", help="'all' (default) or a count of seeded uniform samples")
    r.add_argument("--sample-seed", type=_seed, default=0, help="seed for uniform sampling (default 0)")
    r.add_argument("--indices", type=_int_list, help="explicit basis indices, comma separated")
    r.add_argument("--cut-row", type=_positive_int, help="rows above the cut (default: the upper half)")
    r.add_argument("--checkpoint", help="checkpoint layer for the prefix cache, or 'auto' (default: no cache)")
    r.add_argument("--cache-budget", type=int, default=DEFAULT_CACHE_BUDGET,
                   help="bytes available to the prefix cache (default 1 GiB)")
    r.add_argument("--workers", type=_positive_int, default=1, help="concurrent copies (default 1)")
    r.add_argument("--max-qubits", type=_positive_int, default=DEFAULT_MAX_QUBITS,
                   help="largest state vector allowed, in qubits (default 26)")
    r.add_argument("--dense", action="store_true", help="skip partitioning; unfused full-register oracle run")
    r.add_argument("--dump-dir", help="write every copy's part states here (binary dumps)")
    r.add_argument("--progress-stride", type=int, default=0, help="log progress every N copies")
    r.add_argument("-o", "--output", help="amplitude CSV (default stdout)")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="Porter-Thomas histogram and KS fit of an amplitude CSV")
    a.add_argument("amplitudes", help="amplitude CSV written by run")
    a.add_argument("--n-qubits", type=_positive_int, help="override the register size (default: index width)")
    a.add_argument("--bins", type=_positive_int, default=50)
    a.add_argument("--z-min", type=float, default=-12.0)
    a.add_argument("--z-max", type=float, default=4.0)
    a.add_argument("--alpha", type=float, default=1.0)
    a.add_argument("--histogram", help="histogram CSV: z_mid,empirical_density,theory_density")
    a.add_argument("--report", help="fit report JSON (default stdout)")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.ERROR if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    backend = args.backend or ("numba" if _kernels.NUMBA_AVAILABLE else "numpy")
    try:
        _kernels.set_backend(backend)
        return args.func(args)
    except ResourceError as exc:
        print(f"gridsplit: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericError as exc:
        print(f"gridsplit: numeric check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CircuitFormatError as exc:
        print(f"gridsplit: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (CircuitValidationError, ValueError, OSError, RuntimeError) as exc:
        print(f"gridsplit: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
