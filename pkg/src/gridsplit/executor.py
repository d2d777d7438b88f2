"""Expansion of a cut plan into independent copies and their execution.

Cut gate ``g`` (plan order, i.e. by layer) is bit ``c - 1 - g`` of the copy
index, so copies that agree on the early cuts are contiguous.  Branch 0 puts
P0 on the upper endpoint and leaves the lower one idle; branch 1 puts P1 on
the upper endpoint and Z on the lower one.  The copy states carry all the
weight: summing ``upper ⊗ lower`` over every copy gives the uncut state.
"""
from __future__ import annotations

import logging
import os
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .circuit import Circuit, Gate, GridTopology, Layer
from .planner import CutPlan
from .statevector import MemoryOpStats, StateVector, run_circuit, write_state_binary, zero_state

__all__ = [
    "ResourceError",
    "CopyAssignment",
    "CopyCircuits",
    "CopyResult",
    "expand_copies",
    "run_copy",
    "run_with_prefix_cache",
    "prefix_count",
    "iter_copy_results",
]

log = logging.getLogger(__name__)


class ResourceError(RuntimeError):
    """A part (or a cache) does not fit the configured budget."""


@dataclass(frozen=True)
class CopyAssignment:
    index: int
    c: int

    def branch(self, g: int) -> int:
        return (self.index >> (self.c - 1 - g)) & 1

    @property
    def bits(self) -> str:
        return format(self.index, f"0{self.c}b") if self.c else ""


@dataclass(frozen=True)
class CopyCircuits:
    assignment: CopyAssignment
    parts: tuple[Circuit, ...]
    qubit_maps: tuple[tuple[int, ...], ...]  # local qubit -> global qubit, per part


@dataclass
class CopyResult:
    assignment: CopyAssignment
    states: tuple[StateVector, ...]


class _Expander:
    """Per-part base layers built once; only cut-bearing layers change per copy."""

    def __init__(self, circuit: Circuit, plan: CutPlan):
        if plan.topology != circuit.topology:
            raise ValueError("plan and circuit have different topologies")
        if plan.depth > circuit.depth:
            raise ValueError(f"plan depth {plan.depth} exceeds circuit depth {circuit.depth}")
        if len(plan.parts) != 2:
            raise ValueError("copy expansion needs a two-part plan")
        self.plan = plan
        self.c = plan.c
        owner = plan.part_of
        self.maps = tuple(tuple(sorted(p)) for p in plan.parts)
        local = [{g: i for i, g in enumerate(m)} for m in self.maps]
        cut_at = {(g.layer, min(g.upper_qubit, g.lower_qubit), max(g.upper_qubit, g.lower_qubit)): k
                  for k, g in enumerate(plan.cut_gates)}
        found = set()
        # per part: list of (singles dict, edges) and per layer the cut slots
        self.base: list[list[Layer]] = [[], []]
        self.slots: list[dict[int, list[tuple[int, int, int]]]] = [{}, {}]
        self.raw: list[list[tuple[dict, list]]] = [[], []]
        for layer in circuit.layers[: plan.depth]:
            singles = [dict(), dict()]
            edges = [[], []]
            for q, g in layer.singles:
                p = owner[q]
                singles[p][local[p][q]] = g
            for a, b in layer.edges:
                pa, pb = owner[a], owner[b]
                if pa == pb:
                    edges[pa].append((local[pa][a], local[pa][b]))
                    continue
                key = (layer.index, a, b)
                if key not in cut_at:
                    raise ValueError(f"CZ ({a}, {b}) at layer {layer.index} crosses parts but is not in the plan")
                k = cut_at[key]
                found.add(k)
                gate = plan.cut_gates[k]
                up, lo = owner[gate.upper_qubit], owner[gate.lower_qubit]
                # role 0: projector side, role 1: I/Z side
                self.slots[up].setdefault(layer.index, []).append((local[up][gate.upper_qubit], k, 0))
                self.slots[lo].setdefault(layer.index, []).append((local[lo][gate.lower_qubit], k, 1))
                singles[up][local[up][gate.upper_qubit]] = Gate.P0
                singles[lo][local[lo][gate.lower_qubit]] = Gate.I
            for p in (0, 1):
                self.raw[p].append((singles[p], edges[p]))
                self.base[p].append(Layer.build(layer.index, len(self.maps[p]), singles[p], edges[p]))
        if len(found) != self.c:
            raise ValueError("plan lists cut gates that are not in the circuit")
        cols = circuit.topology.cols
        self.topologies = tuple(
            GridTopology(len(m) // cols, cols) if len(m) % cols == 0 else GridTopology(1, len(m))
            for m in self.maps
        )

    def part_circuit(self, part: int, assignment: CopyAssignment) -> Circuit:
        layers = list(self.base[part])
        n = len(self.maps[part])
        for t, slots in self.slots[part].items():
            singles, edges = self.raw[part][t - 1]
            singles = dict(singles)
            for q, k, role in slots:
                b = assignment.branch(k)
                if role == 0:
                    singles[q] = Gate.P1 if b else Gate.P0
                else:
                    singles[q] = Gate.Z if b else Gate.I
            layers[t - 1] = Layer.build(t, n, singles, edges)
        return Circuit(self.topologies[part], tuple(layers))

    def copy(self, index: int) -> CopyCircuits:
        a = CopyAssignment(index, self.c)
        return CopyCircuits(a, (self.part_circuit(0, a), self.part_circuit(1, a)), self.maps)


def expand_copies(circuit: Circuit, plan: CutPlan) -> Iterator[CopyCircuits]:
    """Yield the ``2**plan.c`` copies in assignment order."""
    ex = _Expander(circuit, plan)
    for index in range(plan.copy_count):
        yield ex.copy(index)


def _check_budget(sizes: Iterable[int], max_qubits: int | None) -> None:
    if max_qubits is None:
        return
    for i, size in enumerate(sizes):
        if size > max_qubits:
            raise ResourceError(f"part {i} has {size} qubits, above the limit of {max_qubits}")


def run_copy(
    copies: CopyCircuits,
    max_qubits: int | None = None,
    stats: MemoryOpStats | None = None,
    fuse: bool = True,
) -> CopyResult:
    _check_budget((c.n_qubits for c in copies.parts), max_qubits)
    states = tuple(run_circuit(zero_state(c.n_qubits), c, fuse=fuse, stats=stats) for c in copies.parts)
    return CopyResult(copies.assignment, states)


def prefix_count(plan: CutPlan, checkpoint_layer: int) -> int:
    """Number of distinct checkpoints (2 ** cuts at layers <= checkpoint_layer)."""
    return 1 << plan.cuts_up_to(checkpoint_layer)


class _PrefixCache:
    def __init__(self, expander: _Expander, checkpoint_layer: int, stats: MemoryOpStats | None):
        plan = expander.plan
        self.layer = checkpoint_layer
        self.c_prefix = plan.cuts_up_to(checkpoint_layer)
        self.shift = plan.c - self.c_prefix
        self.states: list[tuple[StateVector, ...]] = []
        for p in range(1 << self.c_prefix):
            copy = expander.copy(p << self.shift)
            parts = []
            for circ in copy.parts:
                s = run_circuit(zero_state(circ.n_qubits), circ, stats=stats, stop_layer=checkpoint_layer)
                s.amps.flags.writeable = False
                parts.append(s)
            self.states.append(tuple(parts))

    def run(self, copy: CopyCircuits, stats: MemoryOpStats | None) -> CopyResult:
        frozen = self.states[copy.assignment.index >> self.shift]
        states = tuple(
            run_circuit(StateVector(s.n_qubits, s.amps.copy()), circ, stats=stats, start_layer=self.layer + 1)
            for s, circ in zip(frozen, copy.parts)
        )
        return CopyResult(copy.assignment, states)


def _cache_bytes(plan: CutPlan, checkpoint_layer: int) -> int:
    per_copy = sum(16 << len(p) for p in plan.parts)
    return prefix_count(plan, checkpoint_layer) * per_copy


def run_with_prefix_cache(
    circuit: Circuit,
    plan: CutPlan,
    checkpoint_layer: int,
    cache_budget: int | None = None,
    max_qubits: int | None = None,
    stats: MemoryOpStats | None = None,
) -> Iterator[CopyResult]:
    """Run every copy, sharing the state after ``checkpoint_layer`` between copies
    that agree on all earlier cuts.  Falls back to uncached runs (with a
    warning) when the checkpoints do not fit ``cache_budget`` bytes.
    """
    yield from iter_copy_results(
        circuit, plan, checkpoint_layer=checkpoint_layer, cache_budget=cache_budget,
        max_qubits=max_qubits, stats=stats,
    )


def iter_copy_results(
    circuit: Circuit,
    plan: CutPlan,
    *,
    workers: int = 1,
    checkpoint_layer: int | None = None,
    cache_budget: int | None = None,
    max_qubits: int | None = None,
    stats: MemoryOpStats | None = None,
    dump_dir: str | os.PathLike | None = None,
    progress_stride: int = 0,
    on_cache: Callable[[int], None] | None = None,
) -> Iterator[CopyResult]:
    """Execute all copies and yield their results in assignment order.

    Up to ``workers`` copies run concurrently; results are independent of
    the worker count.  ``progress_stride`` > 0 logs one line every that many
    copies.  ``on_cache`` receives the number of checkpoints actually used
    (0 when running uncached).
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    _check_budget((len(p) for p in plan.parts), max_qubits)
    expander = _Expander(circuit, plan)

    cache = None
    if checkpoint_layer is not None:
        if not 0 <= checkpoint_layer <= plan.depth:
            raise ValueError(f"checkpoint layer {checkpoint_layer} outside 0..{plan.depth}")
        need = _cache_bytes(plan, checkpoint_layer)
        if cache_budget is not None and need > cache_budget:
            msg = (f"prefix cache needs {need} bytes for {prefix_count(plan, checkpoint_layer)} checkpoints, "
                   f"budget is {cache_budget}; running uncached")
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            log.warning(msg)
        else:
            cache = _PrefixCache(expander, checkpoint_layer, stats)
    if on_cache is not None:
        on_cache(len(cache.states) if cache is not None else 0)

    def work(index: int) -> CopyResult:
        copy = expander.copy(index)
        if cache is not None:
            result = cache.run(copy, stats)
        else:
            result = run_copy(copy, stats=stats)
        if dump_dir is not None:
            for p, state in enumerate(result.states):
                write_state_binary(state, os.path.join(dump_dir, f"copy{result.assignment.bits or '0'}_part{p}.bin"))
        return result

    total = plan.copy_count
    done = 0

    def progress():
        if progress_stride and (done % progress_stride == 0 or done == total):
            log.info("copies %d/%d", done, total)

    if workers == 1:
        for index in range(total):
            result = work(index)
            done += 1
            progress()
            yield result
        return

    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending: deque = deque()
        for index in range(total):
            pending.append(pool.submit(work, index))
            if len(pending) >= 2 * workers:
                result = pending.popleft().result()
                done += 1
                progress()
                yield result
        while pending:
            result = pending.popleft().result()
            done += 1
            progress()
            yield result


def part_sizes(plan: CutPlan) -> tuple[int, ...]:
    return tuple(len(p) for p in plan.parts)


def dense_state(circuit: Circuit, fuse: bool = False) -> StateVector:
    """Full-register reference run (unfused by default)."""
    return run_circuit(zero_state(circuit.n_qubits), circuit, fuse=fuse)


def branch_sum(results: Iterable[CopyResult]) -> np.ndarray:
    """Sum of upper ⊗ lower over the given copies (small registers only)."""
    total = None
    for r in results:
        term = np.kron(r.states[0].amps, r.states[1].amps)
        total = term if total is None else total + term
    return total
