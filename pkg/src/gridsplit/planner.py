"""Cut planning, equivalent-qubit complexity and runtime estimates.

The bipartition is always the horizontal mid-cut: the upper part holds the
top ``ceil(rows/2)`` rows.  Multi-part layouts (3 and 4 parts) are planned
for complexity reporting only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .circuit import Circuit, GridTopology, cz_pattern

__all__ = [
    "CutGate",
    "CutPlan",
    "ComplexityReport",
    "TimeEstimateParams",
    "MultiPartReport",
    "Preset",
    "PRESETS",
    "DEFAULT_NODES",
    "plan_bipartition",
    "plan_from_pattern",
    "complexity_report",
    "estimate_time",
    "preset_params",
    "part_layout",
    "sweep_complexity",
    "default_checkpoint_layer",
    "format_duration",
]

DEFAULT_NODES = 24576


@dataclass(frozen=True)
class CutGate:
    layer: int
    upper_qubit: int  # endpoint in the earlier part
    lower_qubit: int


@dataclass(frozen=True)
class CutPlan:
    topology: GridTopology
    parts: tuple[tuple[int, ...], ...]
    cut_gates: tuple[CutGate, ...]
    depth: int

    def __post_init__(self):
        covered = sorted(q for p in self.parts for q in p)
        if covered != list(range(self.topology.n_qubits)):
            raise ValueError("parts must be disjoint and cover every qubit")
        owner = self.part_of
        for g in self.cut_gates:
            if owner[g.upper_qubit] == owner[g.lower_qubit]:
                raise ValueError(f"cut gate at layer {g.layer} does not cross parts")

    @property
    def part_of(self) -> dict[int, int]:
        return {q: i for i, p in enumerate(self.parts) for q in p}

    @property
    def c(self) -> int:
        return len(self.cut_gates)

    @property
    def copy_count(self) -> int:
        return 1 << self.c

    @property
    def half_circuit_count(self) -> int:
        """Part circuits over all copies (the ``m`` of the runtime model)."""
        return len(self.parts) << self.c

    @property
    def max_part_size(self) -> int:
        return max(len(p) for p in self.parts)

    def cuts_up_to(self, layer: int) -> int:
        return sum(1 for g in self.cut_gates if g.layer <= layer)


def _bipartition_parts(topology: GridTopology, cut_row: int | None = None) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if topology.rows < 2:
        raise ValueError("a horizontal bipartition needs at least two rows")
    cut_row = topology.cut_rows if cut_row is None else cut_row
    if not 1 <= cut_row < topology.rows:
        raise ValueError(f"cut row {cut_row} outside 1..{topology.rows - 1}")
    split = cut_row * topology.cols
    return tuple(range(split)), tuple(range(split, topology.n_qubits))


def _cuts(parts, edge_source: Iterable[tuple[int, Sequence[tuple[int, int]]]]) -> tuple[CutGate, ...]:
    owner = {q: i for i, p in enumerate(parts) for q in p}
    cuts = []
    for t, edges in edge_source:
        for a, b in edges:
            if owner[a] != owner[b]:
                if owner[a] > owner[b]:
                    a, b = b, a
                cuts.append(CutGate(t, a, b))
    return tuple(cuts)


def plan_bipartition(circuit: Circuit, depth: int | None = None, cut_row: int | None = None) -> CutPlan:
    """Horizontal cut of ``circuit`` above row ``cut_row`` (default: the mid-cut).

    Cut gates are the CZs crossing it in layers <= depth.  Only the mid-cut
    confines crossings to cycle positions 7 and 8.
    """
    depth = circuit.depth if depth is None else depth
    if depth > circuit.depth:
        raise ValueError(f"depth {depth} exceeds circuit depth {circuit.depth}")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    parts = _bipartition_parts(circuit.topology, cut_row)
    source = ((layer.index, layer.edges) for layer in circuit.layers[:depth])
    return CutPlan(circuit.topology, parts, _cuts(parts, source), depth)


def part_layout(topology: GridTopology, part_count: int) -> tuple[tuple[int, ...], ...]:
    """Qubit sets of the 2-, 3- and 4-part layouts.

    2: upper/lower row bands.  3: a bottom band of full rows plus the
    remaining rows split into left/right blocks, with the band height chosen to
    minimise the largest part (ties go to the taller bottom band).  4: quadrants.
    """
    r, q = topology.rows, topology.cols

    def block(r0, r1, c0, c1):
        return tuple(row * q + col for row in range(r0, r1) for col in range(c0, c1))

    if part_count == 2:
        return _bipartition_parts(topology)
    if part_count == 3:
        if r < 2 or q < 2:
            raise ValueError("a 3-part layout needs at least a 2x2 grid")
        half = (q + 1) // 2
        best = None
        for h in range(1, r):
            size = max(h * q, (r - h) * half)
            if best is None or size <= best[0]:
                best = (size, h)
        h = best[1]
        return (block(0, r - h, 0, half), block(0, r - h, half, q), block(r - h, r, 0, q))
    if part_count == 4:
        if r < 2 or q < 2:
            raise ValueError("a 4-part layout needs at least a 2x2 grid")
        rh, ch = (r + 1) // 2, (q + 1) // 2
        return (block(0, rh, 0, ch), block(0, rh, ch, q), block(rh, r, 0, ch), block(rh, r, ch, q))
    raise ValueError(f"unsupported part count {part_count}; use 2, 3 or 4")


def plan_from_pattern(topology: GridTopology, depth: int, part_count: int = 2, cut_row: int | None = None) -> CutPlan:
    """Plan against the fixed CZ pattern without generating a circuit."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if cut_row is not None and part_count != 2:
        raise ValueError("a cut row applies to two-part plans only")
    parts = _bipartition_parts(topology, cut_row) if part_count == 2 else part_layout(topology, part_count)
    source = ((t, cz_pattern(topology, t)) for t in range(1, depth + 1))
    return CutPlan(topology, parts, _cuts(parts, source), depth)


# --------------------------------------------------------------------------
# complexity
# --------------------------------------------------------------------------

FULL_VECTOR = "full-vector"
LOSSY = "lossy-compression"
NO_COMPRESSION = "no-compression"


@dataclass(frozen=True)
class ComplexityReport:
    N_r: int
    N_m: int
    N_e: float
    m: int
    c: int
    copy_count: int
    max_part_size: int
    regime: str

    def as_dict(self) -> dict:
        return {
            "N_r": self.N_r,
            "N_m": self.N_m,
            "N_e": self.N_e,
            "half_circuits": self.m,
            "cut_gates": self.c,
            "copies": self.copy_count,
            "max_part_size": self.max_part_size,
            "regime": self.regime,
        }


def _regime(n_e: float, n_m: int, n_r: int) -> str:
    if n_e <= n_m:
        return FULL_VECTOR
    if n_e < n_r:
        return LOSSY
    return NO_COMPRESSION


def complexity_report(plan: CutPlan, N_m: int) -> ComplexityReport:
    m = plan.half_circuit_count
    n_e = plan.max_part_size + math.log2(m)
    if n_e == int(n_e):
        n_e = int(n_e)
    n_r = plan.topology.n_qubits
    return ComplexityReport(n_r, N_m, n_e, m, plan.c, plan.copy_count, plan.max_part_size, _regime(n_e, N_m, n_r))


@dataclass(frozen=True)
class MultiPartReport:
    depth: int
    part_count: int
    max_part_size: int
    c_t: int
    complexity: float

    def as_dict(self) -> dict:
        return {
            "depth": self.depth,
            "parts": self.part_count,
            "max_part_size": self.max_part_size,
            "cut_gates": self.c_t,
            "complexity_qubits": self.complexity,
        }


def sweep_complexity(topology: GridTopology, depths: Iterable[int], part_count: int = 2) -> list[MultiPartReport]:
    parts = part_layout(topology, part_count)
    depths = sorted(set(depths))
    if not depths:
        return []
    full = plan_from_pattern(topology, depths[-1], part_count)
    max_part = max(len(p) for p in parts)
    reports = []
    for d in depths:
        c = full.cuts_up_to(d)
        value = max_part + c + math.log2(part_count)
        if value == int(value):
            value = int(value)
        reports.append(MultiPartReport(d, part_count, max_part, c, value))
    return reports


# --------------------------------------------------------------------------
# runtime model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeEstimateParams:
    """Inputs of the runtime model: sum(layer_gates[:depth]) * m * gate_time / nodes."""

    layer_gates: tuple[int, ...]
    depth: int
    m: int
    gate_time: float
    nodes: int

    def __post_init__(self):
        object.__setattr__(self, "layer_gates", tuple(self.layer_gates))
        if self.depth <= 0:
            raise ValueError("depth must be positive")
        if self.nodes <= 0:
            raise ValueError("node count must be positive")
        if len(self.layer_gates) < self.depth:
            raise ValueError(f"need {self.depth} per-layer gate counts, got {len(self.layer_gates)}")
        if any(n <= 0 for n in self.layer_gates[: self.depth]):
            raise ValueError("per-layer gate counts must be positive")
        if self.m <= 0 or self.gate_time <= 0:
            raise ValueError("m and gate_time must be positive")


def estimate_time(params: TimeEstimateParams) -> float:
    return sum(params.layer_gates[: params.depth]) * params.m * params.gate_time / params.nodes


@dataclass(frozen=True)
class Preset:
    name: str
    topology: GridTopology
    gates_per_layer: int  # effective gates per half-circuit layer beyond the third
    gate_time: float  # seconds per gate on one node

    def layer_gates(self, depth: int) -> tuple[int, ...]:
        head = (1, 2, 2)
        return head[:depth] + (self.gates_per_layer,) * max(0, depth - 3)


PRESETS = {
    "56q": Preset("56q", GridTopology(8, 7), 8, 0.25),
    "64q": Preset("64q", GridTopology(8, 8), 10, 0.38),
    "72q": Preset("72q", GridTopology(8, 9), 12, 0.67),
}


def preset_params(
    preset: Preset,
    depth: int,
    nodes: int = DEFAULT_NODES,
    gate_time: float | None = None,
    gates_per_layer: int | None = None,
) -> TimeEstimateParams:
    if gates_per_layer is not None:
        preset = Preset(preset.name, preset.topology, gates_per_layer, preset.gate_time)
    plan = plan_from_pattern(preset.topology, depth)
    return TimeEstimateParams(
        preset.layer_gates(depth),
        depth,
        plan.half_circuit_count,
        preset.gate_time if gate_time is None else gate_time,
        nodes,
    )


def format_duration(seconds: float) -> str:
    for unit, size in (("d", 86400.0), ("h", 3600.0), ("min", 60.0)):
        if seconds >= size:
            return f"{seconds / size:.3g} {unit}"
    return f"{seconds:.3g} s"


def default_checkpoint_layer(depth: int) -> int:
    """Last layer before the latest cross-cut pair that fits in ``depth``.

    For depth 22 this is layer 14: the cuts at layers 7 and 8 fall in the
    shared prefix, those at 15 and 16 in the per-copy suffix.
    """
    if depth < 7:
        return depth
    return 8 * ((depth - 7) // 8) + 6
