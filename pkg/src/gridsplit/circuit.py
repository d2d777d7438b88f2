"""Grid circuits: gate kinds, layers, the random-circuit generator and the JSON document format.

Qubits are numbered row-major (qubit 0 is the top-left site).  In every state
vector built from a circuit, qubit ``k`` is bit ``n - 1 - k`` of the basis
index, so qubit 0 is the most significant bit and a split into upper and lower
row bands is a prefix/suffix split of the index.
"""
from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Gate",
    "GridTopology",
    "Layer",
    "Circuit",
    "RandomCircuitSpec",
    "CircuitFormatError",
    "CircuitValidationError",
    "CYCLE_LENGTH",
    "cycle_position",
    "cz_pattern",
    "generate_random_circuit",
    "parse_circuit",
    "serialize_circuit",
    "load_circuit",
    "save_circuit",
    "gate_counts",
]

_S2 = 1.0 / np.sqrt(2.0)


class CircuitFormatError(ValueError):
    """Malformed circuit document."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class CircuitValidationError(ValueError):
    """A circuit violates a structural invariant."""


class Gate(enum.Enum):
    H = "H"
    SX = "SX"
    SY = "SY"
    T = "T"
    CZ = "CZ"
    P0 = "P0"
    P1 = "P1"
    Z = "Z"
    I = "I"  # noqa: E741

    @property
    def diagonal(self) -> bool:
        return self in _DIAGONAL

    @property
    def matrix(self) -> np.ndarray:
        if self is Gate.CZ:
            return np.diag([1, 1, 1, -1]).astype(np.complex128)
        return _MATRICES[self].copy()


_DIAGONAL = frozenset({Gate.T, Gate.CZ, Gate.P0, Gate.P1, Gate.Z, Gate.I})

_MATRICES = {
    Gate.H: np.array([[_S2, _S2], [_S2, -_S2]], dtype=np.complex128),
    # principal square roots of X and Y
    Gate.SX: 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=np.complex128),
    Gate.SY: 0.5 * np.array([[1 + 1j, -1 - 1j], [1 + 1j, 1 + 1j]], dtype=np.complex128),
    Gate.T: np.array([[1, 0], [0, (1 + 1j) * _S2]], dtype=np.complex128),
    Gate.P0: np.array([[1, 0], [0, 0]], dtype=np.complex128),
    Gate.P1: np.array([[0, 0], [0, 1]], dtype=np.complex128),
    Gate.Z: np.array([[1, 0], [0, -1]], dtype=np.complex128),
    Gate.I: np.eye(2, dtype=np.complex128),
}

# names allowed in circuit documents
_DOCUMENT_GATES = {"H": Gate.H, "SX": Gate.SX, "SY": Gate.SY, "T": Gate.T}


@dataclass(frozen=True)
class GridTopology:
    rows: int
    cols: int

    def __post_init__(self):
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise CircuitValidationError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def n_qubits(self) -> int:
        return self.rows * self.cols

    def coords(self, qubit: int) -> tuple[int, int]:
        if not 0 <= qubit < self.n_qubits:
            raise IndexError(f"qubit {qubit} outside a {self.rows}x{self.cols} grid")
        return divmod(qubit, self.cols)

    def qubit(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"site ({row}, {col}) outside a {self.rows}x{self.cols} grid")
        return row * self.cols + col

    @property
    def cut_rows(self) -> int:
        """Rows in the upper band of the horizontal mid-cut (ceil(rows / 2))."""
        return (self.rows + 1) // 2


@dataclass(frozen=True)
class Layer:
    """One clock cycle: a single-qubit gate or a CZ edge on every qubit.

    ``singles`` is a sorted tuple of ``(qubit, Gate)`` pairs and carries
    ``Gate.I`` for idle qubits; ``edges`` is a sorted tuple of ``(a, b)``
    pairs with ``a < b``.
    """

    index: int
    singles: tuple[tuple[int, Gate], ...]
    edges: tuple[tuple[int, int], ...] = ()

    @classmethod
    def build(
        cls,
        index: int,
        n_qubits: int,
        singles: Mapping[int, Gate] | None = None,
        edges: Iterable[Sequence[int]] = (),
    ) -> "Layer":
        """Make a layer, filling every qubit not otherwise used with Identity."""
        singles = dict(singles or {})
        norm_edges = []
        for e in edges:
            a, b = int(e[0]), int(e[1])
            norm_edges.append((min(a, b), max(a, b)))
        norm_edges.sort()
        busy = {q for e in norm_edges for q in e}
        full = {}
        for q in range(n_qubits):
            if q in singles:
                full[q] = singles[q]
            elif q not in busy:
                full[q] = Gate.I
        for q, g in singles.items():
            if q not in full:
                full[q] = g  # keep it so validation reports the clash
        return cls(index, tuple(sorted(full.items())), tuple(norm_edges))

    @cached_property
    def singles_map(self) -> dict[int, Gate]:
        return dict(self.singles)

    @cached_property
    def edge_qubits(self) -> frozenset[int]:
        return frozenset(q for e in self.edges for q in e)

    def validate(self, n_qubits: int) -> None:
        seen: set[int] = set()
        for a, b in self.edges:
            if a == b:
                raise CircuitValidationError(f"layer {self.index}: CZ edge ({a}, {b}) joins a qubit to itself")
            for q in (a, b):
                if not 0 <= q < n_qubits:
                    raise CircuitValidationError(f"layer {self.index}: qubit {q} out of range")
                if q in seen:
                    raise CircuitValidationError(
                        f"layer {self.index}: qubit {q} appears in two CZ edges "
                        "(a qubit may take part in at most one gate per layer)"
                    )
                seen.add(q)
        single_qubits = set()
        for q, g in self.singles:
            if not 0 <= q < n_qubits:
                raise CircuitValidationError(f"layer {self.index}: qubit {q} out of range")
            if g is Gate.CZ:
                raise CircuitValidationError(f"layer {self.index}: CZ listed as a single-qubit gate")
            if q in seen or q in single_qubits:
                raise CircuitValidationError(
                    f"layer {self.index}: qubit {q} used twice "
                    "(a qubit may take part in at most one gate per layer)"
                )
            single_qubits.add(q)
        if len(seen) + len(single_qubits) != n_qubits:
            missing = sorted(set(range(n_qubits)) - seen - single_qubits)
            raise CircuitValidationError(f"layer {self.index}: qubits {missing} carry no gate")


@dataclass(frozen=True)
class Circuit:
    topology: GridTopology
    layers: tuple[Layer, ...] = ()
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        n = self.topology.n_qubits
        for i, layer in enumerate(self.layers, start=1):
            if layer.index != i:
                raise CircuitValidationError(f"layer indices must run 1..d, found {layer.index} at position {i}")
            layer.validate(n)

    @property
    def n_qubits(self) -> int:
        return self.topology.n_qubits

    @property
    def depth(self) -> int:
        return len(self.layers)

    def truncated(self, depth: int) -> "Circuit":
        if depth > self.depth:
            raise ValueError(f"depth {depth} exceeds circuit depth {self.depth}")
        return Circuit(self.topology, self.layers[:depth], self.seed)


@dataclass(frozen=True)
class RandomCircuitSpec:
    topology: GridTopology
    depth: int
    seed: int = 0

    def __post_init__(self):
        if self.depth < 0:
            raise CircuitValidationError("depth must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise CircuitValidationError("seed must be an unsigned 64-bit integer")


# --------------------------------------------------------------------------
# CZ pattern
#
# Eight configurations, anchored at the horizontal mid-cut (upper band =
# ceil(rows/2) rows, boundary m = upper - 1 between rows m and m+1):
#
#   position 1   no CZ
#   position 2   vertical edges at every boundary b with (b - m) odd
#   position 3   horizontal edges (r,c)-(r,c+1) with (2r + c) % 4 == 1
#   position 4   ... == 3
#   position 5   ... == 0
#   position 6   ... == 2
#   position 7   vertical edges at boundaries b with (b - m) even whose column
#                parity is odd at b = m and flips every second boundary
#   position 8   the complementary columns of position 7
#
# Cross-cut edges therefore appear only at positions 7 (floor(cols/2) of them)
# and 8 (ceil(cols/2)).  Layer t >= 2 sits at position ((t - 1) % 8) + 1.
# --------------------------------------------------------------------------

CYCLE_LENGTH = 8
_HORIZONTAL_CLASS = {3: 1, 4: 3, 5: 0, 6: 2}


def cycle_position(layer_index: int) -> int:
    if layer_index < 1:
        raise ValueError(f"layer index must be >= 1, got {layer_index}")
    return (layer_index - 1) % CYCLE_LENGTH + 1


def _pattern_edges(rows: int, cols: int, position: int) -> list[tuple[int, int]]:
    mid = (rows + 1) // 2 - 1
    edges = []
    if position in _HORIZONTAL_CLASS:
        cls = _HORIZONTAL_CLASS[position]
        for r in range(rows):
            for c in range(cols - 1):
                if (2 * r + c) % 4 == cls:
                    edges.append((r * cols + c, r * cols + c + 1))
    elif position == 2:
        for b in range(rows - 1):
            if (b - mid) % 2 == 1:
                edges.extend((b * cols + c, (b + 1) * cols + c) for c in range(cols))
    elif position in (7, 8):
        want = 1 if position == 7 else 0
        for b in range(rows - 1):
            d = b - mid
            if d % 2:
                continue
            flip = (d // 2) % 2
            edges.extend(
                (b * cols + c, (b + 1) * cols + c) for c in range(cols) if (c + flip) % 2 == want
            )
    edges.sort()
    return edges


_PATTERN_CACHE: dict[tuple[int, int, int], tuple[tuple[int, int], ...]] = {}


def cz_pattern(topology: GridTopology, layer_index: int) -> tuple[tuple[int, int], ...]:
    """CZ edges of layer ``layer_index``; layer 1 (the Hadamard layer) has none."""
    if layer_index < 1:
        raise ValueError(f"layer index must be >= 1, got {layer_index}")
    if layer_index == 1:
        return ()
    key = (topology.rows, topology.cols, cycle_position(layer_index))
    if key not in _PATTERN_CACHE:
        _PATTERN_CACHE[key] = tuple(_pattern_edges(*key))
    return _PATTERN_CACHE[key]


# order used when drawing a replacement gate
_CHOICES = (Gate.SX, Gate.SY, Gate.T)


def generate_random_circuit(spec: RandomCircuitSpec) -> Circuit:
    """Build a universal random circuit.

    Layer 1 is H on every qubit.  Later layers take their CZ edges from
    :func:`cz_pattern`.  A qubit that sat in a CZ in the previous layer and is
    free in this one gets a single-qubit gate: T if it has had no gate other
    than H so far, otherwise one of {SX, SY, T} minus its previous gate, picked
    by ``rng.integers(2)`` over the remaining two in (SX, SY, T) order.  Draws
    happen in layer order, then ascending qubit order, from
    ``numpy.random.Generator(PCG64(SeedSequence(seed)))``.  Every other qubit
    idles.
    """
    topo = spec.topology
    n = topo.n_qubits
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    layers = []
    if spec.depth >= 1:
        layers.append(Layer.build(1, n, {q: Gate.H for q in range(n)}))
    last_gate: dict[int, Gate] = {}
    prev_busy: frozenset[int] = frozenset()
    for t in range(2, spec.depth + 1):
        edges = cz_pattern(topo, t)
        busy = frozenset(q for e in edges for q in e)
        singles = {}
        for q in range(n):
            if q in busy or q not in prev_busy:
                continue
            prev = last_gate.get(q)
            if prev is None:
                g = Gate.T
            else:
                options = [g for g in _CHOICES if g is not prev]
                g = options[int(rng.integers(2))]
            singles[q] = g
            last_gate[q] = g
        layers.append(Layer.build(t, n, singles, edges))
        prev_busy = busy
    return Circuit(topo, tuple(layers), spec.seed)


def gate_counts(circuit: Circuit) -> Counter:
    """Gate counts by kind; Identity placeholders are not counted, CZ counts edges."""
    counts: Counter = Counter()
    for layer in circuit.layers:
        for _, g in layer.singles:
            if g is not Gate.I:
                counts[g] += 1
        if layer.edges:
            counts[Gate.CZ] += len(layer.edges)
    return counts


# --------------------------------------------------------------------------
# document format
# --------------------------------------------------------------------------


def serialize_circuit(circuit: Circuit) -> str:
    layers = []
    for layer in circuit.layers:
        singles = []
        for q, g in layer.singles:
            if g is Gate.I:
                continue
            if g.value not in _DOCUMENT_GATES:
                raise CircuitValidationError(f"gate {g.value} cannot be written to a circuit document")
            singles.append([q, g.value])
        layers.append({"singles": singles, "cz": [list(e) for e in layer.edges]})
    doc = {"rows": circuit.topology.rows, "cols": circuit.topology.cols}
    if circuit.seed is not None:
        doc["seed"] = circuit.seed
    doc["layers"] = layers
    # one layer per line keeps diffs of golden files readable
    head = json.dumps({k: v for k, v in doc.items() if k != "layers"})[:-1]
    body = ",\n".join("  " + json.dumps(layer, separators=(", ", ": ")) for layer in layers)
    return f'{head}, "layers": [\n{body}\n]}}\n' if layers else f'{head}, "layers": []}}\n'


def _require_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CircuitFormatError(f"{what} must be an integer, got {value!r}")
    return value


def parse_circuit(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise CircuitFormatError("circuit document must be a JSON object")
    for key in ("rows", "cols", "layers"):
        if key not in doc:
            raise CircuitFormatError(f"missing field {key!r}")
    unknown = set(doc) - {"rows", "cols", "seed", "layers"}
    if unknown:
        raise CircuitFormatError(f"unknown fields {sorted(unknown)}")
    rows = _require_int(doc["rows"], "rows")
    cols = _require_int(doc["cols"], "cols")
    seed = doc.get("seed")
    if seed is not None:
        seed = _require_int(seed, "seed")
    try:
        topo = GridTopology(rows, cols)
    except CircuitValidationError as exc:
        raise CircuitFormatError(str(exc)) from None
    if not isinstance(doc["layers"], list):
        raise CircuitFormatError("layers must be a list")
    n = topo.n_qubits
    layers = []
    for t, entry in enumerate(doc["layers"], start=1):
        if not isinstance(entry, dict) or set(entry) - {"singles", "cz"}:
            raise CircuitFormatError(f"layer {t}: expected an object with 'singles' and 'cz'")
        singles: dict[int, Gate] = {}
        for item in entry.get("singles", []):
            if not isinstance(item, list) or len(item) != 2:
                raise CircuitFormatError(f"layer {t}: single-qubit entry must be [qubit, gate]")
            q = _require_int(item[0], f"layer {t} qubit")
            name = item[1]
            if name not in _DOCUMENT_GATES:
                raise CircuitFormatError(f"layer {t}: unknown gate name {name!r}")
            if q in singles:
                raise CircuitValidationError(
                    f"layer {t}: qubit {q} used twice "
                    "(a qubit may take part in at most one gate per layer)"
                )
            singles[q] = _DOCUMENT_GATES[name]
        edges = []
        for item in entry.get("cz", []):
            if not isinstance(item, list) or len(item) != 2:
                raise CircuitFormatError(f"layer {t}: cz entry must be [a, b]")
            edges.append((_require_int(item[0], f"layer {t} qubit"), _require_int(item[1], f"layer {t} qubit")))
        layers.append(Layer.build(t, n, singles, edges))
    return Circuit(topo, tuple(layers), seed)


def load_circuit(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read())


def save_circuit(circuit: Circuit, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_circuit(circuit))
