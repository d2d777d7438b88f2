"""Dense state-vector engine with per-layer fusion of diagonal gates."""
from __future__ import annotations

import struct
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .circuit import Circuit, Gate, Layer

__all__ = [
    "StateVector",
    "DiagonalLayerPlan",
    "InvalidPlanError",
    "MemoryOpStats",
    "zero_state",
    "apply_single_qubit",
    "apply_cz",
    "apply_fused_diagonal",
    "run_circuit",
    "amplitude",
    "write_state_binary",
    "read_state_binary",
    "write_state_csv",
]


class InvalidPlanError(ValueError):
    pass


@dataclass
class StateVector:
    """``amps[i]`` is the amplitude of basis index ``i``; qubit k is bit n-1-k."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got shape {self.amps.shape}")

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)


def zero_state(n_qubits: int) -> StateVector:
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


@dataclass
class MemoryOpStats:
    """Amplitude traffic of fused diagonal passes (one read + one write per amplitude)."""

    fused_passes: int = 0
    amplitude_reads: int = 0
    amplitude_writes: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, n_amps: int) -> None:
        with self._lock:
            self.fused_passes += 1
            self.amplitude_reads += n_amps
            self.amplitude_writes += n_amps

    def merge(self, other: "MemoryOpStats") -> None:
        with self._lock:
            self.fused_passes += other.fused_passes
            self.amplitude_reads += other.amplitude_reads
            self.amplitude_writes += other.amplitude_writes


@dataclass(frozen=True)
class DiagonalLayerPlan:
    t_qubits: frozenset = frozenset()
    cz_edges: frozenset = frozenset()
    proj0_qubits: frozenset = frozenset()
    proj1_qubits: frozenset = frozenset()
    z_qubits: frozenset = frozenset()

    def __post_init__(self):
        for name in ("t_qubits", "proj0_qubits", "proj1_qubits", "z_qubits"):
            object.__setattr__(self, name, frozenset(int(q) for q in getattr(self, name)))
        object.__setattr__(self, "cz_edges", frozenset(tuple(sorted((int(a), int(b)))) for a, b in self.cz_edges))

    @classmethod
    def from_layer(cls, layer: Layer) -> "DiagonalLayerPlan":
        by_gate: dict[Gate, set[int]] = {Gate.T: set(), Gate.P0: set(), Gate.P1: set(), Gate.Z: set()}
        for q, g in layer.singles:
            if g in by_gate:
                by_gate[g].add(q)
        return cls(by_gate[Gate.T], layer.edges, by_gate[Gate.P0], by_gate[Gate.P1], by_gate[Gate.Z])

    @property
    def gate_count(self) -> int:
        return (
            len(self.t_qubits) + len(self.cz_edges) + len(self.proj0_qubits)
            + len(self.proj1_qubits) + len(self.z_qubits)
        )

    def validate(self, n_qubits: int) -> None:
        seen: set[int] = set()
        groups = [self.t_qubits, self.proj0_qubits, self.proj1_qubits, self.z_qubits]
        groups += [frozenset(e) for e in self.cz_edges]
        for group in groups:
            for q in group:
                if not 0 <= q < n_qubits:
                    raise InvalidPlanError(f"qubit {q} outside a {n_qubits}-qubit register")
                if q in seen:
                    raise InvalidPlanError(f"qubit {q} has more than one role in the diagonal plan")
                seen.add(q)
        for a, b in self.cz_edges:
            if a == b:
                raise InvalidPlanError(f"CZ edge ({a}, {b}) joins a qubit to itself")

    def kernel_args(self, n_qubits: int) -> tuple:
        def mask(qs):
            m = 0
            for q in qs:
                m |= 1 << (n_qubits - 1 - q)
            return m

        edges = sorted(self.cz_edges)
        cz_a = np.array([1 << (n_qubits - 1 - a) for a, _ in edges], dtype=np.int64)
        cz_b = np.array([1 << (n_qubits - 1 - b) for _, b in edges], dtype=np.int64)
        return (
            mask(self.t_qubits),
            mask(self.z_qubits),
            mask(self.proj0_qubits),
            mask(self.proj1_qubits),
            cz_a,
            cz_b,
        )


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.n_qubits:
        raise IndexError(f"qubit {q} outside a {state.n_qubits}-qubit register")


def apply_single_qubit(state: StateVector, gate, q: int) -> StateVector:
    """Apply a 2x2 matrix (or a single-qubit :class:`Gate`) to qubit ``q`` in place."""
    _check_qubit(state, q)
    matrix = gate.matrix if isinstance(gate, Gate) else np.asarray(gate, dtype=np.complex128)
    if matrix.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {matrix.shape}")
    _kernels.apply_single_qubit(state.amps, state.n_qubits - 1 - q, matrix)
    return state


def apply_cz(state: StateVector, a: int, b: int) -> StateVector:
    """Stand-alone CZ, used by the unfused path."""
    _check_qubit(state, a)
    _check_qubit(state, b)
    n = state.n_qubits
    ma, mb = 1 << (n - 1 - a), 1 << (n - 1 - b)
    idx = np.arange(state.amps.shape[0], dtype=np.int64)
    state.amps[((idx & ma) != 0) & ((idx & mb) != 0)] *= -1
    return state


def apply_fused_diagonal(
    state: StateVector, plan: DiagonalLayerPlan, stats: MemoryOpStats | None = None
) -> StateVector:
    plan.validate(state.n_qubits)
    _kernels.apply_fused_diagonal(state.amps, *plan.kernel_args(state.n_qubits))
    if stats is not None:
        stats.record(state.amps.shape[0])
    return state


@lru_cache(maxsize=8192)
def _compile_layer(layer: Layer, n_qubits: int):
    nondiag = []
    sequential = []
    for q, g in layer.singles:
        if g is Gate.I:
            continue
        if g.diagonal:
            sequential.append((q, g.matrix))
        else:
            nondiag.append((n_qubits - 1 - q, g.matrix))
    plan = DiagonalLayerPlan.from_layer(layer)
    fused = plan.kernel_args(n_qubits) if plan.gate_count else None
    return nondiag, fused, sequential, layer.edges


def run_circuit(
    initial: StateVector,
    circuit: Circuit,
    fuse: bool = True,
    stats: MemoryOpStats | None = None,
    start_layer: int = 1,
    stop_layer: int | None = None,
) -> StateVector:
    """Run layers ``start_layer..stop_layer`` (1-based, inclusive) on ``initial`` in place.

    With ``fuse`` every layer's diagonal gates (T, Z, P0, P1, CZ) go through a
    single pass over the amplitudes; otherwise each gate is applied on its own.
    """
    n = initial.n_qubits
    if circuit.n_qubits != n:
        raise ValueError(f"circuit has {circuit.n_qubits} qubits, state has {n}")
    stop = circuit.depth if stop_layer is None else stop_layer
    amps = initial.amps
    for layer in circuit.layers[start_layer - 1 : stop]:
        nondiag, fused, sequential, edges = _compile_layer(layer, n)
        for bit, matrix in nondiag:
            _kernels.apply_single_qubit(amps, bit, matrix)
        if fuse:
            if fused is not None:
                _kernels.apply_fused_diagonal(amps, *fused)
                if stats is not None:
                    stats.record(amps.shape[0])
        else:
            for q, matrix in sequential:
                _kernels.apply_single_qubit(amps, n - 1 - q, matrix)
            for a, b in edges:
                apply_cz(initial, a, b)
    return initial


def amplitude(state: StateVector, index) -> complex:
    """Amplitude at an integer index or a bitstring (qubit 0 first)."""
    if isinstance(index, str):
        if len(index) != state.n_qubits or set(index) - {"0", "1"}:
            raise ValueError(f"bitstring {index!r} does not match {state.n_qubits} qubits")
        index = int(index, 2)
    if not 0 <= index < state.amps.shape[0]:
        raise IndexError(f"index {index} outside 2^{state.n_qubits}")
    return complex(state.amps[index])


def write_state_binary(state: StateVector, path) -> None:
    """8-byte little-endian qubit count, then interleaved little-endian (re, im) doubles."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", state.n_qubits))
        fh.write(state.amps.astype("<c16").tobytes())


def read_state_binary(path) -> StateVector:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise ValueError("truncated state dump")
        (n,) = struct.unpack("<Q", header)
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.shape[0] != 1 << n:
        raise ValueError(f"state dump holds {data.shape[0]} amplitudes, expected {1 << n}")
    return StateVector(int(n), data.astype(np.complex128))


def write_state_csv(state: StateVector, path) -> None:
    from .sampler import write_amplitude_csv

    idx = np.arange(state.amps.shape[0], dtype=np.int64)
    write_amplitude_csv(path, state.n_qubits, idx, state.amps)
