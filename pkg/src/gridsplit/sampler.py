"""Streaming reconstruction of full-register amplitudes from copy results."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .executor import CopyResult

__all__ = [
    "SampleSet",
    "AmplitudeAccumulator",
    "DEFAULT_ALL_CAP",
    "resolve_samples",
    "accumulate",
    "probabilities",
    "write_amplitude_csv",
    "read_amplitude_csv",
]

DEFAULT_ALL_CAP = 26
MAX_INDEX_QUBITS = 62


@dataclass(frozen=True)
class SampleSet:
    """Which basis indices to reconstruct: ``all``, ``explicit`` or seeded ``uniform``."""

    mode: str = "all"
    indices: tuple[int, ...] = ()
    count: int = 0
    seed: int = 0

    @classmethod
    def all(cls) -> "SampleSet":
        return cls("all")

    @classmethod
    def explicit(cls, indices: Iterable[int]) -> "SampleSet":
        return cls("explicit", tuple(int(i) for i in indices))

    @classmethod
    def uniform(cls, count: int, seed: int = 0) -> "SampleSet":
        return cls("uniform", count=int(count), seed=int(seed))


def resolve_samples(spec: SampleSet, n_qubits: int, all_cap: int = DEFAULT_ALL_CAP) -> np.ndarray:
    """Sorted, unique int64 basis indices for ``spec``.

    Uniform sets are drawn without replacement from
    ``numpy.random.Generator(PCG64(SeedSequence(seed)))``.
    """
    if n_qubits > MAX_INDEX_QUBITS:
        raise ValueError(f"basis indices are int64; registers above {MAX_INDEX_QUBITS} qubits are not supported")
    size = 1 << n_qubits
    if spec.mode == "all":
        if n_qubits > all_cap:
            raise ValueError(f"'all' sampling is capped at {all_cap} qubits, circuit has {n_qubits}")
        return np.arange(size, dtype=np.int64)
    if spec.mode == "explicit":
        idx = np.array(spec.indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= size):
            raise ValueError(f"explicit indices must lie in [0, 2^{n_qubits})")
        if np.unique(idx).size != idx.size:
            raise ValueError("explicit indices must be unique")
        return np.sort(idx)
    if spec.mode == "uniform":
        if not 0 < spec.count <= size:
            raise ValueError(f"sample count {spec.count} outside 1..2^{n_qubits}")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
        return np.sort(rng.choice(size, size=spec.count, replace=False).astype(np.int64))
    raise ValueError(f"unknown sample mode {spec.mode!r}")


class AmplitudeAccumulator:
    """Running sum over copies of ``upper[x >> n_lower] * lower[x & mask]``.

    Small sample sets gather the needed part amplitudes per copy; once the set
    reaches 1/8 of the register, each copy is folded into a full-register
    buffer instead and the samples are read out at the end.  Both paths apply
    the same multiply-add to every index, so a given index reconstructs to the
    same bits whichever path or sample set it came through.
    """

    def __init__(self, n_upper: int, n_lower: int, indices: Sequence[int] | np.ndarray):
        self.n_upper = n_upper
        self.n_lower = n_lower
        self.indices = np.asarray(indices, dtype=np.int64)
        self.n_qubits = n_upper + n_lower
        self.folded = 0
        n = self.n_qubits
        self.full = self.indices.size >= (1 << max(n - 3, 0))
        if self.full:
            self._buffer = np.zeros(1 << n, dtype=np.complex128)
        else:
            self._values = np.zeros(self.indices.size, dtype=np.complex128)
            self._xu = self.indices >> n_lower
            self._xl = self.indices & ((1 << n_lower) - 1)

    def accumulate(self, result: CopyResult) -> "AmplitudeAccumulator":
        upper, lower = result.states
        if upper.n_qubits != self.n_upper or lower.n_qubits != self.n_lower:
            raise ValueError(
                f"copy parts have {upper.n_qubits}+{lower.n_qubits} qubits, "
                f"accumulator expects {self.n_upper}+{self.n_lower}"
            )
        if self.full:
            _kernels.fold_outer(self._buffer, upper.amps, lower.amps)
        else:
            _kernels.fold_gather(self._values, upper.amps, lower.amps, self._xu, self._xl)
        self.folded += 1
        return self

    def merge(self, other: "AmplitudeAccumulator") -> "AmplitudeAccumulator":
        """Add a partial accumulator built over a disjoint set of copies."""
        if not np.array_equal(self.indices, other.indices) or self.full != other.full:
            raise ValueError("accumulators cover different samples")
        if self.full:
            self._buffer += other._buffer
        else:
            self._values += other._values
        self.folded += other.folded
        return self

    @property
    def values(self) -> np.ndarray:
        if self.full:
            return self._buffer[self.indices]
        return self._values.copy()


def accumulate(acc: AmplitudeAccumulator, result: CopyResult) -> AmplitudeAccumulator:
    return acc.accumulate(result)


def probabilities(acc: AmplitudeAccumulator) -> list[tuple[int, float]]:
    amps = acc.values
    probs = amps.real**2 + amps.imag**2
    return list(zip(acc.indices.tolist(), probs.tolist()))


def write_amplitude_csv(path, n_qubits: int, indices: np.ndarray, amps: np.ndarray) -> None:
    """``index,re,im,prob`` rows sorted by index; index as a zero-padded bitstring (qubit 0 first).

    ``path`` may also be an open text file.
    """
    if hasattr(path, "write"):
        _write_rows(path, n_qubits, indices, amps)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_rows(fh, n_qubits, indices, amps)


def _write_rows(fh, n_qubits, indices, amps) -> None:
    fh.write("index,re,im,prob\n")
    for i in np.argsort(indices, kind="stable"):
        a = complex(amps[i])
        p = a.real * a.real + a.imag * a.imag
        fh.write(f"{int(indices[i]):0{n_qubits}b},{a.real!r},{a.imag!r},{p!r}\n")


def read_amplitude_csv(path) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(n_qubits, indices, amplitudes, probabilities)``."""
    idx, re, im, pr = [], [], [], []
    n = None
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "re", "im", "prob"]:
            raise ValueError(f"{path}: expected header index,re,im,prob, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 columns")
            bits = row[0]
            if n is None:
                n = len(bits)
            if len(bits) != n or set(bits) - {"0", "1"}:
                raise ValueError(f"{path}:{lineno}: bad index {bits!r}")
            idx.append(int(bits, 2))
            re.append(float(row[1]))
            im.append(float(row[2]))
            pr.append(float(row[3]))
    if n is None:
        raise ValueError(f"{path}: no rows")
    amps = np.array(re) + 1j * np.array(im)
    return n, np.array(idx, dtype=np.int64), amps, np.array(pr)
