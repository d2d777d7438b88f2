"""Hot loops over amplitude arrays.

Each kernel exists twice: a numba-compiled loop and a vectorised numpy
version.  The numba path is used when numba imports and the environment
variable ``GRIDSPLIT_NO_NUMBA`` is unset (or "0"); :func:`set_backend`
switches at runtime.  Both paths mutate their first argument in place.

Bit convention: ``bit`` is the position in the basis index, not the qubit
number (qubit ``k`` of an ``n``-qubit register lives at bit ``n - 1 - k``).
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# (1+i)/sqrt(2) raised to 0..7
EIGHTH_ROOTS = np.exp(0.25j * np.pi * np.arange(8)).astype(np.complex128)
EIGHTH_ROOTS[[0, 2, 4, 6]] = [1, 1j, -1, -1j]


def _env_backend() -> str:
    if not NUMBA_AVAILABLE:
        return "numpy"
    flag = os.environ.get("GRIDSPLIT_NO_NUMBA", "")
    return "numpy" if flag not in ("", "0") else "numba"


_backend = _env_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Select "numba" or "numpy"; returns the previous backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    prev, _backend = _backend, name
    return prev


# --------------------------------------------------------------------------
# loop kernels; plain Python functions so ``.py_func`` can be instrumented
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def _single_qubit_loop(amps, bit, m00, m01, m10, m11):
    stride = 1 << bit
    low = stride - 1
    half = amps.shape[0] >> 1
    for g in range(half):
        i0 = ((g >> bit) << (bit + 1)) | (g & low)
        i1 = i0 | stride
        a = amps[i0]
        b = amps[i1]
        amps[i0] = m00 * a + m01 * b
        amps[i1] = m10 * a + m11 * b


def _fused_diagonal_loop(amps, t_mask, z_mask, p0_mask, p1_mask, cz_a, cz_b, roots):
    # exactly one read and one write of every amplitude
    n_edges = cz_a.shape[0]
    for i in range(amps.shape[0]):
        a = amps[i]
        if (i & p0_mask) != 0 or (i & p1_mask) != p1_mask:
            amps[i] = 0j
            continue
        sign = _popcount(i & z_mask)
        for e in range(n_edges):
            if (i & cz_a[e]) != 0 and (i & cz_b[e]) != 0:
                sign += 1
        f = roots[_popcount(i & t_mask) & 7]
        if sign & 1:
            f = -f
        amps[i] = a * f


def _fold_gather_loop(acc, upper, lower, xu, xl):
    for s in range(acc.shape[0]):
        acc[s] = acc[s] + upper[xu[s]] * lower[xl[s]]


def _fold_outer_loop(acc, upper, lower):
    nl = lower.shape[0]
    for i in range(upper.shape[0]):
        u = upper[i]
        base = i * nl
        for j in range(nl):
            acc[base + j] = acc[base + j] + u * lower[j]


_single_qubit_nb = njit(cache=True, nogil=True)(_single_qubit_loop)
_fused_diagonal_nb = njit(cache=True, nogil=True)(_fused_diagonal_loop)
_fold_gather_nb = njit(cache=True, nogil=True)(_fold_gather_loop)
_fold_outer_nb = njit(cache=True, nogil=True)(_fold_outer_loop)


# --------------------------------------------------------------------------
# numpy fallbacks
# --------------------------------------------------------------------------


def _single_qubit_np(amps, bit, m00, m01, m10, m11):
    view = amps.reshape(-1, 2, 1 << bit)
    a = view[:, 0, :].copy()
    b = view[:, 1, :]
    view[:, 0, :] = m00 * a + m01 * b
    view[:, 1, :] = m10 * a + m11 * b


def _fused_diagonal_np(amps, t_mask, z_mask, p0_mask, p1_mask, cz_a, cz_b):
    idx = np.arange(amps.shape[0], dtype=np.int64)
    factor = EIGHTH_ROOTS[np.bitwise_count(idx & t_mask) & 7]
    parity = np.bitwise_count(idx & z_mask).astype(np.int64)
    for a, b in zip(cz_a.tolist(), cz_b.tolist()):
        parity += ((idx & a) != 0) & ((idx & b) != 0)
    factor[(parity & 1) == 1] *= -1
    factor[((idx & p0_mask) != 0) | ((idx & p1_mask) != p1_mask)] = 0
    amps *= factor


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def apply_single_qubit(amps: np.ndarray, bit: int, matrix: np.ndarray) -> None:
    m00, m01, m10, m11 = (complex(x) for x in np.asarray(matrix).ravel())
    if _backend == "numba":
        _single_qubit_nb(amps, bit, m00, m01, m10, m11)
    else:
        _single_qubit_np(amps, bit, m00, m01, m10, m11)


def apply_fused_diagonal(
    amps: np.ndarray,
    t_mask: int,
    z_mask: int,
    p0_mask: int,
    p1_mask: int,
    cz_a: np.ndarray,
    cz_b: np.ndarray,
) -> None:
    """Multiply every amplitude by its combined diagonal factor in one pass.

    ``cz_a``/``cz_b`` hold single-bit masks of the two ends of each CZ edge.
    """
    if _backend == "numba":
        _fused_diagonal_nb(amps, t_mask, z_mask, p0_mask, p1_mask, cz_a, cz_b, EIGHTH_ROOTS)
    else:
        _fused_diagonal_np(amps, t_mask, z_mask, p0_mask, p1_mask, cz_a, cz_b)


def fold_gather(acc: np.ndarray, upper: np.ndarray, lower: np.ndarray, xu: np.ndarray, xl: np.ndarray) -> None:
    """acc[s] += upper[xu[s]] * lower[xl[s]]."""
    if _backend == "numba":
        _fold_gather_nb(acc, upper, lower, xu, xl)
    else:
        acc += upper[xu] * lower[xl]


def fold_outer(acc: np.ndarray, upper: np.ndarray, lower: np.ndarray) -> None:
    """acc (flat, len(upper) * len(lower)) += upper ⊗ lower.

    The numpy path gathers through explicit index arrays so that every
    element goes through the same multiply as :func:`fold_gather`.
    """
    if _backend == "numba":
        _fold_outer_nb(acc, upper, lower)
    else:
        nl = lower.shape[0]
        acc += np.repeat(upper, nl) * np.tile(lower, upper.shape[0])
