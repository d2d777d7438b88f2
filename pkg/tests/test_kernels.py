"""The numba and numpy kernel paths must agree."""
import numpy as np
import pytest

from gridsplit import _kernels

pytestmark = pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba not installed")


def _vec(n, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)


def _both(fn, *arrays):
    out = []
    for name in ("numba", "numpy"):
        prev = _kernels.set_backend(name)
        try:
            copies = [a.copy() for a in arrays]
            fn(*copies)
            out.append(copies[0])
        finally:
            _kernels.set_backend(prev)
    return out


@pytest.mark.parametrize("bit", [0, 3, 9])
def test_single_qubit_backends_agree(bit):
    m = np.array([[0.6, 0.8j], [0.8j, 0.6]])
    a, b = _both(lambda v: _kernels.apply_single_qubit(v, bit, m), _vec(10, bit))
    assert np.abs(a - b).max() < 1e-15


def test_fused_diagonal_backends_agree():
    n = 10
    cz_a = np.array([1 << 9, 1 << 2], dtype=np.int64)
    cz_b = np.array([1 << 8, 1 << 1], dtype=np.int64)
    args = (0b0001110000, 0b0000001000, 0b0000000001, 0, cz_a, cz_b)
    a, b = _both(lambda v: _kernels.apply_fused_diagonal(v, *args), _vec(n, 0))
    assert np.abs(a - b).max() < 1e-15


def test_folds_agree_within_and_across_backends():
    # within one backend gather and outer walk are bit-identical; across
    # backends only rounding may differ (numba can contract to FMA)
    up, lo = _vec(4, 1), _vec(3, 2)
    acc = np.zeros(128, dtype=complex)
    outer = _both(lambda a: _kernels.fold_outer(a, up, lo), acc)
    idx = np.arange(128, dtype=np.int64)
    gather = _both(lambda a: _kernels.fold_gather(a, up, lo, idx >> 3, idx & 7), acc)
    assert np.array_equal(outer[0], gather[0])
    assert np.array_equal(outer[1], gather[1])
    assert np.abs(outer[0] - outer[1]).max() < 1e-15
    assert np.allclose(outer[0], np.kron(up, lo))


def test_backend_switch():
    prev = _kernels.set_backend("numpy")
    assert _kernels.get_backend() == "numpy"
    _kernels.set_backend(prev)
    with pytest.raises(ValueError):
        _kernels.set_backend("cuda")
