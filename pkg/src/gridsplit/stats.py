"""Porter-Thomas checks on reconstructed outcome probabilities.

For a chaotic circuit on ``n`` qubits the scaled probabilities ``N p``
(``N = 2**n``) are Exp(1) distributed, so ``z = ln(N p)`` follows the
Gumbel-type density

    f(z) = (1/a) * exp(z - (exp(z) + a - 1) / a)

with ``a = 1``.  The KS distance uses a CDF obtained by numerically
integrating ``f``; for ``a != 1`` the integral of ``f`` is ``exp(1/a - 1)``
rather than 1, and the CDF is normalised by that mass.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

__all__ = [
    "GumbelParams",
    "LogProbSample",
    "FitReport",
    "MIN_FIT_SAMPLES",
    "PT_KS_THRESHOLD",
    "gumbel_pdf",
    "gumbel_cdf",
    "gumbel_mass",
    "log_transform",
    "ks_distance",
    "histogram_and_fit",
    "write_histogram_csv",
    "write_report_json",
]

MIN_FIT_SAMPLES = 1000
PT_KS_THRESHOLD = 0.02
DEFAULT_BINS = 50
DEFAULT_RANGE = (-12.0, 4.0)

# lower end of the quadrature grid; the mass below it is exp(-40) / a
_Z_LOW = -40.0
_GRID_STEP = 1.0 / 4096


@dataclass(frozen=True)
class GumbelParams:
    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


def gumbel_pdf(z, params: GumbelParams = GumbelParams()):
    a = params.alpha
    z = np.asarray(z, dtype=np.float64)
    with np.errstate(over="ignore"):
        out = np.exp(z - (np.exp(z) + a - 1.0) / a) / a
    return float(out) if out.ndim == 0 else out


def gumbel_mass(params: GumbelParams = GumbelParams()) -> float:
    """Integral of :func:`gumbel_pdf` over the real line, by adaptive quadrature."""
    return _mass(params.alpha)


@lru_cache(maxsize=32)
def _mass(alpha: float) -> float:
    p = GumbelParams(alpha)
    # split at the mode so quad sees the peak
    mode = math.log(alpha)
    left, _ = integrate.quad(lambda z: gumbel_pdf(z, p), -np.inf, mode, epsabs=1e-14, epsrel=1e-12)
    right, _ = integrate.quad(lambda z: gumbel_pdf(z, p), mode, np.inf, epsabs=1e-14, epsrel=1e-12)
    return left + right


@lru_cache(maxsize=32)
def _cdf_table(alpha: float, z_high: float):
    p = GumbelParams(alpha)
    grid = np.arange(_Z_LOW, z_high + _GRID_STEP, _GRID_STEP)
    dens = gumbel_pdf(grid, p)
    # tail below the grid start: first-order, the density there is ~exp(z) / a * exp((1-a)/a)
    tail = dens[0]
    cum = integrate.cumulative_simpson(dens, x=grid, initial=0.0) + tail
    cum /= _mass(alpha)
    return grid, cum


def gumbel_cdf(z, params: GumbelParams = GumbelParams()):
    """Normalised CDF of the density, from cumulative quadrature on a fine grid."""
    z = np.asarray(z, dtype=np.float64)
    z_high = max(8.0, math.ceil(float(np.max(z, initial=0.0))) + 1.0)
    grid, cum = _cdf_table(params.alpha, z_high)
    out = np.interp(z, grid, cum, left=0.0, right=1.0)
    out = np.minimum(out, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LogProbSample:
    z: np.ndarray
    zero_count: int
    n_qubits: int

    @property
    def N(self) -> int:
        return 1 << self.n_qubits

    @property
    def total(self) -> int:
        return int(self.z.shape[0]) + self.zero_count


def log_transform(probs, n_qubits: int) -> LogProbSample:
    """z = ln(2**n * p) for every p > 0; exact zeros are only counted."""
    p = np.asarray(probs, dtype=np.float64).ravel()
    if np.any(p < 0) or np.any(~np.isfinite(p)):
        raise ValueError("probabilities must be finite and non-negative")
    if np.any(p > 1.0 + 1e-9):
        raise ValueError("probabilities must not exceed 1")
    nonzero = p[p > 0]
    z = np.log(nonzero) + n_qubits * math.log(2.0)
    return LogProbSample(z, int(p.shape[0] - nonzero.shape[0]), n_qubits)


def ks_distance(z, params: GumbelParams = GumbelParams()) -> float:
    """sup |F_emp - F| over the sample."""
    zs = np.sort(np.asarray(z, dtype=np.float64))
    n = zs.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    f = gumbel_cdf(zs, params)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


@dataclass
class FitReport:
    n_qubits: int
    samples: int
    zeros: int
    alpha: float
    edges: np.ndarray
    empirical: np.ndarray
    theory: np.ndarray
    ks: float | None

    @property
    def N(self) -> int:
        return 1 << self.n_qubits

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def porter_thomas(self) -> bool | None:
        """KS under the threshold; None when there were too few samples to test."""
        return None if self.ks is None else self.ks < PT_KS_THRESHOLD

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "zeros": self.zeros,
            "ks": self.ks,
            "alpha": self.alpha,
            "N": self.N,
            "n_qubits": self.n_qubits,
            "bins": int(self.empirical.shape[0]),
            "z_range": [float(self.edges[0]), float(self.edges[-1])],
            "porter_thomas": self.porter_thomas,
        }


def histogram_and_fit(
    sample: LogProbSample,
    bins: int = DEFAULT_BINS,
    params: GumbelParams = GumbelParams(),
    z_range: tuple[float, float] = DEFAULT_RANGE,
) -> FitReport:
    """Binned density of z against the theory curve, plus the KS distance.

    Values outside ``z_range`` land in the edge bins, and densities are
    normalised by the full sample size (zeros included), so the histogram
    integrates to the fraction of non-zero probabilities.
    """
    if bins < 1:
        raise ValueError("need at least one bin")
    lo, hi = z_range
    if not hi > lo:
        raise ValueError("empty z range")
    edges = np.linspace(lo, hi, bins + 1)
    width = (hi - lo) / bins
    counts = np.zeros(bins, dtype=np.int64)
    if sample.z.size:
        which = np.clip(((sample.z - lo) / width).astype(np.int64), 0, bins - 1)
        # floor for negatives before the clip
        which = np.where(sample.z < lo, 0, which)
        counts = np.bincount(which, minlength=bins)
    total = sample.total
    empirical = counts / (total * width) if total else np.zeros(bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    theory = gumbel_pdf(centers, params) / gumbel_mass(params)
    ks = ks_distance(sample.z, params) if sample.z.shape[0] >= MIN_FIT_SAMPLES else None
    return FitReport(sample.n_qubits, total, sample.zero_count, params.alpha, edges, empirical, theory, ks)


def write_histogram_csv(report: FitReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("z_mid,empirical_density,theory_density\n")
        for zc, e, t in zip(report.centers, report.empirical, report.theory):
            fh.write(f"{float(zc)!r},{float(e)!r},{float(t)!r}\n")


def write_report_json(report: FitReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")
