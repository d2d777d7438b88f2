import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize

from gridsplit.stats import (
    GumbelParams,
    gumbel_cdf,
    gumbel_mass,
    gumbel_pdf,
    histogram_and_fit,
    ks_distance,
    log_transform,
    write_histogram_csv,
    write_report_json,
)


def test_pdf_at_zero():
    assert gumbel_pdf(0.0) == pytest.approx(math.exp(-1), abs=1e-15)


def test_pdf_mode_at_zero():
    res = optimize.minimize_scalar(lambda z: -gumbel_pdf(z), bounds=(-3, 3), method="bounded",
                                   options={"xatol": 1e-10})
    assert abs(res.x) < 1e-6


def test_pdf_rejects_bad_alpha():
    with pytest.raises(ValueError):
        GumbelParams(0)
    with pytest.raises(ValueError):
        GumbelParams(-1.5)


def test_unit_alpha_integrates_to_one():
    val, _ = integrate.quad(gumbel_pdf, -30, 5, epsabs=1e-13, limit=200)
    assert abs(val - 1) < 1e-6
    assert abs(gumbel_mass() - 1) < 1e-12


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_mass_closed_form(alpha):
    # the density as written integrates to exp(1/alpha - 1); only alpha = 1 is normalised
    assert gumbel_mass(GumbelParams(alpha)) == pytest.approx(math.exp(1 / alpha - 1), rel=1e-10)


@given(st.floats(-40, 30), st.sampled_from([0.5, 1.0, 2.0]))
def test_pdf_nonnegative(z, alpha):
    assert gumbel_pdf(z, GumbelParams(alpha)) >= 0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_quadrature_cdf_matches_closed_form(alpha):
    z = np.linspace(-25, 8, 3001)
    closed = 1 - np.exp(-np.exp(z) / alpha)
    assert np.abs(gumbel_cdf(z, GumbelParams(alpha)) - closed).max() < 1e-8


@given(st.lists(st.floats(1e-300, 1.0), min_size=1, max_size=50), st.integers(1, 60))
def test_log_transform_inverts(probs, n):
    sample = log_transform(probs, n)
    back = np.exp(sample.z) / 2.0**n
    assert np.all(np.abs(back - probs) <= 1e-14 * np.asarray(probs) * max(1, abs(sample.z).max()))


def test_log_transform_counts_zeros():
    s = log_transform([0.0, 0.25, 0.0, 0.75], 2)
    assert s.zero_count == 2 and s.z.shape == (2,) and s.N == 4 and s.total == 4
    assert s.z[0] == pytest.approx(0.0, abs=1e-15)


def test_log_transform_rejects_negative():
    with pytest.raises(ValueError):
        log_transform([0.5, -1e-3], 1)


@given(st.permutations(list(np.random.default_rng(0).normal(size=200))))
def test_ks_permutation_invariant(z):
    ref = np.random.default_rng(0).normal(size=200)
    assert ks_distance(z) == ks_distance(ref)


def test_histogram_integrates_to_nonzero_fraction():
    rng = np.random.default_rng(1)
    p = rng.exponential(size=5000) / 2**12
    p[:300] = 0.0
    p[300:310] = 1e-12  # far below the range, clipped into the first bin
    rep = histogram_and_fit(log_transform(p, 12))
    width = np.diff(rep.edges)
    assert abs((rep.empirical * width).sum() - 4700 / 5000) < 1e-12
    assert rep.zeros == 300 and rep.samples == 5000


def test_synthetic_porter_thomas():
    rng = np.random.default_rng(2024)
    N = 2**20
    rep = histogram_and_fit(log_transform(rng.exponential(size=10**6) / N, 20))
    assert rep.ks < 0.005
    assert rep.porter_thomas


def test_uniform_state_flagged():
    rep = histogram_and_fit(log_transform(np.full(2**12, 2.0**-12), 12))
    # a point mass at z = 0 sits F(0) = 1 - 1/e away from the Gumbel CDF
    assert rep.ks == pytest.approx(1 - math.exp(-1), abs=1e-6)
    assert rep.porter_thomas is False


def test_few_samples_skip_ks():
    rep = histogram_and_fit(log_transform(np.full(999, 1e-3), 10))
    assert rep.ks is None and rep.porter_thomas is None


def test_report_files(tmp_path):
    rng = np.random.default_rng(3)
    rep = histogram_and_fit(log_transform(rng.exponential(size=2000) / 1024, 10), bins=20)
    write_histogram_csv(rep, tmp_path / "h.csv")
    write_report_json(rep, tmp_path / "r.json")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "z_mid,empirical_density,theory_density" and len(lines) == 21
    first = [float(x) for x in lines[1].split(",")]
    assert first[0] == pytest.approx(-12 + 0.4)
    assert first[2] == pytest.approx(gumbel_pdf(-11.6))
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["samples"] == 2000 and data["zeros"] == 0 and data["N"] == 1024 and data["alpha"] == 1.0
    assert 0 <= data["ks"] < 1
