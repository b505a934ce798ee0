import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repertoire.shapespace import (
    Distribution,
    TopologyError,
    banded_sigma,
    gaussian_distribution,
    gaussian_kernel,
    lognormal_spike_distribution,
    make_grid,
    one_hot_distribution,
    shift_distribution,
    uniform_distribution,
    wasserstein1,
)


def test_make_grid_centers():
    g = make_grid(5, False)
    assert np.allclose(g.centers, [0.1, 0.3, 0.5, 0.7, 0.9])
    g2 = make_grid(2, False)
    assert np.allclose(g2.centers, [0.25, 0.75])
    g3 = make_grid(201, True)
    assert g3.M == 201 and g3.periodic
    assert np.all(np.diff(g3.centers) > 0)
    assert g3.centers[0] > 0 and g3.centers[-1] < 1
    assert g3.bin_width == 1 / 201


def test_make_grid_rejects_small():
    with pytest.raises(ValueError):
        make_grid(1, False)


def test_distribution_simplex_invariants():
    g = make_grid(10, False)
    with pytest.raises(ValueError):
        Distribution(g, np.full(10, 0.2))
    with pytest.raises(ValueError):
        Distribution(g, np.array([1.5, -0.5] + [0.0] * 8))
    d = uniform_distribution(g)
    assert abs(d.p.sum() - 1) < 1e-12


def test_gaussian_distribution_dirac_limit():
    g = make_grid(201, False)
    d = gaussian_distribution(g, 0.5, 0.0)
    assert d.p[100] == 1.0
    assert d.support_size() == 1


def test_gaussian_distribution_symmetry():
    g = make_grid(201, False)
    d = gaussian_distribution(g, 0.5, 0.1)
    assert abs(d.p.sum() - 1) < 1e-12
    assert np.allclose(d.p, d.p[::-1])
    assert np.argmax(d.p) == 100


def test_gaussian_distribution_wide_is_flat():
    g = make_grid(201, False)
    d = gaussian_distribution(g, 0.5, 10.0)
    # ratio between closest and farthest bin is exp(0.5^2 / (2*100))
    assert d.p.max() / d.p.min() < 1.01


def test_gaussian_distribution_rejects_bad_args():
    g = make_grid(201, False)
    with pytest.raises(ValueError):
        gaussian_distribution(g, 0.5, -0.1)
    with pytest.raises(ValueError):
        gaussian_distribution(g, 1.5, 0.1)


def test_lognormal_spikes_single_is_one_hot():
    g = make_grid(201, False)
    d = lognormal_spike_distribution(g, 5.0, 1, seed=3)
    assert d.support_size() == 1
    assert d.p.max() == 1.0


def test_lognormal_spikes_count_and_sum():
    g = make_grid(201, False)
    d = lognormal_spike_distribution(g, 5.0, 100, seed=0)
    assert np.count_nonzero(d.p) == 100
    assert abs(d.p.sum() - 1) < 1e-12
    with pytest.raises(ValueError):
        lognormal_spike_distribution(g, 5.0, 202, seed=0)


def test_lognormal_spike_weights_cv_matches_kappa():
    # Monte-Carlo oracle: CV of the raw log-normal weights should be kappa.
    rng = np.random.default_rng(42)
    kappa = 5.0
    sigma_log = np.sqrt(np.log1p(kappa**2))
    w = rng.lognormal(0.0, sigma_log, size=10_000)
    cv = w.std() / w.mean()
    assert abs(cv - kappa) / kappa < 0.2


def test_shift_distribution():
    g = make_grid(10, True)
    d = one_hot_distribution(g, 3)
    assert np.argmax(shift_distribution(d, 2).p) == 5
    assert np.allclose(shift_distribution(d, 0).p, d.p)
    assert np.allclose(shift_distribution(d, 10).p, d.p)
    r = lognormal_spike_distribution(make_grid(50, True), 2.0, 10, seed=1)
    assert np.allclose(shift_distribution(r, 50).p, r.p)


def test_shift_requires_periodic():
    d = one_hot_distribution(make_grid(10, False), 3)
    with pytest.raises(TopologyError):
        shift_distribution(d, 1)


def test_gaussian_kernel_diagonal_and_decay():
    g = make_grid(201, False)
    k = gaussian_kernel(g, g, 0.05, f_max=1.0)
    assert np.allclose(np.diag(k.f), 1.0)
    # one bandwidth away: exp(-1/2)
    i, j = 100, 100 + round(0.05 * 201)
    dist = abs(g.centers[i] - g.centers[j])
    assert np.isclose(k.f[i, j], np.exp(-dist**2 / (2 * 0.05**2)))
    assert np.isclose(np.exp(-0.5), k.f[i, j], rtol=0.05)
    # symmetric in |d - a| for scalar sigma
    assert np.allclose(k.f, k.f.T)


def test_gaussian_kernel_rejects_bad_sigma():
    g = make_grid(20, False)
    with pytest.raises(ValueError):
        gaussian_kernel(g, g, -0.1)
    with pytest.raises(ValueError):
        gaussian_kernel(g, g, 0.0)


def test_gaussian_kernel_subbin_sigma_warns():
    g = make_grid(201, False)
    with pytest.warns(RuntimeWarning):
        gaussian_kernel(g, g, 0.001)


def test_gaussian_kernel_row_sums_riemann():
    # away from the boundary, row sums approximate f_max * sigma * sqrt(2pi) / h
    g = make_grid(201, False)
    sigma = 0.05  # > 3 bin widths
    k = gaussian_kernel(g, g, sigma)
    expected = sigma * np.sqrt(2 * np.pi) * 201
    mid_rows = k.f[80:120].sum(axis=1)
    assert np.all(np.abs(mid_rows / expected - 1) < 0.01)
    kp = gaussian_kernel(make_grid(201, True), make_grid(201, True), sigma)
    assert np.all(np.abs(kp.f.sum(axis=1) / expected - 1) < 0.01)


def test_per_defender_bandwidth_three_regimes():
    g = make_grid(201, False)
    sig = banded_sigma(g, [0.05, 0.01, 0.001])
    with pytest.warns(RuntimeWarning):
        k = gaussian_kernel(g, g, sig)
    # rows in the left third decay far slower than rows in the right third
    left, right = 33, 190
    off = 4  # bins away
    decay_left = k.f[left, left + off] / k.f[left, left]
    decay_right = k.f[right, right + off] / k.f[right, right]
    assert decay_left > 50 * decay_right


def test_wasserstein_point_masses():
    g = make_grid(201, False)
    d1 = gaussian_distribution(g, 0.2, 0.0)
    d2 = gaussian_distribution(g, 0.5, 0.0)
    assert wasserstein1(d1, d2) == pytest.approx(0.3, abs=g.bin_width)
    assert wasserstein1(d1, d1) == 0.0


def test_wasserstein_split_mass():
    g = make_grid(201, False)
    p = np.zeros(201)
    p[0] = 0.5
    p[-1] = 0.5
    d1 = Distribution(g, p)
    d2 = gaussian_distribution(g, 0.5, 0.0)
    assert wasserstein1(d1, d2) == pytest.approx(0.5, abs=g.bin_width)


def test_wasserstein_against_scipy():
    from scipy.stats import wasserstein_distance

    g = make_grid(97, False)
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = Distribution.from_probabilities(g, rng.random(97))
        q = Distribution.from_probabilities(g, rng.random(97))
        ref = wasserstein_distance(g.centers, g.centers, p.p, q.p)
        assert wasserstein1(p, q) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_wasserstein_rejects_mismatched_spaces():
    p = uniform_distribution(make_grid(10, False))
    q = uniform_distribution(make_grid(11, False))
    with pytest.raises(ValueError):
        wasserstein1(p, q)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_wasserstein_metric_properties(seed):
    g = make_grid(41, False)
    rng = np.random.default_rng(seed)
    a, b, c = (Distribution.from_probabilities(g, rng.random(41) + 1e-9)
               for _ in range(3))
    dab, dba = wasserstein1(a, b), wasserstein1(b, a)
    assert dab == pytest.approx(dba, rel=1e-12, abs=1e-15)
    assert wasserstein1(a, a) <= 1e-12
    assert dab + wasserstein1(b, c) >= wasserstein1(a, c) - 1e-12


def test_shift_preserves_w1_when_no_wrap():
    g = make_grid(100, True)
    p = np.zeros(100)
    p[40:45] = 0.2
    q = np.zeros(100)
    q[50:52] = 0.5
    dp, dq = Distribution(g, p), Distribution(g, q)
    base = wasserstein1(dp, dq)
    for k in (3, -10, 20):
        assert wasserstein1(
            shift_distribution(dp, k), shift_distribution(dq, k)
        ) == pytest.approx(base, abs=1e-12)


def test_distribution_serialization_roundtrip():
    g = make_grid(31, False)
    d = lognormal_spike_distribution(g, 3.0, 7, seed=5)
    back = Distribution.from_csv(d.to_csv())
    assert np.allclose(back.p, d.p, atol=1e-15)
    obj = json.loads(d.to_json())
    assert len(obj["centers"]) == 31
    back2 = Distribution.from_json(d.to_json())
    assert np.allclose(back2.p, d.p, atol=1e-15)
