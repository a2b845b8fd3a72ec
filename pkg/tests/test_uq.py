import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfvuq.cases import case1, case2, case3
from sfvuq.partition import Partition, cluster_weights, kmeans_partition
from sfvuq.solvers import SimState
from sfvuq.uq import (
    Coefficients,
    Trajectory,
    cluster_integrated_coefficients,
    cluster_mean_coefficients,
    convergence_study,
    estimate_mc,
    estimate_sfv,
    extract_qoi,
    frozen_samples,
    run_forward,
    run_samples,
    run_study,
    sample_coefficients,
)


@pytest.fixture(scope="module")
def small_case1():
    return case1(nx=6, ny=6, length=60.0)


@pytest.fixture(scope="module")
def small_samples(small_case1):
    return frozen_samples(small_case1, 48, 3)


def test_identical_members_give_single_sample_coefficients(small_case1):
    y = np.tile([[14.0, 25.0]], (5, 1))
    part = Partition(np.zeros(5, int), [[14.0, 25.0]], "manual")
    c = cluster_mean_coefficients(part, y, 0, small_case1)
    single = sample_coefficients(small_case1, y[:1]).take(0)
    np.testing.assert_allclose(c.face_t, single.face_t, rtol=1e-15)


def test_two_member_mean():
    per = Coefficients(np.array([[1.0], [3.0]]), np.ones((2, 1)), np.zeros((2, 0)))
    part = Partition([0, 0], [[0.0]], "manual")
    c = cluster_mean_coefficients(part, np.zeros((2, 1)), 0, None, per)
    assert c.face_t[0] == 2.0


def test_integrated_form_is_weight_times_mean(small_case1, small_samples):
    part = kmeans_partition(small_samples, 7, seed=0)
    w = cluster_weights(part)
    for j in range(part.n_clusters):
        mean = cluster_mean_coefficients(part, small_samples, j, small_case1)
        integ = cluster_integrated_coefficients(part, small_samples, j, small_case1)
        np.testing.assert_allclose(integ.face_t, w[j] * mean.face_t, rtol=1e-14)


def test_merge_consistency(small_case1, small_samples):
    part = kmeans_partition(small_samples, 6, seed=2)
    merged = Partition(np.where(part.assignment == 1, 0, part.assignment)
                       - (part.assignment > 1), part.centroids[[0, 2, 3, 4, 5]], "manual")
    c0 = cluster_mean_coefficients(part, small_samples, 0, small_case1)
    c1 = cluster_mean_coefficients(part, small_samples, 1, small_case1)
    m0, m1 = part.counts[0], part.counts[1]
    cm = cluster_mean_coefficients(merged, small_samples, 0, small_case1)
    np.testing.assert_allclose(cm.face_t, (m0 * c0.face_t + m1 * c1.face_t) / (m0 + m1),
                               rtol=1e-14)


def test_empty_cluster_rejected(small_case1, small_samples):
    part = kmeans_partition(small_samples, 3, seed=0)
    with pytest.raises(ValueError):
        cluster_mean_coefficients(part, small_samples, 5, small_case1)


def test_run_forward_elliptic_homogeneous(small_case1):
    c = sample_coefficients(small_case1, np.array([[10.0, 10.0]])).take(0)
    q = run_forward(small_case1, c)
    assert 0 <= q <= 1


def test_run_forward_parabolic_zero_pi():
    case = case2(nx=10, ny=10, length=100.0, n_steps=10, pi=0.0)
    c = sample_coefficients(case, frozen_samples(case, 1, 0)).take(0)
    assert run_forward(case, c) == 0.0


def test_run_forward_twophase_zero_steps():
    case = case3(nx=10, ny=10, length=100.0, n_steps=0)
    c = sample_coefficients(case, frozen_samples(case, 1, 0)).take(0)
    assert run_forward(case, c) == 0.0


def test_extract_qoi_values():
    from sfvuq.grid import build_grid
    from sfvuq.cases import QoISpec
    from sfvuq.solvers import FluidRockProps

    g = build_grid(1, 1, 10, 10)
    states = [SimState([3e7])] + [SimState([3e7], well_rates=np.array([0.01])) for _ in range(120)]
    q = extract_qoi(Trajectory(states, 1e5), QoISpec("accumulated-production"), g, 1e5)
    assert q == pytest.approx(1.2e5, rel=1e-12)

    props = FluidRockProps(porosity=0.2, swi=0.2)
    swept = QoISpec("swept-volume")
    assert extract_qoi(Trajectory([SimState([0.0], [0.2])]), swept, g, 1.0, props) == 0.0
    assert extract_qoi(Trajectory([SimState([0.0], [1.0])]), swept, g, 1.0, props) == \
        pytest.approx(80.0, rel=1e-14)
    with_phi = QoISpec("swept-volume", include_porosity=True)
    assert extract_qoi(Trajectory([SimState([0.0], [1.0])]), with_phi, g, 1.0, props) == \
        pytest.approx(16.0, rel=1e-14)
    with pytest.raises(ValueError):
        extract_qoi(Trajectory([SimState([0.0])]), QoISpec("cell-pressure", 3), g, 1.0)


def test_estimate_mc():
    e = estimate_mc([1, 2, 3])
    assert (e.mean, e.variance, e.std, e.budget) == (2.0, 1.0, 1.0, 3)
    assert estimate_mc([4.0] * 5).variance == 0
    single = estimate_mc([7.0])
    assert single.variance == 0 and single.single_value
    with pytest.raises(ValueError):
        estimate_mc([])
    u = np.random.default_rng(0).uniform(size=10**4)
    assert abs(estimate_mc(u).mean - 0.5) <= 3 * np.sqrt(1 / 12 / 1e4)


def test_estimate_sfv():
    e = estimate_sfv([1, 3], [0.5, 0.5])
    assert (e.mean, e.variance) == (2.0, 1.0)
    e = estimate_sfv([4.2], [1.0])
    assert e.mean == 4.2 and e.variance == 0
    with pytest.raises(ValueError):
        estimate_sfv([1, 2], [0.5, 0.6])
    lit = estimate_sfv([1, 3], [0.5, 0.5], paper_literal=True)
    assert lit.mean == 1.0


def test_singleton_sfv_equals_uncorrected_mc():
    v = np.random.default_rng(9).normal(size=64)
    mc = estimate_mc(v)
    sfv = estimate_sfv(v, np.full(64, 1 / 64))
    assert sfv.mean == pytest.approx(mc.mean, rel=1e-14)
    assert sfv.variance == pytest.approx(63 / 64 * mc.variance, rel=1e-13)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.randoms())
def test_sfv_permutation_and_constant(values, rnd):
    v = np.array(values)
    w = np.arange(1, v.size + 1, dtype=float)
    w /= w.sum()
    perm = list(range(v.size))
    rnd.shuffle(perm)
    a = estimate_sfv(v, w).mean
    b = estimate_sfv(v[perm], w[perm]).mean
    assert b == pytest.approx(a, rel=1e-12, abs=1e-9)
    assert estimate_sfv(np.ones(v.size), w).mean == pytest.approx(1.0, rel=1e-15)
    if np.ptp(v) == 0:
        assert estimate_sfv(v, w).variance <= 1e-14 * max(1.0, v[0] ** 2)


def test_run_study_limits(small_case1, small_samples):
    ref = run_study(small_case1, "MC", small_samples.n, small_samples)
    full = estimate_mc(run_samples(small_case1, small_samples))
    assert ref.mean == full.mean
    sfv = run_study(small_case1, "SFV-kmeans", small_samples.n, small_samples)
    assert sfv.mean == pytest.approx(ref.mean, rel=1e-12)
    with pytest.raises(ValueError):
        run_study(small_case1, "MC", small_samples.n + 1, small_samples)


def test_convergence_study_shape_and_determinism(small_case1, small_samples):
    budgets = [4, 8, 16, 48]
    a = convergence_study(small_case1, budgets, ["mc", "sfv-kmeans", "sfv-tensor"], small_samples, 1)
    b = convergence_study(small_case1, budgets, ["mc", "sfv-kmeans", "sfv-tensor"], small_samples, 1)
    for m in a:
        assert a[m].budgets == budgets
        assert a[m].mean_errors == b[m].mean_errors
    assert a["MC"].mean_errors[-1] == 0.0
    assert a["SFV-kmeans"].mean_errors[-1] <= 1e-12 * abs(a["MC"].reference.mean)
    with pytest.raises(ValueError):
        convergence_study(small_case1, [8, 4], ["mc"], small_samples)


def test_parallel_matches_serial(small_case1, small_samples):
    a = run_samples(small_case1, small_samples, jobs=1)
    b = run_samples(small_case1, small_samples, jobs=2)
    assert a.tobytes() == b.tobytes()


def test_paper_literal_prefactor(small_case1, small_samples):
    base = run_study(small_case1, "SFV-kmeans", 8, small_samples, seed=0)
    lit = run_study(small_case1, "SFV-kmeans", 8, small_samples, seed=0, paper_literal=True)
    assert lit.mean == pytest.approx(base.mean / base.budget, rel=1e-14)
