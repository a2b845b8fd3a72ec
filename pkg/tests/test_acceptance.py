"""Exit criteria, one test (and one PASS/FAIL summary line) per criterion."""

import time

import numpy as np
import pytest
from scipy.integrate import quad

from sfvuq.cases import case1, case2, case3
from sfvuq.cli import run_cli
from sfvuq.grid import build_grid
from sfvuq.partition import indicator_sigma
from sfvuq.random_fields import TruncatedNormal, draw_sample_set
from sfvuq.solvers import SimState, WellSpec, step_parabolic
from sfvuq.uq import (
    convergence_study,
    frozen_samples,
    run_samples,
    run_study,
    sample_coefficients,
    simulate,
    swept_volume_history,
)

STUDY_SEEDS = (0, 1, 2, 3, 4)
STUDY_BUDGETS = (4, 8, 16, 32, 64, 128, 256)


def test_c1_singleton_cluster_oracle(report):
    t0 = time.perf_counter()
    case = case1(nx=10, ny=10, length=100.0)
    samples = frozen_samples(case, 64, 2024)
    mc = run_study(case, "MC", 64, samples)
    sfv = run_study(case, "SFV-kmeans", 64, samples, seed=0)
    elapsed = time.perf_counter() - t0
    mean_rel = abs(sfv.mean - mc.mean) / abs(mc.mean)
    var_rel = abs(sfv.variance - 63 / 64 * mc.variance) / (63 / 64 * mc.variance)
    ok = mean_rel <= 1e-12 and var_rel <= 1e-12 and elapsed < 5
    report("C1 singleton-cluster oracle", ok,
           f"mean rel {mean_rel:.1e}, var rel {var_rel:.1e}, {elapsed:.2f}s")
    assert mean_rel <= 1e-12
    assert var_rel <= 1e-12
    assert elapsed < 5


@pytest.fixture(scope="module")
def case1_study():
    case = case1()
    t0 = time.perf_counter()
    out = {}
    for seed in STUDY_SEEDS:
        samples = frozen_samples(case, 4096, seed)
        out[seed] = convergence_study(case, STUDY_BUDGETS, ["MC", "SFV-kmeans", "SFV-tensor"],
                                      samples, seed)
    return out, time.perf_counter() - t0


def test_c2_convergence_rates(case1_study, report):
    study, elapsed = case1_study
    mc = [study[s]["MC"].mean_slope for s in STUDY_SEEDS]
    km = [study[s]["SFV-kmeans"].mean_slope for s in STUDY_SEEDS]
    mc_slope, km_slope = float(np.mean(mc)), float(np.mean(km))
    ok_km = km_slope <= -0.7
    ok_mc = -0.7 <= mc_slope <= -0.3
    ok_time = elapsed < 180
    report("C2 convergence rates", ok_km and ok_mc and ok_time,
           f"SFV-kmeans slope {km_slope:.3f} (<= -0.7), MC slope {mc_slope:.3f} "
           f"(in [-0.7, -0.3]), per-seed MC {np.round(mc, 3).tolist()}, {elapsed:.0f}s")
    assert ok_km, f"SFV-kmeans slope {km_slope:.3f}"
    assert ok_mc, f"MC slope {mc_slope:.3f}, per seed {mc}"
    assert ok_time


def test_c3_kmeans_beats_tensor(case1_study, report):
    study, _ = case1_study
    wins = []
    for s in STUDY_SEEDS:
        km = study[s]["SFV-kmeans"].mean_errors[-1]
        te = study[s]["SFV-tensor"].mean_errors[-1]
        wins.append(km <= te)
    ok = sum(wins) >= 4
    report("C3 k-means vs tensor ordering", ok, f"{sum(wins)}/5 seeds at budget {STUDY_BUDGETS[-1]}")
    assert ok


def test_c4_elliptic_max_principle(report):
    case = case1()
    samples = frozen_samples(case, 200, 77)
    coeffs = sample_coefficients(case, samples)
    lo, hi = np.inf, -np.inf
    for i in range(samples.n):
        p = simulate(case, coeffs.take(i)).final.pressure
        lo, hi = min(lo, p.min()), max(hi, p.max())
    ok = lo >= -1e-10 and hi <= 1 + 1e-10
    report("C4 elliptic max principle", ok, f"pressure range [{lo:.3e}, {hi:.12f}]")
    assert ok


def test_c5_parabolic_closed_form_and_balance(report):
    t0 = time.perf_counter()
    # single cell with one well
    g1 = build_grid(1, 1, 10, 10)
    a = g1.cell_volume * 0.1 * 5e-8 / 1e5
    well = WellSpec(0, 2.5e-12, 20e6)
    state = SimState([30e6])
    p = 30e6
    worst_cf = 0.0
    for _ in range(120):
        state = step_parabolic(state, g1, np.zeros(0), a, [well], 1e5)
        p = (a * p + well.pi * well.bhp) / (a + well.pi)
        worst_cf = max(worst_cf, abs(state.pressure[0] - p) / abs(p))

    # full 20x20 transient case, one realisation
    case = case2()
    c = sample_coefficients(case, frozen_samples(case, 1, 5)).take(0)
    traj = simulate(case, c)
    accum = c.pore_volume * case.props.ct / case.dt
    worst_mb = 0.0
    for s0, s1 in zip(traj.states, traj.states[1:]):
        acc = np.sum(accum * (s0.pressure - s1.pressure))  # volume released
        prod = np.sum(s1.well_rates)
        worst_mb = max(worst_mb, abs(acc - prod) / abs(prod))
    elapsed = time.perf_counter() - t0
    ok = worst_cf <= 1e-12 and worst_mb <= 1e-8 and elapsed < 10
    report("C5 parabolic closed form + mass balance", ok,
           f"closed-form rel {worst_cf:.1e}, balance rel {worst_mb:.1e}, {elapsed:.2f}s")
    assert worst_cf <= 1e-12
    assert worst_mb <= 1e-8
    assert elapsed < 10


def test_c6_twophase_invariants(report):
    t0 = time.perf_counter()
    case = case3(nx=10, ny=10, length=200.0, n_steps=200)
    c = sample_coefficients(case, frozen_samples(case, 1, 8)).take(0)
    traj = simulate(case, c)  # raises CFLViolationError past the limit
    s_all = np.array([s.saturation_w for s in traj.states])
    s_lo, s_hi = s_all.min(), s_all.max()
    swept = swept_volume_history(traj, case.grid, case.props)
    drops = np.diff(swept)
    worst_balance = max(abs(s.boundary_rates.sum()) / np.abs(s.boundary_rates).max()
                        for s in traj.states[1:])
    elapsed = time.perf_counter() - t0
    ok_bounds = s_lo >= 0.2 - 1e-9 and s_hi <= 1 + 1e-9
    ok_mono = drops.min() >= -1e-9 * swept.max()
    ok_bal = worst_balance <= 1e-8
    ok = ok_bounds and ok_mono and ok_bal and elapsed < 30 and swept[-1] > 0
    report("C6 two-phase invariants", ok,
           f"S in [{s_lo:.6f}, {s_hi:.6f}], min dV {drops.min():.2e}, "
           f"flux balance {worst_balance:.1e}, swept {swept[-1]:.1f} m3, {elapsed:.2f}s")
    assert ok_bounds and ok_mono and ok_bal
    assert swept[-1] > 0
    assert elapsed < 30


def test_c7_indicator_variance_identity(report):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5000))
        m = int(rng.integers(0, n + 1))
        z = np.zeros(n)
        z[rng.choice(n, size=m, replace=False)] = 1.0
        two_pass = np.sum((z - z.mean()) ** 2) / (n - 1)
        worst = max(worst, abs(indicator_sigma(m, n) ** 2 - two_pass))
    ok = worst <= 1e-14
    report("C7 indicator-variance identity", ok, f"max abs diff {worst:.1e}")
    assert ok


def test_c8_truncated_normal_sampler(report):
    dist = TruncatedNormal(15.0, 3.0, 10.0, 20.0)
    x = draw_sample_set([dist], 10**5, 8).samples[:, 0]
    dens = lambda t: np.exp(-0.5 * ((t - 15.0) / 3.0) ** 2)
    mass = quad(dens, 10, 20, epsrel=1e-13)[0]
    mean = quad(lambda t: t * dens(t), 10, 20, epsrel=1e-13)[0] / mass
    var = quad(lambda t: (t - mean) ** 2 * dens(t), 10, 20, epsrel=1e-13)[0] / mass
    se = np.sqrt(var / x.size)
    z = abs(x.mean() - mean) / se
    ok = z <= 3 and x.min() >= 10 and x.max() <= 20
    report("C8 truncated-normal sampler", ok,
           f"empirical {x.mean():.5f} vs analytic {mean:.5f} ({z:.2f} SE)")
    assert ok


def test_c9_cli_determinism(tmp_path, report):
    outs = []
    for i, jobs in enumerate(("1", "1", "2")):
        d = tmp_path / f"run{i}"
        code = run_cli(["converge", "--case", "case1.toml", "--seed", "7", "--n", "256",
                        "--budgets", "4,8,16,32", "--methods", "mc,sfv-kmeans,sfv-tensor",
                        "--jobs", jobs, "--out-dir", str(d)])
        assert code == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    ok = outs[0] == outs[1] == outs[2] and len(outs[0]) == 3
    report("C9 CLI determinism", ok, f"{len(outs[0])} files identical across runs and --jobs 1/2")
    assert ok
