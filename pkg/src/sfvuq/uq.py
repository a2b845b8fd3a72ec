"""Forward UQ: Monte Carlo and clustered stochastic finite volumes.

A parameter cell (one cluster of samples) is simulated once with the
conditional mean of every coefficient group over its members: face
transmissibilities, pore volumes and well productivity indices.  The cell
QoIs are then combined with the cell probabilities ``m_j / N``.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grid import batch_face_transmissibilities
from .partition import (
    cluster_weights,
    kmeans_partition,
    tensor_bins_for_budget,
    tensor_partition,
)
from .random_fields import SampleSet, realize_permeabilities
from .solvers import SimState, SolverError, impes_step, solve_elliptic, step_parabolic

METHODS = ("MC", "SFV-kmeans", "SFV-tensor")
_METHOD_ALIASES = {"mc": "MC", "sfv-kmeans": "SFV-kmeans", "sfv-tensor": "SFV-tensor",
                   "kmeans": "SFV-kmeans", "tensor": "SFV-tensor"}


def method_name(m):
    key = m if m in METHODS else _METHOD_ALIASES.get(m.lower())
    if key is None:
        raise ValueError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
    return key


@dataclass(frozen=True, eq=False)
class Coefficients:
    """Coefficient groups of one realisation or one parameter cell.

    Arrays may carry a leading sample axis (see :func:`sample_coefficients`).
    """

    face_t: np.ndarray
    pore_volume: np.ndarray
    well_pi: np.ndarray

    def take(self, index):
        return Coefficients(self.face_t[index], self.pore_volume[index], self.well_pi[index])

    def mean(self):
        """Average over the leading sample axis."""
        return Coefficients(self.face_t.mean(axis=0), self.pore_volume.mean(axis=0),
                            self.well_pi.mean(axis=0))

    def total(self, scale):
        """Sum over the leading sample axis times ``scale``."""
        return Coefficients(self.face_t.sum(axis=0) * scale,
                            self.pore_volume.sum(axis=0) * scale,
                            self.well_pi.sum(axis=0) * scale)


def sample_coefficients(case, samples):
    """Per-sample coefficients, each array with a leading axis of length N."""
    y = np.asarray(getattr(samples, "samples", samples), dtype=float)
    grid = case.grid
    perms = realize_permeabilities(y, case.field_layout, grid)
    face_t = batch_face_transmissibilities(grid, perms, case.transmissibility_viscosity)
    pv = np.broadcast_to(np.full(grid.n_cells, case.props.porosity * grid.cell_volume),
                         (y.shape[0], grid.n_cells))
    cells = [w.cell for w in case.wells]
    pi = case.well_pi(perms[:, cells]) if cells else np.zeros((y.shape[0], 0))
    return Coefficients(face_t, pv, pi)


def cluster_mean_coefficients(partition, samples, j, case, per_sample=None):
    """Conditional mean of every coefficient group over the members of cell ``j``."""
    if not 0 <= j < partition.n_clusters:
        raise ValueError(f"cluster {j} does not exist")
    members = partition.members_of(j)
    if members.size == 0:
        raise ValueError(f"cluster {j} is empty")
    if per_sample is None:
        y = getattr(samples, "samples", samples)
        return sample_coefficients(case, np.asarray(y)[members]).mean()
    return per_sample.take(members).mean()


def cluster_integrated_coefficients(partition, samples, j, case, per_sample=None):
    """Sum over the members of cell ``j`` divided by the total sample count.

    Equal to ``W_j`` times :func:`cluster_mean_coefficients`.
    """
    members = partition.members_of(j)
    if members.size == 0:
        raise ValueError(f"cluster {j} is empty")
    n = partition.assignment.size
    if per_sample is None:
        y = getattr(samples, "samples", samples)
        per_sample = sample_coefficients(case, np.asarray(y)[members])
        return per_sample.total(1.0 / n)
    return per_sample.take(members).total(1.0 / n)


# -- forward runs -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    states: list
    dt: float = 0.0

    @property
    def final(self):
        return self.states[-1]


def initial_state(case):
    n = case.grid.n_cells
    p = np.full(n, case.p_init, dtype=float)
    for c, val in case.dirichlet:
        p[c] = val
    s = np.full(n, case.props.swi) if case.kind == "twophase" else None
    return SimState(p, s, 0.0)


def simulate(case, coeffs):
    """Run the case's solver with one set of coefficients."""
    grid = case.grid
    bc = case.bc
    wells = case.well_specs(np.atleast_1d(coeffs.well_pi)) if case.wells else []
    if case.kind == "elliptic":
        p = solve_elliptic(grid, coeffs.face_t, bc, wells)
        return Trajectory([SimState(p)])
    state = initial_state(case)
    states = [state]
    if case.kind == "parabolic":
        accum = coeffs.pore_volume * case.props.ct / case.dt
        for _ in range(case.n_steps):
            state = step_parabolic(state, grid, coeffs.face_t, accum, wells, case.dt, bc)
            states.append(state)
    else:
        for _ in range(case.n_steps):
            state = impes_step(state, grid, coeffs.face_t, case.props, bc, case.dt, wells,
                               pore_volume=coeffs.pore_volume, cfl_limit=case.cfl_limit)
            states.append(state)
    return Trajectory(states, case.dt)


def extract_qoi(trajectory, qoi, grid, dt, props=None):
    """Scalar quantity of interest from a trajectory.

    ``cell-pressure``: final pressure in ``qoi.cell``.
    ``accumulated-production``: sum of well production rates times ``dt``.
    ``swept-volume``: ``sum_i (S_w,i - S_iw) V_i`` at the final time, times
    porosity when ``qoi.include_porosity`` is set.
    """
    final = trajectory.final
    if qoi.kind == "cell-pressure":
        if not 0 <= qoi.cell < final.pressure.size:
            raise ValueError(f"cell {qoi.cell} out of range")
        return float(final.pressure[qoi.cell])
    if qoi.kind == "accumulated-production":
        total = 0.0
        for s in trajectory.states[1:]:
            if s.well_rates is not None and s.well_rates.size:
                total += float(np.sum(s.well_rates)) * dt
        return total
    if qoi.kind == "swept-volume":
        if final.saturation_w is None:
            raise ValueError("swept volume needs a two-phase trajectory")
        swi = 0.0 if props is None else props.swi
        vol = grid.cell_volume
        if qoi.include_porosity:
            vol = vol * props.porosity
        return float(np.sum((final.saturation_w - swi) * vol))
    raise ValueError(f"unknown QoI kind {qoi.kind!r}")


def swept_volume_history(trajectory, grid, props, include_porosity=False):
    vol = grid.cell_volume * (props.porosity if include_porosity else 1.0)
    return np.array([np.sum((s.saturation_w - props.swi) * vol) for s in trajectory.states])


def run_forward(case, coeffs):
    return extract_qoi(simulate(case, coeffs), case.qoi, case.grid, case.dt, case.props)


def _job(args):
    case, coeffs, label = args
    try:
        return run_forward(case, coeffs)
    except SolverError as exc:
        raise type(exc)(f"{label}: {exc}") from exc


def resolve_jobs(jobs=None):
    if jobs is None:
        jobs = int(os.environ.get("SFV_UQ_JOBS", "1") or 1)
    return max(1, int(jobs))


def run_many(case, coeff_list, labels, jobs=None):
    """Forward runs for a list of coefficient sets, results in input order."""
    jobs = resolve_jobs(jobs)
    work = [(case, c, lab) for c, lab in zip(coeff_list, labels)]
    if jobs == 1 or len(work) < 2:
        return np.array([_job(w) for w in work], dtype=float)
    chunk = max(1, len(work) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return np.array(list(pool.map(_job, work, chunksize=chunk)), dtype=float)


def run_samples(case, samples, jobs=None, per_sample=None):
    """QoI of every sample, in sample order."""
    y = np.asarray(getattr(samples, "samples", samples), dtype=float)
    per_sample = sample_coefficients(case, y) if per_sample is None else per_sample
    coeffs = [per_sample.take(i) for i in range(y.shape[0])]
    return run_many(case, coeffs, [f"sample {i}" for i in range(y.shape[0])], jobs)


def run_clusters(case, partition, samples, jobs=None, per_sample=None):
    """QoI of every parameter cell, in cluster order."""
    per_sample = sample_coefficients(case, samples) if per_sample is None else per_sample
    coeffs = [cluster_mean_coefficients(partition, samples, j, case, per_sample)
              for j in range(partition.n_clusters)]
    return run_many(case, coeffs, [f"cluster {j}" for j in range(partition.n_clusters)], jobs)


# -- estimators ---------------------------------------------------------------

@dataclass(frozen=True)
class UqEstimate:
    mean: float
    variance: float
    std: float
    budget: int
    method: str
    seed: int = None
    single_value: bool = False


def estimate_mc(values, method="MC", seed=None):
    """Sample mean and Bessel-corrected variance."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("no values to estimate from")
    mean = float(np.mean(v))
    if v.size == 1:
        return UqEstimate(mean, 0.0, 0.0, 1, method, seed, single_value=True)
    var = float(np.sum((v - mean) ** 2) / (v.size - 1))
    return UqEstimate(mean, var, float(np.sqrt(var)), int(v.size), method, seed)


def estimate_sfv(values, weights, method="SFV-kmeans", seed=None, paper_literal=False):
    """Probability-weighted mean and variance over parameter cells.

    With ``paper_literal`` both moments carry an extra ``1/N_c`` factor.
    """
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if v.shape != w.shape or v.size == 0:
        raise ValueError("need one weight per cell value")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {w.sum():.12g}, not 1")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    scale = 1.0 / v.size if paper_literal else 1.0
    mean = float(scale * np.sum(w * v))
    var = float(scale * np.sum(w * (v - mean) ** 2))
    return UqEstimate(mean, var, float(np.sqrt(var)), int(v.size), method, seed)


def build_partition(method, samples, budget, seed):
    method = method_name(method)
    if method == "SFV-kmeans":
        return kmeans_partition(samples, budget, seed=seed)
    if method == "SFV-tensor":
        return tensor_partition(samples, tensor_bins_for_budget(budget, samples.dim))
    raise ValueError(f"{method} does not partition samples")


def run_study(case, method, budget, base_samples, seed=0, jobs=None, paper_literal=False,
              per_sample=None):
    """One estimate with ``budget`` forward simulations.

    MC simulates the first ``budget`` samples; SFV partitions all base
    samples into ``budget`` cells and simulates each cell once.
    """
    method = method_name(method)
    n = base_samples.n
    if int(budget) != budget or budget < 1:
        raise ValueError(f"budget must be a positive integer, got {budget}")
    if budget > n:
        raise ValueError(f"budget {budget} exceeds the {n} base samples")
    if method == "MC":
        sub = base_samples.subset(slice(0, int(budget)))
        ps = None if per_sample is None else per_sample.take(slice(0, int(budget)))
        return estimate_mc(run_samples(case, sub, jobs, ps), "MC", seed)
    per_sample = sample_coefficients(case, base_samples) if per_sample is None else per_sample
    part = build_partition(method, base_samples, int(budget), seed)
    values = run_clusters(case, part, base_samples, jobs, per_sample)
    return estimate_sfv(values, cluster_weights(part, n), method, seed, paper_literal)


@dataclass
class ConvergenceRecord:
    method: str
    budgets: list
    means: list
    stds: list
    mean_errors: list
    std_errors: list
    runs: list
    reference: UqEstimate
    seed: int = None
    mean_slope: float = float("nan")
    std_slope: float = float("nan")
    rows: list = field(default_factory=list)


def loglog_slope(budgets, errors):
    """Least-squares slope of ``log(error)`` against ``log(budget)``; zero errors are skipped."""
    b = np.asarray(budgets, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = (e > 0) & np.isfinite(e)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(b[keep]), np.log(e[keep]), 1)[0])


def convergence_study(case, budgets, methods, base_samples, seed=0, jobs=None,
                      paper_literal=False, reference_values=None):
    """Error of each method against the exhaustive MC estimate on the base samples.

    MC budgets are nested prefixes of the sample order, so the per-sample
    QoIs computed for the reference are reused.
    """
    budgets = [int(b) for b in budgets]
    if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise ValueError("budgets must be strictly increasing")
    if budgets and budgets[-1] > base_samples.n:
        raise ValueError(f"budget {budgets[-1]} exceeds the {base_samples.n} base samples")
    methods = [method_name(m) for m in methods]
    per_sample = sample_coefficients(case, base_samples)
    if reference_values is None:
        reference_values = run_samples(case, base_samples, jobs, per_sample)
    reference = estimate_mc(reference_values, "MC", seed)
    out = {}
    for m in methods:
        rec = ConvergenceRecord(m, [], [], [], [], [], [], reference, seed)
        for b in budgets:
            if m == "MC":
                est = estimate_mc(reference_values[:b], "MC", seed)
            else:
                part = build_partition(m, base_samples, b, seed)
                values = run_clusters(case, part, base_samples, jobs, per_sample)
                est = estimate_sfv(values, cluster_weights(part, base_samples.n), m, seed,
                                   paper_literal)
            rec.budgets.append(b)
            rec.runs.append(est.budget)
            rec.means.append(est.mean)
            rec.stds.append(est.std)
            rec.mean_errors.append(abs(est.mean - reference.mean))
            rec.std_errors.append(abs(est.std - reference.std))
        rec.mean_slope = loglog_slope(rec.budgets, rec.mean_errors)
        rec.std_slope = loglog_slope(rec.budgets, rec.std_errors)
        out[m] = rec
    return out


def frozen_samples(case, n, seed):
    from .random_fields import draw_sample_set

    return draw_sample_set(list(case.distributions), n, seed)


__all__ = [
    "Coefficients", "ConvergenceRecord", "SampleSet", "Trajectory", "UqEstimate",
    "cluster_integrated_coefficients", "cluster_mean_coefficients", "convergence_study",
    "estimate_mc", "estimate_sfv", "extract_qoi", "run_forward", "run_study",
    "sample_coefficients", "simulate",
]
