"""Finite-volume solvers for steady, transient and two-phase Darcy flow.

Every solver takes face transmissibilities and per-cell coefficients as
plain arrays, so the same code runs a single realisation or a
cluster-averaged parameter cell.
"""

import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import MatrixRankWarning, spsolve


class SolverError(RuntimeError):
    pass


class SingularSystemError(SolverError):
    pass


class ConvergenceError(SolverError):
    pass


class CFLViolationError(SolverError):
    pass


@dataclass(frozen=True)
class FluidRockProps:
    porosity: float = 0.1
    ct: float = 0.0  # total compressibility, single phase
    cr: float = 0.0
    cw: float = 0.0
    cn: float = 0.0
    mu: float = 1.0
    mu_w: float = 1e-3
    mu_n: float = 1e-3
    swi: float = 0.0
    corey_w: float = 2.0
    corey_n: float = 2.0

    def __post_init__(self):
        for name in ("porosity", "ct", "cr", "cw", "cn", "corey_w", "corey_n"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("mu", "mu_w", "mu_n"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.swi < 1:
            raise ValueError(f"irreducible water saturation must be in [0, 1), got {self.swi}")


@dataclass(frozen=True)
class WellSpec:
    """Well in a single cell; ``pi`` in m^3/(Pa s), ``bhp`` in Pa."""

    cell: int
    pi: float
    bhp: float

    def __post_init__(self):
        if self.pi < 0:
            raise ValueError("productivity index must be non-negative")
        if self.cell < 0:
            raise ValueError("well cell index must be non-negative")


@dataclass(frozen=True, eq=False)
class BoundarySpec:
    """Dirichlet cells with fixed pressure and optional inflow saturation."""

    cells: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    pressures: np.ndarray = field(default_factory=lambda: np.zeros(0))
    inflow_saturation: np.ndarray = None  # NaN where unspecified

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int64).ravel()
        p = np.array(self.pressures, dtype=float).ravel()
        if cells.shape != p.shape:
            raise ValueError("one pressure per constrained cell")
        if np.unique(cells).size != cells.size:
            raise ValueError("constrained cells must be distinct")
        s_in = (np.full(cells.size, np.nan) if self.inflow_saturation is None
                else np.array(self.inflow_saturation, dtype=float).ravel())
        if s_in.shape != cells.shape:
            raise ValueError("one inflow saturation (or NaN) per constrained cell")
        for a in (cells, p, s_in):
            a.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "pressures", p)
        object.__setattr__(self, "inflow_saturation", s_in)

    @classmethod
    def from_pairs(cls, pairs, inflow=None):
        pairs = list(pairs)
        cells = [c for c, _ in pairs]
        pressures = [p for _, p in pairs]
        s_in = None
        if inflow is not None:
            s_in = [inflow.get(c, np.nan) for c in cells]
        return cls(cells, pressures, s_in)

    def __len__(self):
        return self.cells.size


NO_BOUNDARY = BoundarySpec()


@dataclass(frozen=True, eq=False)
class SimState:
    """Pressure (Pa) and optional water saturation at ``time`` (s).

    ``well_rates`` (production positive, m^3/s) and ``boundary_rates``
    (net source at each Dirichlet cell, inflow positive, m^3/s) describe the
    step that produced this state.
    """

    pressure: np.ndarray
    saturation_w: np.ndarray = None
    time: float = 0.0
    well_rates: np.ndarray = None
    boundary_rates: np.ndarray = None

    def __post_init__(self):
        p = np.array(self.pressure, dtype=float)
        if not np.all(np.isfinite(p)):
            raise SolverError("non-finite pressure in state")
        object.__setattr__(self, "pressure", p)
        if self.saturation_w is not None:
            object.__setattr__(self, "saturation_w", np.array(self.saturation_w, dtype=float))


def well_rate(p, well):
    """Production rate ``PI*(p - bhp)``; positive when the well produces."""
    return well.pi * (p - well.bhp)


def peaceman_pi(K, h, mu, dx, r_w=0.1, re_factor=0.2):
    """Peaceman productivity index ``2*pi*K*h/(mu*ln(r_e/r_w))`` with ``r_e = re_factor*dx``."""
    r_e = re_factor * dx
    if not r_e > r_w:
        raise ValueError(f"equivalent radius {r_e} must exceed wellbore radius {r_w}")
    return 2 * np.pi * np.asarray(K) * h / (mu * np.log(r_e / r_w))


def linear_solve(matrix, rhs, tol=1e-10):
    """Solve a sparse system and check ``||Ax - b|| <= tol*||b||``.

    A direct sparse factorisation is used; one step of iterative refinement
    is applied if the first residual misses the tolerance.
    """
    A = sparse.csc_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.size:
        raise ValueError(f"incompatible system: {A.shape} with rhs of length {b.size}")
    if b.size == 0:
        return np.zeros(0)
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            x = spsolve(A, b)
        except (RuntimeError, MatrixRankWarning) as exc:
            raise SingularSystemError(f"linear system is singular: {exc}") from exc
    x = np.atleast_1d(x)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("linear system is singular")
    bnorm = np.linalg.norm(b)
    scale = bnorm if bnorm > 0 else 1.0
    r = b - A @ x
    if np.linalg.norm(r) > tol * scale:
        x = x + spsolve(A, r)
        r = b - A @ x
        if np.linalg.norm(r) > tol * scale:
            raise ConvergenceError(
                f"relative residual {np.linalg.norm(r) / scale:.3e} exceeds {tol:.1e}")
    return x


def _check_connected(grid, face_t, anchored):
    """Every connected component must contain an anchored cell."""
    keep = face_t > 0
    n = grid.n_cells
    adj = sparse.coo_matrix((np.ones(keep.sum()), (grid.face_a[keep], grid.face_b[keep])),
                            shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    ok = np.zeros(ncomp, dtype=bool)
    ok[labels[anchored]] = True
    if not ok.all():
        bad = np.flatnonzero(~ok[labels])
        raise SingularSystemError(
            f"{bad.size} cells (e.g. cell {bad[0]}) are not connected to any "
            "Dirichlet cell, well or accumulation term")


def _system(grid, face_t, diag_extra, rhs, bc):
    """Assemble ``(D + L) p = rhs`` with Dirichlet cells eliminated and solve."""
    n = grid.n_cells
    a, b = grid.face_a, grid.face_b
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([b, a, a, b])
    vals = np.concatenate([-face_t, -face_t, face_t, face_t])
    A = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A = A + sparse.diags(diag_extra)

    p = np.zeros(n)
    free = np.ones(n, dtype=bool)
    if len(bc):
        free[bc.cells] = False
        p[bc.cells] = bc.pressures
    fixed = ~free
    Aff = A[free][:, free]
    rhs_f = rhs[free] - A[free][:, fixed] @ p[fixed]
    p[free] = linear_solve(Aff, rhs_f)
    return p, A


def _check_bc(grid, bc):
    if len(bc) and (bc.cells.min() < 0 or bc.cells.max() >= grid.n_cells):
        raise ValueError("boundary cell index out of range")


def _check_wells(grid, wells):
    for w in wells:
        if not 0 <= w.cell < grid.n_cells:
            raise ValueError(f"well cell {w.cell} out of range")


def solve_elliptic(grid, face_t, bc, wells=()):
    """Steady pressure: zero net flux in every unconstrained cell."""
    face_t = np.asarray(face_t, dtype=float)
    if face_t.shape != (grid.n_faces,):
        raise ValueError(f"need {grid.n_faces} face values, got {face_t.shape}")
    if np.any(face_t < 0):
        raise ValueError("face transmissibilities must be non-negative")
    _check_bc(grid, bc)
    _check_wells(grid, wells)
    diag = np.zeros(grid.n_cells)
    rhs = np.zeros(grid.n_cells)
    for w in wells:
        diag[w.cell] += w.pi
        rhs[w.cell] += w.pi * w.bhp
    anchored = np.concatenate([bc.cells, [w.cell for w in wells if w.pi > 0]]).astype(np.int64)
    if anchored.size == 0:
        raise SingularSystemError("steady problem needs a Dirichlet cell or a well")
    _check_connected(grid, face_t, anchored)
    p, _ = _system(grid, face_t, diag, rhs, bc)
    return p


def flux_residual(grid, face_t, p):
    """Net inflow ``sum_c T_ic (p_c - p_i)`` for every cell."""
    flow = face_t * (p[grid.face_b] - p[grid.face_a])  # a <- b
    net = np.zeros(grid.n_cells)
    np.add.at(net, grid.face_a, flow)
    np.add.at(net, grid.face_b, -flow)
    return net


def step_parabolic(state, grid, face_t, accum, wells, dt, bc=NO_BOUNDARY):
    """One backward-Euler step of slightly compressible single-phase flow.

    ``accum`` is ``V*phi*c_t/dt`` per cell.  Well terms are implicit:
    the source ``PI*(bhp - p^{n+1})`` goes on the diagonal.
    """
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    accum = np.broadcast_to(np.asarray(accum, dtype=float), (grid.n_cells,))
    if np.any(accum <= 0):
        raise ValueError("accumulation coefficients must be positive")
    face_t = np.asarray(face_t, dtype=float)
    _check_bc(grid, bc)
    _check_wells(grid, wells)
    p_old = state.pressure
    diag = accum.copy()
    rhs = accum * p_old
    for w in wells:
        diag[w.cell] += w.pi
        rhs[w.cell] += w.pi * w.bhp
    p, A = _system(grid, face_t, diag, rhs, bc)
    rates = np.array([well_rate(p[w.cell], w) for w in wells])
    boundary = None
    if len(bc):
        # source needed to hold each Dirichlet cell at its value
        boundary = (A @ p - rhs)[bc.cells]
    return SimState(p, state.saturation_w, state.time + dt, well_rates=rates,
                    boundary_rates=boundary)


def relperm(s_w, props, counter=None):
    """Corey curves on normalised saturation, ``(k_rw, k_rn)``.

    Saturations outside ``[swi, 1]`` are clamped; ``counter["clamped"]`` is
    incremented by the number of clamped entries when a counter is given.
    """
    s = np.asarray(s_w, dtype=float)
    se = (s - props.swi) / (1.0 - props.swi)
    out = (se < 0) | (se > 1)
    if counter is not None and np.any(out):
        counter["clamped"] += int(np.count_nonzero(out))
    se = np.clip(se, 0.0, 1.0)
    krw = se ** props.corey_w
    krn = (1.0 - se) ** props.corey_n
    if krw.ndim == 0:
        return float(krw), float(krn)
    return krw, krn


def mobilities(s_w, props, counter=None):
    krw, krn = relperm(s_w, props, counter)
    return np.asarray(krw) / props.mu_w, np.asarray(krn) / props.mu_n


def impes_step(state, grid, face_t, props, bc, dt, wells=(), pore_volume=None,
               cfl_limit=0.2, counter=None):
    """One IMPES step for incompressible or slightly compressible two-phase flow.

    ``face_t`` holds the geometric transmissibility ``K*A/d`` (viscosity is
    carried by the mobilities).  ``pore_volume`` defaults to
    ``porosity * cell_volume``.

    Pressure is solved implicitly with total mobility upwinded by the flow
    direction of the previous state; saturation is then advanced explicitly
    with water mobility upwinded by the new pressure gradient.  Fluid entering
    through a Dirichlet cell carries that cell's inflow saturation.
    """
    if state.saturation_w is None:
        raise ValueError("two-phase step needs a saturation field")
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    counter = Counter() if counter is None else counter
    face_t = np.asarray(face_t, dtype=float)
    _check_bc(grid, bc)
    _check_wells(grid, wells)
    n = grid.n_cells
    a, b = grid.face_a, grid.face_b
    pv = (np.full(n, props.porosity * grid.cell_volume) if pore_volume is None
          else np.broadcast_to(np.asarray(pore_volume, dtype=float), (n,)))
    s_old = state.saturation_w
    p_old = state.pressure

    lw, ln = mobilities(s_old, props, counter)
    lt = lw + ln

    # pressure: total mobility upwinded on the previous flow direction
    dp_old = p_old[a] - p_old[b]
    lt_face = np.where(dp_old > 0, lt[a], np.where(dp_old < 0, lt[b], 0.5 * (lt[a] + lt[b])))
    ct_cell = props.cr + s_old * props.cw + (1.0 - s_old) * props.cn
    accum = pv * ct_cell / dt
    diag = accum.copy()
    rhs = accum * p_old
    for w in wells:
        diag[w.cell] += w.pi * lt[w.cell]
        rhs[w.cell] += w.pi * lt[w.cell] * w.bhp
    tt = lt_face * face_t
    anchored = np.concatenate([bc.cells, [w.cell for w in wells if w.pi > 0],
                               np.flatnonzero(accum > 0)]).astype(np.int64)
    if anchored.size == 0:
        raise SingularSystemError("incompressible problem needs a Dirichlet cell or a well")
    _check_connected(grid, tt, anchored)
    p, A = _system(grid, tt, diag, rhs, bc)

    # sources (inflow positive)
    q_total = np.zeros(n)
    q_water = np.zeros(n)
    fw = np.divide(lw, lt, out=np.zeros_like(lt), where=lt > 0)
    well_rates = []
    for w in wells:
        q = w.pi * lt[w.cell] * (w.bhp - p[w.cell])
        well_rates.append(-q)
        q_total[w.cell] += q
        q_water[w.cell] += q if q > 0 else q * fw[w.cell]
    boundary = None
    if len(bc):
        boundary = (A @ p - rhs)[bc.cells]
        q_total[bc.cells] += boundary
        s_in = bc.inflow_saturation
        lw_in, ln_in = mobilities(np.where(np.isnan(s_in), s_old[bc.cells], s_in), props)
        fw_in = np.divide(lw_in, lw_in + ln_in, out=np.zeros_like(lw_in),
                          where=(lw_in + ln_in) > 0)
        q_water[bc.cells] += np.where(boundary > 0, boundary * fw_in,
                                      boundary * fw[bc.cells])

    # explicit water transport, upwinded on the new pressure
    dp = p[a] - p[b]
    lw_face = np.where(dp >= 0, lw[a], lw[b])
    flow_w = lw_face * face_t * dp  # a -> b
    net_w = np.zeros(n)
    np.add.at(net_w, a, -flow_w)
    np.add.at(net_w, b, flow_w)
    compress = pv * props.cw * s_old * (p - p_old)
    s_new = s_old + (dt * (net_w + q_water) - compress) / pv

    change = np.max(np.abs(s_new - s_old)) if n else 0.0
    if cfl_limit is not None and change > cfl_limit:
        raise CFLViolationError(
            f"saturation changed by {change:.3f} > {cfl_limit} in one step; reduce dt")
    return SimState(p, s_new, state.time + dt, well_rates=np.array(well_rates),
                    boundary_rates=boundary)


def stable_impes_dt(grid, face_t, props, bc, pore_volume=None, safety=0.5):
    """Rough explicit-transport time step bound for the single-phase flow field.

    Solves the steady pressure with the largest total mobility and returns
    ``safety * min(pv / (outflow * max dfw/dS))``.
    """
    n = grid.n_cells
    pv = (np.full(n, props.porosity * grid.cell_volume) if pore_volume is None
          else np.asarray(pore_volume, dtype=float))
    s = np.linspace(props.swi, 1.0, 2001)
    lw, ln = mobilities(s, props)
    lt = lw + ln
    dfw = np.max(np.abs(np.gradient(lw / lt, s)))
    p = solve_elliptic(grid, face_t * lt.max(), bc)
    flow = face_t * lt.max() * (p[grid.face_a] - p[grid.face_b])
    out = np.zeros(n)
    np.add.at(out, grid.face_a, np.clip(flow, 0, None))
    np.add.at(out, grid.face_b, np.clip(-flow, 0, None))
    inflow_bc = np.zeros(n)
    if len(bc):
        inflow_bc[bc.cells] = np.abs(flux_residual(grid, face_t * lt.max(), p))[bc.cells]
    rate = (out + inflow_bc) * dfw / pv
    rate = rate[rate > 0]
    return safety / rate.max() if rate.size else np.inf
