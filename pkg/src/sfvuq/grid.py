"""Cartesian physical mesh and two-point flux transmissibilities."""

from dataclasses import dataclass

import numpy as np

MILLIDARCY = 9.869233e-16  # m^2


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Cartesian 2D mesh with explicit thickness.

    Cells are numbered row-major with row 0 at the bottom, so cell
    ``(ix, iy)`` has index ``iy * nx + ix``.  Interior faces are stored as
    flat arrays: ``face_a[f]`` and ``face_b[f]`` are the two adjacent cells,
    ``face_area[f]`` the face area and ``face_da[f]``/``face_db[f]`` the
    centre-to-face distances on each side.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    h: float
    face_a: np.ndarray
    face_b: np.ndarray
    face_area: np.ndarray
    face_da: np.ndarray
    face_db: np.ndarray
    face_axis: np.ndarray  # 0 = x-normal face, 1 = y-normal face

    @property
    def n_cells(self):
        return self.nx * self.ny

    @property
    def n_faces(self):
        return self.face_a.size

    @property
    def cell_volume(self):
        return self.dx * self.dy * self.h

    @property
    def cell_centers(self):
        ix, iy = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        return np.column_stack([(ix.ravel() + 0.5) * self.dx,
                                (iy.ravel() + 0.5) * self.dy])

    def cell_index(self, ix, iy):
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise ValueError(f"cell ({ix}, {iy}) outside {self.nx}x{self.ny} grid")
        return iy * self.nx + ix


def build_grid(nx, ny, dx, dy, h=1.0):
    """Build a ``nx`` by ``ny`` grid of ``dx`` x ``dy`` x ``h`` cells."""
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive integers, got nx={nx}, ny={ny}")
    if not (dx > 0 and dy > 0 and h > 0):
        raise ValueError(f"cell dimensions must be positive, got dx={dx}, dy={dy}, h={h}")
    nx, ny = int(nx), int(ny)
    idx = np.arange(nx * ny).reshape(ny, nx)

    # x-normal faces between (ix, iy) and (ix+1, iy)
    xa = idx[:, :-1].ravel()
    xb = idx[:, 1:].ravel()
    # y-normal faces between (ix, iy) and (ix, iy+1)
    ya = idx[:-1, :].ravel()
    yb = idx[1:, :].ravel()

    nfx, nfy = xa.size, ya.size
    area = np.concatenate([np.full(nfx, dy * h), np.full(nfy, dx * h)])
    dist = np.concatenate([np.full(nfx, dx / 2), np.full(nfy, dy / 2)])
    axis = np.concatenate([np.zeros(nfx, dtype=np.int8), np.ones(nfy, dtype=np.int8)])

    arrays = dict(
        face_a=np.concatenate([xa, ya]),
        face_b=np.concatenate([xb, yb]),
        face_area=area,
        face_da=dist,
        face_db=dist.copy(),
        face_axis=axis,
    )
    for a in arrays.values():
        a.setflags(write=False)
    return Grid2D(nx=nx, ny=ny, dx=float(dx), dy=float(dy), h=float(h), **arrays)


@dataclass(frozen=True, eq=False)
class PermField:
    """Cell permeabilities in m^2."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("permeability field must be one-dimensional")
        if not np.all(v > 0):
            raise ValueError("permeability must be strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_millidarcy(cls, values_md):
        return cls(np.asarray(values_md, dtype=float) * MILLIDARCY)


def half_transmissibility(K, A, d, mu):
    """Half-cell transmissibility ``K*A/(mu*d)``."""
    K, A, d, mu = (np.asarray(v, dtype=float) for v in (K, A, d, mu))
    if np.any(K <= 0) or np.any(A <= 0) or np.any(d <= 0) or np.any(mu <= 0):
        raise ValueError("half_transmissibility needs strictly positive inputs")
    out = K * A / (mu * d)
    return float(out) if out.ndim == 0 else out


def face_transmissibility(t_i, t_c):
    """Series composition of two half transmissibilities.

    Returns 0 when either side is 0 (a blocked half kills the face flux).
    """
    t_i = np.asarray(t_i, dtype=float)
    t_c = np.asarray(t_c, dtype=float)
    if np.any(t_i < 0) or np.any(t_c < 0):
        raise ValueError("transmissibilities must be non-negative")
    total = t_i + t_c
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0, t_i * t_c / np.where(total > 0, total, 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


def assemble_face_transmissibilities(grid, perm, mu):
    """Per-face transmissibility of a single permeability field."""
    values = perm.values if isinstance(perm, PermField) else np.asarray(perm, dtype=float)
    if values.shape != (grid.n_cells,):
        raise ValueError(f"permeability has {values.size} cells, grid has {grid.n_cells}")
    return batch_face_transmissibilities(grid, values[None, :], mu)[0]


def batch_face_transmissibilities(grid, perms, mu):
    """Face transmissibilities for a stack of fields, shape ``(n_fields, n_faces)``.

    ``perms`` has shape ``(n_fields, n_cells)`` in m^2.
    """
    perms = np.asarray(perms, dtype=float)
    if perms.ndim != 2 or perms.shape[1] != grid.n_cells:
        raise ValueError(f"expected (n, {grid.n_cells}) permeabilities, got {perms.shape}")
    if not mu > 0:
        raise ValueError(f"viscosity must be positive, got {mu}")
    if np.any(perms <= 0):
        raise ValueError("permeability must be strictly positive")
    t_a = perms[:, grid.face_a] * (grid.face_area / (mu * grid.face_da))
    t_b = perms[:, grid.face_b] * (grid.face_area / (mu * grid.face_db))
    return t_a * t_b / (t_a + t_b)
