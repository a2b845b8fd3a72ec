"""Case definitions: the three Darcy-flow benchmarks and TOML case files."""

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .grid import MILLIDARCY, build_grid
from .random_fields import (
    channel_layout,
    distribution_from_dict,
    distribution_to_dict,
    half_domain_layout,
)
from .solvers import BoundarySpec, FluidRockProps, WellSpec, peaceman_pi

KINDS = ("elliptic", "parabolic", "twophase")
QOI_KINDS = ("cell-pressure", "accumulated-production", "swept-volume")
MPA = 1e6
HOUR = 3600.0


@dataclass(frozen=True)
class WellConfig:
    """Well location and bottom-hole pressure; ``pi=None`` means Peaceman from the block permeability."""

    cell: int
    bhp: float
    pi: float = None
    r_w: float = 0.1


@dataclass(frozen=True)
class QoISpec:
    kind: str
    cell: int = None
    include_porosity: bool = False

    def __post_init__(self):
        if self.kind not in QOI_KINDS:
            raise ValueError(f"unknown QoI kind {self.kind!r}")
        if self.kind == "cell-pressure" and self.cell is None:
            raise ValueError("cell-pressure QoI needs a cell index")


@dataclass(frozen=True, eq=False)
class CaseSpec:
    name: str
    kind: str
    nx: int
    ny: int
    dx: float
    dy: float
    h: float
    distributions: tuple
    layout: str
    props: FluidRockProps
    qoi: QoISpec
    dirichlet: tuple = ()  # ((cell, pressure Pa), ...)
    inflow_saturation: tuple = ()  # ((cell, S_w), ...)
    wells: tuple = ()
    dt: float = 0.0
    n_steps: int = 0
    p_init: float = 0.0
    x_split: float = None
    n_channels: int = None
    cfl_limit: float = 0.2
    grid: object = field(init=False, repr=False)
    field_layout: object = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown case kind {self.kind!r}")
        grid = build_grid(self.nx, self.ny, self.dx, self.dy, self.h)
        object.__setattr__(self, "grid", grid)
        if self.layout == "half-domain":
            lay = half_domain_layout(grid, self.x_split)
        elif self.layout == "channels":
            lay = channel_layout(grid, self.n_channels)
        else:
            raise ValueError(f"unknown layout {self.layout!r}")
        if lay.n_components != len(self.distributions):
            raise ValueError(f"layout has {lay.n_components} components but "
                             f"{len(self.distributions)} distributions are given")
        object.__setattr__(self, "field_layout", lay)
        cells = [c for c, _ in self.dirichlet] + [w.cell for w in self.wells]
        if self.qoi.cell is not None:
            cells.append(self.qoi.cell)
        for c in cells:
            if not 0 <= c < grid.n_cells:
                raise ValueError(f"cell index {c} outside the {self.nx}x{self.ny} grid")
        if self.kind != "elliptic" and not (self.dt > 0 and self.n_steps >= 0):
            raise ValueError("transient cases need dt > 0 and n_steps >= 0")

    @property
    def dim(self):
        return len(self.distributions)

    @property
    def bc(self):
        inflow = dict(self.inflow_saturation) if self.inflow_saturation else None
        return BoundarySpec.from_pairs(self.dirichlet, inflow)

    @property
    def transmissibility_viscosity(self):
        # two-phase transmissibilities are geometric; mobilities carry 1/mu
        return 1.0 if self.kind == "twophase" else self.props.mu

    def well_pi(self, perm_at_wells):
        """PI per well for the given well-block permeabilities (m^2); shape ``(..., n_wells)``."""
        perm_at_wells = np.asarray(perm_at_wells, dtype=float)
        out = np.empty(perm_at_wells.shape)
        for j, w in enumerate(self.wells):
            if w.pi is not None:
                out[..., j] = w.pi
            else:
                out[..., j] = peaceman_pi(perm_at_wells[..., j], self.h,
                                          self.transmissibility_viscosity, self.dx, r_w=w.r_w)
        return out

    def well_specs(self, pis):
        return [WellSpec(w.cell, float(pi), w.bhp) for w, pi in zip(self.wells, pis)]

    def with_overrides(self, pi=None, thickness=None, swept_porosity=None):
        kw = {}
        if pi is not None:
            kw["wells"] = tuple(replace(w, pi=pi) for w in self.wells)
        if thickness is not None:
            kw["h"] = thickness
        if swept_porosity is not None:
            kw["qoi"] = replace(self.qoi, include_porosity=bool(swept_porosity))
        return self._copy(**kw)

    def _copy(self, **kw):
        base = {f: getattr(self, f) for f in self.__dataclass_fields__
                if self.__dataclass_fields__[f].init}
        base.update(kw)
        return CaseSpec(**base)

    def to_dict(self):
        """Resolved case in SI units, including defaulted well PIs."""
        d = {
            "name": self.name, "kind": self.kind,
            "grid": {"nx": self.nx, "ny": self.ny, "dx": self.dx, "dy": self.dy, "h": self.h},
            "layout": {"kind": self.layout, "x_split": self.x_split, "n_channels": self.n_channels},
            "distributions_md": [distribution_to_dict(x) for x in self.distributions],
            "props": {k: getattr(self.props, k) for k in self.props.__dataclass_fields__},
            "qoi": {"kind": self.qoi.kind, "cell": self.qoi.cell,
                    "include_porosity": self.qoi.include_porosity},
            "dirichlet": [[int(c), float(p)] for c, p in self.dirichlet],
            "inflow_saturation": [[int(c), float(s)] for c, s in self.inflow_saturation],
            "wells": [{"cell": w.cell, "bhp": w.bhp, "r_w": w.r_w,
                       "pi": w.pi if w.pi is not None else "peaceman"} for w in self.wells],
            "dt": self.dt, "n_steps": self.n_steps, "p_init": self.p_init,
            "cfl_limit": self.cfl_limit,
        }
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- built-in cases -----------------------------------------------------------

def case1(nx=20, ny=20, length=200.0, h=1.0, qoi_cell=None, dirichlet=None):
    """Steady single-phase flow with a two-component half-domain permeability.

    Left half ~ T(15, 3, 10, 20) mD, right half ~ U(1, 11) or U(21, 31) mD
    with equal probability; unit viscosity.  Pressure 1 at the bottom-left
    cell and 0 at the top-right cell; the QoI is the pressure of the
    bottom-right cell.
    """
    from .random_fields import TruncatedNormal, Uniform, UniformMixture

    n = nx * ny
    dist = (TruncatedNormal(15.0, 3.0, 10.0, 20.0),
            UniformMixture(0.5, Uniform(1.0, 11.0), Uniform(21.0, 31.0)))
    if dirichlet is None:
        dirichlet = ((0, 1.0), (n - 1, 0.0))
    return CaseSpec(
        name="case1", kind="elliptic", nx=nx, ny=ny, dx=length / nx, dy=length / ny, h=h,
        distributions=dist, layout="half-domain", x_split=length / 2,
        props=FluidRockProps(mu=1.0),
        qoi=QoISpec("cell-pressure", nx - 1 if qoi_cell is None else qoi_cell),
        dirichlet=tuple(dirichlet),
    )


def case2(nx=20, ny=20, length=200.0, h=1.0, n_steps=120, dt=1e5, pi=None, first_index=1):
    """Transient single-phase depletion through one corner producer, 10 channels."""
    from .random_fields import channel_mixture_spec

    return CaseSpec(
        name="case2", kind="parabolic", nx=nx, ny=ny, dx=length / nx, dy=length / ny, h=h,
        distributions=tuple(channel_mixture_spec(10, (1, 5), (10, 15), first_index)),
        layout="channels", n_channels=10,
        props=FluidRockProps(porosity=0.1, ct=5e-8, mu=0.002),
        qoi=QoISpec("accumulated-production"),
        wells=(WellConfig(0, 20 * MPA, pi),),
        dt=dt, n_steps=n_steps, p_init=30 * MPA,
    )


def case3(nx=20, ny=20, length=200.0, h=1.0, n_steps=1500, dt=80 * HOUR, first_index=1,
          cfl_limit=0.2):
    """Incompressible water flood between two corners, 10 channels."""
    from .random_fields import channel_mixture_spec

    n = nx * ny
    return CaseSpec(
        name="case3", kind="twophase", nx=nx, ny=ny, dx=length / nx, dy=length / ny, h=h,
        distributions=tuple(channel_mixture_spec(10, (1, 2), (3, 6), first_index)),
        layout="channels", n_channels=10,
        props=FluidRockProps(porosity=0.2, mu_w=0.001, mu_n=0.0018, swi=0.2),
        qoi=QoISpec("swept-volume"),
        dirichlet=((n - 1, 30 * MPA), (0, 26 * MPA)),
        inflow_saturation=((n - 1, 1.0),),
        dt=dt, n_steps=n_steps, p_init=26 * MPA, cfl_limit=cfl_limit,
    )


# -- TOML case files ----------------------------------------------------------

_UNITS = {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "bar": 1e5,
          "s": 1.0, "h": HOUR, "hour": HOUR, "day": 24 * HOUR,
          "m2": 1.0, "mD": MILLIDARCY, "D": 1e3 * MILLIDARCY}


def _si(value, unit):
    if unit not in _UNITS:
        raise ValueError(f"unknown unit {unit!r}")
    return float(value) * _UNITS[unit]


def _cell(spec, nx, ny):
    """Cell given as an integer index, ``[ix, iy]`` or a corner name."""
    if isinstance(spec, int):
        return spec
    if isinstance(spec, (list, tuple)):
        ix, iy = spec
        return iy * nx + ix
    corners = {"bottom-left": 0, "bottom-right": nx - 1,
               "top-left": (ny - 1) * nx, "top-right": nx * ny - 1}
    if spec not in corners:
        raise ValueError(f"unknown cell reference {spec!r}")
    return corners[spec]


def case_from_dict(d):
    g = d["grid"]
    nx, ny = int(g["nx"]), int(g["ny"])
    dist_block = d["distributions"]
    if isinstance(dist_block, dict) and dist_block.get("kind") == "channel-mixture":
        from .random_fields import channel_mixture_spec

        dists = channel_mixture_spec(int(dist_block["n_channels"]),
                                     tuple(dist_block["low"]), tuple(dist_block["high"]),
                                     int(dist_block.get("first_index", 1)))
    else:
        dists = [distribution_from_dict(x) for x in dist_block]
    lay = d.get("layout", {})
    p = dict(d.get("props", {}))
    pressure_unit = d.get("pressure_unit", "Pa")
    time_unit = d.get("time_unit", "s")
    dirichlet = tuple((_cell(b["cell"], nx, ny), _si(b["pressure"], pressure_unit))
                      for b in d.get("dirichlet", []))
    inflow = tuple((_cell(b["cell"], nx, ny), float(b["inflow_saturation"]))
                   for b in d.get("dirichlet", []) if "inflow_saturation" in b)
    wells = tuple(WellConfig(_cell(w["cell"], nx, ny), _si(w["bhp"], pressure_unit),
                             None if w.get("pi", "peaceman") == "peaceman" else float(w["pi"]),
                             float(w.get("r_w", 0.1)))
                  for w in d.get("wells", []))
    q = d["qoi"]
    qoi = QoISpec(q["kind"], None if "cell" not in q else _cell(q["cell"], nx, ny),
                  bool(q.get("include_porosity", False)))
    t = d.get("time", {})
    return CaseSpec(
        name=d.get("name", "case"), kind=d["kind"], nx=nx, ny=ny,
        dx=float(g["dx"]), dy=float(g["dy"]), h=float(g.get("h", 1.0)),
        distributions=tuple(dists), layout=lay.get("kind", "half-domain"),
        x_split=lay.get("x_split"), n_channels=lay.get("n_channels"),
        props=FluidRockProps(**p), qoi=qoi, dirichlet=dirichlet,
        inflow_saturation=inflow, wells=wells,
        dt=_si(t.get("dt", 0.0), time_unit), n_steps=int(t.get("n_steps", 0)),
        p_init=_si(d.get("p_init", 0.0), pressure_unit),
        cfl_limit=float(t.get("cfl_limit", 0.2)),
    )


def load_case(path):
    """Read a TOML case file; bare names like ``case1.toml`` fall back to the shipped cases."""
    path = Path(path)
    if path.exists():
        text = path.read_text()
    else:
        res = resources.files("sfvuq") / "cases" / path.name
        if not res.is_file():
            raise FileNotFoundError(f"case file {path} not found")
        text = res.read_text()
    return case_from_dict(tomllib.loads(text))
