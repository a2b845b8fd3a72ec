"""Random permeability parameters: distributions, sample sets and field layouts.

All distribution bounds are in millidarcy; :func:`realize_permeability`
converts to m^2.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import MILLIDARCY, PermField

MAX_REJECTIONS = 10**6


@dataclass(frozen=True)
class TruncatedNormal:
    mean: float
    std: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"std must be positive, got {self.std}")
        if not self.lower < self.upper:
            raise ValueError(f"empty support [{self.lower}, {self.upper}]")

    @property
    def support(self):
        return (self.lower, self.upper)

    def contains(self, x):
        x = np.asarray(x)
        return (x >= self.lower) & (x <= self.upper)

    def sample(self, rng, size):
        # Rejection from the untruncated normal, in vectorised batches.
        out = np.empty(size)
        filled = 0
        rejected = 0
        while filled < size:
            need = size - filled
            draws = rng.normal(self.mean, self.std, size=need)
            ok = draws[(draws >= self.lower) & (draws <= self.upper)]
            out[filled:filled + ok.size] = ok
            filled += ok.size
            rejected += need - ok.size
            if rejected > MAX_REJECTIONS * max(size, 1) or (ok.size == 0 and rejected > MAX_REJECTIONS):
                raise RuntimeError(
                    f"truncated normal rejection cap hit; support [{self.lower}, {self.upper}] "
                    f"is too far in the tail of N({self.mean}, {self.std}^2)")
        return out


@dataclass(frozen=True)
class Uniform:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"empty support [{self.lower}, {self.upper}]")

    @property
    def support(self):
        return (self.lower, self.upper)

    def contains(self, x):
        x = np.asarray(x)
        return (x >= self.lower) & (x <= self.upper)

    def sample(self, rng, size):
        return rng.uniform(self.lower, self.upper, size=size)


@dataclass(frozen=True)
class UniformMixture:
    """Two-branch mixture: ``U(first)`` with probability ``weight``, else ``U(second)``."""

    weight: float
    first: Uniform
    second: Uniform

    def __post_init__(self):
        if not 0 < self.weight < 1:
            raise ValueError(f"mixture weight must lie in (0, 1), got {self.weight}")

    @property
    def support(self):
        return (min(self.first.lower, self.second.lower),
                max(self.first.upper, self.second.upper))

    def contains(self, x):
        return self.first.contains(x) | self.second.contains(x)

    def branch(self, rng, size):
        """Branch indicator: True where the first component is chosen."""
        return rng.random(size) < self.weight

    def sample(self, rng, size):
        pick_first = self.branch(rng, size)
        a = self.first.sample(rng, size)
        b = self.second.sample(rng, size)
        return np.where(pick_first, a, b)


def sample_component(dist, rng):
    """One draw from ``dist``."""
    return float(dist.sample(rng, 1)[0])


def distribution_from_dict(d):
    kind = d["kind"]
    if kind in ("truncated-normal", "truncnorm"):
        return TruncatedNormal(d["mean"], d["std"], d["lower"], d["upper"])
    if kind == "uniform":
        return Uniform(d["lower"], d["upper"])
    if kind in ("mixture", "uniform-mixture"):
        return UniformMixture(d.get("weight", 0.5), Uniform(*d["first"]), Uniform(*d["second"]))
    raise ValueError(f"unknown distribution kind {kind!r}")


def distribution_to_dict(dist):
    if isinstance(dist, TruncatedNormal):
        return {"kind": "truncated-normal", "mean": dist.mean, "std": dist.std,
                "lower": dist.lower, "upper": dist.upper}
    if isinstance(dist, Uniform):
        return {"kind": "uniform", "lower": dist.lower, "upper": dist.upper}
    if isinstance(dist, UniformMixture):
        return {"kind": "mixture", "weight": dist.weight,
                "first": [dist.first.lower, dist.first.upper],
                "second": [dist.second.lower, dist.second.upper]}
    raise TypeError(f"not a distribution: {dist!r}")


def channel_mixture_spec(n_channels, low=(1, 5), high=(10, 15), first_index=1):
    """Per-channel mixtures ``0.5*U(a(i+1), b(i+1)) + 0.5*U(c(i+1), e(i+1))``.

    ``low=(1, 5), high=(10, 15)`` gives the transient single-phase set-up,
    ``low=(1, 2), high=(3, 6)`` the two-phase one.  ``first_index`` selects
    whether channel numbering ``i`` starts at 1 or 0.
    """
    spec = []
    for k in range(n_channels):
        s = float(k + first_index + 1)
        spec.append(UniformMixture(0.5, Uniform(low[0] * s, low[1] * s),
                                   Uniform(high[0] * s, high[1] * s)))
    return spec


@dataclass(frozen=True, eq=False)
class SampleSet:
    """``N x d`` parameter draws (mD) and the seed that produced them."""

    samples: np.ndarray
    seed: int = None
    names: tuple = None
    distributions: tuple = field(default=None, repr=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] < 1:
            raise ValueError("a sample set needs at least one row")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"y{j + 1}" for j in range(s.shape[1])))
        elif len(self.names) != s.shape[1]:
            raise ValueError("one name per component is required")

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def dim(self):
        return self.samples.shape[1]

    def __len__(self):
        return self.n

    def subset(self, index):
        return SampleSet(self.samples[index], self.seed, self.names, self.distributions)


def draw_sample_set(spec, n, seed):
    """Draw ``n`` samples; column ``j`` follows ``spec[j]``.

    Columns are drawn one after another from a single generator, so the
    result is fully determined by ``(spec, n, seed)``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if len(spec) < 1:
        raise ValueError("distribution spec is empty")
    rng = np.random.default_rng(seed)
    cols = [dist.sample(rng, int(n)) for dist in spec]
    return SampleSet(np.column_stack(cols), seed=seed, distributions=tuple(spec))


@dataclass(frozen=True, eq=False)
class FieldLayout:
    """Which parameter component controls each physical cell."""

    component_of_cell: np.ndarray
    n_components: int
    kind: str = "custom"

    def __post_init__(self):
        c = np.array(self.component_of_cell, dtype=np.int64)
        if c.ndim != 1:
            raise ValueError("component map must be one-dimensional")
        if c.size and (c.min() < 0 or c.max() >= self.n_components):
            raise ValueError("component map references unknown components")
        c.setflags(write=False)
        object.__setattr__(self, "component_of_cell", c)

    def cells_of(self, component):
        return np.flatnonzero(self.component_of_cell == component)


def half_domain_layout(grid, x_split=None):
    """Component 0 for cells with centre ``x < x_split``, component 1 otherwise."""
    width = grid.nx * grid.dx
    if x_split is None:
        x_split = width / 2
    x = grid.cell_centers[:, 0]
    return FieldLayout(np.where(x < x_split, 0, 1), 2, kind="half-domain")


def channel_layout(grid, n_channels):
    """Vertical strips of equal width, channel 0 on the left."""
    if n_channels < 1 or grid.nx % n_channels:
        raise ValueError(f"{grid.nx} columns cannot be split into {n_channels} equal channels")
    width = grid.nx // n_channels
    col = np.tile(np.arange(grid.nx), grid.ny)
    return FieldLayout(col // width, n_channels, kind="channels")


def realize_permeability(sample, layout, grid):
    """Permeability field (m^2) for one parameter vector in mD."""
    sample = np.asarray(sample, dtype=float)
    if sample.shape != (layout.n_components,):
        raise ValueError(f"sample has {sample.size} components, layout needs {layout.n_components}")
    if layout.component_of_cell.size != grid.n_cells:
        raise ValueError("layout does not match the grid")
    return PermField(sample[layout.component_of_cell] * MILLIDARCY)


def realize_permeabilities(samples, layout, grid):
    """Vectorised :func:`realize_permeability`, shape ``(N, n_cells)`` in m^2."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != layout.n_components:
        raise ValueError("samples do not match the layout")
    if layout.component_of_cell.size != grid.n_cells:
        raise ValueError("layout does not match the grid")
    return samples[:, layout.component_of_cell] * MILLIDARCY
