"""Parameter-space cells: k-means clusters or tensor-grid bins of a sample set."""

from dataclasses import dataclass

import numpy as np

MAX_TENSOR_CELLS = 10**6


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of samples to non-empty parameter cells.

    ``members[j]`` lists the sample indices in cell ``j`` in increasing
    order; ``centroids`` are member means in the original units.
    ``objective_history`` records the within-cluster sum of squares after
    every Lloyd iteration (k-means only).
    """

    assignment: np.ndarray
    centroids: np.ndarray
    method: str
    objective_history: tuple = ()

    def __post_init__(self):
        a = np.array(self.assignment, dtype=np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)
        c = np.array(self.centroids, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)
        counts = np.bincount(a, minlength=c.shape[0]) if a.size else np.zeros(0, int)
        if counts.size != c.shape[0] or np.any(counts == 0):
            raise ValueError("every cluster must be non-empty and have a centroid")
        object.__setattr__(self, "_counts", counts)

    @property
    def n_clusters(self):
        return self.centroids.shape[0]

    @property
    def counts(self):
        return self._counts

    @property
    def members(self):
        order = np.argsort(self.assignment, kind="stable")
        return np.split(order, np.cumsum(self.counts)[:-1])

    def members_of(self, j):
        return np.flatnonzero(self.assignment == j)


@dataclass(frozen=True)
class ClusterStats:
    weights: np.ndarray
    counts: np.ndarray
    sigma: np.ndarray
    radius: np.ndarray


def _as_array(samples):
    return np.asarray(getattr(samples, "samples", samples), dtype=float)


def standardize(x):
    """Per-dimension z-scores; constant columns are only centred."""
    x = np.asarray(x, dtype=float)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (x - mean) / std


def _relabel(labels, x):
    """Drop empty labels, renumber in order of first label value, return centroids."""
    used, labels = np.unique(labels, return_inverse=True)
    k = used.size
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x)
    return labels, sums / counts[:, None]


def _sq_dist(x, c, chunk=4096):
    """Squared Euclidean distances, shape ``(len(x), len(c))``."""
    out = np.empty((x.shape[0], c.shape[0]))
    cc = np.einsum("ij,ij->i", c, c)
    for s in range(0, x.shape[0], chunk):
        xs = x[s:s + chunk]
        d = np.einsum("ij,ij->i", xs, xs)[:, None] - 2.0 * xs @ c.T + cc[None, :]
        out[s:s + chunk] = np.maximum(d, 0.0)
    return out


def _nearest(x, c, chunk=4096):
    labels = np.empty(x.shape[0], dtype=np.int64)
    dmin = np.empty(x.shape[0])
    for s in range(0, x.shape[0], chunk):
        d = _sq_dist(x[s:s + chunk], c)
        labels[s:s + chunk] = np.argmin(d, axis=1)
        dmin[s:s + chunk] = d[np.arange(d.shape[0]), labels[s:s + chunk]]
    return labels, dmin


def kmeans_plus_plus(z, k, rng):
    """k-means++ seeding on rows of ``z``."""
    n = z.shape[0]
    centers = np.empty((k, z.shape[1]))
    first = rng.integers(n)
    centers[0] = z[first]
    d2 = np.sum((z - z[first]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:  # all points coincide with chosen centres
            idx = rng.integers(n)
        centers[j] = z[idx]
        d2 = np.minimum(d2, np.sum((z - z[idx]) ** 2, axis=1))
    return centers


def kmeans_partition(samples, k, seed=0, max_iter=300, init="k-means++", standardize_features=True):
    """Lloyd's k-means on standardised samples.

    Deterministic for fixed ``(samples, k, seed)``.  Clusters left empty at
    convergence are dropped, so the result may have fewer than ``k`` cells.
    ``k == N`` gives one singleton cell per sample.
    """
    x = _as_array(samples)
    n = x.shape[0]
    if int(k) != k or not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= N={n}, got k={k}")
    k = int(k)
    if k == n:
        return Partition(np.arange(n), x.copy(), "kmeans")
    z = standardize(x) if standardize_features else x.copy()
    rng = np.random.default_rng(seed)
    if init == "k-means++":
        centers = kmeans_plus_plus(z, k, rng)
    elif init == "random":
        centers = z[np.sort(rng.choice(n, size=k, replace=False))].copy()
    else:
        raise ValueError(f"unknown initialisation {init!r}")

    labels, dmin = _nearest(z, centers)
    history = []
    for _ in range(max_iter):
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, z)
        counts = np.bincount(labels, minlength=k)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        new_labels, dmin = _nearest(z, centers)
        history.append(float(dmin.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    labels, _ = _relabel(labels, z)
    _, centroids = _relabel(labels, x)
    return Partition(labels, centroids, "kmeans", tuple(history))


def tensor_partition(samples, bins_per_dim):
    """Equal-width bins over the sample range in each dimension; empty bins dropped."""
    x = _as_array(samples)
    n, d = x.shape
    bins = np.broadcast_to(np.asarray(bins_per_dim, dtype=np.int64), (d,))
    if np.any(bins < 1):
        raise ValueError("need at least one bin per dimension")
    if np.prod(bins.astype(float)) > MAX_TENSOR_CELLS:
        raise ValueError(f"tensor grid of {np.prod(bins.astype(float)):.3g} cells exceeds "
                         f"the {MAX_TENSOR_CELLS} cell guard")
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    width = np.where(hi > lo, (hi - lo) / bins, 1.0)
    idx = np.floor((x - lo) / width).astype(np.int64)
    idx = np.clip(idx, 0, bins - 1)
    flat = np.ravel_multi_index(idx.T, tuple(bins)) if d else np.zeros(n, np.int64)
    labels, centroids = _relabel(flat, x)
    return Partition(labels, centroids, "tensor")


def tensor_bins_for_budget(budget, dim):
    """Largest isotropic bin count ``b`` with ``b**dim <= budget``."""
    b = max(1, int(np.floor(budget ** (1.0 / dim) + 1e-9)))
    while (b + 1) ** dim <= budget:
        b += 1
    while b > 1 and b ** dim > budget:
        b -= 1
    return [b] * dim


def cluster_weights(partition, n=None):
    """Probability mass ``m_j / N`` of every cell."""
    n = partition.assignment.size if n is None else n
    return partition.counts / n


def indicator_sigma(m_k, n):
    """Sample standard deviation of the membership indicator of a cell with ``m_k`` of ``n`` samples."""
    m_k = np.asarray(m_k, dtype=float)
    if np.any(np.asarray(n) < 2):
        raise ValueError("need N >= 2 for a sample variance")
    if np.any(m_k < 0) or np.any(m_k > n):
        raise ValueError("cell count must lie in [0, N]")
    s = np.sqrt((n - m_k) * m_k / (n * (n - 1.0)))
    return float(s) if s.ndim == 0 else s


def cluster_radius(partition, samples):
    """Largest member-to-centre distance per cell, in standardised coordinates."""
    z = standardize(_as_array(samples))
    k = partition.n_clusters
    labels = partition.assignment
    sums = np.zeros((k, z.shape[1]))
    np.add.at(sums, labels, z)
    centers = sums / partition.counts[:, None]
    dist = np.sqrt(np.sum((z - centers[labels]) ** 2, axis=1))
    r = np.zeros(k)
    np.maximum.at(r, labels, dist)
    return r


def cluster_stats(partition, samples):
    n = partition.assignment.size
    counts = partition.counts
    sigma = indicator_sigma(counts, n) if n >= 2 else np.zeros(counts.size)
    return ClusterStats(cluster_weights(partition, n), counts, np.atleast_1d(sigma),
                        cluster_radius(partition, samples))


def within_cluster_ss(samples, assignment, standardize_features=True):
    """Within-cluster sum of squares of an assignment (standardised by default)."""
    x = _as_array(samples)
    z = standardize(x) if standardize_features else x
    labels, centers = _relabel(np.asarray(assignment), z)
    return float(np.sum((z - centers[labels]) ** 2))
