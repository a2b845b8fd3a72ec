"""CSV artifacts with ``#`` provenance header lines."""

import csv
from pathlib import Path

import numpy as np

from .random_fields import SampleSet

SCHEMAS = {
    "samples": None,  # sample_index,y1..yd
    "partition": ("sample_index", "cluster"),
    "stats": ("cluster", "m", "W", "s", "r"),
    "estimates": ("method", "budget", "mean", "variance", "std", "seed"),
    "convergence": ("method", "budget", "mean_err", "std_err"),
}


def format_value(v):
    """Round-trippable text: ``repr`` of floats, plain ints and strings."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(records, columns, path, meta=None):
    """Write rows (sequences matching ``columns``) to ``path``.

    ``meta`` entries become leading ``# key: value`` comment lines.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            for key, value in (meta or {}).items():
                fh.write(f"# {key}: {value}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in records:
                if len(row) != len(columns):
                    raise ValueError(f"row {row!r} does not match columns {columns}")
                w.writerow([format_value(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_csv(path):
    """Return ``(meta, header, rows)`` with rows as lists of strings."""
    meta = {}
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                meta[key.strip()] = value.strip()
            else:
                body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    return meta, header, list(reader)


def write_samples(sample_set, path, meta=None):
    cols = ("sample_index",) + tuple(sample_set.names)
    rows = ([i, *row] for i, row in enumerate(sample_set.samples.tolist()))
    write_csv(rows, cols, path, meta)


def read_samples(path):
    meta, header, rows = read_csv(path)
    if not header or header[0] != "sample_index":
        raise ValueError(f"{path} is not a sample-set CSV")
    values = np.array([[float(x) for x in r[1:]] for r in rows], dtype=float)
    seed = meta.get("seed")
    seed = int(seed) if seed not in (None, "", "None") else None
    return SampleSet(values.reshape(len(rows), len(header) - 1), seed=seed,
                     names=tuple(header[1:]))


def write_partition(partition, path, meta=None):
    rows = ([i, c] for i, c in enumerate(partition.assignment.tolist()))
    write_csv(rows, SCHEMAS["partition"], path, meta)


def write_stats(stats, path, meta=None):
    rows = zip(range(stats.counts.size), stats.counts.tolist(), stats.weights.tolist(),
               stats.sigma.tolist(), stats.radius.tolist())
    write_csv(rows, SCHEMAS["stats"], path, meta)


def write_estimates(estimates, path, meta=None):
    rows = ([e.method, e.budget, e.mean, e.variance, e.std, e.seed] for e in estimates)
    write_csv(rows, SCHEMAS["estimates"], path, meta)


def write_convergence(record, path, meta=None):
    rows = zip([record.method] * len(record.budgets), record.budgets,
               record.mean_errors, record.std_errors)
    write_csv(rows, SCHEMAS["convergence"], path, meta)
