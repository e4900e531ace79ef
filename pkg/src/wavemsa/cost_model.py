"""Analytical execution-time model for the partitioned run.

Predicted time is the busiest worker's computation plus a mesh-style
communication term::

    dT = r * max(p_m) + (c / 2) * (P**2 - sum(p_m**2))

``r`` is the time to score one partition and ``c`` the cost of one unit of
communication between partitions held by different workers.  The
communication term counts ordered pairs of partitions on distinct workers,
so it vanishes for a single worker.  ``corrected=False`` evaluates the
product form ``(c / 2) * P**2 * sum(p_m**2)`` instead, for comparison.
"""

import csv
import queue
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError
from .moa_index import as_shape
from .partitioner import allocation, build_grid, partition_sends

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class CostParams:
    r: object
    c: object
    allocation: tuple
    sent_cells: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "allocation", tuple(self.allocation))
        if self.r < 0 or self.c < 0:
            raise ConfigError("r and c must be non-negative")
        if not self.allocation or any(p < 0 for p in self.allocation):
            raise ConfigError("allocation needs one non-negative count per worker")

    @property
    def V(self):
        return len(self.allocation)

    @property
    def P(self):
        return sum(self.allocation)


@dataclass(frozen=True)
class GranularityReport:
    R: tuple
    C: tuple
    R_max: object
    C_max: object
    ratio: object
    dT: object


def predict_dt(params, corrected=True):
    alloc = params.allocation
    P = params.P
    squares = sum(p * p for p in alloc)
    if corrected:
        comm = P * P - squares
    else:
        comm = P * P * squares
    return params.r * max(alloc) + HALF * params.c * comm


def sent_cells_per_worker(sched):
    """Overlap cells each worker sends to other workers over the whole run."""
    sent = [0] * sched.V
    for parts in sched.waves:
        for pid in parts:
            m = sched.owner[pid]
            sent[m] += sum(len(offs) for offs in
                           partition_sends(sched.grid, sched, pid.grid_coords).values())
    return sent


def params_from_schedule(sched, r, c):
    return CostParams(r, c, tuple(sched.allocation()), tuple(sent_cells_per_worker(sched)))


def granularity(params):
    R = tuple(params.r * p for p in params.allocation)
    sent = params.sent_cells if params.sent_cells is not None else (0,) * params.V
    C = tuple(params.c * n for n in sent)
    R_max, C_max = max(R), max(C)
    ratio = R_max / C_max if C_max > 0 else None
    return GranularityReport(R, C, R_max, C_max, ratio, predict_dt(params))


def compute_units(S, k):
    """Cell-neighbour operations to score one full partition."""
    return S**k * (2**k - 1)


def comm_units(S, k):
    """Cells on the shared faces of one full partition."""
    return S**k - (S - 1) ** k


def sweep(shape, V, r_unit, c_unit, policy="block"):
    """Predicted time for every admissible partition size.

    Rows are dicts with S, P, t, max_pm, dT_corrected and dT_printed, in
    exact arithmetic (inputs are converted to Fractions).
    """
    shape = as_shape(shape)
    r_unit, c_unit = Fraction(r_unit), Fraction(c_unit)
    k = shape.k
    rows = []
    for S in range(2, min(shape.dims) + 1):
        grid = build_grid(shape, S)
        alloc = allocation(grid, V, policy)
        params = CostParams(r_unit * compute_units(S, k), c_unit * comm_units(S, k), alloc)
        rows.append({"S": S, "P": grid.P, "t": grid.t, "max_pm": max(alloc),
                     "dT_corrected": predict_dt(params),
                     "dT_printed": predict_dt(params, corrected=False)})
    return rows


def recommend_partition_size(shape, V, r_unit, c_unit, policy="block"):
    rows = sweep(shape, V, r_unit, c_unit, policy)
    if not rows:
        raise ConfigError("no admissible partition size for shape %r"
                          % (as_shape(shape).dims,))
    best = min(rows, key=lambda row: (row["dT_corrected"], row["S"]))
    return best["S"]


def write_sweep_csv(fh, rows):
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["S", "P", "t", "max_pm", "dT_corrected", "dT_printed"])
    for row in rows:
        out.writerow([row["S"], row["P"], row["t"], row["max_pm"],
                      "%.6g" % row["dT_corrected"], "%.6g" % row["dT_printed"]])


def calibrate(n_cells=200_000, n_messages=2_000, k=3, seed=0):
    """Measure (seconds per cell-neighbour op, seconds per communicated cell).

    Scores one random k-dimensional block with the compiled kernel, and
    times single-cell messages through a mailbox.
    """
    from .executor import Geometry, Kernel
    from .sequences import DEFAULT_SCHEME, SequenceSet

    rng = np.random.default_rng(seed)
    side = max(2, round(n_cells ** (1 / k)))
    seqs = SequenceSet.from_strings(*["".join(rng.choice(list("ACGT"), side - 1))
                                      for _ in range(k)])
    grid = build_grid(seqs.shape, side)
    geom = Geometry(grid, grid.partition((0,) * k))
    kernel = Kernel(seqs, DEFAULT_SCHEME)
    values = np.zeros(geom.size, dtype=kernel.dtype)
    moves = np.zeros(geom.size, dtype=np.int16)
    kernel.run(values, moves, geom.owned_local, geom)  # compile outside timing
    start = time.perf_counter()
    kernel.run(values, moves, geom.owned_local, geom)
    r_unit = (time.perf_counter() - start) / (geom.size * (2**k - 1))

    box = queue.SimpleQueue()
    payload = (np.zeros(1, np.int64), np.zeros(1, np.int64))
    start = time.perf_counter()
    for _ in range(n_messages):
        box.put(payload)
        box.get()
    c_unit = (time.perf_counter() - start) / n_messages
    return r_unit, c_unit


def balanced_dt(r, c, P, V):
    """Closed form of the corrected model when every worker holds P/V partitions."""
    return r * Fraction(P, V) + HALF * c * P * P * (1 - Fraction(1, V))
