"""Partition grid, wave enumeration, scheduling and the dependency network.

A partition is a box of ``S`` cells per axis; neighbouring partitions share
one layer of cells.  Partition ``g`` (a grid coordinate vector) starts at
global cell ``g * (S - 1)`` and belongs to wave ``sum(g)``.  Waves are
numbered from 0 (the origin partition).
"""

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BoundsError, ConfigError
from .moa_index import Shape, as_shape, higher_neighbors, offset_vectors, strides

ORACLE_CAP = 10_000_000


@dataclass(frozen=True)
class PartitionGrid:
    shape: Shape
    S: int
    counts: tuple

    @property
    def k(self):
        return self.shape.k

    @property
    def P(self):
        return math.prod(self.counts)

    @property
    def t(self):
        return sum(p - 1 for p in self.counts) + 1

    def partition(self, g):
        g = tuple(int(x) for x in g)
        if len(g) != self.k or any(x < 0 or x >= p for x, p in zip(g, self.counts)):
            raise BoundsError("grid coordinates %r outside %r" % (g, self.counts))
        return PartitionId(g, tuple(x * (self.S - 1) for x in g), sum(g))

    def box(self, g):
        """Inclusive (low, high) global corners of the cells partition g covers."""
        lo = tuple(x * (self.S - 1) for x in g)
        hi = tuple(min(a + self.S - 1, d - 1) for a, d in zip(lo, self.shape.dims))
        return lo, hi

    def all_partitions(self):
        return [self.partition(g) for g in np.ndindex(*self.counts)]


@dataclass(frozen=True, order=True)
class PartitionId:
    grid_coords: tuple
    first_cell: tuple
    wave: int

    def __str__(self):
        return "(%s)" % ",".join(map(str, self.grid_coords))


def build_grid(shape, S):
    shape = as_shape(shape)
    S = int(S)
    if S < 2:
        raise ConfigError("partition size must be >= 2, got %d" % S)
    if S > min(shape.dims):
        raise ConfigError("partition size %d exceeds the shortest axis (%d cells)"
                          % (S, min(shape.dims)))
    counts = tuple(-(-(d - 1) // (S - 1)) for d in shape.dims)
    return PartitionGrid(shape, S, counts)


def wave_count_formula(shape, S):
    """Number of waves as a Fraction, from per-axis (rho - 1)/(S - 1) terms."""
    dims = tuple(as_shape(shape).dims)
    terms = [Fraction(d - 1, S - 1) for d in dims]
    return terms[0] + sum(x - 1 for x in terms[1:])


def partition_count_formula(shape, S):
    dims = tuple(as_shape(shape).dims)
    return math.prod(Fraction(d - 1, S - 1) for d in dims)


def integer_partitions(n, max_parts, max_part=None):
    """Partitions of n into at most max_parts parts, each <= max_part.

    Parts come in non-increasing order, partitions in reverse lexicographic
    order: 3 -> (3,), (2, 1), (1, 1, 1).
    """
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in integer_partitions(n - first, max_parts - 1, first):
            yield (first,) + rest


def distinct_permutations(items):
    """Distinct permutations of a multiset in lexicographic order."""
    seq = sorted(items)
    n = len(seq)
    while True:
        yield tuple(seq)
        i = n - 2
        while i >= 0 and seq[i] >= seq[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while seq[j] <= seq[i]:
            j -= 1
        seq[i], seq[j] = seq[j], seq[i]
        seq[i + 1:] = reversed(seq[i + 1:])


def wave_vectors(k, w, bounds=None):
    """Grid vectors with component sum w (and g_i < bounds_i), unsorted.

    Iterates the integer partitions of w and their permutations; vectors
    breaking a per-axis bound are dropped.
    """
    cap = max(bounds) - 1 if bounds is not None else w
    for part in integer_partitions(w, k, cap):
        padded = part + (0,) * (k - len(part))
        for vec in distinct_permutations(padded):
            if bounds is None or all(x < p for x, p in zip(vec, bounds)):
                yield vec


def enumerate_wave(grid, w):
    if w < 0 or w >= grid.t:
        raise BoundsError("wave %d outside [0, %d)" % (w, grid.t))
    return [grid.partition(g) for g in sorted(wave_vectors(grid.k, w, grid.counts))]


def count_wave(k, w, bounds=None):
    """How many partitions wave w holds, without listing them."""
    if w < 0:
        return 0
    if bounds is None:
        return math.comb(w + k - 1, k - 1)
    ways = [1] + [0] * w
    for p in bounds:
        nxt = [0] * (w + 1)
        for total, n in enumerate(ways):
            if n:
                for x in range(min(p - 1, w - total) + 1):
                    nxt[total + x] += n
        ways = nxt
    return ways[w]


def wave_counts(grid):
    return [count_wave(grid.k, w, grid.counts) for w in range(grid.t)]


def overlap_cells_formula(grid):
    """Overlap estimate evaluated literally as a recurrence over the axes.

    C_0 = rho_0 - 1 and C_i = C_{i-1} * rho_i + (p_0 * ... * p_i) * 2**i - 1,
    summed over all axes.  Kept for comparison with overlap_cells_oracle; the
    two do not agree in general.
    """
    if grid.k < 2:
        raise ValueError("need k >= 2")
    dims, p = grid.shape.dims, grid.counts
    c = dims[0] - 1
    total = c
    prod = p[0]
    for i in range(1, grid.k):
        prod *= p[i]
        c = c * dims[i] + prod * 2**i - 1
        total += c
    return total


def overlap_cell_count(dims, S, cap=ORACLE_CAP):
    """Count cells covered by two or more partitions by direct enumeration."""
    dims = tuple(int(d) for d in dims)
    size = math.prod(dims)
    if size > cap:
        raise ValueError("%d cells exceed the enumeration cap of %d" % (size, cap))
    covering = np.ones(dims, dtype=np.int64)
    for axis, d in enumerate(dims):
        p = -(-(d - 1) // (S - 1))
        per_coord = np.zeros(d, dtype=np.int64)
        for g in range(p):
            lo = g * (S - 1)
            per_coord[lo:min(lo + S, d)] += 1
        view = [1] * len(dims)
        view[axis] = d
        covering = covering * per_coord.reshape(view)
    return int(np.count_nonzero(covering >= 2))


def overlap_cells_oracle(grid, cap=ORACLE_CAP):
    return overlap_cell_count(grid.shape.dims, grid.S, cap)


def owner_grid_coords(grid, cell):
    return tuple(0 if c == 0 else (c - 1) // (grid.S - 1) for c in cell)


def owner_of_cell(grid, cell):
    """The partition that computes ``cell``; others holding it receive a copy."""
    if len(cell) != grid.k or any(c < 0 or c >= d for c, d in zip(cell, grid.shape.dims)):
        raise BoundsError("cell %r outside shape %r" % (tuple(cell), grid.shape.dims))
    return grid.partition(owner_grid_coords(grid, cell))


def owned_cell_count(grid, g):
    lo, hi = grid.box(g)
    return math.prod(h - l + (1 if x == 0 else 0) for l, h, x in zip(lo, hi, g))


class WaveSchedule:
    """Per-wave partition lists plus the owning worker of every partition."""

    def __init__(self, grid, V, waves, owner):
        self.grid = grid
        self.V = V
        self.waves = waves
        self.owner = owner
        self.worker_grid = np.zeros(grid.counts, dtype=np.int64)
        for pid, m in owner.items():
            self.worker_grid[pid.grid_coords] = m

    def worker_of(self, pid):
        coords = pid.grid_coords if isinstance(pid, PartitionId) else tuple(pid)
        return int(self.worker_grid[coords])

    def partitions_of(self, worker, wave=None):
        waves = self.waves if wave is None else [self.waves[wave]]
        return [pid for ps in waves for pid in ps if self.owner[pid] == worker]

    def allocation(self):
        counts = [0] * self.V
        for m in self.owner.values():
            counts[m] += 1
        return counts


def schedule(grid, V, policy="block"):
    """Assign each wave's partitions to V workers.

    ``block``: within a wave (sorted lexicographically) the j-th partition
    goes to worker ``j // ceil(p_w / V)``, which keeps neighbouring
    partitions together.  ``round-robin`` uses ``j % V``.
    """
    V = int(V)
    if V < 1:
        raise ConfigError("need at least one worker, got %d" % V)
    if policy not in ("block", "round-robin"):
        raise ConfigError("unknown scheduling policy %r" % policy)
    waves, owner = [], {}
    for w in range(grid.t):
        parts = enumerate_wave(grid, w)
        block = -(-len(parts) // V)
        for j, pid in enumerate(parts):
            owner[pid] = min(j // block, V - 1) if policy == "block" else j % V
        waves.append(parts)
    return WaveSchedule(grid, V, waves, owner)


def allocation(grid, V, policy="block"):
    """Partitions per worker under ``schedule`` without listing the waves."""
    counts = [0] * V
    for w in range(grid.t):
        n = count_wave(grid.k, w, grid.counts)
        if policy == "round-robin":
            for m in range(V):
                counts[m] += n // V + (1 if m < n % V else 0)
            continue
        block = -(-n // V)
        for m in range(V - 1):
            counts[m] += max(0, min(block, n - m * block))
        counts[V - 1] += max(0, n - (V - 1) * block)
    return counts


@dataclass(frozen=True)
class DependencyEdge:
    src: PartitionId
    dst: PartitionId
    offset: tuple


def dependency_edges(grid):
    edges = []
    vecs = offset_vectors(grid.k)
    for g in np.ndindex(*grid.counts):
        src = grid.partition(g)
        for d in vecs:
            h = tuple(a + b for a, b in zip(g, d))
            if all(x < p for x, p in zip(h, grid.counts)):
                edges.append(DependencyEdge(src, grid.partition(h), d))
    return edges


def cell_destinations(grid, sched, cell):
    """Workers other than the cell's own that need its score (per-cell check)."""
    mine = sched.worker_of(owner_grid_coords(grid, cell))
    out = set()
    for _, n in higher_neighbors(grid.shape, cell):
        m = sched.worker_of(owner_grid_coords(grid, n))
        if m != mine:
            out.add(m)
    return out


def partition_sends(grid, sched, g):
    """Outgoing overlap cells of partition g, keyed by destination worker.

    Runs the higher-neighbour ownership check for every owned cell on the
    partition's high faces (interior cells only feed their own partition).
    Values are sorted arrays of global flat offsets.
    """
    g = tuple(g)
    lo, hi = grid.box(g)
    dims = grid.shape.dims
    axes = [np.arange(l if x == 0 else l + 1, h + 1) for l, h, x in zip(lo, hi, g)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.k)
    hi_arr = np.array(hi)
    can_grow = hi_arr < np.array(dims) - 1
    face = ((mesh == hi_arr) & can_grow).any(axis=1)
    cells = mesh[face]
    if len(cells) == 0:
        return {}
    mine = sched.worker_of(g)
    st = np.array(strides(grid.shape))
    flat = cells @ st
    dest = {}
    for d in offset_vectors(grid.k):
        n = cells + np.array(d)
        ok = (n < np.array(dims)).all(axis=1)
        ng = np.where(n == 0, 0, (n - 1) // (grid.S - 1))[ok]
        workers = sched.worker_grid[tuple(ng.T)]
        remote = workers != mine
        for m in np.unique(workers[remote]):
            dest.setdefault(int(m), []).append(flat[ok][remote][workers[remote] == m])
    return {m: np.unique(np.concatenate(parts)) for m, parts in dest.items()}


def wave_count_table(k_values, n_waves):
    """Unbounded per-wave partition counts: rows k, columns waves 1..n_waves."""
    return [[count_wave(k, w) for w in range(n_waves)] for k in k_values]


def write_wave_csv(fh, grid, sched=None):
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["wave", "partitions", "workers_used"])
    for w in range(grid.t):
        n = count_wave(grid.k, w, grid.counts)
        used = (len({sched.owner[p] for p in sched.waves[w]}) if sched else "")
        out.writerow([w, n, used])


def write_edge_csv(fh, grid, sched=None):
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["from", "to", "offset", "from_wave", "to_wave", "from_worker", "to_worker"])
    for e in dependency_edges(grid):
        row = [" ".join(map(str, e.src.grid_coords)), " ".join(map(str, e.dst.grid_coords)),
               "".join(map(str, e.offset)), e.src.wave, e.dst.wave]
        if sched is not None:
            row += [sched.owner[e.src], sched.owner[e.dst]]
        else:
            row += ["", ""]
        out.writerow(row)


def write_wave_count_table(fh, k_values, n_waves):
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["k"] + [str(w) for w in range(1, n_waves + 1)])
    for k, row in zip(k_values, wave_count_table(k_values, n_waves)):
        out.writerow([k] + row)
