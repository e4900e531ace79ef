"""k-dimensional DP recurrence, sequential scoring and traceback.

The sequential scorer here is deliberately plain Python: it is the
reference the partitioned executor is checked against.
"""

import hashlib
import os
from collections import namedtuple
from functools import lru_cache

import numpy as np

from .errors import DependencyError, MemoryCapError
from .moa_index import Shape, offset_code, offset_vectors, strides, unflatten
from .sequences import GAP, Alignment, move_column_score

DEFAULT_MEMORY_CAP = 50_000_000
REAL_TOLERANCE = 1e-9
BRUTE_FORCE_CAP = 2_000_000

CellScore = namedtuple("CellScore", "value best_move")


@lru_cache(maxsize=None)
def move_order(k):
    """Offset vectors in tie-break preference: diagonal first, then binary order."""
    vecs = offset_vectors(k)
    return (vecs[-1],) + vecs[:-1]


def memory_cap():
    return int(os.environ.get("WAVEMSA_MEMORY_CAP", DEFAULT_MEMORY_CAP))


def score_dtype(scheme):
    return np.int64 if scheme.integral else np.float64


def _tolerance(scheme):
    return 0 if scheme.integral else REAL_TOLERANCE


class ScoreTensor:
    """Dense scores plus the chosen move code per cell, in flatten order.

    ``moves`` holds the binary-order code of the best offset vector
    (1 .. 2**k - 1); the origin carries 0.
    """

    def __init__(self, shape, values, moves):
        self.shape = shape if isinstance(shape, Shape) else Shape(shape)
        self.values = np.asarray(values)
        self.moves = np.asarray(moves, dtype=np.int16)
        if self.values.shape != (self.shape.size,) or self.moves.shape != (self.shape.size,):
            raise ValueError("tensor arrays must have %d cells" % self.shape.size)

    def __getitem__(self, idx):
        return self.values[self._flat(idx)].item()

    def cell(self, idx):
        flat = self._flat(idx)
        code = int(self.moves[flat])
        move = offset_vectors(self.shape.k)[code - 1] if code else None
        return CellScore(self.values[flat].item(), move)

    def _flat(self, idx):
        return sum(x * s for x, s in zip(idx, strides(self.shape)))

    @property
    def terminal_score(self):
        return self.values[-1].item()

    def array(self):
        return self.values.reshape(self.shape.dims)

    def equals(self, other):
        return (self.shape == other.shape
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.moves, other.moves))


def score_cell(cell, neighbor_lookup, seqs, scheme):
    """Score one non-origin cell from its in-bounds lower neighbours."""
    if not any(cell):
        raise ValueError("the origin is initialised, not scored")
    eps = _tolerance(scheme)
    best = best_move = None
    for d in move_order(len(cell)):
        prev = tuple(x - b for x, b in zip(cell, d))
        if min(prev) < 0:
            continue
        try:
            base = neighbor_lookup(prev)
        except (KeyError, IndexError) as exc:
            raise DependencyError("no score available for neighbour %r of %r"
                                  % (prev, tuple(cell))) from exc
        value = base + move_column_score(scheme, seqs, cell, d)
        if best is None or value > best + eps:
            best, best_move = value, d
    return CellScore(best, best_move)


def score_sequential(seqs, scheme, cap=None):
    shape = seqs.shape
    cap = memory_cap() if cap is None else cap
    if shape.size > cap:
        raise MemoryCapError(shape.size, cap)
    if scheme.sub is not None:
        scheme.check_alphabet(set("".join(seqs.residues)))
    values = np.zeros(shape.size, dtype=score_dtype(scheme))
    moves = np.zeros(shape.size, dtype=np.int16)
    st = strides(shape)

    def lookup(idx):
        return values[sum(x * s for x, s in zip(idx, st))].item()

    # ascending flat order is a topological order for row-major layout
    for flat in range(1, shape.size):
        cell = unflatten(shape, flat)
        scored = score_cell(cell, lookup, seqs, scheme)
        values[flat] = scored.value
        moves[flat] = offset_code(scored.best_move)
    return ScoreTensor(shape, values, moves)


def _columns_to_alignment(seqs, path_moves):
    rows = [[] for _ in range(seqs.k)]
    pos = [0] * seqs.k
    for d in path_moves:
        for s, bit in enumerate(d):
            if bit:
                rows[s].append(seqs[s][pos[s]])
                pos[s] += 1
            else:
                rows[s].append(GAP)
    return Alignment(tuple("".join(r) for r in rows), tuple(seqs.ids))


def traceback(tensor, seqs):
    """Follow stored best moves from the terminal corner back to the origin."""
    shape = tensor.shape
    vecs = offset_vectors(shape.k)
    st = strides(shape)
    cell = list(shape.terminal)
    moves = []
    while any(cell):
        code = int(tensor.moves[sum(x * s for x, s in zip(cell, st))])
        if code == 0:
            raise ValueError("no stored move at cell %r" % (tuple(cell),))
        d = vecs[code - 1]
        moves.append(d)
        cell = [x - b for x, b in zip(cell, d)]
    moves.reverse()
    return _columns_to_alignment(seqs, moves)


def path_moves(aln):
    return [tuple(0 if x == GAP else 1 for x in col) for col in aln.columns()]


def path_score(seqs, scheme, moves):
    """Sum of move column scores along a path given as offset vectors."""
    cell = [0] * seqs.k
    total = 0
    for d in moves:
        cell = [x + b for x, b in zip(cell, d)]
        total += move_column_score(scheme, seqs, cell, d)
    return total


def count_paths(shape):
    """Number of monotone lattice paths from origin to terminal corner."""
    shape = shape if isinstance(shape, Shape) else Shape(shape)
    counts = np.zeros(shape.size, dtype=object)
    counts[0] = 1
    st = strides(shape)
    vecs = offset_vectors(shape.k)
    for flat in range(1, shape.size):
        cell = unflatten(shape, flat)
        total = 0
        for d in vecs:
            if all(x >= b for x, b in zip(cell, d)):
                total += counts[flat - sum(b * s for b, s in zip(d, st))]
        counts[flat] = total
    return int(counts[-1])


def brute_force_best(seqs, scheme, cap=BRUTE_FORCE_CAP):
    """Exhaustively enumerate every alignment path and return the best one.

    Independent of the recurrence: each path's score is accumulated column by
    column during a depth-first walk.  Ties keep the first path found.
    """
    shape = seqs.shape
    n_paths = count_paths(shape)
    if n_paths > cap:
        raise ValueError("%d alignment paths exceed the enumeration cap of %d"
                         % (n_paths, cap))
    vecs = offset_vectors(shape.k)
    st = strides(shape)
    last = shape.size - 1
    # per-cell successor table: (next flat offset, move, column score)
    succ = []
    for flat in range(shape.size):
        cell = unflatten(shape, flat)
        out = []
        for d in vecs:
            nxt = tuple(x + b for x, b in zip(cell, d))
            if all(x < m for x, m in zip(nxt, shape.dims)):
                out.append((flat + sum(b * s for b, s in zip(d, st)), d,
                            move_column_score(scheme, seqs, nxt, d)))
        succ.append(out)

    best = [None, None]
    trail = []

    def walk(flat, score):
        if flat == last:
            if best[0] is None or score > best[0]:
                best[0], best[1] = score, list(trail)
            return
        for nxt, d, cost in succ[flat]:
            trail.append(d)
            walk(nxt, score + cost)
            trail.pop()

    walk(0, 0)
    return best[0], _columns_to_alignment(seqs, best[1])


def dump_tensor(tensor, path, scheme=None):
    """Write scores in flatten order after a one-line text header."""
    digest = hashlib.sha256((scheme.fingerprint() if scheme else "").encode()).hexdigest()
    values = tensor.values.astype(tensor.values.dtype.newbyteorder("<"))
    header = "wavemsa-tensor shape=%s dtype=%s scheme=%s\n" % (
        ",".join(map(str, tensor.shape.dims)), values.dtype.str, digest[:16])
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(values.tobytes())


def load_tensor_dump(path):
    """Return (shape dims, scheme hash, flat score array) from a dump file."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        fields = dict(f.split("=", 1) for f in header[1:])
        data = np.frombuffer(fh.read(), dtype=np.dtype(fields["dtype"]))
    dims = tuple(int(x) for x in fields["shape"].split(","))
    return dims, fields["scheme"], data
