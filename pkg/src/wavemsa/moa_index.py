"""Shape-invariant indexing of the k-dimensional score tensor.

Cells are laid out row-major (last axis fastest).  A move between a cell
and one of its lower neighbours is an offset vector of 0/1 bits; the
``2**k - 1`` non-zero vectors are kept in binary counting order with axis 0
as the most significant bit, so ``(0, 1)`` comes before ``(1, 0)`` and the
all-ones diagonal is last.
"""

from dataclasses import dataclass
from functools import lru_cache

from .errors import BoundsError

OFFSET_LIMIT = 2**64


@dataclass(frozen=True)
class Shape:
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2:
            raise ValueError("need at least 2 dimensions, got %d" % len(dims))
        if any(d < 2 for d in dims):
            raise ValueError("every axis needs at least 2 cells: %r" % (dims,))
        size = 1
        for d in dims:
            size *= d
        if size >= OFFSET_LIMIT:
            raise OverflowError("shape %r has %d cells, beyond 64-bit offsets"
                                % (dims, size))
        object.__setattr__(self, "size", size)

    @property
    def k(self):
        return len(self.dims)

    @property
    def origin(self):
        return (0,) * self.k

    @property
    def terminal(self):
        return tuple(d - 1 for d in self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return len(self.dims)


def as_shape(shape):
    return shape if isinstance(shape, Shape) else Shape(tuple(shape))


def strides(shape):
    shape = as_shape(shape)
    out = [1] * shape.k
    for i in range(shape.k - 2, -1, -1):
        out[i] = out[i + 1] * shape.dims[i + 1]
    return tuple(out)


def in_bounds(shape, idx):
    return len(idx) == len(shape.dims) and all(
        0 <= x < d for x, d in zip(idx, shape.dims))


def check_bounds(shape, idx):
    shape = as_shape(shape)
    if len(idx) != shape.k:
        raise BoundsError("index %r has %d coordinates, shape %r has %d"
                          % (tuple(idx), len(idx), shape.dims, shape.k))
    for x, d in zip(idx, shape.dims):
        if x < 0 or x >= d:
            raise BoundsError("index %r out of range for shape %r"
                              % (tuple(idx), shape.dims))


def flatten(shape, idx):
    shape = as_shape(shape)
    check_bounds(shape, idx)
    return sum(x * s for x, s in zip(idx, strides(shape)))


def unflatten(shape, offset):
    shape = as_shape(shape)
    if offset < 0 or offset >= shape.size:
        raise BoundsError("offset %d out of range for %d cells"
                          % (offset, shape.size))
    coords = []
    for d in reversed(shape.dims):
        offset, x = divmod(offset, d)
        coords.append(x)
    return tuple(reversed(coords))


@lru_cache(maxsize=None)
def offset_vectors(k):
    """All non-zero 0/1 vectors of length k in canonical order."""
    return tuple(tuple((n >> (k - 1 - i)) & 1 for i in range(k))
                 for n in range(1, 2**k))


def offset_code(d):
    """Position of ``d`` in binary counting order (1 .. 2**k - 1)."""
    code = 0
    for bit in d:
        code = (code << 1) | bit
    return code


def lower_neighbors(shape, idx):
    shape = as_shape(shape)
    check_bounds(shape, idx)
    out = []
    for d in offset_vectors(shape.k):
        n = tuple(x - b for x, b in zip(idx, d))
        if min(n) >= 0:
            out.append((d, n))
    return out


def higher_neighbors(shape, idx):
    shape = as_shape(shape)
    check_bounds(shape, idx)
    out = []
    for d in offset_vectors(shape.k):
        n = tuple(x + b for x, b in zip(idx, d))
        if all(x < m for x, m in zip(n, shape.dims)):
            out.append((d, n))
    return out
