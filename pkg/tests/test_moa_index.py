import itertools
import math

import pytest
from hypothesis import given, strategies as st

from wavemsa.errors import BoundsError
from wavemsa.moa_index import (Shape, flatten, higher_neighbors, lower_neighbors,
                               offset_code, offset_vectors, strides, unflatten)

shapes = st.lists(st.integers(2, 6), min_size=2, max_size=5).map(lambda d: Shape(tuple(d)))


@pytest.mark.parametrize("dims, expected", [
    ((9, 9), (9, 1)),
    ((9, 9, 9, 9), (729, 81, 9, 1)),
    ((2, 3, 4), (12, 4, 1)),
])
def test_strides(dims, expected):
    assert strides(Shape(dims)) == expected


@pytest.mark.parametrize("dims, idx, offset", [
    ((9, 9), (2, 3), 21),
    ((9, 9, 9, 9), (0, 0, 0, 0), 0),
    ((2, 3, 4), (1, 2, 3), 23),
])
def test_flatten_unflatten_examples(dims, idx, offset):
    shape = Shape(dims)
    assert flatten(shape, idx) == offset
    assert unflatten(shape, offset) == idx


def test_bounds_errors():
    shape = Shape((9, 9))
    with pytest.raises(BoundsError):
        flatten(shape, (9, 0))
    with pytest.raises(BoundsError):
        flatten(shape, (1, 2, 3))
    with pytest.raises(BoundsError):
        unflatten(shape, 81)
    with pytest.raises(BoundsError):
        unflatten(shape, -1)


def test_shape_validation():
    with pytest.raises(ValueError):
        Shape((5,))
    with pytest.raises(ValueError):
        Shape((5, 1))
    with pytest.raises(OverflowError):
        Shape((2**32, 2**32))
    assert Shape((2**31, 2**31)).size == 2**62


def test_roundtrip_exhaustive():
    for dims in [(9, 9), (2, 3, 4), (5, 4, 3, 2), (3, 3, 3, 3, 3), (46, 47, 46)]:
        shape = Shape(dims)
        assert shape.size <= 10**5
        for offset in range(shape.size):
            assert flatten(shape, unflatten(shape, offset)) == offset
        for idx in itertools.product(*(range(d) for d in dims[:3])):
            full = idx + (0,) * (len(dims) - 3)
            assert unflatten(shape, flatten(shape, full)) == full


@given(shapes)
def test_strides_decreasing(shape):
    s = strides(shape)
    assert s[-1] == 1
    assert all(a > b for a, b in zip(s, s[1:]))
    assert s[0] * shape.dims[0] == shape.size == math.prod(shape.dims)


def test_offset_vector_order():
    assert offset_vectors(2) == ((0, 1), (1, 0), (1, 1))
    for k in range(1, 7):
        vecs = offset_vectors(k)
        assert len(vecs) == len(set(vecs)) == 2**k - 1
        assert [offset_code(d) for d in vecs] == list(range(1, 2**k))


def test_lower_neighbors_2d():
    got = lower_neighbors(Shape((9, 9)), (3, 4))
    assert got == [((0, 1), (3, 3)), ((1, 0), (2, 4)), ((1, 1), (2, 3))]


def test_lower_neighbors_origin_and_interior():
    assert lower_neighbors(Shape((4, 5, 6)), (0, 0, 0)) == []
    assert len(lower_neighbors(Shape((9, 9, 9)), (4, 4, 4))) == 7


def test_higher_neighbors_examples():
    assert higher_neighbors(Shape((9, 9)), (8, 8)) == []
    assert higher_neighbors(Shape((9, 9)), (0, 0)) == [
        ((0, 1), (0, 1)), ((1, 0), (1, 0)), ((1, 1), (1, 1))]
    expected = sorted(d for d in itertools.product((0, 1), repeat=3) if any(d))
    got = higher_neighbors(Shape((3, 3, 3)), (1, 1, 1))
    assert len(got) == 7
    assert sorted(d for d, _ in got) == expected


@given(shapes, st.data())
def test_neighbor_counts_and_converse(shape, data):
    idx = tuple(data.draw(st.integers(0, d - 1)) for d in shape.dims)
    lower = lower_neighbors(shape, idx)
    clipped = [d for d in offset_vectors(shape.k)
               if any(x - b < 0 for x, b in zip(idx, d))]
    assert len(lower) + len(clipped) == 2**shape.k - 1
    for d, n in lower:
        assert (d, idx) in higher_neighbors(shape, n)
    for d, n in higher_neighbors(shape, idx):
        assert (d, idx) in lower_neighbors(shape, n)
