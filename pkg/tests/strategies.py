"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from regretlab.geometry import Box, EuclideanBall, Simplex

finite = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)
dims = st.integers(2, 6)


def vectors(d):
    return arrays(np.float64, d, elements=finite)


@st.composite
def sets(draw, dim=None):
    d = dim if dim is not None else draw(dims)
    kind = draw(st.sampled_from(["ball", "box", "simplex"]))
    if kind == "ball":
        center = draw(arrays(np.float64, d, elements=st.floats(-1, 1)))
        return EuclideanBall(center, draw(st.floats(0.1, 3.0)))
    if kind == "box":
        lo = draw(arrays(np.float64, d, elements=st.floats(-2, 0)))
        width = draw(arrays(np.float64, d, elements=st.floats(0.1, 2)))
        return Box(lo, lo + width)
    return Simplex(d)


@st.composite
def set_and_points(draw, n=2):
    fs = draw(sets())
    return (fs,) + tuple(draw(vectors(fs.dim)) for _ in range(n))


@st.composite
def simplex_points(draw, d):
    raw = draw(arrays(np.float64, d, elements=st.floats(1e-3, 1.0)))
    return raw / raw.sum()
