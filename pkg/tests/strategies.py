"""
Hypothesis strategies shared by the test modules.
"""

import numpy as np
from hypothesis import strategies as st

from guidec import TokenDist

weights = st.floats(min_value=0.01, max_value=1.0, allow_nan=False, allow_infinity=False)


def _normalized(values) -> TokenDist:
    arr = np.asarray(values, dtype=np.float64)
    return TokenDist.from_probs(arr / arr.sum())


@st.composite
def distributions(draw, min_size: int = 2, max_size: int = 8) -> TokenDist:
    """Full-support distributions with every entry at least ~1e-3."""
    n = draw(st.integers(min_value=min_size, max_value=max_size))
    return _normalized(draw(st.lists(weights, min_size=n, max_size=n)))


@st.composite
def distribution_pairs(draw, min_size: int = 2, max_size: int = 8):
    """Two full-support distributions of the same size."""
    n = draw(st.integers(min_value=min_size, max_value=max_size))
    p = _normalized(draw(st.lists(weights, min_size=n, max_size=n)))
    q = _normalized(draw(st.lists(weights, min_size=n, max_size=n)))
    return p, q


@st.composite
def distributions_with_ratios(draw, min_size: int = 2, max_size: int = 8):
    """A distribution and a positive Q/V-style ratio vector of the same size."""
    n = draw(st.integers(min_value=min_size, max_value=max_size))
    p = _normalized(draw(st.lists(weights, min_size=n, max_size=n)))
    ratios = np.asarray(draw(st.lists(
        st.floats(min_value=0.05, max_value=5.0, allow_nan=False), min_size=n, max_size=n
    )))
    return p, ratios
