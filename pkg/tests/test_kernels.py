from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoporous import kernels
from geoporous import spaces as sp

import oracles

BACKENDS = kernels.available_backends()


def random_matrices(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    V = rng.uniform(-1, 1, (n, 2))
    return sp.pairwise(sp.euclidean(2), X), sp.pairwise(sp.euclidean(2), V)


def test_numpy_backend_always_present():
    assert "numpy" in BACKENDS
    assert kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
@given(st.integers(0, 10_000), st.integers(1, 25))
@settings(max_examples=40, deadline=None)
def test_max_pair_quotient_matches_oracle(name, seed, n):
    dx, dy = random_matrices(seed, n)
    val, i, j = BACKENDS[name].max_pair_quotient(dx, dy, 0.0)
    want = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            want = max(want, dy[a, b] / dx[a, b])
    assert val == pytest.approx(want, abs=1e-14)
    if n > 1:
        assert i < j and dy[i, j] / dx[i, j] == val


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_tie_break_lowest_pair(name):
    dx = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)
    assert BACKENDS[name].max_pair_quotient(dx, dx.copy(), 0.0) == (1.0, 0, 1)
    assert BACKENDS[name].max_pair_quotient(np.zeros((1, 1)), np.zeros((1, 1)), 0.0) == (0.0, -1, -1)


@pytest.mark.parametrize("name", sorted(BACKENDS))
@given(st.integers(0, 10_000), st.integers(1, 20), st.floats(0.05, 3.0))
@settings(max_examples=40, deadline=None)
def test_row_max_matches_oracle(name, seed, n, radius):
    dx, dy = random_matrices(seed, n)
    got = BACKENDS[name].row_max_quotient(dx, dy, radius, 0.0)
    want = oracles.row_max(dx.tolist(), dy.tolist(), radius)
    assert np.allclose(got, want, atol=1e-14, equal_nan=True)


@pytest.mark.parametrize("name", sorted(BACKENDS))
@given(st.integers(0, 10_000), st.integers(1, 9), st.integers(1, 9))
@settings(max_examples=40, deadline=None)
def test_directed_hausdorff_matches_oracle(name, seed, n, m):
    rng = np.random.default_rng(seed)
    A, B = rng.uniform(-1, 1, (n, 2)), rng.uniform(-1, 1, (m, 2))
    d = sp.pairwise(sp.euclidean(2), A, B)
    want = max(min(oracles.euclid(a, b) for b in B) for a in A)
    assert BACKENDS[name].directed_hausdorff(d) == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("name", sorted(BACKENDS))
@given(st.integers(0, 10_000), st.integers(1, 8), st.integers(1, 3), st.integers(1, 8))
@settings(max_examples=40, deadline=None)
def test_weighted_inf_matches_oracle(name, seed, nz, m, ny):
    rng = np.random.default_rng(seed)
    vals, w, d = rng.normal(size=(nz, m)), rng.uniform(0, 1, (nz, m)), rng.uniform(0, 2, (nz, ny))
    got = BACKENDS[name].weighted_inf(vals, w, d)
    assert np.allclose(got, oracles.weighted_inf(vals.tolist(), w.tolist(), d.tolist()), atol=1e-14)


def test_backends_agree_exactly():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    py, cy = BACKENDS["numpy"], BACKENDS["cython"]
    dx, dy = random_matrices(11, 60)
    assert py.max_pair_quotient(dx, dy, 0.0) == cy.max_pair_quotient(dx, dy, 0.0)
    assert np.array_equal(py.row_max_quotient(dx, dy, 0.7, 0.0), cy.row_max_quotient(dx, dy, 0.7, 0.0),
                          equal_nan=True)
    assert py.directed_hausdorff(dx) == cy.directed_hausdorff(dx)
    rng = np.random.default_rng(0)
    v, w = rng.normal(size=(60, 4)), rng.uniform(0, 1, (60, 4))
    assert np.array_equal(py.weighted_inf(v, w, dx), cy.weighted_inf(v, w, dx))
