from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoporous import extension as ex
from geoporous import formulas as fm
from geoporous import kernels
from geoporous import mappings as mp
from geoporous import regions as rg
from geoporous import spaces as sp
from geoporous.errors import EmptyLandmarks, HypothesisViolated, SourceNotNonexpansive

import oracles

E1 = sp.euclidean(1)


def mapping_on(points, values, range_region=None):
    C = rg.Region(E1, np.asarray(points, dtype=float)[:, None])
    R = range_region or rg.interval(-5, 5, 3)
    ctx = mp.MappingSpaceContext(C, R, C.samples[0])
    return mp.SampledMapping(ctx, np.asarray(values, dtype=float).reshape(len(C.samples), -1), check=False)


# ---------------------------------------------------------------- embeddings


def test_embed_base_landmark_is_zero():
    ctx = ex.EmbeddingContext(E1, np.array([[0.0], [10.0]]))
    assert np.array_equal(ex.embed(ctx, [0.0]), [0.0, 0.0])


def test_embed_arithmetic():
    ctx = ex.EmbeddingContext(E1, np.array([[0.0], [10.0]]))
    assert np.allclose(ex.embed(ctx, [3.0]), [3.0, -3.0])


def test_embed_needs_landmarks():
    with pytest.raises(EmptyLandmarks):
        ex.EmbeddingContext(E1, np.empty((0, 1)))


def test_coordinate_embedding_only_where_isometric():
    ex.EmbeddingContext(sp.sup_norm(3), coordinates=True)
    with pytest.raises(ValueError):
        ex.EmbeddingContext(sp.euclidean(2), coordinates=True)


@pytest.mark.parametrize("space", [sp.euclidean(2), sp.sphere(1.0), sp.hyperbolic(-1.0)], ids=lambda s: s.kind)
def test_kuratowski_isometric_on_landmarks(space):
    rng = np.random.default_rng(3)
    A = sp.random_points(space, 12, rng, 0.8)
    ctx = ex.EmbeddingContext(space, A)
    img = ctx.embed(A)
    sup = np.max(np.abs(img[:, None, :] - img[None, :, :]), axis=-1)
    assert np.max(np.abs(sup - sp.pairwise(space, A))) <= 1e-9
    # off the landmark set the image can only shrink distances
    X = sp.random_points(space, 20, rng, 0.8)
    IX = ctx.embed(X)
    supx = np.max(np.abs(IX[:, None, :] - IX[None, :, :]), axis=-1)
    assert np.all(supx <= sp.pairwise(space, X) + 1e-9)
    for i in range(len(A)):
        assert np.all(supx >= np.abs(sp.pairwise(space, X, A[i:i + 1]) - sp.pairwise(space, X, A[i:i + 1]).T) - 1e-9)


def test_embedding_json_roundtrip():
    ctx = ex.EmbeddingContext(sp.euclidean(2), np.array([[0.0, 0.0], [1.0, 2.0]]), 1)
    back = ex.EmbeddingContext.from_json(json.loads(json.dumps(ctx.to_json())))
    X = np.random.default_rng(0).normal(size=(5, 2))
    assert np.array_equal(back.embed(X), ctx.embed(X))


def test_disjoint_union_realises_glued_metric():
    X = sp.euclidean(2)
    A = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    B = np.array([[5.0], [6.5], [4.0]])
    U = ex.disjoint_union(ex.EmbeddingContext(X, A), ex.EmbeddingContext(E1, B), gap=0.7)
    IA, IB = U.embed_first(A), U.embed_second(B)
    sup = lambda P, Q: np.max(np.abs(P[:, None, :] - Q[None, :, :]), axis=-1)
    glued = (sp.pairwise(X, A, A[:1]) + 0.7 + sp.pairwise(E1, B[:1], B))
    assert np.allclose(sup(IA, IB), glued, atol=1e-9)
    assert np.allclose(sup(IA, IA), sp.pairwise(X, A), atol=1e-9)
    assert np.allclose(sup(IB, IB), sp.pairwise(E1, B), atol=1e-9)


# ---------------------------------------------------------------- McShane extension


def test_constant_source_extends_to_constant():
    f = mapping_on(np.linspace(0, 1, 6), np.full(6, 0.4))
    F = ex.mcshane_weighted_extend(f)
    assert np.all(F.lip_hat_weights == 0.0)
    assert np.allclose(F(np.linspace(-3, 3, 50)[:, None]), 0.4)


def test_two_point_linear_source():
    f = mapping_on([0.0, 1.0], [0.0, 0.5])
    Z = np.linspace(0, 2, 201)[:, None]
    F = ex.mcshane_weighted_extend(f, Z)
    assert np.allclose(F.Z_values[:, 0], 0.5 * Z[:, 0], atol=1e-9)
    # brute force: the same infimum over a refinement of E on which 0.5x is exact
    E = np.linspace(0, 1, 10_001)
    ref = np.min(0.5 * E[None, :] + 0.5 * np.abs(E[None, :] - Z), axis=1)
    assert np.allclose(F.Z_values[:, 0], ref, atol=1e-9)


def test_identity_source():
    pts = np.linspace(0, 1, 11)
    F = ex.mcshane_weighted_extend(mapping_on(pts, pts), np.linspace(-1, 2, 61)[:, None])
    assert F.agreement_error() <= 1e-12
    assert F.lipschitz_on(F.Z_samples) <= 1 + 1e-9


@given(st.integers(0, 10_000), st.integers(2, 9))
@settings(max_examples=60, deadline=None)
def test_scalar_extension_matches_oracle(seed, n):
    rng = np.random.default_rng(seed)
    E = np.sort(rng.uniform(0, 3, n))
    if np.min(np.diff(E)) < 1e-3:
        return
    slopes = rng.uniform(-1, 1, n - 1)
    vals = np.r_[0.0, np.cumsum(slopes * np.diff(E))]
    f = mapping_on(E, vals)
    Y = rng.uniform(-1, 4, 15)
    F = ex.mcshane_weighted_extend(f, Y[:, None])
    want = [oracles.mcshane_scalar(E.tolist(), vals.tolist(), y) for y in Y]
    assert np.allclose(F.Z_values[:, 0], want, atol=1e-12)
    assert F.agreement_error() <= 1e-9
    assert F.lipschitz_on(np.r_[E, Y][:, None]) <= 1 + 1e-9


def test_planar_source_uses_kuratowski_embedding():
    rng = np.random.default_rng(5)
    C = rg.Region(sp.euclidean(2), rng.uniform(-1, 1, size=(15, 2)))
    R = rg.Region(sp.euclidean(2), rng.uniform(-1, 1, size=(15, 2)))
    ctx = mp.MappingSpaceContext(C, R, np.zeros(2))
    f = mp.SampledMapping.from_formula(ctx, fm.scaled(0.6, 2), check=False)
    Z = rng.uniform(-1, 1, size=(40, 2))
    F = ex.mcshane_weighted_extend(f, Z)
    assert F.agreement_error() <= 1e-9
    assert F.lipschitz_on(np.r_[C.samples, Z]) <= 1 + 1e-9
    assert F.component_values.shape[1] == 15


def test_rejects_expansive_source():
    with pytest.raises(SourceNotNonexpansive):
        ex.mcshane_weighted_extend(mapping_on([0.0, 1.0], [0.0, 2.0]))


def test_enlarging_E_with_fixed_weights_never_increases_F():
    rng = np.random.default_rng(2)
    E = np.linspace(0, 1, 12)
    vals = np.cumsum(rng.uniform(-1, 1, 12)) / 12
    F = ex.mcshane_weighted_extend(mapping_on(E, vals))
    Y = rng.uniform(-1, 2, (30, 1))
    d = sp.pairwise(E1, F.source.domain_samples, Y)
    full = kernels.weighted_inf(F.component_values, F.lip_hat_weights, d)
    part = kernels.weighted_inf(F.component_values[::2], F.lip_hat_weights[::2], d[::2])
    assert np.all(full <= part + 1e-15)


def test_enlarging_E_can_raise_F_when_weights_are_recomputed():
    # a new steep sample raises the Lip-hat weight of its neighbours
    small = ex.mcshane_weighted_extend(mapping_on([0.0, 1.0], [0.0, 0.0]))
    large = ex.mcshane_weighted_extend(mapping_on([0.0, 1.0, 2.0], [0.0, 0.0, 1.0]))
    y = np.array([[-1.0]])
    assert small(y)[0, 0] == 0.0
    assert large(y)[0, 0] == pytest.approx(0.5)


# ---------------------------------------------------------------- locality


def scan_N(q, qp, limit=10**6):
    for N in range(2, limit + 1):
        if (N + 1) / (N - 1) <= qp / q:
            return N
    raise AssertionError("scan exhausted")


@pytest.mark.parametrize("q,qp", [(0.5, 0.75), (0.25, 0.75), (0.3, 0.4), (0.1, 0.95)])
def test_locality_N_matches_scan(q, qp):
    assert ex.locality_N(q, qp) == scan_N(q, qp)


def test_locality_examples():
    loc = ex.locality_radius(0.5, 0.75, r=1.0)
    assert loc.N == 5 and loc.s == pytest.approx(0.2)
    assert ex.locality_N(0.25, 0.75) == 2


def test_locality_blow_up():
    q = 0.5
    qp = q * (1 + 1e-6)
    N = ex.locality_N(q, qp)
    assert (N + 1) / (N - 1) <= qp / q < N / (N - 2)
    assert N >= (qp + q) / (qp - q) - 1
    assert N == pytest.approx(2e6, rel=1e-3)


@given(st.floats(0.01, 0.9), st.floats(1.01, 50.0))
@settings(max_examples=100, deadline=None)
def test_locality_minimal(q, ratio):
    qp = min(q * ratio, 0.999)
    if qp <= q:
        return
    N = ex.locality_N(q, qp)
    assert N > 1 and (N + 1) / (N - 1) <= qp / q
    assert N == 2 or N / (N - 2) > qp / q


def test_locality_rejects_bad_order():
    with pytest.raises(ValueError):
        ex.locality_radius(0.75, 0.5)


def test_local_contraction_constant():
    E = np.linspace(0, 1, 21)
    F = ex.mcshane_weighted_extend(mapping_on(E, np.zeros(21)), np.linspace(0, 1, 401)[:, None])
    rep = ex.certify_local_contraction(F, ex.locality_radius(0.5, 0.75, 0.4, [0.5]))
    assert rep.max_quotient == 0.0 and rep.passed


def test_local_contraction_half_slope():
    E = np.linspace(0, 1, 21)
    Z = np.linspace(0, 1, 2001)[:, None]
    F = ex.mcshane_weighted_extend(mapping_on(E, 0.5 * E), Z)
    rep = ex.certify_local_contraction(F, ex.locality_radius(0.5, 0.75, 0.4, [0.5]))
    assert rep.passed and rep.pairs > 0
    # dense scan inside B(0.5, 0.08)
    P = Z[np.abs(Z[:, 0] - 0.5) < 0.08]
    assert oracles.max_quotient(P.tolist()[::4], F(P[::4]).tolist()) <= 0.75 + 1e-9


def test_local_contraction_with_steep_far_piece():
    E = np.r_[np.linspace(0, 1, 21), np.linspace(2, 3, 21)]
    vals = np.where(E <= 1, 0.3 * E, 0.3 + (E - 2))
    Z = np.linspace(0, 3, 1201)[:, None]
    F = ex.mcshane_weighted_extend(mapping_on(E, vals), Z)
    loc = ex.locality_radius(0.5, 0.75, 0.4, [0.5])
    rep = ex.certify_local_contraction(F, loc)
    assert rep.passed and rep.max_quotient <= 0.75 + 1e-9
    assert F.lipschitz_on(Z) == pytest.approx(1.0, abs=1e-6)
    assert ex.dichotomy_violations(F, loc, Z) == 0


def test_local_contraction_hypothesis_check():
    E = np.linspace(0, 1, 21)
    F = ex.mcshane_weighted_extend(mapping_on(E, 0.9 * E))
    with pytest.raises(HypothesisViolated):
        ex.certify_local_contraction(F, ex.locality_radius(0.5, 0.75, 0.4, [0.5]))


def test_local_contraction_explicit_pairs():
    E = np.linspace(0, 1, 21)
    F = ex.mcshane_weighted_extend(mapping_on(E, 0.5 * E))
    A = np.array([[0.45], [0.5]])
    B = np.array([[0.55], [0.52]])
    rep = ex.certify_local_contraction(F, ex.locality_radius(0.5, 0.75, 0.4, [0.5]), sample_pairs=(A, B))
    assert rep.pairs == 2 and rep.max_quotient == pytest.approx(0.5, abs=1e-12)


def test_extended_mapping_json():
    F = ex.mcshane_weighted_extend(mapping_on([0.0, 1.0], [0.0, 0.5]), np.array([[0.5]]))
    obj = json.loads(json.dumps(F.to_json()))
    src = mp.SampledMapping.from_json(obj["source"])
    again = ex.mcshane_weighted_extend(src, np.asarray(obj["Z_samples"]),
                                       ex.EmbeddingContext.from_json(obj["embedding"]))
    assert np.array_equal(again.Z_values, F.Z_values)
