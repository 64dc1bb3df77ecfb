"""Finite sup-norm embeddings and the Lip-hat weighted McShane extension."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from geoporous import kernels
from geoporous import spaces as sp
from geoporous.errors import EmptyLandmarks, HypothesisViolated, SourceNotNonexpansive
from geoporous.mappings import NONEXPANSIVE_TOL, SampledMapping


# ---------------------------------------------------------------- embeddings


@dataclass(frozen=True, eq=False)
class EmbeddingContext:
    """Kuratowski coordinates x -> (rho(x, a_i) - rho(a_0, a_i))_i.

    With ``coordinates=True`` the chart coordinates are used directly, which
    is an isometry for sup-norm spaces and the real line.
    """

    space: sp.SpaceDescriptor
    landmarks: np.ndarray = None
    base_landmark: int = 0
    coordinates: bool = False

    def __post_init__(self):
        if self.coordinates:
            if not (self.space.kind == "sup_norm" or (self.space.kind == "euclidean" and self.space.dimension == 1)):
                raise ValueError("coordinate embedding is isometric only for sup-norm spaces and the line")
            return
        if self.landmarks is None or len(np.atleast_2d(self.landmarks)) == 0:
            raise EmptyLandmarks("embedding needs at least one landmark")
        object.__setattr__(self, "landmarks", sp.as_points(self.space, self.landmarks))
        if not 0 <= self.base_landmark < len(self.landmarks):
            raise ValueError("base landmark index out of range")

    @property
    def dimension(self) -> int:
        return self.space.ambient_dim if self.coordinates else len(self.landmarks)

    def embed(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.coordinates:
            return X.copy()
        A = self.landmarks
        offset = sp.pairwise(self.space, A[self.base_landmark][None], A)[0]
        return sp.pairwise(self.space, X, A) - offset[None, :]

    def to_json(self) -> dict:
        obj = {"space": self.space.to_json(), "coordinates": bool(self.coordinates)}
        if not self.coordinates:
            obj["landmarks"] = self.landmarks.tolist()
            obj["base_landmark"] = int(self.base_landmark)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "EmbeddingContext":
        space = sp.SpaceDescriptor.from_json(obj["space"])
        if obj.get("coordinates"):
            return cls(space, coordinates=True)
        return cls(space, np.asarray(obj["landmarks"], dtype=np.float64), int(obj.get("base_landmark", 0)))


def embed(context: EmbeddingContext, x) -> np.ndarray:
    """Embedded coordinates of a single point (or rows of points)."""
    x = np.asarray(x, dtype=np.float64)
    out = context.embed(x)
    return out[0] if x.ndim == 1 else out


def default_embedding(space: sp.SpaceDescriptor, values) -> EmbeddingContext:
    """Coordinates when they are already isometric, else Kuratowski on ``values``."""
    if space.kind == "sup_norm" or (space.kind == "euclidean" and space.dimension == 1):
        return EmbeddingContext(space, coordinates=True)
    V = np.atleast_2d(values)
    keep = [0]
    for i in range(1, len(V)):
        if sp.pairwise(space, V[i][None], V[keep]).min() > sp.STRUCT_TOL:
            keep.append(i)
    return EmbeddingContext(space, V[keep], 0)


@dataclass(frozen=True, eq=False)
class DisjointUnionEmbedding:
    """Joint embedding of two spaces glued at their base landmarks.

    The glued metric is rho(x, y) = rho_X(x, a_0) + gap + rho_Y(b_0, y) across
    the parts; coordinates are the Kuratowski ones for the concatenated
    landmark list, with base landmark a_0.
    """

    first: EmbeddingContext
    second: EmbeddingContext
    gap: float = 1.0

    def _anchor(self, ctx):
        return ctx.landmarks[ctx.base_landmark]

    def embed_first(self, X) -> np.ndarray:
        ctx, oth = self.first, self.second
        X = np.atleast_2d(X)
        own = ctx.embed(X)
        to_base = sp.pairwise(ctx.space, X, self._anchor(ctx)[None])
        return np.concatenate([own, np.repeat(to_base, len(oth.landmarks), axis=1)], axis=1)

    def embed_second(self, Y) -> np.ndarray:
        ctx, oth = self.second, self.first
        Y = np.atleast_2d(Y)
        b0 = self._anchor(ctx)
        to_base = sp.pairwise(ctx.space, Y, b0[None])
        first_part = np.repeat(to_base + self.gap, len(oth.landmarks), axis=1)
        d_b = sp.pairwise(ctx.space, b0[None], ctx.landmarks)[0]
        second_part = sp.pairwise(ctx.space, Y, ctx.landmarks) - self.gap - d_b[None, :]
        return np.concatenate([first_part, second_part], axis=1)


def disjoint_union(first: EmbeddingContext, second: EmbeddingContext, gap: float = 1.0) -> DisjointUnionEmbedding:
    return DisjointUnionEmbedding(first, second, float(gap))


# ---------------------------------------------------------------- weighted McShane


def component_lip_hat(dx: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Per-sample, per-component Lip-hat; isolated rows get weight 0."""
    n, m = values.shape
    out = np.zeros((n, m))
    for k in range(m):
        col = values[:, k]
        w = kernels.row_max_quotient(dx, np.abs(col[:, None] - col[None, :]))
        out[:, k] = np.nan_to_num(w, nan=0.0)
    return out


@dataclass(frozen=True, eq=False)
class ExtendedMapping:
    """F_w(y) = min_z f_w(z) + LipHat(f_w, z) d(z, y), componentwise."""

    source: SampledMapping
    embedding: EmbeddingContext
    component_values: np.ndarray  # (n_E, m)
    lip_hat_weights: np.ndarray  # (n_E, m)
    Z_samples: np.ndarray
    Z_values: np.ndarray

    @property
    def space(self) -> sp.SpaceDescriptor:
        return self.source.context.domain.space

    def evaluate(self, Y) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        d = sp.pairwise(self.space, self.source.domain_samples, Y)
        return kernels.weighted_inf(self.component_values, self.lip_hat_weights, d)

    def __call__(self, Y) -> np.ndarray:
        return self.evaluate(Y)

    def agreement_error(self) -> float:
        """max over E of |F - embedded f| in the sup norm."""
        F = self.evaluate(self.source.domain_samples)
        return float(np.max(np.abs(F - self.component_values)))

    def lipschitz_on(self, P, values=None) -> float:
        """Largest sup-norm quotient of F over the rows of ``P``."""
        P = np.atleast_2d(P)
        V = self.evaluate(P) if values is None else values
        dx = sp.pairwise(self.space, P)
        dy = sp.pairwise(sp.sup_norm(V.shape[1]), V)
        return float(kernels.max_pair_quotient(dx, dy)[0])

    def to_json(self) -> dict:
        return {"source": self.source.to_json(), "embedding": self.embedding.to_json(),
                "Z_samples": self.Z_samples.tolist()}


def _sup_dist(A, B) -> np.ndarray:
    return np.max(np.abs(np.atleast_2d(A) - np.atleast_2d(B)), axis=-1)


def mcshane_weighted_extend(f: SampledMapping, Z_samples=None, embedding: EmbeddingContext = None) -> ExtendedMapping:
    """Extend f from its domain samples E to the whole domain space."""
    space_x = f.context.domain.space
    embedding = default_embedding(f.context.range.space, f.values) if embedding is None else embedding
    values = embedding.embed(f.values)
    dx = f.domain_distances()
    if len(values) > 1:
        dy = sp.pairwise(sp.sup_norm(values.shape[1]), values)
        gap = dy - dx
        np.fill_diagonal(gap, -np.inf)
        if gap.max() > NONEXPANSIVE_TOL:
            raise SourceNotNonexpansive(f"source is not 1-Lipschitz on E (excess {gap.max():.3g})")
    weights = component_lip_hat(dx, values)
    Z = f.domain_samples if Z_samples is None else sp.as_points(space_x, Z_samples)
    d = sp.pairwise(space_x, f.domain_samples, Z)
    ZV = kernels.weighted_inf(values, weights, d)
    return ExtendedMapping(f, embedding, values, weights, Z, ZV)


# ---------------------------------------------------------------- locality


@dataclass(frozen=True)
class ExtensionLocality:
    q: float
    q_prime: float
    N: int
    r: float = None
    s: float = None
    u0: tuple = None


def locality_N(q: float, q_prime: float) -> int:
    """Smallest integer N > 1 with (N + 1) / (N - 1) <= q' / q."""
    if not 0.0 < q < q_prime:
        raise ValueError("need 0 < q < q'")
    ratio = q_prime / q
    N = max(2, math.ceil((q_prime + q) / (q_prime - q)))
    while (N + 1) / (N - 1) > ratio:
        N += 1
    while N > 2 and N / (N - 2) <= ratio:
        N -= 1
    return N


def locality_radius(q: float, q_prime: float, r: float = None, u0=None) -> ExtensionLocality:
    if not 0.0 < q < q_prime < 1.0:
        raise ValueError("need 0 < q < q' < 1")
    N = locality_N(q, q_prime)
    s = None if r is None else r / N
    point = None if u0 is None else tuple(np.asarray(u0, dtype=np.float64).reshape(-1).tolist())
    return ExtensionLocality(float(q), float(q_prime), N, r, s, point)


@dataclass(frozen=True)
class LocalContractionReport:
    max_quotient: float
    pairs: int
    max_source_lip_hat: float
    bound: float
    passed: bool


def _source_lip_hat(F: ExtendedMapping) -> np.ndarray:
    dy = sp.pairwise(sp.sup_norm(F.component_values.shape[1]), F.component_values)
    return np.nan_to_num(kernels.row_max_quotient(F.source.domain_distances(), dy), nan=0.0)


def certify_local_contraction(F: ExtendedMapping, locality: ExtensionLocality, sample_pairs=None,
                              n_pairs: int = 10_000, seed: int = 0) -> LocalContractionReport:
    """Largest quotient of F over sampled pairs inside B(u0, s).

    ``sample_pairs`` is an optional pair of equal-length point arrays; by
    default pairs are drawn from F's Z samples in the ball.
    """
    if locality.u0 is None or locality.r is None:
        raise ValueError("locality needs u0 and r")
    space = F.space
    u0 = np.asarray(locality.u0, dtype=np.float64)
    E = F.source.domain_samples
    in_r = sp.pairwise(space, E, u0[None])[:, 0] < locality.r
    hat = _source_lip_hat(F)
    worst_hat = float(hat[in_r].max()) if in_r.any() else 0.0
    if worst_hat > locality.q + NONEXPANSIVE_TOL:
        raise HypothesisViolated(f"Lip-hat reaches {worst_hat:.6g} > q = {locality.q} near u0")
    if sample_pairs is None:
        Z = F.Z_samples
        inside = sp.pairwise(space, Z, u0[None])[:, 0] < locality.s
        P = Z[inside]
        m = len(P)
        if m < 2:
            return LocalContractionReport(0.0, 0, worst_hat, locality.q_prime, True)
        iu, ju = np.triu_indices(m, k=1)
        if len(iu) > n_pairs:
            pick = np.random.default_rng(seed).choice(len(iu), size=n_pairs, replace=False)
            iu, ju = iu[pick], ju[pick]
        A, B = P[iu], P[ju]
    else:
        A, B = (np.atleast_2d(x) for x in sample_pairs)
    d = sp.paired_distances(space, A, B)
    ok = d > 0
    q = _sup_dist(F.evaluate(A[ok]), F.evaluate(B[ok])) / d[ok] if ok.any() else np.zeros(1)
    worst = float(q.max()) if len(q) else 0.0
    return LocalContractionReport(worst, int(ok.sum()), worst_hat, locality.q_prime,
                                  worst <= locality.q_prime + NONEXPANSIVE_TOL)


def dichotomy_violations(F: ExtendedMapping, locality: ExtensionLocality, Y) -> int:
    """Count (y, z, w) triples where neither alternative of the locality
    dichotomy holds, for y in ``Y`` inside B(u0, r / N)."""
    space = F.space
    u0 = np.asarray(locality.u0, dtype=np.float64)
    Y = np.atleast_2d(Y)
    Y = Y[sp.pairwise(space, Y, u0[None])[:, 0] < locality.r / locality.N]
    if not len(Y):
        return 0
    E = F.source.domain_samples
    k0 = int(np.argmin(sp.pairwise(space, E, u0[None])[:, 0]))
    fv, w = F.component_values, F.lip_hat_weights
    dzy = sp.pairwise(space, E, Y)  # (n_E, n_Y)
    du0y = sp.pairwise(space, u0[None], Y)[0]  # (n_Y,)
    lhs = fv[:, None, :] + w[:, None, :] * dzy[:, :, None]
    rhs = fv[k0][None, None, :] + w[k0][None, None, :] * du0y[None, :, None]
    first = lhs > rhs
    second = (w <= locality.q_prime + NONEXPANSIVE_TOL)[:, None, :]
    return int(np.sum(~(first | second)))
