"""Geodesic model spaces and the comparison-geometry machinery built on them.

Points are plain float64 numpy arrays in the ambient chart of their space:

* ``euclidean(n)`` and ``sup_norm(n)``: coordinates in R^n, linear segments;
* ``sphere(kappa)``: vectors in R^3 of norm ``1/sqrt(kappa)``;
* ``hyperbolic(kappa)``: the upper sheet of the hyperboloid
  ``x0^2 + x1^2 - x2^2 = -1/(-kappa)`` in Minkowski 3-space (time coordinate last).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from geoporous.errors import (
    ChartViolation,
    DegenerateTriangle,
    NoDeltaFound,
    PerimeterTooLarge,
    SegmentNotUnique,
    SideInequalityViolated,
)

KINDS = ("euclidean", "sup_norm", "sphere", "hyperbolic")

STRUCT_TOL = 1e-12
METRIC_TOL = 1e-9
NUMERIC_TOL = 1e-6

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class SpaceDescriptor:
    kind: str
    dimension: int
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.kind == "sphere":
            if not self.kappa > 0:
                raise ValueError("sphere needs kappa > 0")
            if self.dimension != 2:
                raise ValueError("only the 2-sphere is supported")
        elif self.kind == "hyperbolic":
            if not self.kappa < 0:
                raise ValueError("hyperbolic plane needs kappa < 0")
            if self.dimension != 2:
                raise ValueError("only the hyperbolic plane is supported")
        elif self.kappa != 0:
            raise ValueError(f"{self.kind} space has kappa = 0")

    @property
    def curved(self) -> bool:
        return self.kind in ("sphere", "hyperbolic")

    @property
    def radius(self) -> float:
        """Curvature radius ``1/sqrt(|kappa|)``; infinite for flat kinds."""
        return 1.0 / math.sqrt(abs(self.kappa)) if self.curved else math.inf

    @property
    def D(self) -> float:
        """Uniqueness diameter D_X."""
        return math.pi * self.radius if self.kind == "sphere" else math.inf

    @property
    def ambient_dim(self) -> int:
        return self.dimension + 1 if self.curved else self.dimension

    @property
    def busemann(self) -> bool:
        """True when segments satisfy the hyperbolic (Busemann) inequality."""
        return self.kind != "sphere"

    def to_json(self) -> dict:
        return {"kind": self.kind, "dimension": int(self.dimension), "kappa": float(self.kappa)}

    @classmethod
    def from_json(cls, obj: dict) -> "SpaceDescriptor":
        try:
            return cls(str(obj["kind"]), int(obj["dimension"]), float(obj.get("kappa", 0.0)))
        except KeyError as exc:
            raise ValueError(f"space descriptor missing {exc}") from None


def euclidean(n: int = 2) -> SpaceDescriptor:
    return SpaceDescriptor("euclidean", n, 0.0)


def sup_norm(n: int = 2) -> SpaceDescriptor:
    return SpaceDescriptor("sup_norm", n, 0.0)


def sphere(kappa: float = 1.0) -> SpaceDescriptor:
    return SpaceDescriptor("sphere", 2, float(kappa))


def hyperbolic(kappa: float = -1.0) -> SpaceDescriptor:
    return SpaceDescriptor("hyperbolic", 2, float(kappa))


def model_space(kappa: float) -> SpaceDescriptor:
    """The model surface M_kappa."""
    if kappa > 0:
        return sphere(kappa)
    if kappa < 0:
        return hyperbolic(kappa)
    return euclidean(2)


# ---------------------------------------------------------------- charts


def _minkowski(x, y):
    return x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1] - x[..., 2] * y[..., 2]


def as_points(space: SpaceDescriptor, X, check: bool = True) -> np.ndarray:
    """Coerce ``X`` to an ``(n, ambient_dim)`` array, validating the chart."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[-1] != space.ambient_dim:
        raise ChartViolation(
            f"{space.kind} points need {space.ambient_dim} coordinates, got {X.shape[-1]}"
        )
    if check:
        check_chart(space, X)
    return X


def as_point(space: SpaceDescriptor, x, check: bool = True) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return as_points(space, x, check)[0]


def check_chart(space: SpaceDescriptor, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if not np.all(np.isfinite(X)):
        raise ChartViolation("non-finite coordinates")
    if space.kind == "sphere":
        R = space.radius
        err = np.abs(np.linalg.norm(X, axis=-1) - R)
        if np.any(err > STRUCT_TOL * max(1.0, R)):
            raise ChartViolation(f"point off the sphere of radius {R} (err {err.max():.3g})")
    elif space.kind == "hyperbolic":
        R2 = space.radius ** 2
        form = _minkowski(X, X)
        scale = np.maximum(R2, np.sum(X * X, axis=-1))
        if np.any(np.abs(form + R2) > 1e-10 * scale) or np.any(X[..., 2] <= 0):
            raise ChartViolation("point off the upper hyperboloid sheet")


def _reproject(space: SpaceDescriptor, X: np.ndarray) -> np.ndarray:
    if space.kind == "sphere":
        return X * (space.radius / np.linalg.norm(X, axis=-1, keepdims=True))
    if space.kind == "hyperbolic":
        form = -_minkowski(X, X)
        return X * (space.radius / np.sqrt(form))[..., None]
    return X


def origin(space: SpaceDescriptor) -> np.ndarray:
    """Canonical base point: the origin, or the pole/apex ``(0, 0, R)``."""
    x = np.zeros(space.ambient_dim)
    if space.curved:
        x[-1] = space.radius
    return x


def hyperboloid_lift(space: SpaceDescriptor, xy) -> np.ndarray:
    """Point of the hyperboloid with spatial coordinates ``xy``."""
    xy = np.asarray(xy, dtype=np.float64)
    t = np.sqrt(space.radius ** 2 + np.sum(xy * xy, axis=-1, keepdims=True))
    return np.concatenate([xy, t], axis=-1)


def sphere_point(space: SpaceDescriptor, polar: float, azimuth: float) -> np.ndarray:
    """Point at polar angle ``polar`` from the north pole, longitude ``azimuth``."""
    R = space.radius
    return R * np.array(
        [math.sin(polar) * math.cos(azimuth), math.sin(polar) * math.sin(azimuth), math.cos(polar)]
    )


# ---------------------------------------------------------------- distances


def pairwise(space: SpaceDescriptor, X, Y=None) -> np.ndarray:
    """Distance matrix ``D[i, j] = rho(X[i], Y[j])``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if space.kind == "euclidean":
        diff = X[:, None, :] - Y[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if space.kind == "sup_norm":
        return np.max(np.abs(X[:, None, :] - Y[None, :, :]), axis=-1)
    if space.kind == "sphere":
        cross = np.cross(X[:, None, :], Y[None, :, :])
        sin_part = np.linalg.norm(cross, axis=-1)
        cos_part = X @ Y.T
        return space.radius * np.arctan2(sin_part, cos_part)
    # hyperboloid: rho = 2R asinh(|x - y|_M / 2R), stable for small distances
    diff = X[:, None, :] - Y[None, :, :]
    q = np.maximum(_minkowski(diff, diff), 0.0)
    R = space.radius
    return 2.0 * R * np.arcsinh(np.sqrt(q) / (2.0 * R))


def paired_distances(space: SpaceDescriptor, X, Y) -> np.ndarray:
    """Row-wise distances ``rho(X[k], Y[k])``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if space.kind == "euclidean":
        return np.linalg.norm(X - Y, axis=-1)
    if space.kind == "sup_norm":
        return np.max(np.abs(X - Y), axis=-1)
    if space.kind == "sphere":
        sin_part = np.linalg.norm(np.cross(X, Y), axis=-1)
        cos_part = np.sum(X * Y, axis=-1)
        return space.radius * np.arctan2(sin_part, cos_part)
    diff = X - Y
    q = np.maximum(_minkowski(diff, diff), 0.0)
    R = space.radius
    return 2.0 * R * np.arcsinh(np.sqrt(q) / (2.0 * R))


def distance(space: SpaceDescriptor, x, y) -> float:
    """Geodesic distance between two points of ``space``."""
    x = as_point(space, x)
    y = as_point(space, y)
    return float(paired_distances(space, x, y)[0])


def diameter(space: SpaceDescriptor, X) -> float:
    X = np.atleast_2d(X)
    if len(X) < 2:
        return 0.0
    return float(pairwise(space, X).max())


# ---------------------------------------------------------------- segments


def interpolate(space: SpaceDescriptor, X, Y, T) -> np.ndarray:
    """Row-wise ``(1 - T[k]) X[k] (+) T[k] Y[k]`` along the unique segment.

    ``X``, ``Y`` are ``(k, d)`` (or broadcastable single points) and ``T`` is
    scalar or ``(k,)``. Raises :class:`SegmentNotUnique` when some pair is at
    distance ``>= D_X``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    T = np.asarray(T, dtype=np.float64).reshape(-1)
    k = max(len(X), len(Y), len(T))
    X = np.broadcast_to(X, (k, X.shape[1]))
    Y = np.broadcast_to(Y, (k, Y.shape[1]))
    T = np.broadcast_to(T, (k,))
    if space.kind in ("euclidean", "sup_norm"):
        out = (1.0 - T)[:, None] * X + T[:, None] * Y
    else:
        d = paired_distances(space, X, Y)
        if space.kind == "sphere" and np.any(d >= space.D - STRUCT_TOL):
            raise SegmentNotUnique("antipodal endpoints: the segment is not unique")
        theta = d / space.radius
        small = theta < 1e-8
        if space.kind == "sphere":
            s = np.where(small, 1.0, np.sin(theta))
            a = np.where(small, 1.0 - T, np.sin((1.0 - T) * theta) / s)
            b = np.where(small, T, np.sin(T * theta) / s)
        else:
            s = np.where(small, 1.0, np.sinh(theta))
            a = np.where(small, 1.0 - T, np.sinh((1.0 - T) * theta) / s)
            b = np.where(small, T, np.sinh(T * theta) / s)
        out = _reproject(space, a[:, None] * X + b[:, None] * Y)
    out = np.array(out)
    out[T == 0.0] = X[T == 0.0]
    out[T == 1.0] = Y[T == 1.0]
    return out


def geodesic_point(space: SpaceDescriptor, x, y, t: float) -> np.ndarray:
    """The point ``(1 - t) x (+) t y`` of the metric segment ``[x, y]``."""
    x = as_point(space, x)
    y = as_point(space, y)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 0.0:
        return x.copy()
    if t == 1.0:
        return y.copy()
    return interpolate(space, x, y, t)[0]


def geodesic_points(space: SpaceDescriptor, x, y, ts) -> np.ndarray:
    """``geodesic_point`` for every parameter in ``ts``; returns ``(len(ts), d)``."""
    x = as_point(space, x)
    y = as_point(space, y)
    return interpolate(space, x[None], y[None], np.asarray(ts, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Segment:
    """The metric segment ``[start, end]`` with its affine parametrisation."""

    space: SpaceDescriptor
    start: np.ndarray
    end: np.ndarray
    length: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "start", as_point(self.space, self.start))
        object.__setattr__(self, "end", as_point(self.space, self.end))
        length = float(paired_distances(self.space, self.start, self.end)[0])
        if length >= self.space.D - STRUCT_TOL:
            raise SegmentNotUnique("segment endpoints are at distance >= D_X")
        object.__setattr__(self, "length", length)

    def point(self, t: float) -> np.ndarray:
        return geodesic_point(self.space, self.start, self.end, t)

    def points(self, ts) -> np.ndarray:
        return geodesic_points(self.space, self.start, self.end, ts)

    def grid(self, n: int = 64) -> np.ndarray:
        return self.points(np.linspace(0.0, 1.0, n))

    def parameter_of(self, X, tol: float = METRIC_TOL):
        """Segment parameter of each point of ``X``, ``nan`` for points off it.

        Uses betweenness, ``rho(a, p) + rho(p, b) = rho(a, b)``, which identifies
        segment points in any uniquely geodesic chart.
        """
        X = np.atleast_2d(X)
        da = paired_distances(self.space, np.broadcast_to(self.start, X.shape), X)
        db = paired_distances(self.space, X, np.broadcast_to(self.end, X.shape))
        on = np.abs(da + db - self.length) <= tol
        if self.length == 0.0:
            return np.where(on, 0.0, np.nan)
        return np.where(on, np.clip(da / self.length, 0.0, 1.0), np.nan)


# ---------------------------------------------------------------- sampling


def tangent_basis(space: SpaceDescriptor, base) -> np.ndarray:
    """Orthonormal basis (rows) of the tangent plane at ``base``."""
    base = np.asarray(base, dtype=np.float64)
    if space.kind == "sphere":
        n = base / np.linalg.norm(base)
        helper = np.eye(3)[int(np.argmin(np.abs(n)))]
        e1 = helper - np.dot(helper, n) * n
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return np.stack([e1, e2])
    if space.kind == "hyperbolic":
        R2 = space.radius ** 2
        vecs = []
        for v in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
            v = v + (_minkowski(v, base) / R2) * base
            for e in vecs:
                v = v - _minkowski(v, e) * e
            vecs.append(v / math.sqrt(_minkowski(v, v)))
        return np.stack(vecs)
    return np.eye(space.ambient_dim)


def exp_map(space: SpaceDescriptor, base, V) -> np.ndarray:
    """Exponential map at ``base`` for ambient tangent vectors ``V`` (rows)."""
    base = np.asarray(base, dtype=np.float64)
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    if not space.curved:
        return base[None, :] + V
    R = space.radius
    if space.kind == "sphere":
        nv = np.linalg.norm(V, axis=-1)
        c, s = np.cos(nv / R), np.sin(nv / R)
    else:
        nv = np.sqrt(np.maximum(_minkowski(V, V), 0.0))
        c, s = np.cosh(nv / R), np.sinh(nv / R)
    safe = np.where(nv > 0, nv, 1.0)
    out = c[:, None] * base[None, :] + (R * s / safe)[:, None] * V
    return _reproject(space, out)


def ball_samples(space: SpaceDescriptor, center, radius: float, n: int, rng=None) -> np.ndarray:
    """``n`` deterministic points strictly inside ``B(center, radius)``.

    Two-dimensional kinds use a Fibonacci disc in the tangent plane (pushed
    through the exponential map); other kinds draw from ``rng``.
    """
    center = np.asarray(center, dtype=np.float64)
    r_eff = 0.999 * radius
    if space.dimension == 1:
        return center[None, :] + np.linspace(-r_eff, r_eff, n)[:, None]
    if space.dimension == 2 and space.kind != "sup_norm":
        k = np.arange(n)
        rad = r_eff * np.sqrt((k + 0.5) / n)
        ang = k * _GOLDEN_ANGLE
        basis = tangent_basis(space, center)
        V = rad[:, None] * (np.cos(ang)[:, None] * basis[0] + np.sin(ang)[:, None] * basis[1])
        return exp_map(space, center, V)
    rng = np.random.default_rng(0) if rng is None else rng
    if space.kind == "sup_norm":
        return center[None, :] + rng.uniform(-r_eff, r_eff, size=(n, space.dimension))
    g = rng.normal(size=(n, space.dimension))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = r_eff * rng.uniform(size=n) ** (1.0 / space.dimension)
    return center[None, :] + rad[:, None] * g


def random_points(space: SpaceDescriptor, n: int, rng, scale: float = 1.0) -> np.ndarray:
    """Random points: a box of half-width ``scale`` for flat kinds, uniform on
    the sphere, and a disc of radius ``scale`` around the apex of the hyperboloid."""
    if space.kind in ("euclidean", "sup_norm"):
        return rng.uniform(-scale, scale, size=(n, space.dimension))
    if space.kind == "sphere":
        g = rng.normal(size=(n, 3))
        return _reproject(space, g)
    ang = rng.uniform(0.0, 2.0 * math.pi, size=n)
    rad = scale * np.sqrt(rng.uniform(size=n))
    V = np.stack([rad * np.cos(ang), rad * np.sin(ang), np.zeros(n)], axis=1)
    return exp_map(space, origin(space), V)


# ---------------------------------------------------------------- trigonometry


def hav(x):
    """Haversine ``sin^2(x / 2)``."""
    return np.sin(np.asarray(x) / 2.0) ** 2


def spherical_angle(a: float, b: float, c: float, method: str = "haversine") -> float:
    """Angle opposite side ``c`` in a unit-sphere triangle with sides a, b, c.

    ``method="cosine"`` solves ``cos c = cos a cos b + sin a sin b cos C``;
    ``"haversine"`` solves ``hav c = hav(a - b) + sin a sin b hav C``, which
    stays accurate for thin triangles.
    """
    sa_sb = math.sin(a) * math.sin(b)
    if sa_sb < 1e-14:
        raise DegenerateTriangle("sin a * sin b vanishes; the angle is undefined")
    if method == "cosine":
        cos_c = (math.cos(c) - math.cos(a) * math.cos(b)) / sa_sb
        return math.acos(min(1.0, max(-1.0, cos_c)))
    if method == "haversine":
        h = (float(hav(c)) - float(hav(a - b))) / sa_sb
        return 2.0 * math.asin(math.sqrt(min(1.0, max(0.0, h))))
    raise ValueError(f"unknown method {method!r}")


def _hyperbolic_angle(a: float, b: float, c: float) -> float:
    # hyperbolic law of cosines in haversine form, unit curvature
    den = math.sinh(a) * math.sinh(b)
    if den < 1e-14:
        raise DegenerateTriangle("sinh a * sinh b vanishes; the angle is undefined")
    h = (math.sinh(c / 2.0) ** 2 - math.sinh((a - b) / 2.0) ** 2) / den
    return 2.0 * math.asin(math.sqrt(min(1.0, max(0.0, h))))


# ---------------------------------------------------------------- comparison triangles


@dataclass(frozen=True, eq=False)
class ComparisonTriangle:
    source_space: SpaceDescriptor
    model: SpaceDescriptor
    source_vertices: np.ndarray
    model_vertices: np.ndarray
    side_lengths: tuple  # (d12, d23, d31)

    def comparison_points(self, i: int, j: int, ts) -> np.ndarray:
        """Model points at parameters ``ts`` of the side from vertex i to j."""
        return geodesic_points(self.model, self.model_vertices[i], self.model_vertices[j], ts)


def _place_angle(model: SpaceDescriptor, d12: float, d13: float, d23: float) -> float:
    """Angle at the first vertex, with a limiting value for degenerate sides."""
    if model.kind == "euclidean":
        if d12 <= STRUCT_TOL or d13 <= STRUCT_TOL:
            return 0.0
        c = (d12 * d12 + d13 * d13 - d23 * d23) / (2.0 * d12 * d13)
        return math.acos(min(1.0, max(-1.0, c)))
    R = model.radius
    a, b, c = d12 / R, d13 / R, d23 / R
    try:
        if model.kind == "sphere":
            return spherical_angle(a, b, c)
        return _hyperbolic_angle(a, b, c)
    except DegenerateTriangle:
        return 0.0 if abs(c - abs(a - b)) <= abs(c - (a + b)) else math.pi


def _model_vertex(model: SpaceDescriptor, dist: float, angle: float) -> np.ndarray:
    if model.kind == "euclidean":
        return np.array([dist * math.cos(angle), dist * math.sin(angle)])
    R = model.radius
    u = dist / R
    if model.kind == "sphere":
        return R * np.array([math.sin(u) * math.cos(angle), math.sin(u) * math.sin(angle), math.cos(u)])
    return R * np.array([math.sinh(u) * math.cos(angle), math.sinh(u) * math.sin(angle), math.cosh(u)])


def build_comparison_triangle(space: SpaceDescriptor, x1, x2, x3, kappa: float) -> ComparisonTriangle:
    """Comparison triangle in M_kappa for the geodesic triangle x1 x2 x3.

    Placement: first vertex at the origin (or pole/apex), second on the
    positive first-axis geodesic, third in the half with nonnegative second
    coordinate.
    """
    V = as_points(space, np.stack([as_point(space, x1), as_point(space, x2), as_point(space, x3)]))
    D = pairwise(space, V)
    d12, d23, d13 = float(D[0, 1]), float(D[1, 2]), float(D[0, 2])
    for s, o1, o2 in ((d12, d23, d13), (d23, d12, d13), (d13, d12, d23)):
        if s > o1 + o2 + STRUCT_TOL:
            raise SideInequalityViolated("side lengths violate the triangle inequality")
    model = model_space(kappa)
    if kappa > 0 and d12 + d23 + d13 >= 2.0 * model.D:
        raise PerimeterTooLarge(f"perimeter {d12 + d23 + d13:.6g} >= 2 D_kappa = {2 * model.D:.6g}")
    angle = _place_angle(model, d12, d13, d23)
    M = np.stack([origin(model), _model_vertex(model, d12, 0.0), _model_vertex(model, d13, angle)])
    return ComparisonTriangle(space, model, V, M, (d12, d23, d13))


@dataclass(frozen=True)
class CatReport:
    max_violation: float
    pairs_checked: int
    kappa: float


def check_cat_inequality(space: SpaceDescriptor, triangle_vertices, kappa: float, sample_count: int = 16) -> CatReport:
    """Sampled CAT(kappa) test: ``max(rho_X(x, y) - d_kappa(x_bar, y_bar))``
    over comparison-point pairs on the three sides."""
    x1, x2, x3 = triangle_vertices
    tri = build_comparison_triangle(space, x1, x2, x3, kappa)
    ts = np.linspace(0.0, 1.0, sample_count)
    src, mod = [], []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        src.append(geodesic_points(space, tri.source_vertices[i], tri.source_vertices[j], ts))
        mod.append(tri.comparison_points(i, j, ts))
    P = np.concatenate(src)
    Q = np.concatenate(mod)
    gap = pairwise(space, P) - pairwise(tri.model, Q)
    return CatReport(float(gap.max()), int(gap.size), float(kappa))


def busemann_gap(space: SpaceDescriptor, x, y, z, w, t) -> np.ndarray:
    """``rho((1-t)x (+) t y, (1-t)w (+) t z) - (1-t) rho(x, w) - t rho(y, z)`` row-wise."""
    lhs = paired_distances(space, interpolate(space, x, y, t), interpolate(space, w, z, t))
    t = np.asarray(t, dtype=np.float64)
    return lhs - (1.0 - t) * paired_distances(space, x, w) - t * paired_distances(space, y, z)


# ---------------------------------------------------------------- temperate curvature


@dataclass(frozen=True, eq=False)
class DeltaEstimateReport:
    x: np.ndarray
    y: np.ndarray
    sigma: float
    delta: float
    samples_checked: int
    worst_ratio: float
    bound: float
    history: tuple = ()  # (delta, worst_ratio) per halving step


def _narrowing_ratio(space, y, Z, W, T, dzw):
    keep = dzw > STRUCT_TOL
    if not np.any(keep):
        return 1.0
    Z, W, T, dzw = Z[keep], W[keep], T[keep], dzw[keep]
    Zt = interpolate(space, Z, np.broadcast_to(y, Z.shape), T)
    Wt = interpolate(space, W, np.broadcast_to(y, W.shape), T)
    return float(np.max(paired_distances(space, Zt, Wt) / dzw))


def estimate_delta(
    space: SpaceDescriptor,
    x,
    y,
    sigma: float,
    *,
    seed: int = 0,
    grid: int = 32,
    t_grid: int = 16,
    n_random: int = 500,
    min_delta: float = 1e-12,
) -> DeltaEstimateReport:
    """Find delta with ``rho(z_t, w_t) <= (1 + sigma) rho(z, w)`` on samples.

    ``z_t = (1 - t) z (+) t y`` for z, w in ``B(x, delta)`` and ``t`` in
    ``[0, delta)``. Starts at ``min(1, D_X / 4)`` and halves until a
    ``grid x grid x t_grid`` lattice plus ``n_random`` random triples pass.
    When ``x == y`` on the sphere the stronger bound ``ratio <= 1`` is used.
    The result certifies the sampled inequality only.
    """
    x = as_point(space, x)
    y = as_point(space, y)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rho_xy = float(paired_distances(space, x, y)[0])
    if rho_xy >= space.D:
        raise SegmentNotUnique("rho(x, y) >= D_X")
    strong = space.kind == "sphere" and rho_xy == 0.0
    bound = 1.0 if strong else 1.0 + sigma
    rng = np.random.default_rng(seed)
    delta = min(1.0, space.D / 4.0)
    history = []
    while delta >= min_delta:
        pts = ball_samples(space, x, delta, grid, rng)
        ts = delta * np.arange(t_grid) / t_grid
        iz, iw, it = np.meshgrid(np.arange(grid), np.arange(grid), np.arange(t_grid), indexing="ij")
        iz, iw, it = iz.ravel(), iw.ravel(), it.ravel()
        Z, W, T = pts[iz], pts[iw], ts[it]
        rz = ball_samples(space, x, delta, n_random, rng) if space.dimension != 2 else None
        if rz is None:
            # random triples: fresh tangent directions and radii
            basis = tangent_basis(space, x)
            ang = rng.uniform(0, 2 * math.pi, size=(2, n_random))
            rad = 0.999 * delta * np.sqrt(rng.uniform(size=(2, n_random)))
            Vz = rad[0][:, None] * (np.cos(ang[0])[:, None] * basis[0] + np.sin(ang[0])[:, None] * basis[1])
            Vw = rad[1][:, None] * (np.cos(ang[1])[:, None] * basis[0] + np.sin(ang[1])[:, None] * basis[1])
            RZ, RW = exp_map(space, x, Vz), exp_map(space, x, Vw)
        else:
            RZ, RW = rz, ball_samples(space, x, delta, n_random, rng)
            if space.dimension == 1:
                RZ = x[None, :] + rng.uniform(-0.999 * delta, 0.999 * delta, size=(n_random, 1))
                RW = x[None, :] + rng.uniform(-0.999 * delta, 0.999 * delta, size=(n_random, 1))
        RT = rng.uniform(0.0, delta, size=n_random)
        Z = np.concatenate([Z, RZ])
        W = np.concatenate([W, RW])
        T = np.concatenate([T, RT])
        try:
            ratio = _narrowing_ratio(space, y, Z, W, T, paired_distances(space, Z, W))
        except SegmentNotUnique:
            ratio = math.inf
        history.append((delta, ratio))
        if ratio <= bound:
            return DeltaEstimateReport(x, y, sigma, delta, len(T), ratio, bound, tuple(history))
        delta /= 2.0
    raise NoDeltaFound(f"no delta >= {min_delta} passed the sampled narrowing test")
