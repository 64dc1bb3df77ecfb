"""Sampled subsets of a geodesic space: the domain and range sets, open sets U
and the segment family used by the porosity witnesses."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from geoporous import spaces as sp
from geoporous.errors import EmptyFamily, EmptyRegion, NoWitness, SegmentNotUnique

SEGMENT_GRID = 64

# ---------------------------------------------------------------- membership predicates


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float
    open: bool = True

    def contains(self, space, X) -> np.ndarray:
        d = sp.pairwise(space, X, np.asarray(self.center)[None, :])[:, 0]
        if self.open:
            return d < self.radius
        return d <= self.radius + sp.STRUCT_TOL

    def to_json(self) -> dict:
        return {"type": "ball", "center": np.asarray(self.center).tolist(),
                "radius": float(self.radius), "open": bool(self.open)}


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, space, X) -> np.ndarray:
        X = np.atleast_2d(X)
        lo = np.asarray(self.lo) - sp.STRUCT_TOL
        hi = np.asarray(self.hi) + sp.STRUCT_TOL
        return np.all((X >= lo) & (X <= hi), axis=-1)

    def to_json(self) -> dict:
        return {"type": "box", "lo": np.asarray(self.lo).tolist(), "hi": np.asarray(self.hi).tolist()}


@dataclass(frozen=True, eq=False)
class SegmentSet:
    """Points of the metric segment [start, end], detected by betweenness."""

    start: np.ndarray
    end: np.ndarray

    def contains(self, space, X) -> np.ndarray:
        X = np.atleast_2d(X)
        a = np.asarray(self.start, dtype=np.float64)
        b = np.asarray(self.end, dtype=np.float64)
        da = sp.pairwise(space, X, a[None, :])[:, 0]
        db = sp.pairwise(space, X, b[None, :])[:, 0]
        return np.abs(da + db - sp.distance(space, a, b)) <= sp.METRIC_TOL

    def to_json(self) -> dict:
        return {"type": "segment", "start": np.asarray(self.start).tolist(),
                "end": np.asarray(self.end).tolist()}


@dataclass(frozen=True, eq=False)
class Union:
    parts: tuple

    def contains(self, space, X) -> np.ndarray:
        out = np.zeros(len(np.atleast_2d(X)), dtype=bool)
        for part in self.parts:
            out |= part.contains(space, X)
        return out

    def to_json(self) -> dict:
        return {"type": "union", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class Intersection:
    parts: tuple

    def contains(self, space, X) -> np.ndarray:
        out = np.ones(len(np.atleast_2d(X)), dtype=bool)
        for part in self.parts:
            out &= part.contains(space, X)
        return out

    def to_json(self) -> dict:
        return {"type": "intersection", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class Everything:
    def contains(self, space, X) -> np.ndarray:
        return np.ones(len(np.atleast_2d(X)), dtype=bool)

    def to_json(self) -> dict:
        return {"type": "everything"}


def predicate_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "ball":
        return Ball(np.asarray(obj["center"], dtype=np.float64), float(obj["radius"]), bool(obj.get("open", True)))
    if kind == "box":
        return Box(np.asarray(obj["lo"], dtype=np.float64), np.asarray(obj["hi"], dtype=np.float64))
    if kind == "segment":
        return SegmentSet(np.asarray(obj["start"], dtype=np.float64), np.asarray(obj["end"], dtype=np.float64))
    if kind == "union":
        return Union(tuple(predicate_from_json(p) for p in obj["parts"]))
    if kind == "intersection":
        return Intersection(tuple(predicate_from_json(p) for p in obj["parts"]))
    if kind == "everything":
        return Everything()
    raise ValueError(f"unknown predicate type {kind!r}")


# ---------------------------------------------------------------- regions


@dataclass(frozen=True, eq=False)
class Region:
    """Finite sample cloud plus an exact membership predicate."""

    space: sp.SpaceDescriptor
    samples: np.ndarray
    membership: object = field(default_factory=Everything)
    star_centers: np.ndarray = None
    convex: bool = False
    star_shaped: bool = False

    def __post_init__(self):
        S = np.asarray(self.samples, dtype=np.float64).reshape(-1, self.space.ambient_dim)
        object.__setattr__(self, "samples", sp.as_points(self.space, S) if len(S) else S)
        centers = self.star_centers
        if centers is None:
            centers = self.samples if self.convex else np.empty((0, self.space.ambient_dim))
        centers = np.asarray(centers, dtype=np.float64).reshape(-1, self.space.ambient_dim)
        object.__setattr__(self, "star_centers", centers)
        if self.convex or len(centers):
            object.__setattr__(self, "star_shaped", True)

    def __len__(self):
        return len(self.samples)

    def contains(self, X) -> np.ndarray:
        return self.membership.contains(self.space, np.atleast_2d(X))

    def contains_point(self, x) -> bool:
        return bool(self.contains(np.asarray(x)[None, :])[0])

    def with_samples(self, samples) -> "Region":
        return Region(self.space, samples, self.membership, self.star_centers, self.convex, self.star_shaped)

    def augmented(self, extra) -> "Region":
        """Same set with extra sample points appended (duplicates dropped)."""
        extra = np.atleast_2d(np.asarray(extra, dtype=np.float64))
        if len(self.samples):
            d = sp.pairwise(self.space, extra, self.samples).min(axis=1)
            extra = extra[d > sp.STRUCT_TOL]
        keep = []
        for i, x in enumerate(extra):
            if not keep or sp.pairwise(self.space, x[None], extra[keep]).min() > sp.STRUCT_TOL:
                keep.append(i)
        return self.with_samples(np.concatenate([self.samples, extra[keep]]))

    def check_invariants(self, grid: int = SEGMENT_GRID, max_pairs: int = 20000, seed: int = 0) -> None:
        """Raise ``AssertionError`` if the sampled region invariants fail."""
        if len(self.samples) and not np.all(self.contains(self.samples)):
            raise AssertionError("a sample fails membership")
        if self.star_shaped:
            for c in self.star_centers:
                if not star_check(self, c, self.samples, grid):
                    raise AssertionError("star-shaped invariant fails for a listed center")
        if self.convex and len(self.samples) > 1:
            rng = np.random.default_rng(seed)
            n = len(self.samples)
            m = min(max_pairs, n * n)
            i = rng.integers(0, n, size=m)
            j = rng.integers(0, n, size=m)
            if not _segments_inside(self, self.samples[i], self.samples[j], grid).all():
                raise AssertionError("convexity invariant fails")

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "samples": self.samples.tolist(),
            "membership": self.membership.to_json(),
            "star_centers": self.star_centers.tolist(),
            "flags": {"convex": bool(self.convex), "star_shaped": bool(self.star_shaped)},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Region":
        space = sp.SpaceDescriptor.from_json(obj["space"])
        flags = obj.get("flags", {})
        centers = obj.get("star_centers")
        return cls(
            space,
            np.asarray(obj["samples"], dtype=np.float64).reshape(-1, space.ambient_dim),
            predicate_from_json(obj.get("membership", {"type": "everything"})),
            None if centers is None else np.asarray(centers, dtype=np.float64).reshape(-1, space.ambient_dim),
            bool(flags.get("convex", False)),
            bool(flags.get("star_shaped", False)),
        )


def _segments_inside(region: Region, X, Y, grid: int = SEGMENT_GRID) -> np.ndarray:
    """Row-wise: does the ``grid``-point parametrisation of [X[k], Y[k]] lie in the region?"""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    k = max(len(X), len(Y))
    X = np.broadcast_to(X, (k, X.shape[1]))
    Y = np.broadcast_to(Y, (k, Y.shape[1]))
    ok = sp.paired_distances(region.space, X, Y) < region.space.D - sp.STRUCT_TOL
    ts = np.linspace(0.0, 1.0, grid)
    out = np.zeros(k, dtype=bool)
    idx = np.nonzero(ok)[0]
    if len(idx):
        P = sp.interpolate(
            region.space,
            np.repeat(X[idx], grid, axis=0),
            np.repeat(Y[idx], grid, axis=0),
            np.tile(ts, len(idx)),
        )
        out[idx] = region.contains(P).reshape(len(idx), grid).all(axis=1)
    return out


def segment_inside(region: Region, x, y, grid: int = SEGMENT_GRID) -> bool:
    """Grid check that the segment [x, y] lies in the region."""
    return bool(_segments_inside(region, np.asarray(x)[None], np.asarray(y)[None], grid)[0])


def star_check(region: Region, center, X=None, grid: int = SEGMENT_GRID) -> bool:
    """Grid check that every point of ``X`` sees ``center`` inside the region."""
    X = region.samples if X is None else np.atleast_2d(X)
    center = np.asarray(center, dtype=np.float64)
    d = sp.pairwise(region.space, X, center[None])[:, 0]
    X = X[d < region.space.D - sp.STRUCT_TOL]
    if not len(X):
        return True
    return bool(_segments_inside(region, X, center[None], grid).all())


# ---------------------------------------------------------------- constructors


def interval(lo: float, hi: float, n: int = 101, open: bool = False) -> Region:
    """[lo, hi] (or its interior) in euclidean(1), convex."""
    space = sp.euclidean(1)
    center, radius = (lo + hi) / 2.0, (hi - lo) / 2.0
    if open:
        pts = np.linspace(lo, hi, n + 2)[1:-1]
    else:
        pts = np.linspace(lo, hi, n)
    return Region(space, pts[:, None], Ball(np.array([center]), radius, open), convex=True)


def open_ball(space: sp.SpaceDescriptor, center, radius: float, n: int = 64) -> Region:
    """Open ball as a region (deterministic interior samples)."""
    center = np.asarray(center, dtype=np.float64)
    pts = sp.ball_samples(space, center, radius, n)
    return Region(space, pts, Ball(center, radius, True))


def box_region(lo, hi, n_per_axis: int = 11) -> Region:
    """Axis-aligned box in euclidean(len(lo)) with a lattice of samples, convex."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    axes = [np.linspace(a, b, n_per_axis) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    return Region(sp.euclidean(len(lo)), pts, Box(lo, hi), convex=True)


def arm_direction(chord: float = 1.0 / 3.0) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors e = (1, 0) and u with |e - u| = chord, u in the upper half."""
    cos_a = 1.0 - chord * chord / 2.0
    sin_a = math.sqrt(1.0 - cos_a * cos_a)
    return np.array([1.0, 0.0]), np.array([cos_a, sin_a])


def two_segment_star(n_per_arm: int = 100, chord: float = 1.0 / 3.0) -> Region:
    """X = [0, e] u [0, u] in the plane, star-shaped about the origin only.

    Arm [0, e] carries ``n_per_arm`` samples including both ends; arm (0, u]
    carries ``n_per_arm`` samples starting one spacing away from the origin.
    """
    e, u = arm_direction(chord)
    zero = np.zeros(2)
    arm_a = np.linspace(0.0, 1.0, n_per_arm)[:, None] * e
    arm_b = np.linspace(1.0 / n_per_arm, 1.0, n_per_arm)[:, None] * u
    membership = Union((SegmentSet(zero, e), SegmentSet(zero, u)))
    return Region(sp.euclidean(2), np.concatenate([arm_a, arm_b]), membership, star_centers=zero[None])


# ---------------------------------------------------------------- distance-to-set helpers


def dist_to_region(x, E: Region) -> float:
    """min over the samples of E of rho(x, sample)."""
    if not len(E.samples):
        raise EmptyRegion("region has no samples")
    x = sp.as_point(E.space, x)
    return float(sp.pairwise(E.space, x[None], E.samples).min())


def annulus_interior_witness(E: Region, r: float, x, eps: float) -> np.ndarray:
    """A point of the closed ball B(x, eps) at distance < r from E.

    ``x`` sits on the sphere of radius r about E; the witness is found on a
    segment from ``x`` toward a nearly closest sample.
    """
    if not 0.0 < eps < r:
        raise ValueError("need 0 < eps < r")
    x = sp.as_point(E.space, x)
    if abs(dist_to_region(x, E) - r) > sp.METRIC_TOL:
        raise ValueError("x is not at distance r from E")
    d = sp.pairwise(E.space, x[None], E.samples)[0]
    cand = np.nonzero((d >= r - sp.METRIC_TOL) & (d < r + eps / 2.0) & (d < E.space.D))[0]
    for k in cand[np.argsort(d[cand], kind="stable")]:
        w = sp.geodesic_point(E.space, x, E.samples[k], eps / d[k])
        if dist_to_region(w, E) < r and sp.distance(E.space, x, w) <= eps + sp.METRIC_TOL:
            return w
    raise NoWitness("no sample of E lies in the required annulus")


# ---------------------------------------------------------------- segment family


@dataclass(frozen=True, eq=False)
class FamilySegment:
    segment: sp.Segment
    center: np.ndarray
    center_index: int

    @property
    def w0(self) -> np.ndarray:
        return self.segment.start

    @property
    def w1(self) -> np.ndarray:
        return self.segment.end


@dataclass(frozen=True, eq=False)
class SegmentFamilyG:
    """Finite selection of subsegments [w0, w1] of [w0, x0] inside C_X and U."""

    space: sp.SpaceDescriptor
    members: tuple

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def check_invariants(self, C_X: Region, U: Region, grid: int = SEGMENT_GRID) -> None:
        both = Region(C_X.space, np.empty((0, C_X.space.ambient_dim)), Intersection((C_X.membership, U.membership)))
        for m in self.members:
            w0, w1, x0 = m.w0, m.w1, m.center
            if not segment_inside(both, w0, w1, grid):
                raise AssertionError("family segment leaves C_X n U")
            d0 = sp.distance(self.space, w0, x0)
            if not d0 < self.space.D:
                raise AssertionError("w0 not within D_X of its center")
            d01 = sp.distance(self.space, w0, w1)
            d1 = sp.distance(self.space, w1, x0)
            if not (d01 > 0 and d1 > 0 and abs(d01 + d1 - d0) <= sp.METRIC_TOL):
                raise AssertionError("w1 not strictly between w0 and x0")


def _inside_extent(both: Region, w0: np.ndarray, x0: np.ndarray, grid: int) -> float:
    """Largest t such that [w0, (1-t) w0 (+) t x0] stays inside (grid + bisection)."""
    ts = np.linspace(0.0, 1.0, grid + 1)
    inside = both.contains(sp.geodesic_points(both.space, w0, x0, ts))
    if not inside[0]:
        return 0.0
    if inside.all():
        return 1.0
    k = int(np.argmin(inside))  # first grid failure
    lo, hi = ts[k - 1], ts[k]
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if both.contains_point(sp.geodesic_point(both.space, w0, x0, mid)):
            lo = mid
        else:
            hi = mid
    return lo


def enumerate_family_G(C_X: Region, U: Region, fractions=(0.25, 0.5, 0.75), grid: int = SEGMENT_GRID) -> SegmentFamilyG:
    """Subsegments [w0, w1] of [w0, x0] with w0 a sample of C_X n U and x0 a star center."""
    space = C_X.space
    both_pred = Intersection((C_X.membership, U.membership))
    both = Region(space, np.empty((0, space.ambient_dim)), both_pred)
    W = C_X.samples[U.contains(C_X.samples)] if len(C_X.samples) else C_X.samples
    members = []
    for ci, x0 in enumerate(C_X.star_centers):
        for w0 in W:
            d = sp.distance(space, w0, x0)
            if d <= sp.STRUCT_TOL or d >= space.D:
                continue
            extent = _inside_extent(both, w0, x0, grid)
            if extent <= 0.0:
                continue
            for frac in fractions:
                t = frac * extent
                if not 0.0 < t < 1.0:
                    continue
                try:
                    seg = sp.Segment(space, w0, sp.geodesic_point(space, w0, x0, t))
                except SegmentNotUnique:
                    continue
                if seg.length <= sp.STRUCT_TOL or not segment_inside(both, seg.start, seg.end, grid):
                    continue
                members.append(FamilySegment(seg, np.asarray(x0).copy(), ci))
    if not members:
        raise EmptyFamily("no admissible segment in C_X n U")
    return SegmentFamilyG(space, tuple(members))
