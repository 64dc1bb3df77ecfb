"""Finite point clouds with the Pompeiu-Hausdorff metric and their star-shaped segments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from geoporous import kernels
from geoporous import spaces as sp
from geoporous.errors import SegmentNotUnique, SpaceMismatch, StarViolation
from geoporous.regions import Region, _segments_inside

DEDUP_TOL = 1e-12


def _dedupe(space, M: np.ndarray) -> np.ndarray:
    keep = []
    for k in range(len(M)):
        if not keep or sp.pairwise(space, M[k:k + 1], M[keep]).min() > DEDUP_TOL:
            keep.append(k)
    return M[keep]


@dataclass(frozen=True, eq=False)
class HyperPoint:
    """A nonempty finite subset of C, stored without near-duplicates."""

    space: sp.SpaceDescriptor
    members: np.ndarray
    region: Region = None

    def __post_init__(self):
        M = sp.as_points(self.space, self.members)
        if not len(M):
            raise ValueError("a hyperspace point needs at least one member")
        M = _dedupe(self.space, M)
        if self.region is not None:
            if self.region.space != self.space:
                raise SpaceMismatch("members and region live in different spaces")
            if not np.all(self.region.contains(M)):
                raise StarViolation("a member lies outside the region")
        object.__setattr__(self, "members", M)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def diameter(self) -> float:
        return float(sp.pairwise(self.space, self.members).max())

    def to_json(self) -> dict:
        return {"space": self.space.to_json(), "members": self.members.tolist()}

    @classmethod
    def from_json(cls, obj: dict, region: Region = None) -> "HyperPoint":
        return cls(sp.SpaceDescriptor.from_json(obj["space"]), np.asarray(obj["members"], dtype=np.float64), region)


def singleton(space, c, region: Region = None) -> HyperPoint:
    return HyperPoint(space, sp.as_point(space, c)[None], region)


def hausdorff_distance(A: HyperPoint, B: HyperPoint) -> float:
    """max of the two directed sup-inf distances."""
    if A.space != B.space:
        raise SpaceMismatch("hyperspace points from different spaces")
    d = sp.pairwise(A.space, A.members, B.members)
    return max(kernels.directed_hausdorff(d), kernels.directed_hausdorff(np.ascontiguousarray(d.T)))


def set_convex_combination(A: HyperPoint, c, lam: float, grid: int = 64, check_region: bool = True) -> HyperPoint:
    """{(1 - lam) a (+) lam c : a in A}."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    space = A.space
    c = sp.as_point(space, c)
    if np.any(sp.pairwise(space, A.members, c[None])[:, 0] >= space.D - sp.STRUCT_TOL):
        raise SegmentNotUnique("a member is too far from the center for a unique segment")
    if check_region and A.region is not None:
        inside = _segments_inside(A.region, A.members, c[None], grid)
        if not np.all(inside):
            raise StarViolation("a segment toward the center leaves the region")
    if lam == 1.0:
        M = c[None]
    else:
        M = sp.interpolate(space, A.members, c[None], lam)
    return HyperPoint(space, M, A.region)


def minkowski_combination(A: HyperPoint, B: HyperPoint, lam: float) -> HyperPoint:
    """{(1 - lam) a + lam b : a in A, b in B}; linear spaces only."""
    if A.space != B.space:
        raise SpaceMismatch("hyperspace points from different spaces")
    if A.space.kind not in ("euclidean", "sup_norm"):
        raise SpaceMismatch("pairwise combination needs a linear space")
    M = ((1.0 - lam) * A.members[:, None, :] + lam * B.members[None, :, :]).reshape(-1, A.members.shape[1])
    return HyperPoint(A.space, M)


@dataclass(frozen=True, eq=False)
class HyperSegment:
    """lam -> (1 - lam) A (+) lam {c}."""

    A: HyperPoint
    c: np.ndarray

    def __call__(self, lam: float) -> HyperPoint:
        return set_convex_combination(self.A, self.c, lam, check_region=False)

    @property
    def length(self) -> float:
        return hausdorff_distance(self.A, singleton(self.A.space, self.c))


@dataclass(frozen=True)
class HyperReport:
    max_deviation: float
    pairs_checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def _tolerance(space) -> float:
    return sp.NUMERIC_TOL if space.curved else sp.METRIC_TOL


def verify_hypersegment_isometry(A: HyperPoint, c, lambda_grid=None) -> HyperReport:
    """max |h(seg(l), seg(m)) - |l - m| h(A, {c})| over the grid."""
    grid = np.linspace(0.0, 1.0, 33) if lambda_grid is None else np.asarray(lambda_grid, dtype=np.float64)
    seg = HyperSegment(A, sp.as_point(A.space, c))
    pts = [seg(float(l)) for l in grid]
    length = seg.length
    worst, count = 0.0, 0
    for i in range(len(grid)):
        for j in range(i, len(grid)):
            dev = abs(hausdorff_distance(pts[i], pts[j]) - abs(grid[i] - grid[j]) * length)
            worst = max(worst, dev)
            count += 1
    return HyperReport(worst, count, _tolerance(A.space))


def verify_hyperbolic_inequality_singleton(A: HyperPoint, B: HyperPoint, c=None, lambda_grid=None,
                                           E: HyperPoint = None) -> HyperReport:
    """Largest excess of h((1-l)A (+) l E, (1-l)B (+) l E) over (1-l) h(A, B).

    Supported cases: E = {c}, or A and B singletons with E arbitrary.
    """
    space = A.space
    if space.kind not in ("euclidean", "hyperbolic"):
        raise SpaceMismatch("the inequality needs a euclidean or hyperbolic base space")
    grid = np.linspace(0.0, 1.0, 33) if lambda_grid is None else np.asarray(lambda_grid, dtype=np.float64)
    hAB = hausdorff_distance(A, B)
    worst, count = 0.0, 0
    if E is None:
        c = sp.as_point(space, c)
        for l in grid:
            lhs = hausdorff_distance(set_convex_combination(A, c, float(l), check_region=False),
                                     set_convex_combination(B, c, float(l), check_region=False))
            worst = max(worst, lhs - (1.0 - l) * hAB)
            count += 1
    else:
        if len(A) != 1 or len(B) != 1:
            raise ValueError("a general E needs singleton A and B")
        for l in grid:
            # (1 - l){c1} (+) l E = {(1 - l) c1 (+) l e : e in E}
            left = HyperPoint(space, sp.interpolate(space, A.members, E.members, float(l)))
            right = HyperPoint(space, sp.interpolate(space, B.members, E.members, float(l)))
            worst = max(worst, hausdorff_distance(left, right) - (1.0 - l) * hAB)
            count += 1
    return HyperReport(max(worst, 0.0), count, sp.METRIC_TOL if space.kind == "euclidean" else sp.NUMERIC_TOL)


def star_of_hyperspace(C: Region, panel: int = 8, seed: int = 0) -> list:
    """Singletons over the star centers of C, each checked against random clouds."""
    if not len(C.star_centers):
        return []
    rng = np.random.default_rng(seed)
    out = []
    for c in C.star_centers:
        ok = True
        for _ in range(panel):
            k = int(rng.integers(1, min(6, len(C.samples)) + 1))
            pick = C.samples[rng.choice(len(C.samples), size=k, replace=False)]
            d = sp.pairwise(C.space, pick, c[None])[:, 0]
            pick = pick[d < C.space.D - sp.STRUCT_TOL]
            if len(pick):
                try:
                    set_convex_combination(HyperPoint(C.space, pick, C), c, 0.5)
                except StarViolation:
                    ok = False
                    break
        if ok:
            out.append(singleton(C.space, c, C))
    return out
