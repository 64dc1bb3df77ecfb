"""The mapping space of nonexpansive maps between sampled regions: the
weighted sup metrics and the Lipschitz functionals on sampled mappings."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from geoporous import kernels
from geoporous import spaces as sp
from geoporous.errors import (
    ContextMismatch,
    NoConvergence,
    NoSteepPoint,
    SegmentOutsideDomain,
    TooFewSamples,
)
from geoporous.formulas import Formula
from geoporous.regions import Region, segment_inside

NONEXPANSIVE_TOL = 1e-9
MEMBER_THRESHOLD = 1.0 - 1e-3
RADII_LEVELS = 11  # diam * 2^-k for k = 0..10


@dataclass(frozen=True, eq=False)
class MappingSpaceContext:
    domain: Region
    range: Region
    theta: np.ndarray
    metric_kind: str = "d_theta"

    def __post_init__(self):
        if self.metric_kind not in ("d_theta", "d_infinity"):
            raise ValueError("metric_kind must be 'd_theta' or 'd_infinity'")
        object.__setattr__(self, "theta", sp.as_point(self.domain.space, self.theta))

    @property
    def weights(self) -> np.ndarray:
        """``1 + rho_X(x, theta)`` at each domain sample."""
        return 1.0 + sp.pairwise(self.domain.space, self.domain.samples, self.theta[None])[:, 0]

    def compatible(self, other: "MappingSpaceContext") -> bool:
        if self is other:
            return True
        return (
            self.domain.space == other.domain.space
            and self.range.space == other.range.space
            and self.domain.samples.shape == other.domain.samples.shape
            and np.array_equal(self.domain.samples, other.domain.samples)
            and np.array_equal(self.theta, other.theta)
        )

    def with_domain(self, domain: Region) -> "MappingSpaceContext":
        return MappingSpaceContext(domain, self.range, self.theta, self.metric_kind)

    def to_json(self) -> dict:
        return {"domain": self.domain.to_json(), "range": self.range.to_json(),
                "theta": self.theta.tolist(), "metric_kind": self.metric_kind}

    @classmethod
    def from_json(cls, obj: dict) -> "MappingSpaceContext":
        return cls(Region.from_json(obj["domain"]), Region.from_json(obj["range"]),
                   np.asarray(obj["theta"], dtype=np.float64), obj.get("metric_kind", "d_theta"))


def nonexpansive_violation(space_x, space_y, X, V) -> float:
    """max over sample pairs of ``rho_Y(V_i, V_j) - rho_X(X_i, X_j)``."""
    if len(X) < 2:
        return 0.0
    gap = sp.pairwise(space_y, V) - sp.pairwise(space_x, X)
    np.fill_diagonal(gap, -np.inf)
    return float(gap.max())


@dataclass(frozen=True, eq=False)
class SampledMapping:
    """Value table on the domain samples, optionally backed by a formula."""

    context: MappingSpaceContext
    values: np.ndarray
    formula: Formula = None
    check: bool = True
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        V = np.asarray(self.values, dtype=np.float64).reshape(len(self.context.domain.samples), -1)
        object.__setattr__(self, "values", sp.as_points(self.context.range.space, V, check=self.check))
        if self.check:
            self.validate()

    @classmethod
    def from_formula(cls, context: MappingSpaceContext, formula: Formula, check: bool = True) -> "SampledMapping":
        return cls(context, formula.evaluate(context.domain.samples), formula, check)

    @property
    def domain_samples(self) -> np.ndarray:
        return self.context.domain.samples

    @property
    def has_formula(self) -> bool:
        return self.formula is not None

    def validate(self) -> None:
        if not np.all(self.context.range.contains(self.values)):
            raise ValueError("a mapping value leaves the range region")
        gap = nonexpansive_violation(self.context.domain.space, self.context.range.space,
                                     self.domain_samples, self.values)
        if gap > NONEXPANSIVE_TOL:
            raise ValueError(f"mapping is not nonexpansive on samples (excess {gap:.3g})")

    def evaluate(self, X) -> np.ndarray:
        """Formula values at arbitrary points of the domain space."""
        if self.formula is None:
            raise TypeError("table-backed mapping cannot be evaluated off its samples")
        return self.formula.evaluate(np.atleast_2d(X))

    def domain_distances(self) -> np.ndarray:
        if "dx" not in self._cache:
            self._cache["dx"] = sp.pairwise(self.context.domain.space, self.domain_samples)
        return self._cache["dx"]

    def range_distances(self) -> np.ndarray:
        if "dy" not in self._cache:
            self._cache["dy"] = sp.pairwise(self.context.range.space, self.values)
        return self._cache["dy"]

    def with_values(self, values, check: bool = True) -> "SampledMapping":
        return SampledMapping(self.context, values, None, check)

    def to_json(self) -> dict:
        obj = {"context": self.context.to_json(),
               "entries": [[i, v.tolist()] for i, v in enumerate(self.values)]}
        if self.formula is not None:
            try:
                obj["formula"] = self.formula.to_json()
            except TypeError:
                pass
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "SampledMapping":
        from geoporous.formulas import from_json as formula_from_json

        ctx = MappingSpaceContext.from_json(obj["context"])
        V = np.empty((len(ctx.domain.samples), ctx.range.space.ambient_dim))
        seen = np.zeros(len(V), dtype=bool)
        for i, v in obj["entries"]:
            V[int(i)] = v
            seen[int(i)] = True
        if not seen.all():
            raise ValueError("mapping entries do not cover every domain sample")
        formula = formula_from_json(obj["formula"]) if "formula" in obj else None
        return cls(ctx, V, formula)


# ---------------------------------------------------------------- metrics


def _check_pair(f: SampledMapping, g: SampledMapping) -> None:
    if not f.context.compatible(g.context):
        raise ContextMismatch("mappings live on different domains, ranges or base points")


def metric_d_theta(f: SampledMapping, g: SampledMapping) -> float:
    """max over samples of rho_Y(f(x), g(x)) / (1 + rho_X(x, theta))."""
    _check_pair(f, g)
    d = sp.paired_distances(f.context.range.space, f.values, g.values)
    return float(np.max(d / f.context.weights))


def metric_d_infinity(f: SampledMapping, g: SampledMapping) -> float:
    """Uniform distance max over samples of rho_Y(f(x), g(x))."""
    _check_pair(f, g)
    return float(np.max(sp.paired_distances(f.context.range.space, f.values, g.values)))


def metric(f: SampledMapping, g: SampledMapping) -> float:
    """The metric named by the shared context."""
    if f.context.metric_kind == "d_infinity":
        return metric_d_infinity(f, g)
    return metric_d_theta(f, g)


# ---------------------------------------------------------------- Lipschitz functionals


@dataclass(frozen=True, eq=False)
class LipschitzReport:
    global_lip: float
    global_pair: tuple
    radii: np.ndarray
    local_table: np.ndarray  # (len(radii), n): lip(f, x, r), nan without partners
    r_min: np.ndarray  # per sample: smallest radius with a partner inside B(x, r)
    pointwise: np.ndarray  # lip(f, x, r_min)
    lip_hat: np.ndarray
    R_members: np.ndarray
    R_hat_members: np.ndarray


def default_radii(diam: float, levels: int = RADII_LEVELS) -> np.ndarray:
    return diam * 0.5 ** np.arange(levels)


def lipschitz_constants(f: SampledMapping, radii=None) -> LipschitzReport:
    """Global constant, Lip-hat and the local constants lip(f, x, r).

    ``lip(f, x, r)`` is the largest quotient from x to samples in the open
    ball B(x, r); the pointwise estimate uses, per sample, the smallest radius
    whose ball holds another sample.
    """
    n = len(f.domain_samples)
    if n < 2:
        raise TooFewSamples("need at least two domain samples")
    dx, dy = f.domain_distances(), f.range_distances()
    g_val, gi, gj = kernels.max_pair_quotient(dx, dy, 0.0)
    if radii is None:
        radii = default_radii(float(dx.max()))
    radii = np.asarray(radii, dtype=np.float64)
    if np.any(radii <= 0) or np.any(np.diff(radii) > 0):
        raise ValueError("radii must be positive and decreasing")
    table = np.stack([kernels.row_max_quotient(dx, dy, float(r), 0.0) for r in radii])
    has = ~np.isnan(table)
    last = np.where(has.any(axis=0), has.shape[0] - 1 - np.argmax(has[::-1], axis=0), -1)
    r_min = np.where(last >= 0, radii[np.maximum(last, 0)], np.inf)
    pointwise = np.where(last >= 0, table[np.maximum(last, 0), np.arange(n)], np.nan)
    lip_hat = kernels.row_max_quotient(dx, dy, np.inf, 0.0)
    return LipschitzReport(
        global_lip=float(g_val),
        global_pair=(int(gi), int(gj)),
        radii=radii,
        local_table=table,
        r_min=r_min,
        pointwise=pointwise,
        lip_hat=lip_hat,
        R_members=np.nonzero(pointwise >= MEMBER_THRESHOLD)[0],
        R_hat_members=np.nonzero(lip_hat >= MEMBER_THRESHOLD)[0],
    )


def quotient_on_points(space_x, space_y, X, V) -> tuple[float, int, int]:
    """Largest difference quotient among the rows of X with values V."""
    return kernels.max_pair_quotient(sp.pairwise(space_x, X), sp.pairwise(space_y, V), 0.0)


def restricted_lip(f: SampledMapping, segment: sp.Segment, grid_n: int = 1024) -> float:
    """Sampled Lipschitz constant of f restricted to a segment.

    Formula-backed mappings are evaluated on a ``grid_n``-point parameter
    grid; table-backed mappings use the domain samples lying on the segment.
    """
    domain = f.context.domain
    if not segment_inside(domain, segment.start, segment.end):
        raise SegmentOutsideDomain("segment leaves the domain region")
    if f.has_formula:
        P = segment.grid(grid_n)
        V = f.evaluate(P)
    else:
        t = segment.parameter_of(f.domain_samples)
        on = ~np.isnan(t)
        if on.sum() < 2:
            raise TooFewSamples("fewer than two domain samples on the segment")
        P, V = f.domain_samples[on], f.values[on]
    val, _, _ = quotient_on_points(domain.space, f.context.range.space, P, V)
    return float(val)


@dataclass(frozen=True, eq=False)
class SteepPoint:
    point: np.ndarray
    parameter: float  # position on the searched segment, in [0, 1]
    toward: np.ndarray
    t_values: np.ndarray
    quotients: np.ndarray

    @property
    def min_quotient(self) -> float:
        return float(self.quotients.min())


DEFAULT_T_GRID = 0.5 ** np.arange(10, 41)


def steep_quotients(f: SampledMapping, u0, x0, t_values) -> np.ndarray:
    """``rho_Y(f((1-t) u0 (+) t x0), f(u0)) / (t rho_X(u0, x0))`` for each t."""
    space = f.context.domain.space
    t_values = np.asarray(t_values, dtype=np.float64)
    P = sp.geodesic_points(space, u0, x0, t_values)
    V = f.evaluate(P)
    f0 = f.evaluate(np.asarray(u0)[None])
    num = sp.paired_distances(f.context.range.space, V, np.broadcast_to(f0, V.shape))
    return num / (t_values * sp.distance(space, u0, x0))


def steep_point_search(f: SampledMapping, segment: sp.Segment, L: float, t_grid=None,
                       toward=None, candidates: int = 64) -> SteepPoint:
    """A point u0 inside ``segment`` whose quotient toward ``toward`` exceeds L
    for every t in ``t_grid`` (a finite stand-in for the lim inf).

    ``toward`` defaults to the segment's far end. Among qualifying candidates
    the one nearest the segment midpoint is returned.
    """
    if not f.has_formula:
        raise TypeError("steep-point search needs a formula-backed mapping")
    toward = segment.end if toward is None else sp.as_point(segment.space, toward)
    t_grid = DEFAULT_T_GRID if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    params = np.arange(1, candidates + 1) / (candidates + 1.0)
    order = np.argsort(np.abs(params - 0.5), kind="stable")
    for k in order:
        u0 = segment.point(params[k])
        if sp.distance(segment.space, u0, toward) <= sp.STRUCT_TOL:
            continue
        q = steep_quotients(f, u0, toward, t_grid)
        if np.all(q > L):
            return SteepPoint(u0, float(params[k]), toward, t_grid, q)
    raise NoSteepPoint(f"no candidate point has all quotients above {L}")


# ---------------------------------------------------------------- componentwise identity


@dataclass(frozen=True)
class ComponentwiseReport:
    combined_lip: float
    max_component_lip: float
    lip_gap: float
    lip_hat_gap: float
    components: int

    def holds(self, tol: float = 1e-9) -> bool:
        return self.lip_gap <= tol and self.lip_hat_gap <= tol


def componentwise_lip_identity(space: sp.SpaceDescriptor, X, components) -> ComponentwiseReport:
    """Compare Lipschitz data of the sup-norm vector map with its components.

    ``components`` is an ``(n, m)`` array (column = component) or a mapping
    from component name to an ``(n,)`` array of values at the points ``X``.
    """
    if isinstance(components, dict):
        C = np.stack([np.asarray(v, dtype=np.float64) for v in components.values()], axis=1)
    else:
        C = np.asarray(components, dtype=np.float64)
        C = C[:, None] if C.ndim == 1 else C
    dx = sp.pairwise(space, X)
    combined_dy = sp.pairwise(sp.sup_norm(C.shape[1]), C)
    combined, _, _ = kernels.max_pair_quotient(dx, combined_dy)
    combined_hat = kernels.row_max_quotient(dx, combined_dy)
    comp_lips, comp_hats = [], []
    for j in range(C.shape[1]):
        dy = np.abs(C[:, j][:, None] - C[:, j][None, :])
        comp_lips.append(kernels.max_pair_quotient(dx, dy)[0])
        comp_hats.append(kernels.row_max_quotient(dx, dy))
    max_comp = max(comp_lips)
    hat_gap = float(np.nanmax(np.abs(combined_hat - np.max(np.stack(comp_hats), axis=0))))
    return ComponentwiseReport(float(combined), float(max_comp), abs(combined - max_comp), hat_gap, C.shape[1])


# ---------------------------------------------------------------- iteration


def iterate_to_fixed_point(f, x0, space: sp.SpaceDescriptor = None, max_iter: int = 10_000, tol: float = 1e-12) -> np.ndarray:
    """Picard iteration x_{n+1} = f(x_n) until consecutive iterates are within ``tol``."""
    if isinstance(f, SampledMapping):
        space = f.context.domain.space if space is None else space
        f = f.formula
    if f is None or space is None:
        raise TypeError("iteration needs a formula and its space")
    x = np.asarray(x0, dtype=np.float64).reshape(-1)
    for _ in range(max_iter):
        nxt = f(x)
        if sp.distance(space, x, nxt) < tol:
            return nxt
        x = nxt
    raise NoConvergence(f"no convergence within {max_iter} iterations")
