"""Porosity cells, the perturbation plans that realise a witness mapping g
near f, and sampled certification that a d_theta ball around g misses a cell."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from geoporous import spaces as sp
from geoporous.errors import (
    HypothesisViolated,
    NoTargetPoint,
    PlanInfeasible,
    SegmentNotUnique,
    SteepnessFailed,
    TrialProjectionFailed,
)
from geoporous.extension import mcshane_weighted_extend
from geoporous.mappings import (
    NONEXPANSIVE_TOL,
    SampledMapping,
    metric_d_theta,
    nonexpansive_violation,
    quotient_on_points,
    restricted_lip,
    steep_point_search,
    steep_quotients,
)
from geoporous.regions import FamilySegment, Region, SegmentFamilyG

LIP_TOL = 1e-6
DIST_TOL = 1e-9
HALVING_STEPS = 40


# ---------------------------------------------------------------- cells


@dataclass(frozen=True, eq=False)
class PorosityCell:
    """Mappings with a < sup_G lip(f|G) <= b and an extension with lip <= 1 - 1/p on U."""

    a: float
    b: float
    p: int
    U: Region = None

    def __post_init__(self):
        if not 0.0 < self.a < self.b < 1.0:
            raise ValueError("need 0 < a < b < 1")
        if int(self.p) != self.p or self.p < 2:
            raise ValueError("p must be an integer >= 2")

    @property
    def width_bound(self) -> float:
        """a / (48 (p - 1))."""
        return self.a / (48.0 * (self.p - 1))

    @property
    def feasible(self) -> bool:
        return self.b - self.a < self.width_bound

    @property
    def sigma(self) -> float:
        return 16.0 * (self.b - self.a) / self.a

    @property
    def extension_bound(self) -> float:
        return 1.0 - 1.0 / self.p

    @property
    def sigma_product(self) -> float:
        """(1 + 3 sigma)(1 - 1/p), at most 1 for usable cells."""
        return (1.0 + 3.0 * self.sigma) * self.extension_bound

    @property
    def steepness_bound(self) -> float:
        return self.a * (1.0 + self.sigma / 4.0)

    @property
    def threshold(self) -> float:
        return self.a * (1.0 + self.sigma / 8.0)

    @property
    def nonempty_possible(self) -> bool:
        """False when a >= 1 - 1/p: then no f can meet both cell conditions."""
        return self.a < self.extension_bound

    def arithmetic(self) -> dict:
        return {
            "a": self.a, "b": self.b, "p": int(self.p),
            "width": self.b - self.a, "width_bound": self.width_bound, "feasible": self.feasible,
            "sigma": self.sigma, "sigma_product": self.sigma_product,
            "steepness_bound": self.steepness_bound, "threshold": self.threshold,
            "threshold_exceeds_b": self.threshold > self.b,
        }

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "p": int(self.p)}


def lindelof_cover(p_values=(2, 3, 4, 5, 6, 8, 12, 24), a_min: float = 0.02, a_max: float = 0.98) -> list:
    """Countable-cover stand-in: for each p, overlapping cells covering (a_min, a_max].

    a_{j+1} = a_j (1 + k/2) and b_j = a_j (1 + 0.9 k) with k = 1/(48 (p - 1)),
    so every cell satisfies the width condition and consecutive cells overlap.
    """
    cells = []
    for p in p_values:
        k = 1.0 / (48.0 * (p - 1))
        a = a_min
        while a < a_max:
            b = min(a * (1.0 + 0.9 * k), 0.999999)
            if b <= a:
                break
            cells.append(PorosityCell(a, b, int(p)))
            a *= 1.0 + k / 2.0
    return cells


@dataclass(frozen=True, eq=False)
class CellClassification:
    tag: str  # "cell", "Q0", "NotInQ" or "uncovered"
    index: int
    sup_lip: float
    best_member: int
    extension_estimate: float

    @property
    def cell_index(self):
        return self.index if self.tag == "cell" else None


def family_lips(f: SampledMapping, family: SegmentFamilyG, grid_n: int = 256) -> np.ndarray:
    return np.array([restricted_lip(f, m.segment, grid_n) for m in family])


def best_family_member(f: SampledMapping, family: SegmentFamilyG, grid_n: int = 256, tol: float = 1e-9) -> int:
    """Index of the member with the largest restricted lip; ties go to the longest segment."""
    lips = family_lips(f, family, grid_n)
    near = np.nonzero(lips >= lips.max() - tol)[0]
    lengths = np.array([family.members[k].segment.length for k in near])
    return int(near[np.argmax(lengths)])


def extension_restricted_lip(f: SampledMapping, U: Region) -> float:
    """Sampled lip of the weighted McShane extension on the domain samples in U."""
    F = mcshane_weighted_extend(f)
    inside = U.contains(f.domain_samples)
    P = f.domain_samples[inside]
    if len(P) < 2:
        return 0.0
    return F.lipschitz_on(P, F.Z_values[inside])


def classify_cell(f: SampledMapping, U: Region, family: SegmentFamilyG, cells, grid_n: int = 256,
                  zero_tol: float = 1e-12) -> CellClassification:
    """Place f in the first listed cell whose two conditions it meets."""
    lips = family_lips(f, family, grid_n)
    best = int(np.argmax(lips))
    sup = float(lips[best])
    est = extension_restricted_lip(f, U)
    if sup <= zero_tol:
        return CellClassification("Q0" if est < 1.0 - NONEXPANSIVE_TOL else "NotInQ", -1, sup, best, est)
    for k, cell in enumerate(cells):
        if cell.a < sup <= cell.b and est <= cell.extension_bound + NONEXPANSIVE_TOL:
            return CellClassification("cell", k, sup, best, est)
    tag = "NotInQ" if est >= 1.0 - NONEXPANSIVE_TOL else "uncovered"
    return CellClassification(tag, -1, sup, best, est)


# ---------------------------------------------------------------- plans


def _psi(space, u0, r, X) -> np.ndarray:
    d = sp.pairwise(space, np.atleast_2d(X), u0[None])[:, 0]
    val = np.clip(1.0 - (2.0 / r) * np.maximum(0.0, d - r / 2.0), 0.0, 1.0)
    return np.where(d < r, val, 0.0)


@dataclass(frozen=True, eq=False)
class PerturbationPlan:
    """Constants and auxiliary functions of the domain-side construction."""

    f: SampledMapping
    cell: PorosityCell
    member: FamilySegment
    conv: Region
    U: Region
    u0: np.ndarray
    steep_quotient: float
    sigma: float
    delta: float
    r0: float
    r: float
    eps0: float
    eps: float
    extension_lip: float

    side = "domain"

    @property
    def space(self) -> sp.SpaceDescriptor:
        return self.f.context.domain.space

    @property
    def gamma(self) -> sp.Segment:
        return self.member.segment

    @property
    def x0(self) -> np.ndarray:
        return self.member.center

    @property
    def rho(self) -> float:
        """rho(u0, x0)."""
        return sp.distance(self.space, self.u0, self.x0)

    @property
    def s(self) -> float:
        return self.eps / self.rho

    @property
    def u_s(self) -> np.ndarray:
        """(1 - s) u0 (+) s x0."""
        return sp.geodesic_point(self.space, self.u0, self.x0, self.s)

    @property
    def extension_condition(self) -> bool:
        return self.extension_lip <= self.cell.extension_bound + NONEXPANSIVE_TOL

    def psi(self, X) -> np.ndarray:
        return _psi(self.space, self.u0, self.r, X)

    def phi(self, t) -> np.ndarray:
        return np.minimum(np.abs(t), self.eps / self.sigma)

    def q(self, X) -> np.ndarray:
        """Arc-length parameter of the 1-Lipschitz retraction onto [u0, x0].

        The McShane extension of t -> t from the segment is rho(u0, .), so the
        clamped value is min(rho(u0, x), rho(u0, x0)).
        """
        d = sp.pairwise(self.space, np.atleast_2d(X), self.u0[None])[:, 0]
        return np.minimum(d, self.rho)

    def lam(self, X) -> np.ndarray:
        return self.sigma / (2.0 * self.rho) * self.psi(X) * self.phi(self.q(X))

    def alpha(self, t):
        return t + self.s * (1.0 - t)

    def gamma_point(self, t: float) -> np.ndarray:
        """(1 - t) u_s (+) t x0."""
        return sp.geodesic_point(self.space, self.u_s, self.x0, t)

    def pi(self, X) -> np.ndarray:
        return np.atleast_2d(X)

    def F(self, X) -> np.ndarray:
        return self.f.evaluate(X)

    def check_points(self, n: int = 256) -> np.ndarray:
        """Domain samples, points of conv(C_X) near u0 and the segment [u0, x0]."""
        ball = sp.ball_samples(self.space, self.u0, 1.5 * self.r, n)
        ball = ball[self.conv.contains(ball)]
        seg = sp.geodesic_points(self.space, self.u0, self.x0, np.linspace(0.0, 1.0, n))
        fine = sp.geodesic_points(self.space, self.u0, self.x0, np.linspace(0.0, min(1.0, 4.0 * self.s), n))
        return np.concatenate([self.f.domain_samples, ball, seg, fine])

    def check_invariants(self, n: int = 256) -> dict:
        P = self.check_points(n)
        lam = self.lam(P)
        dist_u0 = sp.pairwise(self.space, P, self.u0[None])[:, 0]
        lam_lip, _, _ = quotient_on_points(self.space, sp.euclidean(1), P, lam[:, None])
        ball3 = sp.ball_samples(self.space, self.u0, 3.0 * self.r, n)
        d_x0 = sp.pairwise(self.space, ball3, self.x0[None])[:, 0]
        return {
            "sigma_condition": self.cell.sigma_product <= 1.0 + 1e-12,
            "eps0_bound": 0.0 < self.eps0 < min(self.sigma * self.r / 2.0, self.rho / 2.0, 1.0),
            "eps_range": 0.0 < self.eps < self.eps0,
            "r_range": 0.0 < self.r < self.r0,
            "ball_inclusion": bool(np.all(self.U.contains(ball3)) and np.all(d_x0 < self.space.D)),
            "lambda_sup": float(lam.max()) <= self.eps / (2.0 * self.rho) + DIST_TOL,
            "lambda_lip": lam_lip <= self.sigma / self.rho + LIP_TOL,
            "lambda_support": bool(np.all(lam[dist_u0 >= self.r] == 0.0)),
            "lambda_at_u0": float(self.lam(self.u0[None])[0]) == 0.0,
            "s_definition": abs(self.s * self.rho - self.eps) <= DIST_TOL,
        }

    def constants(self) -> dict:
        return {
            "sigma": self.sigma, "delta": self.delta, "r0": self.r0, "r": self.r,
            "eps0": self.eps0, "eps": self.eps, "s": self.s, "rho_u0_x0": self.rho,
            "u0": self.u0.tolist(), "x0": self.x0.tolist(), "u_s": self.u_s.tolist(),
            "steep_quotient": self.steep_quotient, "extension_lip": self.extension_lip,
            "extension_condition": self.extension_condition,
        }


def _ball_ok(space, U: Region, center, radius, far, n=128) -> bool:
    pts = sp.ball_samples(space, center, radius, n)
    if not np.all(U.contains(pts)):
        return False
    return bool(np.all(sp.pairwise(space, pts, far[None])[:, 0] < space.D))


def build_plan(f: SampledMapping, cell: PorosityCell, member: FamilySegment, U: Region = None,
               conv: Region = None, t_grid=None, eps_grid: int = 64, seed: int = 0) -> PerturbationPlan:
    """Fix u0, sigma, r and eps for a mapping f of the cell on the segment ``member``."""
    if not f.has_formula:
        raise TypeError("plans need a formula-backed mapping")
    U = cell.U if U is None else U
    if U is None:
        raise ValueError("the cell needs an open set U")
    conv = f.context.domain if conv is None else conv
    space = f.context.domain.space
    gamma, x0 = member.segment, member.center
    lip_gamma = restricted_lip(f, gamma)
    if not cell.a < lip_gamma <= cell.b + LIP_TOL:
        raise HypothesisViolated(f"lip on the segment is {lip_gamma:.6g}, outside ({cell.a}, {cell.b}]")
    sigma = cell.sigma
    if cell.sigma_product > 1.0 + 1e-12:
        raise PlanInfeasible(f"(1 + 3 sigma)(1 - 1/p) = {cell.sigma_product:.6g} > 1")
    steep = steep_point_search(f, gamma, cell.a, t_grid, toward=x0)
    u0 = steep.point
    rho = sp.distance(space, u0, x0)
    room = sp.distance(space, u0, gamma.end)  # u0 -> w1 stays on the segment
    delta = sp.estimate_delta(space, u0, x0, sigma, seed=seed).delta
    r0 = min(rho, delta, rho * delta)
    r = r0 / 2.0
    for _ in range(HALVING_STEPS):
        if _ball_ok(space, U, u0, 3.0 * r, x0):
            eps0 = 0.999 * min(sigma * r / 2.0, rho / 2.0, 1.0, room / 2.0)
            for _ in range(HALVING_STEPS):
                t_max = 2.0 * eps0 / rho
                ts = t_max * np.concatenate([np.arange(1, eps_grid + 1) / (eps_grid + 1.0), 0.5 ** np.arange(7, 40)])
                if np.all(steep_quotients(f, u0, x0, ts) > cell.a):
                    ext = extension_restricted_lip(f, U)
                    return PerturbationPlan(f, cell, member, conv, U, u0, steep.min_quotient, sigma,
                                            delta, r0, r, eps0, eps0 / 2.0, ext)
                eps0 /= 2.0
        r /= 2.0
    raise PlanInfeasible("no (r, eps) pair on the halving grid satisfies the constraints")


# ---------------------------------------------------------------- beta


def _target(plan):
    return plan.x0 if plan.side == "domain" else plan.y0


def _target_space(plan):
    return plan.space if plan.side == "domain" else plan.range_space


def perturb_beta(plan, side: str, X) -> np.ndarray:
    """beta(x) = (1 - lambda(x)) pi(x) (+) lambda(x) z0 (range side only on C_X n B(u0, r))."""
    if side != plan.side:
        raise ValueError(f"plan works on the {plan.side} side, not {side!r}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    base = plan.pi(X)
    lam = plan.lam(X)
    out = np.array(base, dtype=np.float64)
    active = lam > 0.0
    if side == "range":
        d = sp.pairwise(plan.space, X, plan.u0[None])[:, 0]
        active &= plan.domain.contains(X) & (d < plan.r)
    if active.any():
        z0 = _target(plan)
        zs = _target_space(plan)
        if np.any(sp.pairwise(zs, base[active], z0[None])[:, 0] >= zs.D):
            raise SegmentNotUnique("a segment toward the target point is not unique")
        out[active] = sp.interpolate(zs, base[active], z0[None], lam[active])
    return out


def check_beta_conditions(plan, side: str, n: int = 256) -> dict:
    """Sampled versions of beta(C_X) c C_Z, rho(beta, pi) <= eps and the lip bound."""
    P = plan.check_points(n)
    B = perturb_beta(plan, side, P)
    base = plan.pi(P)
    zs = _target_space(plan)
    region = plan.conv if side == "domain" else plan.range_region
    on_C = plan.domain.contains(P) if side == "range" else plan.f.context.domain.contains(P)
    in_ball = sp.pairwise(plan.space, P, plan.u0[None])[:, 0] < plan.r
    lip_pi = quotient_on_points(plan.space, zs, P[in_ball], base[in_ball])[0] if in_ball.sum() > 1 else 0.0
    bound = max(1.0, (1.0 + plan.sigma) * lip_pi + 2.0 * plan.sigma)
    target_P = P[on_C] if side == "range" else P
    target_B = B[on_C] if side == "range" else B
    lip_beta = quotient_on_points(plan.space, zs, target_P, target_B)[0]
    disp = sp.paired_distances(zs, B[on_C], base[on_C])
    return {
        "maps_into": bool(np.all(region.contains(B[on_C]))),
        "displacement": float(disp.max()) if len(disp) else 0.0,
        "displacement_ok": bool(len(disp) == 0 or disp.max() <= plan.eps + DIST_TOL),
        "lip_beta": float(lip_beta),
        "lip_bound": float(bound),
        "lip_ok": bool(lip_beta <= bound + LIP_TOL),
    }


# ---------------------------------------------------------------- witness G / g


@dataclass(frozen=True, eq=False)
class Witness:
    plan: object
    g: SampledMapping
    f_on_samples: SampledMapping
    segment: sp.Segment  # [u0, u_s] (or [u0, u0 + eps])
    conditions: dict
    steepness: float

    @property
    def passed(self) -> bool:
        return all(bool(v) for k, v in self.conditions.items() if k.endswith("_ok"))

    def G(self, X) -> np.ndarray:
        return self.plan.G(X)


def _G_domain(plan: PerturbationPlan, X) -> np.ndarray:
    return plan.F(perturb_beta(plan, "domain", X))


PerturbationPlan.G = _G_domain


def build_witness_G(plan: PerturbationPlan, segment_points: int = 17, strict: bool = True, n: int = 256) -> Witness:
    """G = F o beta on conv(C_X) and g = G restricted to the (augmented) samples."""
    space = plan.space
    u0, u_s = plan.u0, plan.u_s
    seg = sp.Segment(space, u0, u_s)
    aug = plan.f.context.domain.augmented(np.concatenate([u0[None], u_s[None], seg.grid(segment_points)]))
    ctx = plan.f.context.with_domain(aug)
    G_vals = plan.G(aug.samples)
    F_vals = plan.F(aug.samples)
    g = SampledMapping(ctx, G_vals, check=False)
    f_aug = SampledMapping(ctx, F_vals, plan.f.formula, check=False)
    rs = ctx.range.space
    P = np.concatenate([aug.samples, plan.check_points(n)])
    P = P[plan.conv.contains(P)]
    lip_G = quotient_on_points(space, rs, P, plan.G(P))[0]
    num = sp.distance(rs, plan.G(u_s[None])[0], plan.G(u0[None])[0])
    steep = num / (plan.s * plan.rho)
    on_gamma = not np.isnan(plan.gamma.parameter_of(u_s[None])[0])
    cond = {
        "maps_into_ok": bool(np.all(ctx.range.contains(G_vals))),
        "distance_to_F": float(np.max(sp.paired_distances(rs, F_vals, G_vals))),
        "lip_G": float(lip_G),
        "steepness": float(steep),
        "steepness_bound": plan.cell.steepness_bound,
        "u_s_on_gamma_ok": bool(on_gamma),
        "G_u0_equals_F_u0_ok": bool(sp.distance(rs, plan.G(u0[None])[0], plan.F(u0[None])[0]) <= DIST_TOL),
    }
    cond["distance_to_F_ok"] = cond["distance_to_F"] <= plan.eps + DIST_TOL
    cond["lip_G_ok"] = cond["lip_G"] <= 1.0 + NONEXPANSIVE_TOL
    cond["steepness_ok"] = bool(steep > plan.cell.steepness_bound)
    if strict and not cond["steepness_ok"]:
        raise SteepnessFailed(f"steepness {steep:.6g} <= {plan.cell.steepness_bound:.6g}")
    return Witness(plan, g, f_aug, seg, cond, float(steep))


# ---------------------------------------------------------------- trial mappings


def _random_directions(space: sp.SpaceDescriptor, base: np.ndarray, rng) -> np.ndarray:
    """Unit tangent directions at each row of ``base`` (in the space's norm)."""
    n = len(base)
    if space.kind == "euclidean":
        v = rng.normal(size=(n, space.dimension))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    if space.kind == "sup_norm":
        v = rng.uniform(-1.0, 1.0, size=(n, space.dimension))
        return v / np.max(np.abs(v), axis=1, keepdims=True)
    out = np.empty_like(base)
    for k, x in enumerate(base):
        B = sp.tangent_basis(space, x)
        ang = rng.uniform(0.0, 2.0 * math.pi)
        out[k] = math.cos(ang) * B[0] + math.sin(ang) * B[1]
    return out


def displace(space: sp.SpaceDescriptor, base: np.ndarray, directions: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Move each row of ``base`` a distance ``lengths`` along ``directions``."""
    if not space.curved:
        return base + lengths[:, None] * directions
    out = np.empty_like(base)
    for k, x in enumerate(base):
        out[k] = sp.exp_map(space, x, lengths[k] * directions[k][None])[0]
    return out


def _move_toward(space, P, Q, lengths) -> np.ndarray:
    d = sp.paired_distances(space, P, Q)
    t = np.where(d > 0, np.minimum(1.0, lengths / np.where(d > 0, d, 1.0)), 0.0)
    return sp.interpolate(space, P, Q, t)


def project_nonexpansive(g: SampledMapping, h_values: np.ndarray, rounds: int = 100) -> np.ndarray:
    """Pull violating pairs halfway back toward g until sampled nonexpansive."""
    dom, rng_space = g.context.domain.space, g.context.range.space
    dx = g.domain_distances()
    H = np.array(h_values)
    for _ in range(rounds):
        gap = sp.pairwise(rng_space, H) - dx
        np.fill_diagonal(gap, -np.inf)
        bad = np.any(gap > NONEXPANSIVE_TOL, axis=1)
        if not bad.any():
            return H
        H[bad] = sp.interpolate(rng_space, H[bad], g.values[bad], 0.5)
    raise TrialProjectionFailed("trial mapping stayed expansive after the projection rounds")


def _flattening_adversary(g: SampledMapping, on_seg: np.ndarray, i0: int, i1: int):
    """Trial that pulls every segment value toward g(u0) and g(u0) toward the far end."""
    rs = g.context.range.space

    def build(allowed):
        H = g.values.copy()
        idx = np.nonzero(on_seg)[0]
        idx = idx[idx != i0]
        target = np.broadcast_to(g.values[i0], (len(idx), g.values.shape[1]))
        H[idx] = _move_toward(rs, g.values[idx], target, allowed[idx])
        H[i0] = _move_toward(rs, g.values[i0][None], g.values[i1][None], allowed[i0:i0 + 1])[0]
        return H

    return build


def trial_mappings(g: SampledMapping, radius: float, trials: int, seed: int, adversarial=None):
    """Yield (index, values) of nonexpansive mappings within d_theta radius of g.

    Trial 0 is g itself; ``adversarial(allowed)`` (if given) supplies trial 1;
    the rest apply random displacements of length up to radius (1 + rho(x, theta)).
    """
    rng = np.random.default_rng(seed)
    space = g.context.range.space
    allowed = radius * (1.0 - 1e-9) * g.context.weights  # strictly inside the ball despite rounding
    for k in range(trials):
        if k == 0:
            H = g.values.copy()
        elif k == 1 and adversarial is not None:
            H = adversarial(allowed)
        else:
            dirs = _random_directions(space, g.values, rng)
            H = displace(space, g.values, dirs, allowed * rng.uniform(0.0, 1.0, size=len(allowed)))
        # stay inside the range set: halve offending displacements
        for _ in range(60):
            out = ~g.context.range.contains(H)
            if not out.any():
                break
            H[out] = sp.interpolate(space, H[out], g.values[out], 0.5)
        H = project_nonexpansive(g, H)
        yield k, H


@dataclass(frozen=True, eq=False)
class WitnessCertificate:
    g: SampledMapping
    excluded_ball_radius: float
    steepness_bound: float
    threshold: float
    b: float
    trials: int
    quotients: np.ndarray  # restricted lip of each trial on [u0, u_s]
    endpoint_quotients: np.ndarray
    d_theta: np.ndarray
    failed_trials: tuple
    min_observed_restricted_lip: float
    passed: bool

    def rows(self):
        for k in range(self.trials):
            yield {"trial": k, "d_theta": float(self.d_theta[k]), "restricted_lip": float(self.quotients[k]),
                   "endpoint_quotient": float(self.endpoint_quotients[k]),
                   "passed": k not in self.failed_trials}


def certify_ball_exclusion(witness: Witness, trials: int = 100, rng_seed: int = 0) -> WitnessCertificate:
    """Sample h in the excluded d_theta ball about g and check lip(h|[u0, u_s]) > b."""
    plan = witness.plan
    g = witness.g
    cell = plan.cell
    space_x = plan.space
    rs = g.context.range.space
    rho_theta = sp.distance(space_x, plan.u0, g.context.theta)
    radius = cell.a * plan.sigma * plan.eps / (32.0 * (1.0 + rho_theta))
    seg = witness.segment
    samples = g.domain_samples
    on_seg = ~np.isnan(seg.parameter_of(samples))
    i0 = int(np.argmin(sp.pairwise(space_x, samples, plan.u0[None])[:, 0]))
    i1 = int(np.argmin(sp.pairwise(space_x, samples, plan.u_s[None])[:, 0]))

    adversarial = _flattening_adversary(g, on_seg, i0, i1)

    quot, endq, dth, failed = [], [], [], []
    for k, H in trial_mappings(g, radius, trials, rng_seed, adversarial):
        h = SampledMapping(g.context, H, check=False)
        dist = metric_d_theta(h, g)
        val = quotient_on_points(space_x, rs, samples[on_seg], H[on_seg])[0]
        endpoint = sp.distance(rs, H[i1], H[i0]) / seg.length
        quot.append(val)
        endq.append(endpoint)
        dth.append(dist)
        ok = val > cell.b and val >= cell.threshold - LIP_TOL and dist <= radius * (1 + 1e-12)
        if not ok:
            failed.append(k)
    quot = np.array(quot)
    return WitnessCertificate(g, radius, cell.steepness_bound, cell.threshold, cell.b, trials, quot,
                              np.array(endq), np.array(dth), tuple(failed), float(quot.min()), not failed)


# ---------------------------------------------------------------- constant mappings


@dataclass(frozen=True, eq=False)
class ConstantPlan:
    """Range-side construction for mappings constant near u0."""

    f: SampledMapping
    U: Region
    u0: np.ndarray
    x0: np.ndarray
    y0: np.ndarray
    sigma: float
    r0: float
    r: float
    eps0: float
    eps: float
    extension_lip: float

    side = "range"

    @property
    def space(self):
        return self.f.context.domain.space

    @property
    def range_space(self):
        return self.f.context.range.space

    @property
    def domain(self) -> Region:
        return self.f.context.domain

    @property
    def conv(self) -> Region:
        return self.f.context.domain

    @property
    def range_region(self) -> Region:
        return self.f.context.range

    @property
    def rho_target(self) -> float:
        """rho_Y(f(u0), y0)."""
        return sp.distance(self.range_space, self.F(self.u0[None])[0], self.y0)

    @property
    def u_eps(self) -> np.ndarray:
        """The point u0 + eps of [u0, x0]."""
        return sp.geodesic_point(self.space, self.u0, self.x0, self.eps / sp.distance(self.space, self.u0, self.x0))

    def pi(self, X) -> np.ndarray:
        return self.F(X)

    def F(self, X) -> np.ndarray:
        return self.f.evaluate(X)

    def lam(self, X) -> np.ndarray:
        d = sp.pairwise(self.space, np.atleast_2d(X), self.u0[None])[:, 0]
        return self.sigma / (2.0 * self.rho_target) * np.maximum(self.eps - d, 0.0)

    def G(self, X) -> np.ndarray:
        return perturb_beta(self, "range", X)

    def check_points(self, n: int = 256) -> np.ndarray:
        ball = sp.ball_samples(self.space, self.u0, 1.5 * self.r, n)
        ball = ball[self.domain.contains(ball)]
        seg = sp.geodesic_points(self.space, self.u0, self.u_eps, np.linspace(0.0, 1.0, 33))
        return np.concatenate([self.domain.samples, ball, seg])

    def constants(self) -> dict:
        return {"sigma": self.sigma, "r0": self.r0, "r": self.r, "eps0": self.eps0, "eps": self.eps,
                "u0": self.u0.tolist(), "x0": self.x0.tolist(), "y0": self.y0.tolist(),
                "rho_f_u0_y0": self.rho_target, "extension_lip": self.extension_lip}


@dataclass(frozen=True, eq=False)
class ConstantWitnessCertificate:
    displacement: float
    expected_displacement: float
    trial_radius: float
    trials: int
    spreads: np.ndarray  # max pairwise range distance of each trial on [u0, u0 + eps]
    endpoint_gaps: np.ndarray
    d_theta: np.ndarray
    failed_trials: tuple
    conditions: dict
    passed: bool

    def rows(self):
        for k in range(self.trials):
            yield {"trial": k, "d_theta": float(self.d_theta[k]), "spread": float(self.spreads[k]),
                   "endpoint_gap": float(self.endpoint_gaps[k]), "passed": k not in self.failed_trials}


def _in_star(region: Region, Y) -> np.ndarray:
    if region.convex:
        return region.contains(Y)
    if not len(region.star_centers):
        return np.zeros(len(Y), dtype=bool)
    d = sp.pairwise(region.space, Y, region.star_centers).min(axis=1)
    return d <= sp.STRUCT_TOL


def choose_target(f: SampledMapping, u0, near: np.ndarray) -> np.ndarray:
    """y0 following the two-case rule: near f(u0) when f takes star-center
    values on ``near``, otherwise a star center of C_Y within D_Y."""
    Y = f.context.range
    rs = Y.space
    fu0 = f.evaluate(np.asarray(u0)[None])[0]
    values = f.evaluate(near)
    if np.all(_in_star(Y, values)):
        cand = Y.samples
        lim = rs.D / 2.0
    else:
        cand = Y.samples if Y.convex else Y.star_centers
        lim = rs.D
    if not len(cand):
        raise NoTargetPoint("range has no candidate target points")
    d = sp.pairwise(rs, cand, fu0[None])[:, 0]
    ok = (d > sp.STRUCT_TOL) & (d < lim)
    if not ok.any():
        raise NoTargetPoint("no admissible target point among the range samples")
    idx = np.nonzero(ok)[0]
    return cand[idx[np.argmin(d[idx])]].copy()  # argmin keeps the first minimiser


def constant_mapping_witness(f: SampledMapping, U: Region, y0=None, sigma: float = 0.2, eps: float = None,
                             r: float = None, u0=None, x0=None, trials: int = 100, seed: int = 0,
                             segment_points: int = 17):
    """Perturb a mapping that is constant on C_X n U into one that moves by
    sigma eps / 2 along [u0, u0 + eps], and certify a ball of non-constant maps."""
    if not f.has_formula:
        raise TypeError("constant-mapping witness needs a formula-backed mapping")
    C = f.context.domain
    space = C.space
    inside = C.samples[U.contains(C.samples)]
    if not len(inside):
        raise HypothesisViolated("C_X n U has no samples")
    vals = f.evaluate(inside)
    if np.max(sp.pairwise(f.context.range.space, vals, vals[:1])) > sp.STRUCT_TOL:
        raise HypothesisViolated("f is not constant on C_X n U")
    if x0 is None:
        if not len(C.star_centers):
            raise HypothesisViolated("C_X lists no star center")
        x0 = C.star_centers[0]
    x0 = sp.as_point(space, x0)
    Uprime = inside[(sp.pairwise(space, inside, x0[None])[:, 0] > sp.STRUCT_TOL)
                    & (sp.pairwise(space, inside, x0[None])[:, 0] < space.D)]
    if u0 is None:
        outside = C.samples[~U.contains(C.samples)]
        depth = (sp.pairwise(space, Uprime, outside).min(axis=1) if len(outside) else np.ones(len(Uprime)))
        u0 = Uprime[int(np.argmax(depth))]
    u0 = sp.as_point(space, u0)
    ext = extension_restricted_lip(f, U)
    if (1.0 + sigma) * ext + 2.0 * sigma > 1.0 + 1e-12:
        raise PlanInfeasible("sigma too large for the extension's Lipschitz constant on U")
    y0 = choose_target(f, u0, inside) if y0 is None else sp.as_point(f.context.range.space, y0)
    rs = f.context.range.space
    fu0 = f.evaluate(u0[None])[0]
    rho_t = sp.distance(rs, fu0, y0)
    if not 0.0 < rho_t < rs.D or not f.context.range.contains_point(y0):
        raise NoTargetPoint("target point is not admissible")
    delta = sp.estimate_delta(rs, fu0, y0, sigma, seed=seed).delta
    r0 = min(rho_t, delta, rho_t * delta)
    rho_x0 = sp.distance(space, u0, x0)

    def ball_in_Uprime(rad):
        pts = sp.ball_samples(space, u0, rad, 128)
        d0 = sp.pairwise(space, pts, x0[None])[:, 0]
        return bool(np.all(U.contains(pts)) and np.all(d0 > 0) and np.all(d0 < space.D)) and rad < rho_x0

    if r is None:
        r = r0 / 2.0
        for _ in range(HALVING_STEPS):
            if ball_in_Uprime(r):
                break
            r /= 2.0
        else:
            raise PlanInfeasible("no radius r with B(u0, r) inside U'")
    elif not (0.0 < r < r0 and ball_in_Uprime(r)):
        raise PlanInfeasible(f"radius {r} violates r < r0 = {r0:.6g} or B(u0, r) c U'")
    eps0 = r
    eps = eps0 / 2.0 if eps is None else float(eps)
    if not 0.0 < eps < eps0:
        raise PlanInfeasible("need 0 < eps < eps0 = r")
    plan = ConstantPlan(f, U, u0, x0, y0, float(sigma), r0, float(r), eps0, eps, ext)

    u_e = plan.u_eps
    seg = sp.Segment(space, u0, u_e)
    aug = C.augmented(np.concatenate([u0[None], u_e[None], seg.grid(segment_points)]))
    ctx = f.context.with_domain(aug)
    G_vals = plan.G(aug.samples)
    F_vals = plan.F(aug.samples)
    g = SampledMapping(ctx, G_vals, check=False)
    P = np.concatenate([aug.samples, plan.check_points()])
    lip_G = quotient_on_points(space, rs, P, plan.G(P))[0]
    displacement = sp.distance(rs, plan.G(u_e[None])[0], plan.G(u0[None])[0])
    expected = sigma * eps / 2.0
    beta = check_beta_conditions(plan, "range")
    cond = {
        "maps_into_ok": bool(np.all(ctx.range.contains(G_vals))),
        "distance_to_F": float(np.max(sp.paired_distances(rs, F_vals, G_vals))),
        "lip_G": float(lip_G),
        "displacement": displacement,
        "lambda_at_u_eps_ok": float(plan.lam(u_e[None])[0]) <= sp.STRUCT_TOL,
        "beta_lip_ok": beta["lip_ok"],
    }
    cond["distance_to_F_ok"] = cond["distance_to_F"] <= eps + DIST_TOL
    cond["lip_G_ok"] = lip_G <= 1.0 + NONEXPANSIVE_TOL
    cond["displacement_ok"] = abs(displacement - expected) <= DIST_TOL

    rho_theta = sp.distance(space, u0, ctx.theta)
    radius = sigma * eps / (6.0 * (1.0 + rho_theta + eps0))
    on_seg = ~np.isnan(seg.parameter_of(aug.samples))
    i0 = int(np.argmin(sp.pairwise(space, aug.samples, u0[None])[:, 0]))
    i1 = int(np.argmin(sp.pairwise(space, aug.samples, u_e[None])[:, 0]))

    adversarial = _flattening_adversary(g, on_seg, i0, i1)

    spreads, gaps, dth, failed = [], [], [], []
    for k, H in trial_mappings(g, radius, trials, seed, adversarial):
        h = SampledMapping(ctx, H, check=False)
        dist = metric_d_theta(h, g)
        S = H[on_seg]
        spread = float(sp.pairwise(rs, S).max())
        gap = sp.distance(rs, H[i1], H[i0])
        spreads.append(spread)
        gaps.append(gap)
        dth.append(dist)
        if not (spread > sp.STRUCT_TOL and dist <= radius * (1 + 1e-12)):
            failed.append(k)
    passed = not failed and all(bool(v) for key, v in cond.items() if key.endswith("_ok"))
    cert = ConstantWitnessCertificate(displacement, expected, radius, trials, np.array(spreads), np.array(gaps),
                                      np.array(dth), tuple(failed), cond, passed)
    return g, plan, cert
