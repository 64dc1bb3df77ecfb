"""Named experiment suites. Each returns a deterministic payload, detail rows
and a mapping from certificate name to pass/fail."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from geoporous import extension as ext
from geoporous import formulas as fm
from geoporous import hyperspace as hs
from geoporous import kernels
from geoporous import porosity as po
from geoporous import regions as rg
from geoporous import spaces as sp
from geoporous.mappings import MappingSpaceContext, SampledMapping


@dataclass
class SuiteResult:
    suite: str
    parameters: dict
    payload: dict
    rows: list = field(default_factory=list)
    certificates: dict = field(default_factory=dict)

    @property
    def failed(self) -> list:
        return sorted(k for k, v in self.certificates.items() if not v)

    @property
    def passed(self) -> bool:
        return not self.failed


def _merge(defaults: dict, params: dict) -> dict:
    out = dict(defaults)
    out.update(params or {})
    return out


# ---------------------------------------------------------------- spaces


SPACE_KINDS = {
    "euclidean": lambda: sp.euclidean(2),
    "sup_norm": lambda: sp.sup_norm(2),
    "sphere": lambda: sp.sphere(1.0),
    "hyperbolic": lambda: sp.hyperbolic(-1.0),
}


def segment_isometry_deviation(space: sp.SpaceDescriptor, n: int, rng) -> float:
    """max |rho(g(s), g(t)) - |s - t| rho(x, y)| over n random (x, y, s, t)."""
    X = sp.random_points(space, n, rng, 2.0)
    Y = sp.random_points(space, n, rng, 2.0)
    if space.kind == "sphere":
        d = sp.paired_distances(space, X, Y)
        while np.any(far := d >= space.D - 0.1):
            Y[far] = sp.random_points(space, int(far.sum()), rng)
            d = sp.paired_distances(space, X, Y)
    s = rng.uniform(size=n)
    t = rng.uniform(size=n)
    P = sp.interpolate(space, X, Y, s)
    Q = sp.interpolate(space, X, Y, t)
    dev = np.abs(sp.paired_distances(space, P, Q) - np.abs(s - t) * sp.paired_distances(space, X, Y))
    return float(dev.max())


def run_spaces(params: dict, seed: int) -> SuiteResult:
    p = _merge({"n": 1000, "kinds": list(SPACE_KINDS)}, params)
    rng = np.random.default_rng(seed)
    res = SuiteResult("spaces", p, {"segment_isometry": {}})
    for kind in p["kinds"]:
        space = SPACE_KINDS[kind]()
        tol = sp.NUMERIC_TOL if space.curved else sp.METRIC_TOL
        dev = segment_isometry_deviation(space, int(p["n"]), rng)
        res.payload["segment_isometry"][kind] = {"max_deviation": dev, "tolerance": tol}
        res.rows.append({"check": "segment_isometry", "kind": kind, "value": dev, "tolerance": tol,
                         "passed": dev <= tol})
        res.certificates[f"segment_isometry_{kind}"] = dev <= tol
    return res


# ---------------------------------------------------------------- catcheck


def _random_triangle(space, rng, max_perimeter: float, scale: float = 1.0):
    while True:
        V = sp.random_points(space, 3, rng, scale)
        d = sp.pairwise(space, V)
        per = d[0, 1] + d[1, 2] + d[0, 2]
        if per < max_perimeter and min(d[0, 1], d[1, 2], d[0, 2]) > 1e-3:
            return V


def run_catcheck(params: dict, seed: int) -> SuiteResult:
    p = _merge({"triangles": 100, "delta_pairs": 20, "sigma": 0.1, "sample_count": 16}, params)
    rng = np.random.default_rng(seed)
    res = SuiteResult("catcheck", p, {})
    S = sp.sphere(1.0)
    worst_self = 0.0
    for k in range(int(p["triangles"])):
        V = _random_triangle(S, rng, 2.0 * math.pi - 0.2)
        rep = sp.check_cat_inequality(S, V, 1.0, int(p["sample_count"]))
        worst_self = max(worst_self, rep.max_violation)
        res.rows.append({"check": "sphere_self", "index": k, "value": rep.max_violation, "passed": rep.max_violation <= sp.NUMERIC_TOL})
    E = sp.euclidean(2)
    worst_flat = 0.0
    for k in range(int(p["triangles"])):
        V = _random_triangle(E, rng, 2.0 * math.pi - 0.2)
        rep = sp.check_cat_inequality(E, V, 1.0, int(p["sample_count"]))
        worst_flat = max(worst_flat, rep.max_violation)
        res.rows.append({"check": "euclidean_in_M1", "index": k, "value": rep.max_violation, "passed": rep.max_violation <= sp.NUMERIC_TOL})
    deltas = []
    for k in range(int(p["delta_pairs"])):
        x = sp.random_points(S, 1, rng)[0]
        while True:
            y = sp.random_points(S, 1, rng)[0]
            if sp.distance(S, x, y) < math.pi - 0.1:
                break
        rep = sp.estimate_delta(S, x, y, float(p["sigma"]), seed=seed + k)
        deltas.append(rep.delta)
        res.rows.append({"check": "delta", "index": k, "value": rep.delta, "worst_ratio": rep.worst_ratio,
                         "bound": rep.bound, "passed": rep.delta > 0 and rep.worst_ratio <= rep.bound})
    x = sp.random_points(S, 1, rng)[0]
    same = sp.estimate_delta(S, x, x, float(p["sigma"]), seed=seed)
    res.rows.append({"check": "delta_coincident", "index": 0, "value": same.delta, "worst_ratio": same.worst_ratio,
                     "bound": same.bound, "passed": same.worst_ratio <= 1.0})
    res.payload = {
        "sphere_self_max_violation": worst_self,
        "euclidean_in_M1_max_violation": worst_flat,
        "deltas": deltas,
        "coincident": {"delta": same.delta, "worst_ratio": same.worst_ratio},
    }
    res.certificates = {
        "sphere_self_comparison": worst_self <= sp.NUMERIC_TOL,
        "euclidean_into_M1": worst_flat <= sp.NUMERIC_TOL,
        "delta_certified": all(d > 0 for d in deltas)
        and all(r["passed"] for r in res.rows if r["check"] == "delta"),
        "delta_coincident_ratio": same.worst_ratio <= 1.0,
    }
    return res


# ---------------------------------------------------------------- extension


def random_piecewise_source(rng, knots: np.ndarray, slow_until: float, slow_speed: float, dim: int = 2):
    """Piecewise-linear path with random directions; speed <= slow_speed before
    ``slow_until`` and <= 1 after."""
    steps = np.diff(knots)
    heads = rng.normal(size=(len(steps), dim))
    heads /= np.linalg.norm(heads, axis=1, keepdims=True)
    cap = np.where(knots[:-1] < slow_until - 1e-12, slow_speed, 1.0)
    speeds = cap * rng.uniform(0.0, 1.0, size=len(steps))
    vals = np.vstack([np.zeros(dim), np.cumsum(heads * (speeds * steps)[:, None], axis=0)])
    return fm.PiecewiseLinear(knots, vals)


def _source_lip_hat_near(f: SampledMapping, u0, r) -> float:
    dx = f.domain_distances()
    dy = f.range_distances()
    hat = np.nan_to_num(kernels.row_max_quotient(dx, dy), nan=0.0)
    near = sp.pairwise(f.context.domain.space, f.domain_samples, np.asarray(u0)[None])[:, 0] < r
    return float(hat[near].max())


def run_extension(params: dict, seed: int) -> SuiteResult:
    p = _merge({"sources": 20, "pairs": 10000, "q": 0.5, "q_prime": 0.75, "r": 0.4, "u0_index": 10,
                "samples": 61, "Z_points": 1001, "max_attempts": 5000}, params)
    rng = np.random.default_rng(seed)
    E = rg.interval(0.0, 3.0, int(p["samples"]))
    Yr = rg.box_region([-4.0, -4.0], [4.0, 4.0], 3)
    ctx = MappingSpaceContext(E, Yr, np.array([0.0]))
    u0 = E.samples[int(p["u0_index"])]
    loc = ext.locality_radius(float(p["q"]), float(p["q_prime"]), float(p["r"]), u0)
    knots = np.linspace(0.0, 3.0, 13)
    Z = np.linspace(-0.5, 3.5, int(p["Z_points"]))[:, None]
    res = SuiteResult("extension", p, {"N": loc.N, "s": loc.s, "u0": u0.tolist()})
    attempts = 0
    worst_agree = worst_global = worst_local = 0.0
    dich = 0
    for k in range(int(p["sources"])):
        while True:
            attempts += 1
            if attempts > int(p["max_attempts"]):
                raise RuntimeError("rejection sampling for extension sources did not finish")
            formula = random_piecewise_source(rng, knots, 1.5, 0.45)
            f = SampledMapping.from_formula(ctx, formula, check=False)
            if _source_lip_hat_near(f, u0, loc.r) <= loc.q:
                break
        F = ext.mcshane_weighted_extend(f, Z_samples=Z)
        agree = F.agreement_error()
        i = rng.integers(0, len(Z), size=int(p["pairs"]))
        j = rng.integers(0, len(Z), size=int(p["pairs"]))
        keep = i != j
        d = np.abs(Z[i[keep], 0] - Z[j[keep], 0])
        q_all = np.max(np.abs(F.Z_values[i[keep]] - F.Z_values[j[keep]]), axis=1) / d
        glob = float(q_all.max())
        local = ext.certify_local_contraction(F, loc).max_quotient
        viol = ext.dichotomy_violations(F, loc, Z)
        worst_agree, worst_global, worst_local = max(worst_agree, agree), max(worst_global, glob), max(worst_local, local)
        dich += viol
        res.rows.append({"source": k, "agreement": agree, "global_quotient": glob, "local_quotient": local,
                         "dichotomy_violations": viol,
                         "passed": agree <= 1e-9 and glob <= 1.0 + 1e-9 and local <= loc.q_prime + 1e-9})
    res.payload.update({"attempts": attempts, "max_agreement_error": worst_agree,
                        "max_global_quotient": worst_global, "max_local_quotient": worst_local,
                        "dichotomy_violations": dich})
    res.certificates = {
        "locality_N": loc.N == 5,
        "agreement_on_E": worst_agree <= 1e-9,
        "global_nonexpansive": worst_global <= 1.0 + 1e-9,
        "local_contraction": worst_local <= loc.q_prime + 1e-9,
        "dichotomy": dich == 0,
    }
    return res


# ---------------------------------------------------------------- porosity


def porosity_scenario(samples: int = 201, slope: float = 0.5025):
    """f(x) = slope x on C_X = C_Y = [0, 1], star center 1, U = B(0.5, 0.5)."""
    C = rg.interval(0.0, 1.0, samples)
    C = rg.Region(C.space, C.samples, C.membership, star_centers=np.array([[1.0]]), convex=True)
    Y = rg.interval(0.0, 1.0, 101)
    U = rg.open_ball(sp.euclidean(1), np.array([0.5]), 0.5)
    ctx = MappingSpaceContext(C, Y, np.array([0.0]))
    return SampledMapping.from_formula(ctx, fm.scaled(slope)), U


def constant_scenario():
    """Constant 0 from [0, 2] (star center 2) into the square [-1, 1]^2."""
    C = rg.interval(0.0, 2.0, 201)
    C = rg.Region(C.space, C.samples, C.membership, star_centers=np.array([[2.0]]), convex=True)
    Y = rg.box_region([-1.0, -1.0], [1.0, 1.0], 11)
    U = rg.open_ball(sp.euclidean(1), np.array([1.0]), 0.9)
    ctx = MappingSpaceContext(C, Y, np.array([0.0]))
    return SampledMapping.from_formula(ctx, fm.Constant(np.zeros(2))), U


def run_porosity(params: dict, seed: int) -> SuiteResult:
    const_defaults = {"sigma": 0.2, "eps": 0.1, "r": 0.5, "u0": 1.0, "y0": [1.0, 0.0], "trials": 100}
    p = _merge({"cell": [0.5, 0.505, 2], "trials": 100, "slope": 0.5025, "samples": 201}, params)
    p["constant"] = _merge(const_defaults, (params or {}).get("constant"))
    a, b, pp = p["cell"]
    f, U = porosity_scenario(int(p["samples"]), float(p["slope"]))
    cell = po.PorosityCell(float(a), float(b), int(pp), U)
    family = rg.enumerate_family_G(f.context.domain, U)
    member_index = po.best_family_member(f, family)
    cls = po.classify_cell(f, U, family, [cell])
    plan = po.build_plan(f, cell, family.members[member_index], U, seed=seed)
    invariants = plan.check_invariants()
    beta = po.check_beta_conditions(plan, "domain")
    witness = po.build_witness_G(plan, strict=False)
    cert = po.certify_ball_exclusion(witness, int(p["trials"]), seed)

    cp = p["constant"]
    f0, U0 = constant_scenario()
    _, cplan, ccert = po.constant_mapping_witness(
        f0, U0, y0=cp.get("y0"), sigma=float(cp["sigma"]), eps=float(cp["eps"]), r=float(cp["r"]),
        u0=[float(cp["u0"])], trials=int(cp["trials"]), seed=seed)

    res = SuiteResult("porosity", p, {})
    for row in cert.rows():
        res.rows.append({"witness": "cell", **row})
    for row in ccert.rows():
        res.rows.append({"witness": "constant", **row})
    res.payload = {
        "cell": cell.arithmetic(),
        "classification": {"tag": cls.tag, "sup_lip": cls.sup_lip, "extension_estimate": cls.extension_estimate},
        "segment": {"start": plan.gamma.start.tolist(), "end": plan.gamma.end.tolist()},
        "plan": plan.constants(),
        "plan_invariants": invariants,
        "beta_conditions": beta,
        "G_conditions": witness.conditions,
        "ball_exclusion": {
            "radius": cert.excluded_ball_radius, "threshold": cert.threshold,
            "min_restricted_lip": cert.min_observed_restricted_lip, "max_d_theta": float(cert.d_theta.max()),
            "failed_trials": list(cert.failed_trials), "trials": cert.trials,
        },
        "constant_witness": {
            "plan": cplan.constants(), "conditions": ccert.conditions,
            "displacement": ccert.displacement, "expected_displacement": ccert.expected_displacement,
            "trial_radius": ccert.trial_radius, "min_spread": float(ccert.spreads.min()),
            "failed_trials": list(ccert.failed_trials), "trials": ccert.trials,
        },
    }
    res.certificates = {
        "cell_feasible": cell.feasible,
        "sigma_condition": cell.sigma_product <= 1.0,
        "threshold_exceeds_b": cell.threshold > cell.b,
        **{f"plan_{k}": bool(v) for k, v in invariants.items()},
        "beta_maps_into": beta["maps_into"],
        "beta_displacement": beta["displacement_ok"],
        "beta_lip": beta["lip_ok"],
        "G_maps_into": witness.conditions["maps_into_ok"],
        "G_distance_to_F": witness.conditions["distance_to_F_ok"],
        "G_nonexpansive": witness.conditions["lip_G_ok"],
        "G_steepness": witness.conditions["steepness_ok"] and witness.conditions["u_s_on_gamma_ok"],
        "ball_exclusion": cert.passed,
        "constant_displacement": ccert.conditions["displacement_ok"],
        "constant_nonexpansive": ccert.conditions["lip_G_ok"],
        "constant_trials": not ccert.failed_trials,
    }
    return res


# ---------------------------------------------------------------- hyperspace


def run_hyperspace(params: dict, seed: int) -> SuiteResult:
    p = _merge({"random_sets": 50, "max_members": 6}, params)
    rng = np.random.default_rng(seed)
    E2 = sp.euclidean(2)
    square = rg.box_region([-1.0, -1.0], [1.0, 1.0], 5)
    A = hs.HyperPoint(E2, [[-1.0, -1.0], [-1.0, 1.0]], square)
    B = hs.HyperPoint(E2, [[1.0, -1.0], [1.0, 1.0]], square)
    hAB = hs.hausdorff_distance(A, B)
    mid = hs.minkowski_combination(A, B, 0.5)
    h_mid = hs.hausdorff_distance(mid, A)
    res = SuiteResult("hyperspace", p, {})
    res.rows.append({"check": "counterexample_h_AB", "value": hAB, "expected": 2.0, "passed": hAB == 2.0})
    res.rows.append({"check": "counterexample_sqrt2", "value": h_mid, "expected": math.sqrt(2.0),
                     "passed": abs(h_mid - math.sqrt(2.0)) <= 1e-12})
    res.rows.append({"check": "not_isometric_midpoint", "value": h_mid - 0.5 * hAB, "expected": 0.0,
                     "passed": abs(h_mid - 0.5 * hAB) > 1e-3})
    iso = hyp = hyp_h = 0.0
    H = sp.hyperbolic(-1.0)
    for k in range(int(p["random_sets"])):
        n1, n2 = (int(x) for x in rng.integers(1, int(p["max_members"]) + 1, size=2))
        P = _disc(rng, n1)
        Q = _disc(rng, n2)
        Ah, Bh = hs.HyperPoint(E2, P), hs.HyperPoint(E2, Q)
        iso = max(iso, hs.verify_hypersegment_isometry(Ah, [0.0, 0.0]).max_deviation)
        hyp = max(hyp, hs.verify_hyperbolic_inequality_singleton(Ah, Bh, [0.0, 0.0]).max_deviation)
        pts = sp.random_points(H, 2 + n1, rng, 1.5)
        hyp_h = max(hyp_h, hs.verify_hyperbolic_inequality_singleton(
            hs.HyperPoint(H, pts[:1]), hs.HyperPoint(H, pts[1:2]), E=hs.HyperPoint(H, pts[2:])).max_deviation)
    for name, val, tol in (("hypersegment_isometry", iso, sp.METRIC_TOL),
                           ("hyperbolic_inequality_euclidean", hyp, sp.METRIC_TOL),
                           ("hyperbolic_inequality_hyperbolic", hyp_h, sp.NUMERIC_TOL)):
        res.rows.append({"check": name, "value": val, "expected": 0.0, "passed": val <= tol})
    res.payload = {"h_AB": hAB, "midpoint_set": mid.members.tolist(), "h_midpoint_A": h_mid,
                   "half_h_AB": 0.5 * hAB, "isometry_max_deviation": iso,
                   "hyperbolic_inequality_euclidean": hyp, "hyperbolic_inequality_hyperbolic": hyp_h}
    res.certificates = {r["check"]: bool(r["passed"]) for r in res.rows}
    return res


def _disc(rng, n) -> np.ndarray:
    ang = rng.uniform(0.0, 2.0 * math.pi, size=n)
    rad = np.sqrt(rng.uniform(size=n))
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)


SUITES = {
    "spaces": run_spaces,
    "catcheck": run_catcheck,
    "extension": run_extension,
    "porosity": run_porosity,
    "hyperspace": run_hyperspace,
}


def run(name: str, params: dict = None, seed: int = 0) -> SuiteResult:
    return SUITES[name](params or {}, int(seed))
