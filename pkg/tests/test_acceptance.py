"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from geoporous import cli
from geoporous import formulas as fm
from geoporous import hyperspace as hs
from geoporous import mappings as mp
from geoporous import porosity as po
from geoporous import regions as rg
from geoporous import spaces as sp
from geoporous import suites
from geoporous.suites import constant_scenario

import oracles


@pytest.fixture
def emit(capsys):
    def _emit(number: int, ok: bool, elapsed: float, limit: float, detail: str):
        status = "PASS" if ok and elapsed < limit else "FAIL"
        with capsys.disabled():
            print(f"\n[acceptance {number}] {status}  {elapsed:.2f}s (limit {limit:g}s)  {detail}")
    return _emit


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# ---------------------------------------------------------------- 1


def test_criterion_1_hyperspace_golden_values(emit):
    def body():
        E2 = sp.euclidean(2)
        square = rg.box_region([-1.0, -1.0], [1.0, 1.0], 5)
        A = hs.HyperPoint(E2, [[-1.0, -1.0], [-1.0, 1.0]], square)
        B = hs.HyperPoint(E2, [[1.0, -1.0], [1.0, 1.0]], square)
        mid = hs.minkowski_combination(A, B, 0.5)
        return hs.hausdorff_distance(A, B), hs.hausdorff_distance(mid, A)

    (h_ab, h_mid), dt = timed(body)
    ok = h_ab == 2.0 and abs(h_mid - math.sqrt(2.0)) <= 1e-12
    emit(1, ok, dt, 1.0, f"h(A,B)={h_ab!r} h(mid,A)-sqrt2={h_mid - math.sqrt(2):.2e}")
    assert h_ab == 2.0
    assert abs(h_mid - math.sqrt(2.0)) <= 1e-12
    assert dt < 1.0


# ---------------------------------------------------------------- 2


def test_criterion_2_star_example(emit):
    def body():
        R = rg.two_segment_star()
        ctx = mp.MappingSpaceContext(R, R, np.zeros(2))
        f = mp.SampledMapping.from_formula(ctx, fm.star_example_mapping(), check=False)
        rep = mp.lipschitz_constants(f)
        e, u = rg.arm_direction()
        ie = int(np.argmin(np.linalg.norm(R.samples - e, axis=1)))
        iu = int(np.argmin(np.linalg.norm(R.samples - u, axis=1)))
        q_eu = f.range_distances()[ie, iu] / f.domain_distances()[ie, iu]
        return len(R.samples), rep, q_eu, (R.samples[ie], R.samples[iu]), (e, u)

    (n, rep, q_eu, (se, su), (e, u)), dt = timed(body)
    worst_local = float(np.nanmax(rep.pointwise))
    ok = (n == 200 and worst_local <= 0.52 and rep.global_lip >= 0.98 and q_eu >= 0.98
          and np.allclose(se, e, atol=1e-12) and np.allclose(su, u, atol=1e-12))
    emit(2, ok, dt, 1.0, f"max pointwise lip={worst_local:.4f} global={rep.global_lip:.4f} quotient(e,u)={q_eu:.6f}")
    assert n == 200
    assert np.allclose(se, e, atol=1e-12) and np.allclose(su, u, atol=1e-12)
    assert worst_local <= 0.52
    assert rep.global_lip >= 0.98
    assert q_eu >= 0.98
    assert dt < 1.0


# ---------------------------------------------------------------- 3


def test_criterion_3_segment_isometry(emit):
    res, dt = timed(lambda: suites.run_spaces({"n": 1000}, 42))
    devs = res.payload["segment_isometry"]
    ok = res.passed and all(v["max_deviation"] <= (1e-6 if k in ("sphere", "hyperbolic") else 1e-9)
                            for k, v in devs.items())
    emit(3, ok, dt, 5.0, " ".join(f"{k}={v['max_deviation']:.1e}" for k, v in devs.items()))
    assert set(devs) == {"euclidean", "sup_norm", "sphere", "hyperbolic"}
    for kind in ("euclidean", "sup_norm"):
        assert devs[kind]["max_deviation"] <= 1e-9
    for kind in ("sphere", "hyperbolic"):
        assert devs[kind]["max_deviation"] <= 1e-6
    assert dt < 5.0


# ---------------------------------------------------------------- 4


def test_criterion_4_extension(emit):
    res, dt = timed(lambda: suites.run_extension({"sources": 20, "pairs": 10_000, "q": 0.5, "q_prime": 0.75}, 42))
    P = res.payload
    ok = (res.passed and P["N"] == 5 and P["max_agreement_error"] <= 1e-9
          and P["max_global_quotient"] <= 1 + 1e-9 and P["max_local_quotient"] <= 0.75 + 1e-9)
    emit(4, ok, dt, 30.0, f"N={P['N']} agreement={P['max_agreement_error']:.1e} "
                          f"global={P['max_global_quotient']:.4f} local={P['max_local_quotient']:.4f}")
    assert P["N"] == 5
    assert len(res.rows) == 20
    assert P["max_agreement_error"] <= 1e-9
    assert P["max_global_quotient"] <= 1 + 1e-9
    assert P["max_local_quotient"] <= 0.75 + 1e-9
    assert res.passed
    assert dt < 30.0


# ---------------------------------------------------------------- 5


def test_criterion_5_porosity_witness(emit):
    res, dt = timed(lambda: suites.run_porosity({"cell": [0.5, 0.505, 2], "trials": 100}, 42))
    P = res.payload
    cell, G, ball = P["cell"], P["G_conditions"], P["ball_exclusion"]
    ok = (res.passed and cell["width"] < cell["width_bound"] and abs(cell["sigma"] - 0.16) <= 1e-12
          and abs(cell["threshold"] - 0.51) <= 1e-12 and G["steepness"] > 0.52
          and ball["trials"] == 100 and not ball["failed_trials"] and ball["min_restricted_lip"] > 0.505)
    emit(5, ok, dt, 60.0, f"sigma={cell['sigma']:.4f} steepness={G['steepness']:.4f} "
                          f"radius={ball['radius']:.3e} min lip={ball['min_restricted_lip']:.5f}")
    assert cell["width"] == pytest.approx(0.005, abs=1e-15)
    assert cell["width_bound"] == pytest.approx(0.5 / 48, abs=1e-15)
    assert cell["width"] < cell["width_bound"]
    assert cell["sigma"] == pytest.approx(0.16, abs=1e-12)
    assert cell["threshold"] == pytest.approx(0.51, abs=1e-12) and cell["threshold"] > 0.505
    for key in ("maps_into_ok", "distance_to_F_ok", "lip_G_ok", "steepness_ok", "u_s_on_gamma_ok"):
        assert G[key], key
    assert G["steepness"] > 0.52
    plan = P["plan"]
    want_radius = 0.5 * plan["sigma"] * plan["eps"] / (32 * (1 + abs(plan["u0"][0])))
    assert ball["radius"] == pytest.approx(want_radius, rel=1e-12)
    assert ball["max_d_theta"] <= ball["radius"] * (1 + 1e-12)
    assert ball["trials"] == 100 and ball["failed_trials"] == []
    assert ball["min_restricted_lip"] > 0.505
    assert res.passed, res.failed
    assert dt < 60.0


# ---------------------------------------------------------------- 6


def test_criterion_6_constant_witness(emit):
    def body():
        f, U = constant_scenario()
        return po.constant_mapping_witness(f, U, y0=[1.0, 0.0], sigma=0.2, eps=0.1, r=0.5, u0=[1.0],
                                           trials=100, seed=42)

    (g, plan, cert), dt = timed(body)
    rho_theta = abs(plan.u0[0] - g.context.theta[0])
    want_radius = plan.sigma * plan.eps / (6 * (1 + rho_theta + plan.eps0))
    disp_err = abs(cert.displacement - plan.sigma * plan.eps / 2)
    ok = (cert.passed and disp_err <= 1e-9 and cert.trials == 100 and not cert.failed_trials
          and abs(cert.trial_radius - want_radius) <= 1e-15)
    emit(6, ok, dt, 10.0, f"displacement error={disp_err:.1e} radius={cert.trial_radius:.4e} "
                          f"min spread={cert.spreads.min():.4f}")
    assert disp_err <= 1e-9
    assert cert.trial_radius == pytest.approx(want_radius, rel=1e-12)
    assert cert.trials == 100 and cert.failed_trials == ()
    assert np.all(cert.spreads > 0)
    assert np.all(cert.d_theta <= cert.trial_radius * (1 + 1e-12))
    assert cert.passed
    assert dt < 10.0


# ---------------------------------------------------------------- 7


def test_criterion_7_catcheck(emit):
    res, dt = timed(lambda: suites.run_catcheck({"triangles": 100, "delta_pairs": 20, "sigma": 0.1}, 42))
    P = res.payload
    ok = (res.passed and P["sphere_self_max_violation"] <= 1e-6 and P["euclidean_in_M1_max_violation"] <= 1e-6
          and len(P["deltas"]) == 20 and min(P["deltas"]) > 0 and P["coincident"]["worst_ratio"] <= 1.0)
    emit(7, ok, dt, 60.0, f"self={P['sphere_self_max_violation']:.1e} flat={P['euclidean_in_M1_max_violation']:.1e} "
                          f"min delta={min(P['deltas']):.3e} coincident ratio={P['coincident']['worst_ratio']}")
    assert P["sphere_self_max_violation"] <= 1e-6
    assert P["euclidean_in_M1_max_violation"] <= 1e-6
    assert len(P["deltas"]) == 20 and min(P["deltas"]) > 0
    assert all(r["passed"] for r in res.rows if r["check"] == "delta")
    assert P["coincident"]["worst_ratio"] <= 1.0
    assert res.passed, res.failed
    assert dt < 60.0


# ---------------------------------------------------------------- 8


def test_criterion_8_oracle_equivalence(emit):
    def body():
        rng = np.random.default_rng(42)
        E2 = sp.euclidean(2)
        mismatches = 0
        for _ in range(500):
            a = rng.uniform(-1, 1, (int(rng.integers(1, 9)), 2))
            b = rng.uniform(-1, 1, (int(rng.integers(1, 9)), 2))
            got = hs.hausdorff_distance(hs.HyperPoint(E2, a), hs.HyperPoint(E2, b))
            if got != oracles.hausdorff(a.tolist(), b.tolist()):
                mismatches += 1
        worst = 0.0
        for _ in range(100):
            n, m, d = int(rng.integers(3, 15)), int(rng.integers(2, 6)), int(rng.integers(1, 4))
            X = rng.uniform(-1, 1, (n, d))
            C = rng.uniform(-1, 1, (n, m))
            rep = mp.componentwise_lip_identity(sp.euclidean(d), X, C)
            worst = max(worst, rep.lip_gap, rep.lip_hat_gap)
        return mismatches, worst

    (mismatches, worst), dt = timed(body)
    ok = mismatches == 0 and worst <= 1e-9
    emit(8, ok, dt, 10.0, f"hausdorff mismatches={mismatches}/500 componentwise gap={worst:.1e}")
    assert mismatches == 0
    assert worst <= 1e-9
    assert dt < 10.0


# ---------------------------------------------------------------- 9


def test_criterion_9_determinism(emit):
    def body():
        out = []
        for _ in range(2):
            res = suites.run("porosity", {}, 42)
            # report payload plus the per-trial rows that go to details.csv
            out.append(cli.dumps({"report": cli.report_payload(res, 42), "rows": cli._plain(res.rows)}))
        return out

    (first, second), dt = timed(body)
    ok = first == second
    emit(9, ok, dt, math.inf, f"payload bytes={len(first.encode())} identical={ok}")
    assert first.encode() == second.encode()
