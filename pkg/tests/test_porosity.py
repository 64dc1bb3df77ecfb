from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoporous import formulas as fm
from geoporous import mappings as mp
from geoporous import porosity as po
from geoporous import regions as rg
from geoporous import spaces as sp
from geoporous.errors import HypothesisViolated, NoTargetPoint, PlanInfeasible
from geoporous.suites import constant_scenario, porosity_scenario

E1 = sp.euclidean(1)


# ---------------------------------------------------------------- cells


def test_reference_cell_arithmetic():
    c = po.PorosityCell(0.5, 0.505, 2)
    assert c.feasible
    assert c.width_bound == pytest.approx(0.5 / 48)
    assert c.sigma == pytest.approx(0.16)
    assert c.sigma_product == pytest.approx(0.74)
    assert c.steepness_bound == pytest.approx(0.52)
    assert c.threshold == pytest.approx(0.51)
    assert c.threshold > c.b


@pytest.mark.parametrize("args", [(0.0, 0.5, 2), (0.6, 0.5, 2), (0.5, 1.0, 2), (0.2, 0.3, 1), (0.2, 0.3, 2.5)])
def test_cell_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        po.PorosityCell(*args)


@given(st.floats(0.01, 0.99), st.floats(0.0, 0.999), st.integers(2, 200))
@settings(max_examples=200, deadline=None)
def test_feasible_cells_have_sigma_slack(a, frac, p):
    b = a + frac * a / (48.0 * (p - 1))
    if not a < b < 1.0:
        return
    c = po.PorosityCell(a, b, p)
    assert c.feasible
    assert c.sigma_product <= 1.0 + 1e-12
    assert c.threshold > c.b


def test_lindelof_cover_properties():
    cells = po.lindelof_cover((2, 3, 5))
    for c in cells:
        assert c.feasible
    for p in (2, 3, 5):
        mine = [c for c in cells if c.p == p]
        assert mine[0].a <= 0.02 + 1e-12 and mine[-1].b >= 0.98
        for lo, hi in zip(mine, mine[1:]):
            assert hi.a < lo.b  # consecutive cells overlap
    assert np.all(np.diff([c.a for c in cells if c.p == 2]) > 0)


# ---------------------------------------------------------------- classification


def star_line(n=101):
    C = rg.interval(0.0, 1.0, n)
    return rg.Region(C.space, C.samples, C.membership, star_centers=np.array([[1.0]]), convex=True)


def line_mapping(formula, n=101):
    C = star_line(n)
    return mp.SampledMapping.from_formula(mp.MappingSpaceContext(C, rg.interval(0, 1, 11), np.zeros(1)), formula)


U_MID = rg.open_ball(E1, [0.5], 0.5)


def classify(formula, cells):
    f = line_mapping(formula)
    fam = rg.enumerate_family_G(f.context.domain, U_MID)
    return po.classify_cell(f, U_MID, fam, cells)


def test_classify_half_slope_lands_in_its_cell():
    d = 0.004
    cells = [po.PorosityCell(0.3, 0.302, 2), po.PorosityCell(0.5 - d, 0.5 + d, 2)]
    assert cells[1].feasible
    res = classify(fm.scaled(0.5), cells)
    assert res.tag == "cell" and res.cell_index == 1
    assert res.sup_lip == pytest.approx(0.5, abs=1e-12)


def test_classify_identity_not_in_q():
    res = classify(fm.Identity(), po.lindelof_cover((2, 3)))
    assert res.tag == "NotInQ"
    assert res.extension_estimate == pytest.approx(1.0, abs=1e-9)


def test_classify_constant_is_q0():
    res = classify(fm.Constant(np.array([0.3])), po.lindelof_cover((2,)))
    assert res.tag == "Q0" and res.cell_index is None
    assert res.sup_lip == 0.0 and res.extension_estimate == 0.0


def test_classify_uncovered_when_extension_too_steep():
    # sup lip 0.6 but no listed cell with 1 - 1/p >= 0.6
    res = classify(fm.scaled(0.6), [po.PorosityCell(0.59, 0.6001, 2)])
    assert res.tag == "uncovered"


# ---------------------------------------------------------------- plan, beta and witness


@pytest.fixture(scope="module")
def reference():
    f, U = porosity_scenario()
    cell = po.PorosityCell(0.5, 0.505, 2, U)
    fam = rg.enumerate_family_G(f.context.domain, U)
    member = fam.members[po.best_family_member(f, fam)]
    plan = po.build_plan(f, cell, member, U)
    witness = po.build_witness_G(plan, strict=False)
    return f, U, cell, plan, witness


def test_plan_invariants(reference):
    _, _, _, plan, _ = reference
    inv = plan.check_invariants()
    assert all(inv.values()), inv
    assert plan.sigma == pytest.approx(0.16)
    assert plan.s == pytest.approx(plan.eps / plan.rho)


def test_psi_profile(reference):
    plan = reference[3]
    d = np.array([0.0, 0.2, 0.49, 0.75, 0.999, 1.0, 2.0]) * plan.r
    X = plan.u0[None] + d[:, None]
    v = plan.psi(X)
    assert np.all(v[:3] == 1.0)
    assert v[3] == pytest.approx(0.5)
    assert np.all(v[5:] == 0.0)


def test_lambda_vanishes_at_u0_and_outside(reference):
    plan = reference[3]
    assert plan.lam(plan.u0[None])[0] == 0.0
    far = plan.u0[None] + np.array([[plan.r], [2 * plan.r]])
    assert np.all(plan.lam(far) == 0.0)


def test_beta_conditions(reference):
    plan = reference[3]
    beta = po.check_beta_conditions(plan, "domain")
    assert beta["maps_into"] and beta["displacement_ok"] and beta["lip_ok"]
    X = plan.check_points()
    out = np.linalg.norm(X - plan.u0, axis=1) >= plan.r
    assert np.array_equal(po.perturb_beta(plan, "domain", X[out]), X[out])


def test_beta_displacement_oracle(reference):
    plan = reference[3]
    X = plan.check_points()
    B = po.perturb_beta(plan, "domain", X)
    # euclidean, pi = identity: beta(x) - x = lambda(x) (x0 - x)
    want = plan.lam(X)[:, None] * (plan.x0[None] - X)
    assert np.allclose(B - X, want, atol=1e-15)
    assert np.max(np.abs(B - X)) <= plan.eps + 1e-9


def test_beta_rejects_wrong_side(reference):
    with pytest.raises(ValueError):
        po.perturb_beta(reference[3], "range", np.zeros((1, 1)))


def test_witness_conditions(reference):
    _, _, cell, plan, w = reference
    c = w.conditions
    assert w.passed
    assert c["steepness"] > cell.steepness_bound
    assert c["lip_G"] <= 1 + 1e-9
    assert c["distance_to_F"] <= plan.eps + 1e-9
    # steepness is the direct quotient at the constructed s
    G = plan.G
    direct = abs(G(plan.u_s[None])[0, 0] - G(plan.u0[None])[0, 0]) / (plan.s * plan.rho)
    assert w.steepness == pytest.approx(direct, rel=1e-12)
    assert np.allclose(G(plan.u0[None]), plan.F(plan.u0[None]), atol=1e-15)


def test_alpha_maps_unit_interval_onto_s_one(reference):
    plan = reference[3]
    assert plan.alpha(0.0) == pytest.approx(plan.s)
    assert plan.alpha(1.0) == pytest.approx(1.0)
    assert np.allclose(plan.gamma_point(0.0), plan.u_s)


def test_certificate_passes(reference):
    _, _, cell, plan, w = reference
    cert = po.certify_ball_exclusion(w, trials=30, rng_seed=1)
    assert cert.passed and not cert.failed_trials
    assert cert.excluded_ball_radius == pytest.approx(cell.a * plan.sigma * plan.eps / (32 * (1 + plan.u0[0])))
    assert np.all(cert.d_theta <= cert.excluded_ball_radius * (1 + 1e-12))
    assert cert.min_observed_restricted_lip > cell.b
    # trial 0 is g itself and trial 1 is the flattening adversary
    assert cert.d_theta[0] == 0.0
    assert cert.d_theta[1] == pytest.approx(cert.excluded_ball_radius, rel=1e-6)
    assert cert.quotients[0] >= cell.steepness_bound
    rows = list(cert.rows())
    assert len(rows) == 30 and all(r["passed"] for r in rows)


def test_certificate_fails_honestly_with_a_loose_cell(reference):
    _, U, _, plan, _ = reference
    # same construction judged against b = 0.6, above every observable quotient
    loose = dataclasses.replace(plan, cell=po.PorosityCell(0.5, 0.6, 2, U))
    w = po.build_witness_G(loose, strict=False)
    cert = po.certify_ball_exclusion(w, trials=5, rng_seed=0)
    assert not cert.passed and cert.failed_trials == (0, 1, 2, 3, 4)


def test_plan_rejects_mapping_outside_cell(reference):
    f, U, _, _, _ = reference
    cell = po.PorosityCell(0.3, 0.302, 2, U)
    fam = rg.enumerate_family_G(f.context.domain, U)
    with pytest.raises(HypothesisViolated):
        po.build_plan(f, cell, fam.members[0], U)


def test_trial_projection_is_nonexpansive(reference):
    w = reference[4]
    for _, H in po.trial_mappings(w.g, 1e-3, 6, 0):
        gap = mp.nonexpansive_violation(E1, E1, w.g.domain_samples, H)
        assert gap <= 1e-9


# ---------------------------------------------------------------- constant mappings


@pytest.fixture(scope="module")
def constant_witness():
    f, U = constant_scenario()
    return po.constant_mapping_witness(f, U, y0=[1.0, 0.0], sigma=0.2, eps=0.1, r=0.5, u0=[1.0], trials=30)


def test_constant_displacement(constant_witness):
    g, plan, cert = constant_witness
    assert cert.displacement == pytest.approx(0.2 * 0.1 / 2, abs=1e-9)
    assert cert.expected_displacement == pytest.approx(0.01)
    assert cert.passed
    assert cert.displacement > 2 * plan.sigma * plan.eps / 6


def test_constant_lambda_zero_at_segment_end(constant_witness):
    g, plan, cert = constant_witness
    u_e = plan.u_eps
    assert plan.lam(u_e[None])[0] == 0.0
    assert np.allclose(plan.G(u_e[None]), plan.F(u_e[None]))
    assert cert.conditions["lip_G_ok"] and cert.conditions["maps_into_ok"]


def test_constant_trials_stay_nonconstant(constant_witness):
    _, plan, cert = constant_witness
    assert cert.trial_radius == pytest.approx(0.2 * 0.1 / (6 * (1 + 1.0 + plan.eps0)))
    assert np.all(cert.spreads > 0) and not cert.failed_trials
    assert np.all(cert.d_theta <= cert.trial_radius * (1 + 1e-12))


def test_constant_witness_needs_constant_mapping():
    f, U = porosity_scenario()
    with pytest.raises(HypothesisViolated):
        po.constant_mapping_witness(f, U)


def test_no_target_point():
    C = star_line(21)
    Y = rg.Region(E1, np.array([[0.3]]), rg.Ball(np.array([0.3]), 0.0, open=False), convex=True)
    f = mp.SampledMapping.from_formula(mp.MappingSpaceContext(C, Y, np.zeros(1)), fm.Constant(np.array([0.3])))
    with pytest.raises(NoTargetPoint):
        po.choose_target(f, np.array([0.5]), C.samples)


def test_constant_sigma_too_large():
    f, U = constant_scenario()
    with pytest.raises(PlanInfeasible):
        po.constant_mapping_witness(f, U, y0=[1.0, 0.0], sigma=0.6, eps=0.1, r=0.5, u0=[1.0], trials=2)


def test_constant_witness_with_default_target_and_radius():
    f, U = constant_scenario()
    g, plan, cert = po.constant_mapping_witness(f, U, trials=10)
    # y0 defaults to the nearest range sample to f(u0) = (0, 0)
    assert plan.rho_target == pytest.approx(0.2)
    assert plan.r < plan.r0 and plan.eps < plan.eps0
    assert cert.passed
