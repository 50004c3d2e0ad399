from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mocstab.models import ALL_CONSTANT_SOLUTIONS, FIBER_MODELS, ConstantSolution, linearize, main_model, model_by_name, reference_p
from mocstab.smallmat import eigenvalues, quad_eigenvalues
from mocstab.vonneumann import (
    SchemeKind,
    StabilityClass,
    SweepError,
    SweepResult,
    amplification_crk,
    amplification_eigenvalues,
    amplification_lf,
    amplification_me,
    amplification_se,
    classify_fiber_systems,
    classify_system,
    growth_rate,
    max_abs_lambda,
    physical_dispersion,
    q_matrix,
    sweep,
    theoretical_rate_me_endpoint,
    theoretical_rate_se,
)
from oracles import leapfrog_blocks, two_level_matrix

P = reference_p()
SCHEMES = list(SchemeKind)
FULL_2M = linearize(main_model(), ConstantSolution(2, -1)).p


def test_q_matrix_examples():
    assert np.allclose(q_matrix(0, 4), np.eye(4))
    assert np.allclose(q_matrix(math.pi, 4), -np.eye(4))
    assert np.allclose(q_matrix(math.pi / 2, 4), -1j * np.diag([1, 1, -1, -1]))
    with pytest.raises(ValueError):
        q_matrix(0.1, 3)


def test_scheme_parse():
    assert SchemeKind.parse("LF") is SchemeKind.LF
    assert SchemeKind.parse(SchemeKind.ME) is SchemeKind.ME
    with pytest.raises(ValueError, match="unknown scheme"):
        SchemeKind.parse("rk2")


def test_bad_p_shape():
    with pytest.raises(ValueError):
        amplification_se(0.1, 0.1, np.zeros((3, 3)))


@pytest.mark.parametrize("h", [0.01, 0.04])
def test_se_endpoints(h):
    expected = math.sqrt(1 + 6 * h * h)
    assert abs(max_abs_lambda("se", 0.0, h, P) - expected) < 1e-12
    assert abs(max_abs_lambda("se", math.pi, h, P) - expected) < 1e-12


def test_se_interior_dips():
    res = sweep("se", 0.04, P, 201)
    assert res.max_abs[100] < res.max_abs[0]
    assert theoretical_rate_se(0.04, P) == pytest.approx(0.04 / 2 * 6)


@pytest.mark.parametrize("h", [0.01, 0.02, 0.05])
def test_me_examples(h):
    assert abs(max_abs_lambda("me", 0.0, h, P) - math.sqrt(1 + h**4 / 4 * 36)) < 1e-12
    assert max_abs_lambda("me", math.pi / 2, h, P) - 1 == pytest.approx(h * h, rel=0.1)
    res = sweep("me", h, P, 401)
    z_peak, _ = res.peak()
    assert abs(z_peak - math.pi / 2) < 0.2
    # the floor of the curve is 1 up to the O(h^4) endpoint excess
    assert 1 - 1e-12 <= res.max_abs.min() <= 1 + 5 * h**4


def test_me_endpoint_rate_helper():
    h = 0.01
    gamma = growth_rate(max_abs_lambda("me", 0.0, h, P), h)
    assert gamma == pytest.approx(theoretical_rate_me_endpoint(h, P), rel=0.01)


def test_lf_endpoints_unit_and_pmod():
    for z in (0.0, math.pi):
        assert np.allclose(np.abs(amplification_eigenvalues("lf", z, 0.04, P)), 1, atol=1e-10)
    pmod = q_matrix(math.pi / 2, 4) @ P
    eig = eigenvalues(pmod)
    assert np.sort(np.abs(eig))[:2] == pytest.approx([0, 0], abs=1e-10)
    assert np.sort(eig.imag)[[0, -1]] == pytest.approx([-math.sqrt(2), math.sqrt(2)], abs=1e-10)
    assert np.max(np.abs(eig.real)) < 1e-10


def test_lf_ode_limit_factors():
    # at z = 0 the pencil factors into scalar problems lam^2 - 2 h mu lam - 1 for each eigenvalue mu of P
    h = 0.1
    lam = quad_eigenvalues(amplification_lf(0.0, h, P))
    for mu in (1j * math.sqrt(6), -1j * math.sqrt(6)):
        for root in (h * mu + np.sqrt((h * mu) ** 2 + 1), h * mu - np.sqrt((h * mu) ** 2 + 1)):
            assert np.min(np.abs(lam - root)) < 1e-10


@pytest.mark.parametrize("h", [0.01, 0.04])
def test_lf_peak_rate(h):
    res = sweep("lf", h, P, 2001)
    z_peak, peak = res.peak()
    assert abs(z_peak - math.pi / 2) < 0.2
    assert (peak - 1) / h == pytest.approx(1.5, abs=0.1)


def test_crk_ode_limit_is_rk4_polynomial():
    h = 0.2
    hp = h * P
    rk4 = np.eye(4) + hp + hp @ hp / 2 + hp @ hp @ hp / 6 + hp @ hp @ hp @ hp / 24
    assert np.allclose(amplification_crk(0.0, h, P), rk4, atol=1e-15)


@pytest.mark.parametrize("h", [0.01, 0.04])
def test_crk_twice_me_at_mid(h):
    z = math.pi / 2
    ratio = growth_rate(max_abs_lambda("crk", z, h, P), h) / growth_rate(max_abs_lambda("me", z, h, P), h)
    assert 1.8 <= ratio <= 2.2


@pytest.mark.parametrize("scheme,builder", [("se", amplification_se), ("me", amplification_me), ("crk", amplification_crk)])
@pytest.mark.parametrize("q", [0, 5, 16, 27, 32])
def test_two_level_formula_matches_nonlinear_step(scheme, builder, q):
    nodes, h, eps = 64, 0.3, 1e-7
    numeric = two_level_matrix(scheme, main_model(), ConstantSolution(2, -1).vectors(), nodes, q, h, eps)
    exact = builder(2 * math.pi * q / nodes, h, FULL_2M)
    assert np.max(np.abs(numeric - exact)) < 100 * eps


@pytest.mark.parametrize("name", FIBER_MODELS)
@pytest.mark.parametrize("sol", ALL_CONSTANT_SOLUTIONS[::2], ids=lambda s: s.name)
def test_crk_formula_on_fiber_systems(name, sol):
    model = model_by_name(name)
    p = linearize(model, sol).p
    numeric = two_level_matrix("crk", model, sol.vectors(), 32, 7, 0.25)
    assert np.max(np.abs(numeric - amplification_crk(2 * math.pi * 7 / 32, 0.25, p))) < 1e-5


@pytest.mark.parametrize("q", [0, 9, 16])
def test_lf_pencil_matches_nonlinear_step(q):
    nodes, h = 64, 0.3
    a_prev, a_cur = leapfrog_blocks(main_model(), ConstantSolution(2, -1).vectors(), nodes, q, h)
    pencil = amplification_lf(2 * math.pi * q / nodes, h, FULL_2M)
    # s_new = A_prev s_prev + A_cur s_cur  <=>  lam^2 - lam A_cur - A_prev = 0
    assert np.max(np.abs(-a_cur - pencil.a1)) < 1e-6
    assert np.max(np.abs(-a_prev - pencil.a0)) < 1e-6


@pytest.mark.parametrize("scheme", SCHEMES)
def test_zero_coupling_is_flat(scheme):
    res = sweep(scheme, 0.04, np.zeros((4, 4)), 101)
    assert np.allclose(res.max_abs, 1.0, atol=1e-12)


@pytest.mark.parametrize("name", ["main"] + list(FIBER_MODELS))
def test_lf_reflection_symmetry(name):
    model = model_by_name(name)
    sols = [ConstantSolution(2, -1)] if name == "main" else ALL_CONSTANT_SOLUTIONS
    for sol in sols:
        res = sweep("lf", 0.04, linearize(model, sol).p, 201)
        assert np.max(np.abs(res.max_abs - res.max_abs[::-1])) < 1e-8


@pytest.mark.parametrize("scheme", ["se", "me", "crk"])
@pytest.mark.parametrize("name", ["main"] + list(FIBER_MODELS))
def test_endpoint_symmetry(scheme, name):
    model = model_by_name(name)
    sols = [ConstantSolution(2, -1)] if name == "main" else ALL_CONSTANT_SOLUTIONS
    for sol in sols:
        p = linearize(model, sol).p
        assert abs(max_abs_lambda(scheme, math.pi, 0.04, p) - max_abs_lambda(scheme, 0.0, 0.04, p)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(z=st.floats(0, math.pi), h=st.floats(1e-3, 0.5))
def test_se_determinant_identity(z, h):
    n_se = amplification_se(z, h, P)
    expected = np.linalg.det(q_matrix(z, 4)) * np.linalg.det(np.eye(4) + h * P)
    assert abs(np.linalg.det(n_se) - expected) < 1e-10
    assert abs(np.prod(eigenvalues(n_se)) - expected) < 1e-10


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("h", [0.01, 0.04])
def test_full_and_reduced_agree(scheme, h):
    full = sweep(scheme, h, FULL_2M, 201)
    red = sweep(scheme, h, P, 201)
    assert np.max(np.abs(np.maximum(1, full.max_abs) - np.maximum(1, red.max_abs))) < 1e-10


def test_dispersion_examples():
    omega = physical_dispersion(P, np.diag([1, 1, -1, -1]), 0.0)
    assert np.max(np.abs(omega.imag)) < 1e-10
    assert np.sort(omega.real) == pytest.approx([-math.sqrt(6), 0, 0, math.sqrt(6)], abs=1e-10)
    omega = physical_dispersion(np.zeros((2, 2)), np.diag([1, -1]), 1.7)
    assert np.sort(omega.real) == pytest.approx([-1.7, 1.7])
    lin = linearize(model_by_name("spun"), ConstantSolution(1, -1))
    assert np.max(np.abs(physical_dispersion(lin.p, lin.sigma, 0.0).imag)) > 1e-3


def test_classify_examples():
    assert classify_system(model_by_name("spun"), ConstantSolution(2, -1)) is StabilityClass.STABLE
    assert classify_system(model_by_name("isotropic"), ConstantSolution(3, -1)) is StabilityClass.UNSTABLE_AT_K_ZERO
    with pytest.raises(ValueError):
        classify_system(main_model(), ConstantSolution(2, -1), k_grid=np.linspace(1, 2, 5))


def test_classification_counts_and_memberships():
    rows = classify_fiber_systems()
    assert len(rows) == 18
    by_class = {c: {(r.model, r.solution) for r in rows if r.stability is c} for c in StabilityClass}
    assert by_class[StabilityClass.STABLE] == {
        ("spun", "1+"), ("spun", "2-"), ("spun", "3-"),
        ("random", "1-"), ("random", "2+"), ("random", "3-"),
        ("isotropic", "3+"),
    }
    assert by_class[StabilityClass.UNSTABLE_AT_K_ZERO] == {("spun", "1-"), ("spun", "2+"), ("isotropic", "3-")}
    assert len(by_class[StabilityClass.UNSTABLE_K_NONZERO_ONLY]) == 8


def test_reduced_classification_agrees_with_full():
    for name in FIBER_MODELS:
        for sol in ALL_CONSTANT_SOLUTIONS:
            k = np.linspace(0, 10, 401)
            model = model_by_name(name)
            assert classify_system(model, sol, k) is classify_system(model, sol, k, reduced=True)


def test_sweep_csv_round_trip():
    res = sweep("lf", 0.04, P, 33, model="main", solution="2-")
    text = res.to_csv()
    again = SweepResult.from_csv(text)
    assert again.to_csv() == text
    assert again.scheme is SchemeKind.LF and again.model == "main"
    assert text.splitlines()[1] == "z,max_abs_lambda,gamma"


def test_sweep_validation():
    with pytest.raises(ValueError):
        sweep("se", 0.04, P, 1)
    with pytest.raises(ValueError):
        sweep("se", -0.1, P, 5)
    with pytest.raises(ValueError):
        SweepResult(SchemeKind.SE, 0.1, [0, 0], [1, 1])
    with pytest.raises(ValueError):
        SweepResult.from_csv("z,max_abs_lambda,gamma\n0,1,0\n")


def test_sweep_error_carries_z(monkeypatch):
    import mocstab.vonneumann as vn
    from mocstab.smallmat import ConvergenceError

    def boom(*args, **kwargs):
        raise ConvergenceError("stuck", 1, 2)

    monkeypatch.setattr(vn, "max_abs_lambda", boom)
    with pytest.raises(SweepError) as info:
        vn.sweep("se", 0.1, P, 3)
    assert info.value.z == 0.0


def test_peak_refinement_on_parabola():
    z = np.linspace(0, 1, 11)
    res = SweepResult(SchemeKind.ME, 0.1, z, 2 - (z - 0.43) ** 2)
    zp, vp = res.peak()
    assert zp == pytest.approx(0.43) and vp == pytest.approx(2.0)
