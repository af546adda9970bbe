"""Formula identities, xi solvers, degree-probability integrals."""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from rggcrit.errors import DomainError, RegimeError
from rggcrit.geometry import Region, VolumeEstimate, ball_volume, segment_profile, unit_ball_volume
from rggcrit.theory import (
    TheoryParams,
    critical_radius,
    decompose_psi_integral,
    denom_coeff,
    gumbel_cdf,
    gumbel_quantile,
    halfspace_ratio,
    integrate_psi,
    lemma1_lhs,
    lemma1_rhs,
    loglog_coeff,
    poisson_pmf,
    psi,
    solve_xi,
    solve_xi_2d,
)

CUBE3 = Region("cube", 3)


def xi_equation_lhs(d, k, area, xi):
    """Direct evaluation of the xi-defining equation's left side."""
    b = (d - 1) / d
    return (area * b**k * denom_coeff(d) ** b
            / (math.exp(b * xi) * unit_ball_volume(d - 1) * math.factorial(k)))


def test_proof_identities():
    for d in range(2, 9):
        for k in range(6):
            b = halfspace_ratio(d)
            assert abs(b + 1.0 / d - 1.0) < 1e-12
            assert abs(b * loglog_coeff(d, k) + 1.0 - 1.0 / d - k) < 1e-12


def test_solve_xi_back_substitution():
    for d in range(3, 7):
        for k in range(5):
            for c in (-1.0, 0.0, 1.0, 2.0):
                for area in (6.0, 4.836):
                    xi = solve_xi(d, k, c, area)
                    res = abs(xi_equation_lhs(d, k, area, xi) - math.exp(-c))
                    assert res <= 1e-12 * math.exp(-c)


def test_solve_xi_matches_root_finder():
    # the closed form inverts the equation that a root finder solves
    for d, k, c, area in ((3, 0, 1.0, 6.0), (4, 2, -0.5, 4.836), (6, 1, 2.0, 6.0)):
        closed = solve_xi(d, k, c, area)
        rooted = brentq(lambda x: xi_equation_lhs(d, k, area, x) - math.exp(-c),
                        closed - 50, closed + 50, xtol=1e-13)
        assert closed == pytest.approx(rooted, abs=1e-10)


def test_solve_xi_theorem2_consistency():
    # the d=3 instance reproduces the 3-D equation with pi^(-1/3)
    for k in range(4):
        for c in (0.0, 1.0):
            xi = solve_xi(3, k, c, 6.0)
            lhs = 6.0 * math.pi ** (-1.0 / 3.0) * math.exp(-2.0 * xi / 3.0) \
                * (2.0 / 3.0) ** k / math.factorial(k)
            assert abs(lhs - math.exp(-c)) <= 1e-12 * math.exp(-c)


def test_solve_xi_area_doubling_shift():
    for d in (3, 5):
        base = solve_xi(d, 2, 0.7, 3.0)
        doubled = solve_xi(d, 2, 0.7, 6.0)
        assert doubled - base == pytest.approx(d / (d - 1) * math.log(2.0), rel=1e-12)


def test_solve_xi_domain():
    with pytest.raises(DomainError):
        solve_xi(2, 1, 0.0, 4.0)
    with pytest.raises(DomainError):
        solve_xi(3, 0, 0.0, -1.0)


def test_solve_xi_2d_branches():
    # k=2, l=4, c=0 frozen: 2 log(sqrt(pi)/4)
    assert solve_xi_2d(2, 0.0, 4.0) == pytest.approx(
        2.0 * math.log(math.sqrt(math.pi) / 4.0), rel=1e-13)
    # k=1: the outer log argument stays positive for any c, l
    for c in (-3.0, 0.0, 5.0):
        for l in (0.5, 4.0, 50.0):
            root = math.sqrt(math.exp(-c) + math.pi * l * l / 64.0)
            assert root > l * math.sqrt(math.pi) / 8.0
            assert math.isfinite(solve_xi_2d(1, c, l))
    # k>1 linearity in c: shifting c by delta shifts xi by exactly 2 delta
    for k in (2, 3, 5):
        assert solve_xi_2d(k, 1.7, 4.0) - solve_xi_2d(k, 0.7, 4.0) == pytest.approx(2.0)
    assert solve_xi_2d(0, 1.0, 4.0) is None
    with pytest.raises(DomainError):
        solve_xi_2d(-1, 0.0, 4.0)


def test_critical_radius_d3_matches_explicit_formula():
    # independent evaluation of the 3-D radius expression
    for k in (0, 1, 3):
        for c in (0.0, 1.0):
            params = TheoryParams(3, k, c, 1e6, CUBE3)
            dc = critical_radius(params)
            xi = solve_xi(3, k, c, 6.0)
            expect = ((math.log(1e6) + (3 * k / 2 - 1) * math.log(math.log(1e6)) + xi)
                      / (math.pi * 1e6)) ** (1.0 / 3.0)
            assert dc.r_n == pytest.approx(expect, rel=1e-12)
            assert dc.c_d == pytest.approx(math.pi, rel=1e-12)
            assert dc.c_k == pytest.approx(3 * k / 2 - 1, rel=1e-12)


def test_critical_radius_d2_branches():
    sq = Region("cube", 2)
    params = TheoryParams(2, 0, 1.5, 1e5, sq)
    assert critical_radius(params).r_n == pytest.approx(
        math.sqrt((math.log(1e5) + 1.5) / (math.pi * 1e5)), rel=1e-12)
    params = TheoryParams(2, 2, 0.0, 1e5, sq)
    xi = solve_xi_2d(2, 0.0, 4.0)
    expect = math.sqrt((math.log(1e5) + 3 * math.log(math.log(1e5)) + xi) / (math.pi * 1e5))
    assert critical_radius(params).r_n == pytest.approx(expect, rel=1e-12)


def test_critical_radius_monotone_in_n():
    for d, k in ((3, 0), (4, 2)):
        radii = [critical_radius(TheoryParams(d, k, 1.0, n, Region("cube", d))).r_n
                 for n in np.geomspace(1e4, 1e10, 13)]
        assert all(a > b for a, b in zip(radii, radii[1:]))


def test_critical_radius_regime_error_names_minimum_n():
    params = TheoryParams(3, 0, -9.0, 5.0, CUBE3)
    with pytest.raises(RegimeError) as err:
        critical_radius(params)
    assert "admissible n" in str(err.value)


def test_gumbel_cdf_quantile():
    assert gumbel_cdf(0.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert gumbel_cdf(50.0) == pytest.approx(1.0, abs=1e-12)
    assert gumbel_cdf(-30.0) == pytest.approx(0.0, abs=1e-12)
    assert gumbel_quantile(gumbel_cdf(1.7)) == pytest.approx(1.7, abs=1e-12)
    cs = np.linspace(-4, 8, 50)
    vals = [gumbel_cdf(float(c)) for c in cs]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        gumbel_quantile(0.0)
    with pytest.raises(DomainError):
        gumbel_quantile(1.0)


def test_psi_poisson_values():
    p0 = TheoryParams(3, 0, 1.0, 100.0, CUBE3)
    zero = VolumeEstimate(0.0, 0.0, "exact")
    assert psi(p0, np.zeros(3), 0.1, zero) == 1.0
    p2 = TheoryParams(3, 2, 1.0, 100.0, CUBE3)
    assert psi(p2, np.zeros(3), 0.1, zero) == 0.0
    # k=2, n v = 2 -> 2 e^-2
    v = VolumeEstimate(0.02, 0.0, "exact")
    assert psi(p2, np.zeros(3), 0.4, v) == pytest.approx(2.0 * math.exp(-2.0), rel=1e-12)


def test_poisson_pmf_log_space_matches_direct():
    rng = np.random.default_rng(3)
    for _ in range(200):
        k = int(rng.integers(0, 20))
        mean = float(rng.uniform(0.01, 80.0))
        direct = mean**k * math.exp(-mean) / math.factorial(k)
        if direct > 0:
            assert poisson_pmf(k, mean) == pytest.approx(direct, rel=1e-10)
    assert poisson_pmf(150, 3000.0) >= 0.0  # no overflow in log space


def test_lemma1_rhs_special_cases():
    # planar case: 1/2^(k+1) sqrt(pi) / (e^(xi/2) k!)
    for k in (1, 2, 4):
        for xi in (0.0, 1.3):
            expect = math.sqrt(math.pi) / (2.0 ** (k + 1) * math.exp(xi / 2) * math.factorial(k))
            assert lemma1_rhs(2, k, xi) == pytest.approx(expect, rel=1e-12)
    # 3-D case: (2/3)^k / (e^(2 xi/3) pi^(1/3) k!)
    for k in (0, 1, 3):
        for xi in (0.0, -0.8):
            expect = (2.0 / 3.0) ** k / (math.exp(2 * xi / 3) * math.pi ** (1.0 / 3.0)
                                         * math.factorial(k))
            assert lemma1_rhs(3, k, xi) == pytest.approx(expect, rel=1e-12)


def test_lemma1_lhs_matches_riemann_oracle():
    d, k, n = 3, 1, 1e6
    numer = math.log(n) + loglog_coeff(d, k) * math.log(math.log(n))
    r = (numer / (denom_coeff(d) * n)) ** (1.0 / d)
    t = (np.arange(400_000) + 0.5) * (0.5 * r / 400_000)
    a = np.asarray(segment_profile(d, r, t))
    pmf = np.exp(k * np.log(n * a) - n * a - math.lgamma(k + 1))
    brute = n * float(pmf.sum()) * (0.5 * r / 400_000)
    assert lemma1_lhs(d, k, n, 0.0) == pytest.approx(brute, rel=1e-7)


def test_lemma1_ratio_improves_with_n():
    dev_small = abs(lemma1_lhs(3, 0, 1e4, 0.0) / lemma1_rhs(3, 0, 0.0) - 1.0)
    dev_large = abs(lemma1_lhs(3, 0, 1e8, 0.0) / lemma1_rhs(3, 0, 0.0) - 1.0)
    assert dev_large < dev_small


def test_integrate_psi_interior_only_is_small():
    # interior term at the critical radius is a vanishing share of e^-c
    params = TheoryParams(3, 0, 1.0, 1e6, CUBE3)
    r = critical_radius(params).r_n
    interior = (params.n * poisson_pmf(0, params.n * ball_volume(3, r))
                * (1 - 2 * r) ** 3)
    assert interior < 0.01 * math.exp(-1.0)


def test_integrate_psi_face_term_equals_area_times_lemma_integral():
    # the single-face strip quadrature over (0, r/2] reproduces
    # area * (boundary-layer integral) up to the strip cross-section factor
    from rggcrit.theory import _face_strip_quad

    params = TheoryParams(3, 1, 0.5, 1e6, CUBE3)
    dc = critical_radius(params)
    r = dc.r_n
    strip = _face_strip_quad(params, r, 0.0, 0.5 * r)
    layer = lemma1_lhs(3, 1, 1e6, dc.xi)
    assert strip == pytest.approx(6.0 * (1 - 2 * r) ** 2 * layer, rel=1e-6)


def test_integrate_psi_decomposition_consistency():
    params = TheoryParams(3, 0, 1.0, 1e5, CUBE3)
    r = critical_radius(params).r_n
    total = integrate_psi(params, r, budget=400_000, rng=np.random.default_rng(8))
    dec = decompose_psi_integral(params, r, 1.0, budget=400_000,
                                 rng=np.random.default_rng(9))
    combined = math.hypot(total.std_error, dec.total.std_error)
    assert abs(total.value - dec.total.value) <= 3.0 * combined
    assert dec.boundary_layer.value > 0.5 * dec.total.value


def test_integrate_psi_ball_region():
    params = TheoryParams(3, 0, 1.0, 2e4, Region("ball", 3))
    r = critical_radius(params).r_n
    est = integrate_psi(params, r, budget=300_000, rng=np.random.default_rng(10))
    # the ball has no edges; finite-n excess is far smaller than the cube's
    assert est.value == pytest.approx(math.exp(-1.0), abs=0.25)


def test_decompose_sliver_share_shrinks_with_n():
    shares = []
    for n in (1e4, 1e6, 1e8):
        params = TheoryParams(3, 0, 1.0, n, CUBE3)
        r = critical_radius(params).r_n
        dec = decompose_psi_integral(params, r, 1.0, budget=250_000,
                                     rng=np.random.default_rng(11))
        shares.append(dec.sliver.value / dec.total.value)
    assert shares[2] < shares[0]


def test_theory_params_validation():
    with pytest.raises(DomainError):
        TheoryParams(1, 0, 1.0, 100.0, CUBE3)
    with pytest.raises(DomainError):
        TheoryParams(3, -1, 1.0, 100.0, CUBE3)
    with pytest.raises(DomainError):
        TheoryParams(3, 0, 1.0, 2.0, CUBE3)
    with pytest.raises(DomainError):
        TheoryParams(4, 0, 1.0, 100.0, CUBE3)  # region dimension mismatch
