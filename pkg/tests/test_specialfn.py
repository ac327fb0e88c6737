"""Special-function layer: Anderson generating functions and their special
equation, the trivialization determinant, zeta vectors against the brute
oracle and the Pellarin-type sum, and the duality elements beta, g_beta."""

from __future__ import annotations

import numpy as np
import pytest

from drinmod.drinfeld import exp_from_lattice, module_from_lattice
from drinmod.lattice import Lattice
from drinmod.scalars import GroundConfig, PrecisionError, factor_prime_power
from drinmod.specialfn import (
    _beta_from_point,
    agf,
    agf_vector,
    det_certificate,
    pellarin_series,
    poonen_beta,
    special_equation_residual,
    trivialization,
    zeta_brute,
    zeta_vector,
)


def _cfg(q=3, m=1, e=1, N=60, **kw):
    p, s = factor_prime_power(q)
    return GroundConfig(p=p, s=s, m=m, e=e, N=N, **kw)


def _lat_A1(cfg):
    return Lattice.certify(cfg, [cfg.one()])


def _lat_rank2(cfg):
    return Lattice.certify(cfg, [cfg.one(), cfg.u_pow(-1)])


# ---------------------------------------------------------------------------
# zeta: closed form vs brute force (dual routes, not collapsed)


@pytest.mark.parametrize("q", [3, 4])
def test_zeta_closed_form_matches_enumeration_rank1(q):
    cfg = _cfg(q=q, N=60)
    lat = _lat_A1(cfg)
    closed = zeta_vector(lat, D=3, B_index=5, fold_tail=False)
    brute = zeta_brute(lat, D=3, B_index=5)
    assert closed.span_size == 5
    for j in range(4):
        d = closed.series[0].coeff(j) - brute[0].coeff(j)
        assert d.is_zero_at_prec and d.prec >= 15


def test_zeta_closed_form_matches_enumeration_rank2():
    cfg = _cfg(q=3, e=2, N=60)
    lat = _lat_rank2(cfg)
    closed = zeta_vector(lat, D=2, B_index=5, fold_tail=False)
    brute = zeta_brute(lat, D=2, B_index=5)
    for i in range(2):
        for j in range(3):
            d = closed.series[i].coeff(j) - brute[i].coeff(j)
            assert d.is_zero_at_prec
            # a monomial outside the ball caps the comparison at the tail bound
            assert d.prec >= min(10, closed.tail_uval)


def test_zeta_matches_pellarin_sum_exactly():
    # for A*rho the ball sums coincide with the direct sum over ring
    # elements of bounded degree, including the folded tail precision
    cfg = _cfg(q=3, N=60)
    for rho in (cfg.one(), cfg.theta()):
        lat = Lattice.certify(cfg, [rho])
        z = zeta_vector(lat, D=4, B_index=6)
        assert z.span_size == 6
        pell = pellarin_series(cfg, rho, D=4, max_deg=5)
        for j in range(5):
            a, b = z.series[0].coeff(j), pell.coeff(j)
            assert a.prec == b.prec
            assert a.agrees_with(b)


def test_zeta_rank1_frozen_digits():
    # coefficient of t^1 for A*1 at q = 3: the degree <= 1 stratum sums to
    # -1/(theta^3 - theta) and every deeper stratum lands in u^6 or beyond
    cfg = _cfg(q=3, N=60)
    z = zeta_vector(_lat_A1(cfg), D=1, B_index=8)
    c1 = z.series[0].coeff(1)
    target = -(cfg.theta_pow(3) - cfg.theta()).inv()
    assert (c1 - target).truncate(6).is_zero_at_prec
    assert int(c1.digit(3)[0]) == 2
    assert int(c1.digit(5)[0]) == 2
    c0 = z.series[0].coeff(0)
    assert c0.valuation() == 0
    assert int(c0.digit(0)[0]) == 1


def test_zeta_tail_bound_sound_under_deeper_ball():
    cfg = _cfg(q=3, N=60)
    lat = _lat_A1(cfg)
    shallow = zeta_vector(lat, D=3, B_index=5)
    deep = zeta_vector(lat, D=3, B_index=8)
    for j in range(4):
        a, b = shallow.series[0].coeff(j), deep.series[0].coeff(j)
        # moving the ball out changes each coefficient by less than the
        # shallow run's folded tail bound
        assert (a - b).is_zero_at_prec


def test_zeta_coefficient_beyond_ball_is_exact_zero():
    cfg = _cfg(q=3, N=60)
    z = zeta_vector(_lat_A1(cfg), D=6, B_index=4)
    c = z.series[0].coeff(6)  # theta^6 lies outside the span of v_1..v_4
    assert c.is_zero_at_prec and c.prec == z.tail_uval


# ---------------------------------------------------------------------------
# Anderson generating functions


def test_agf_special_equation_rank1():
    cfg = _cfg(q=3, N=96)
    lat = _lat_A1(cfg)
    phi = module_from_lattice(lat, K=8)
    v = agf_vector(lat, phi, D=5)
    bound, resid = special_equation_residual(phi, v.series[0])
    assert bound <= -10
    assert resid.is_zero_at_prec()


def test_agf_special_equation_rank2():
    cfg = _cfg(q=3, e=2, N=96)
    lat = _lat_rank2(cfg)
    phi = module_from_lattice(lat, K=8)
    v = agf_vector(lat, phi, D=4)
    for i in range(2):
        bound, resid = special_equation_residual(phi, v.series[i])
        assert bound <= -5
        assert resid.is_zero_at_prec()


def test_agf_far_coefficients_follow_the_argument():
    # once ||pi_1/theta^(j+1)|| drops below the least lattice norm, the
    # series is argument * (1 + small): valuation j + 1 and leading digit 1
    cfg = _cfg(q=3, N=96)
    lat = _lat_A1(cfg)
    phi = module_from_lattice(lat, K=8)
    om = agf(lat, phi, 1, D=5)
    for j in range(1, 6):
        c = om.coeff(j)
        assert c.valuation() == j + 1
        assert int(c.digit(j + 1)[0]) == 1


def test_agf_rank1_unit_with_decreasing_norms():
    cfg = _cfg(q=3, N=96)
    lat = _lat_A1(cfg)
    phi = module_from_lattice(lat, K=8)
    om = agf(lat, phi, 1, D=5)
    ok, cert = om.is_unit_with_certificate()
    assert ok
    norms = [om.coeff(j).norm_logq() for j in range(6)]
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_trivialization_rank1_det_is_omega():
    cfg = _cfg(q=3, N=96)
    lat = _lat_A1(cfg)
    phi = module_from_lattice(lat, K=8)
    v = agf_vector(lat, phi, D=4)
    cert = det_certificate(trivialization(v))
    assert cert["nonzero"]
    det = cert["det"]
    for j in range(5):
        assert det.coeff(j).agrees_with(v.series[0].coeff(j))


def test_trivialization_rank2_certificate_and_twist_layout():
    cfg = _cfg(q=3, e=2, N=96)
    lat = _lat_rank2(cfg)
    phi = module_from_lattice(lat, K=8)
    v = agf_vector(lat, phi, D=4)
    triv = trivialization(v)
    for i in range(2):
        for j in range(5):
            lhs = triv.entries[i][1].coeff(j)
            rhs = triv.entries[i][0].coeff(j).frobenius(1)
            assert lhs.agrees_with(rhs)
    cert = det_certificate(triv)
    assert cert["nonzero"]
    assert cert["norm_logq"] is not None


# ---------------------------------------------------------------------------
# duality elements


def test_poonen_identity_and_values_rank1():
    cfg = _cfg(q=3, N=96)
    lat = _lat_A1(cfg)
    K = 5
    pe = poonen_beta(lat, [np.array([1])], K=K)
    assert pe.lambda0_index == 1
    exp_lat = exp_from_lattice(lat, K, 80)
    g = pe.g_coeffs()
    for k in range(1, K + 1):
        lhs = g[k] - g[k - 1].frobenius(1)
        rhs = pe.beta * exp_lat.coeff(k)
        d = lhs - rhs
        assert d.is_zero_at_prec and d.prec >= 15
    # g_beta takes the value chi(lam) at every enumerated lattice point
    for pt in lat.enumerate_up_to(3):
        want = cfg.from_terms([(0, pe.chi_of_coords(pt.coords))], prec=30)
        got = pe.eval_g(pt.value)
        d = got - want
        assert d.is_zero_at_prec and d.prec >= 8


def test_poonen_beta_independent_of_point_choice():
    cfg = _cfg(q=3, N=96)
    lat = _lat_A1(cfg)
    pe = poonen_beta(lat, [np.array([1])], K=5)
    # another point with the same chi value: lam0 + (any kernel vector)
    alt = pe.lambda0 + pe.kernel.element(1)
    beta2 = _beta_from_point(pe.exp_w, alt, np.array([1]))
    d = pe.beta - beta2
    assert d.is_zero_at_prec and d.prec >= 15


def test_poonen_second_functional_rank1():
    cfg = _cfg(q=3, N=96)
    lat = _lat_A1(cfg)
    K = 5
    pe = poonen_beta(lat, [np.array([0]), np.array([1])], K=K)
    assert pe.lambda0_index == 2
    exp_lat = exp_from_lattice(lat, K, 80)
    g = pe.g_coeffs()
    for k in range(1, K + 1):
        d = (g[k] - g[k - 1].frobenius(1)) - pe.beta * exp_lat.coeff(k)
        assert d.is_zero_at_prec and d.prec >= 10
    for pt in lat.enumerate_up_to(2):
        want = cfg.from_terms([(0, pe.chi_of_coords(pt.coords))], prec=30)
        assert (pe.eval_g(pt.value) - want).is_zero_at_prec


def test_poonen_rank2_smoke():
    cfg = _cfg(q=3, e=2, N=96)
    lat = _lat_rank2(cfg)
    K = 4
    pe = poonen_beta(lat, [np.array([1]), np.array([2]), np.array([1])], K=K)
    exp_lat = exp_from_lattice(lat, K, 60)
    g = pe.g_coeffs()
    for k in range(1, K + 1):
        d = (g[k] - g[k - 1].frobenius(1)) - pe.beta * exp_lat.coeff(k)
        assert d.is_zero_at_prec and d.prec >= 5
    for pt in lat.enumerate_up_to(1):
        want = cfg.from_terms([(0, pe.chi_of_coords(pt.coords))], prec=20)
        assert (pe.eval_g(pt.value) - want).is_zero_at_prec
