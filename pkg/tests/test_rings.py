"""Polynomials over F_q, twisted products, and truncated Tate series."""

from __future__ import annotations

import random

import numpy as np
import pytest

from drinmod.rings import APoly, DifferentialForm, TateSeries, TwistedSeries
from drinmod.scalars import GroundConfig, PrecisionError, factor_prime_power


def _cfg(q=3, m=1, e=1, N=40):
    p, s = factor_prime_power(q)
    return GroundConfig(p=p, s=s, m=m, e=e, N=N)


# -- APoly --

def test_apoly_enumeration_is_exhaustive_and_distinct():
    for q, d in [(2, 3), (3, 2), (4, 1)]:
        cfg = _cfg(q=q)
        polys = list(APoly.enumerate_up_to_degree(cfg, d))
        assert len(polys) == q ** (d + 1)
        assert len({p.key() for p in polys}) == len(polys)
        assert polys[0].is_zero
        assert all(p.degree() <= d for p in polys)


def test_apoly_eval_theta():
    cfg = _cfg(q=3)
    # x^2 + 2x + 1 at theta
    f = APoly(cfg, [1, 2, 1])
    v = f.eval_theta()
    assert v.serialize()["coeffs"] == [[-2, 1], [-1, 2], [0, 1]]
    g = APoly(cfg, [0, 1]) + APoly(cfg, [1])
    assert (g * g).key() == f.key()


def test_apoly_eval_scalar_matches_horner_expansion():
    cfg = _cfg(q=3, N=60)
    rng = random.Random(3)
    x = cfg.theta() + cfg.one()
    for _ in range(10):
        coeffs = [rng.randrange(3) for _ in range(5)]
        f = APoly(cfg, coeffs)
        direct = cfg.zero(200)
        for i, c in enumerate(coeffs):
            direct = direct + x.pow_int(i).mul_scalar(c)
        assert (f.eval_scalar(x) - direct).is_zero_at_prec


def test_apoly_rejects_non_subfield_coefficient():
    cfg = _cfg(q=3, m=2)
    # the residue field F_9 has elements outside F_3; y itself is one of them
    with pytest.raises(ValueError):
        APoly(cfg, [np.array([0, 1])])
    # subfield elements pass
    for c in cfg.field.fq_elements():
        APoly(cfg, [c])


def test_residue_of_theta_powers():
    cfg = _cfg(q=3, N=20)
    assert int(DifferentialForm(cfg.theta_pow(-1)).residue()[0]) == 1
    assert int(DifferentialForm(cfg.one()).residue()[0]) == 0
    x = cfg.theta() + cfg.theta_pow(-1).mul_scalar(2)
    assert int(DifferentialForm(x).residue()[0]) == 2
    cfg2 = _cfg(q=3, e=2)
    with pytest.raises(NotImplementedError):
        DifferentialForm(cfg2.theta()).residue()


# -- TwistedSeries --

def test_twisted_square_of_carlitz_generator():
    cfg = _cfg(q=3, N=50)
    phi_theta = TwistedSeries(cfg, [cfg.theta(), cfg.one()])
    sq = phi_theta * phi_theta
    assert sq.tau_degree == 2
    assert (sq.coeffs[0] - cfg.theta_pow(2)).is_zero_at_prec
    assert (sq.coeffs[1] - (cfg.theta_pow(3) + cfg.theta())).is_zero_at_prec
    assert (sq.coeffs[2] - cfg.one()).is_zero_at_prec


def test_twisted_mul_is_associative():
    cfg = _cfg(q=3, N=60)
    rng = random.Random(17)
    def rand_poly(n):
        return TwistedSeries(cfg, [cfg.from_terms([(rng.randrange(-3, 4), rng.randrange(1, 3))]) for _ in range(n)])
    for _ in range(5):
        a, b, c = rand_poly(2), rand_poly(3), rand_poly(2)
        lhs = (a * b) * c
        rhs = a * (b * c)
        assert lhs.tau_degree == rhs.tau_degree
        for x, y in zip(lhs.coeffs, rhs.coeffs):
            assert (x - y).is_zero_at_prec


def test_twisted_apply_carlitz():
    cfg = _cfg(q=3, N=50)
    phi_theta = TwistedSeries(cfg, [cfg.theta(), cfg.one()])
    # phi_theta(1) = theta + 1
    v1 = phi_theta.apply(cfg.one())
    assert (v1 - (cfg.theta() + cfg.one())).is_zero_at_prec
    # phi_theta(theta) = theta^2 + theta^3
    v2 = phi_theta.apply(cfg.theta())
    assert (v2 - (cfg.theta_pow(2) + cfg.theta_pow(3))).is_zero_at_prec


def test_twisted_apply_is_additive():
    # applying a twisted polynomial is F_q-linear
    cfg = _cfg(q=3, N=40)
    f = TwistedSeries(cfg, [cfg.theta(), cfg.one(), cfg.theta_pow(-1)])
    rng = random.Random(23)
    for _ in range(10):
        x = cfg.from_terms([(rng.randrange(-4, 5), rng.randrange(1, 3)) for _ in range(3)])
        y = cfg.from_terms([(rng.randrange(-4, 5), rng.randrange(1, 3)) for _ in range(3)])
        lhs = f.apply(x + y)
        rhs = f.apply(x) + f.apply(y)
        assert (lhs - rhs).is_zero_at_prec


def test_twisted_truncated_order_tracking():
    cfg = _cfg(q=3, N=40)
    a = TwistedSeries(cfg, [cfg.one(), cfg.theta()], order=2)
    b = TwistedSeries(cfg, [cfg.theta(), cfg.one()])
    prod = b * a
    assert prod.order == 2
    assert len(prod.coeffs) == 2
    with pytest.raises(PrecisionError):
        prod.coeff(2)
    with pytest.raises(PrecisionError):
        a.apply(cfg.one())


# -- TateSeries --

def test_tate_mul_matches_cauchy_product():
    cfg = _cfg(q=3, N=40)
    rng = random.Random(31)
    for _ in range(5):
        fa = [cfg.from_terms([(rng.randrange(-3, 4), rng.randrange(1, 3))]) for _ in range(5)]
        fb = [cfg.from_terms([(rng.randrange(-3, 4), rng.randrange(1, 3))]) for _ in range(4)]
        f, g = TateSeries(fa), TateSeries(fb)
        prod = f * g
        assert prod.D == 3
        for k in range(4):
            expect = cfg.zero(1000)
            for i in range(k + 1):
                expect = expect + fa[i] * fb[k - i]
            assert (prod.coeff(k) - expect).is_zero_at_prec


def test_tate_twist_is_coefficientwise():
    cfg = _cfg(q=3, N=40)
    f = TateSeries([cfg.theta(), cfg.one() + cfg.theta(), cfg.u_pow(2)])
    tw = f.twist(1)
    for j in range(3):
        assert (tw.coeff(j) - f.coeff(j).frobenius(1)).is_zero_at_prec


def test_tate_unit_certificate():
    cfg = _cfg(q=3, N=40)
    f = TateSeries([cfg.one(), cfg.theta_pow(-1), cfg.theta_pow(-2)])
    ok, cert = f.is_unit_with_certificate()
    assert ok
    assert "caveat" in cert
    g = TateSeries([cfg.theta_pow(-1), cfg.one()])
    ok2, cert2 = g.is_unit_with_certificate()
    assert not ok2
    assert "not dominated" in cert2["reason"]
    h = TateSeries([cfg.zero(), cfg.theta_pow(-1)])
    ok3, cert3 = h.is_unit_with_certificate()
    assert not ok3


def test_tate_invert_geometric_example():
    cfg = _cfg(q=3, N=60)
    D = 6
    # f = 1 - theta^(-1) t has inverse sum theta^(-j) t^j
    coeffs = [cfg.one(300)] + [cfg.zero(300)] * D
    coeffs[1] = -cfg.theta_pow(-1, 300)
    f = TateSeries(coeffs)
    inv = f.invert_unit()
    for j in range(D + 1):
        assert (inv.coeff(j) - cfg.theta_pow(-j, 300)).is_zero_at_prec
    back = f * inv - TateSeries.one(cfg, D, 300)
    assert back.is_zero_at_prec()


def test_tate_invert_roundtrip_fuzz():
    cfg = _cfg(q=3, e=2, N=50)
    rng = random.Random(47)
    for _ in range(8):
        coeffs = [cfg.one(120) + cfg.u_pow(rng.randrange(1, 4), 120)]
        for j in range(1, 5):
            coeffs.append(cfg.u_pow(j + rng.randrange(0, 3), 120).mul_scalar(rng.randrange(0, 3)))
        f = TateSeries(coeffs)
        inv = f.invert_unit()
        err = f * inv - TateSeries.one(cfg, 4, 500)
        assert err.is_zero_at_prec()
        assert err.min_prec() >= 40


def test_tate_invert_rejects_non_unit():
    cfg = _cfg(q=3, N=30)
    g = TateSeries([cfg.theta_pow(-1), cfg.one()])
    with pytest.raises(PrecisionError):
        g.invert_unit()
