"""Drinfeld module layer: the structure map, the two exponential pipelines,
module recovery with rank detection, and the cleared adjoint relation."""

from __future__ import annotations

import random

import pytest

from drinmod.drinfeld import (
    DrinfeldModule,
    ExpSeries,
    dual_relation_residual,
    exp_from_lattice,
    exp_from_module,
    exp_functional_residual,
    module_from_lattice,
)
from drinmod.lattice import Lattice
from drinmod.rings import APoly, TateSeries
from drinmod.scalars import GroundConfig, PrecisionError, factor_prime_power


def _cfg(q=3, m=1, e=1, N=60, **kw):
    p, s = factor_prime_power(q)
    return GroundConfig(p=p, s=s, m=m, e=e, N=N, **kw)


def _rank2_module(cfg):
    # phi_theta = theta + theta*tau + tau^2
    return DrinfeldModule(cfg, [cfg.theta(), cfg.one()])


def test_carlitz_structure_map():
    cfg = _cfg()
    phi = DrinfeldModule.carlitz(cfg)
    assert phi.rank == 1
    img = phi.phi_of(APoly.x(cfg))
    assert img.tau_degree == 1
    assert (img.coeff(0) - cfg.theta()).is_zero_at_prec
    assert (img.coeff(1) - cfg.one()).is_zero_at_prec
    one_img = phi.phi_of(APoly.one(cfg))
    assert one_img.tau_degree == 0
    assert (one_img.coeff(0) - cfg.one()).is_zero_at_prec


def test_carlitz_image_of_theta_squared():
    cfg = _cfg()
    phi = DrinfeldModule.carlitz(cfg)
    img = phi.phi_of(APoly(cfg, [0, 0, 1]))
    assert img.tau_degree == 2
    assert (img.coeff(0) - cfg.theta_pow(2)).is_zero_at_prec
    assert (img.coeff(1) - (cfg.theta_pow(3) + cfg.theta())).is_zero_at_prec
    assert (img.coeff(2) - cfg.one()).is_zero_at_prec


def test_structure_map_is_a_ring_homomorphism():
    cfg = _cfg(N=70)
    rng = random.Random(5)
    for phi in (DrinfeldModule.carlitz(cfg), _rank2_module(cfg)):
        for _ in range(4):
            a = APoly(cfg, [rng.randrange(3) for _ in range(rng.randrange(1, 4))])
            b = APoly(cfg, [rng.randrange(3) for _ in range(rng.randrange(1, 4))])
            lhs = phi.phi_of(a * b)
            rhs = phi.phi_of(a) * phi.phi_of(b)
            if not a.is_zero and not b.is_zero:
                assert lhs.tau_degree == rhs.tau_degree
            for i in range(max(lhs.tau_degree, rhs.tau_degree) + 1):
                d = lhs.coeff(i) - rhs.coeff(i)
                assert d.is_zero_at_prec and d.prec >= 20


def test_structure_map_degree_law_and_constant_term():
    cfg = _cfg(N=70)
    rng = random.Random(11)
    for phi in (DrinfeldModule.carlitz(cfg), _rank2_module(cfg)):
        for _ in range(5):
            coeffs = [rng.randrange(3) for _ in range(rng.randrange(1, 5))]
            a = APoly(cfg, coeffs)
            img = phi.phi_of(a)
            if a.is_zero:
                assert img.tau_degree == 0
                continue
            assert img.tau_degree == phi.rank * a.degree()
            assert (img.coeff(0) - a.eval_theta()).is_zero_at_prec


def test_top_coefficient_must_be_certified_nonzero():
    cfg = _cfg()
    with pytest.raises(ValueError):
        DrinfeldModule(cfg, [cfg.one(), cfg.zero()])


def test_carlitz_exp_first_coefficients():
    cfg = _cfg(N=80)
    exp = exp_from_module(DrinfeldModule.carlitz(cfg), 4)
    e0, e1 = exp.coeff(0), exp.coeff(1)
    assert (e0 - cfg.one()).is_zero_at_prec
    # e_1 = 1/(theta^3 - theta) = u^3 + u^5 + u^7 + ... in the u-expansion
    assert e1.valuation() == 3
    for j in range(3, 20):
        expect = 1 if (j >= 3 and (j - 3) % 2 == 0) else 0
        assert int(e1.digit(j)[0]) == expect
    # and it solves e_1 * (theta^3 - theta) = 1 on the nose
    prod = e1 * (cfg.theta_pow(3) - cfg.theta())
    assert (prod - cfg.one()).is_zero_at_prec


def test_functional_equation_residual_vanishes():
    cfg = _cfg(N=80)
    for phi in (DrinfeldModule.carlitz(cfg), _rank2_module(cfg)):
        exp = exp_from_module(phi, 6)
        resid = exp_functional_residual(phi, exp)
        assert resid.order == 7
        for k in range(7):
            c = resid.coeff(k)
            assert c.is_zero_at_prec and c.prec >= 20


def test_lattice_exp_kills_lattice_points():
    cfg = _cfg(q=3, e=1, N=96)
    lat = Lattice.certify(cfg, [cfg.one()])
    exp = exp_from_lattice(lat, 6, 80)
    for lam in (cfg.one(), cfg.theta(), cfg.theta() + cfg.one()):
        v = exp.eval_at(lam)
        assert v.is_zero_at_prec and v.prec >= 30
    # a point well away from the lattice is not killed
    w = exp.eval_at(cfg.u_pow(1))
    assert w.certified_nonzero


def test_eval_tail_bound_requires_lattice_data():
    cfg = _cfg(N=60)
    exp = exp_from_module(DrinfeldModule.carlitz(cfg), 3)
    with pytest.raises(PrecisionError):
        exp.tail_uval(0)
    # evaluation still works, it just cannot certify the omitted tail
    val = exp.eval_at(cfg.u_pow(2), with_tail=False)
    assert val.certified_nonzero


def test_module_from_lattice_rank_one_round_trip():
    cfg = _cfg(q=3, e=1, N=96)
    lat = Lattice.certify(cfg, [cfg.one()])
    phi = module_from_lattice(lat, K=8)
    assert phi.rank == 1
    assert phi.provenance["detected_rank"] == 1
    for ub in phi.provenance["coeff_uval_bounds"][1:]:
        assert ub * 2 > cfg.N
    # round trip: the recovered module's exp agrees with the lattice exp
    K = 5
    direct = exp_from_lattice(lat, K, 70)
    via_module = exp_from_module(phi, K)
    for k in range(K + 1):
        d = direct.coeff(k) - via_module.coeff(k)
        assert d.is_zero_at_prec and d.prec >= 30


def test_module_from_lattice_rank_two_round_trip():
    cfg = _cfg(q=3, e=2, N=96)
    lat = Lattice.certify(cfg, [cfg.one(), cfg.u_pow(-1)])
    phi = module_from_lattice(lat, K=8)
    assert phi.rank == 2
    assert phi.coeffs[1].certified_nonzero
    K = 5
    direct = exp_from_lattice(lat, K, 70)
    via_module = exp_from_module(phi, K)
    for k in range(K + 1):
        d = direct.coeff(k) - via_module.coeff(k)
        assert d.is_zero_at_prec and d.prec >= 30


def test_module_from_lattice_needs_slack_beyond_rank():
    cfg = _cfg(q=3, e=2, N=96)
    lat = Lattice.certify(cfg, [cfg.one(), cfg.u_pow(-1)])
    with pytest.raises(PrecisionError):
        module_from_lattice(lat, K=3)


def test_dual_relation_zero_series():
    cfg = _cfg(N=60)
    phi = DrinfeldModule.carlitz(cfg)
    zeta = TateSeries.zeros(cfg, 4)
    bound, resid = dual_relation_residual(phi, zeta)
    assert bound <= -30
    assert resid.is_zero_at_prec()


def test_dual_relation_matches_direct_carlitz_computation():
    # r = 1 cleared relation: theta^q * zeta^((1)) + zeta - t * zeta^((1));
    # coefficient j of the residual is theta^q zeta_j^q + zeta_j - zeta_{j-1}^q
    cfg = _cfg(q=3, N=60)
    phi = DrinfeldModule.carlitz(cfg)
    rng = random.Random(23)
    coeffs = [
        cfg.from_terms(
            [(rng.randrange(-2, 4), rng.randrange(1, 3)) for _ in range(3)], prec=40
        )
        for _ in range(5)
    ]
    zeta = TateSeries(coeffs)
    _, resid = dual_relation_residual(phi, zeta)
    tq = cfg.theta_pow(3)
    for j in range(5):
        manual = tq * coeffs[j].frobenius(1) + coeffs[j]
        if j >= 1:
            manual = manual - coeffs[j - 1].frobenius(1)
        assert manual.agrees_with(resid.coeff(j))
        assert (manual - resid.coeff(j)).prec >= 20


def test_dual_relation_rank_two_degree_shift():
    # for r = 2 the relation reads theta^(q^2) zeta^((2)) + a_1^q zeta^((1))
    # + a_2 zeta = t zeta^((2)); check it coefficientwise on a monomial
    cfg = _cfg(q=3, N=60)
    phi = _rank2_module(cfg)
    c = cfg.from_terms([(1, 2)], prec=40)
    zeta = TateSeries([cfg.zero(40), c, cfg.zero(40)])
    _, resid = dual_relation_residual(phi, zeta)
    t9 = cfg.theta_pow(9)
    a1, a2 = phi.coeffs
    manual1 = t9 * c.frobenius(2) + a1.frobenius(1) * c.frobenius(1) + a2 * c
    assert manual1.agrees_with(resid.coeff(1))
    # coefficient 2 only sees the -t * zeta^((2)) shift of coefficient 1
    manual2 = -(c.frobenius(2))
    assert manual2.agrees_with(resid.coeff(2))
