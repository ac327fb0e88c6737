"""Certified verification checks: the evaluation pairing against 1/(theta - t),
twist vanishing, the three lattice-sum identities with their proof-derived
tail bounds, the Pellarin-type oracle, unit certificates, and the pipeline
consistency checks.  Every check returns a VerificationReport.

Report semantics.  A residual is measured by a certified upper bound on its
log_q-norm (residual_logq).  bound_logq is the guarantee the check can make
at this depth: the requested floor for exact identities, or the proof's tail
bound clamped at the floor for the enumerated-sum identities.  Then

    pass          residual_logq <= bound_logq <= floor
    fail          the residual has a certified-nonzero coefficient whose
                  exact norm exceeds the guarantee
    inconclusive  anything else: the enumeration depth or the working
                  precision is too shallow to decide.

Truncation can certify an exact identity but never refute it, which is why
"inconclusive" is kept distinct from "fail": raising the enumeration bound
or the precision can turn inconclusive into pass, never pass into fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .drinfeld import (
    DrinfeldModule,
    dual_relation_residual,
    exp_from_lattice,
    exp_from_module,
    exp_functional_residual,
    module_from_lattice,
)
from .lattice import Lattice
from .rings import TateSeries, TwistedSeries
from .scalars import CInfApprox, GroundConfig, PrecisionError
from .specialfn import (
    AGFVector,
    ZetaVector,
    agf,
    agf_vector,
    det_certificate,
    pellarin_series,
    poonen_beta,
    special_equation_residual,
    trivialization,
    zeta_vector,
)


@dataclass
class VerificationReport:
    check: str
    params: dict
    residual_logq: float | None
    bound_logq: float
    passed: bool
    inconclusive: bool
    ms: float = 0.0

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "params": self.params,
            "residual_logq": self.residual_logq,
            "bound_logq": self.bound_logq,
            "pass": self.passed,
            "inconclusive": self.inconclusive,
            "ms": self.ms,
        }

    def describe(self) -> str:
        state = "pass" if self.passed else ("inconclusive" if self.inconclusive else "FAIL")
        res = "none" if self.residual_logq is None else f"{self.residual_logq:g}"
        return (f"{self.check}: {state}  residual_logq<={res}  "
                f"bound_logq={self.bound_logq:g}")


def _norms_of(coeffs) -> tuple[Fraction | None, Fraction | None]:
    """(certified upper bound on max log_q-norm, exact max norm over the
    certified-nonzero coefficients or None)."""
    upper = None
    cert = None
    for c in coeffs:
        u = c.norm_logq_upper()
        upper = u if upper is None else max(upper, u)
        if c.certified_nonzero:
            n = c.norm_logq()
            cert = n if cert is None else max(cert, n)
    return upper, cert


def _report(check: str, params: dict, upper: Fraction, cert: Fraction | None,
            floor: Fraction, proof_bound: Fraction | None = None,
            extra_ok: bool = True, started: float | None = None) -> VerificationReport:
    bound = floor if proof_bound is None else max(proof_bound, floor)
    passed = extra_ok and upper <= bound and bound <= floor
    violated = (not extra_ok) or (cert is not None and cert > bound)
    inconclusive = (not passed) and (not violated)
    if proof_bound is not None:
        params = dict(params)
        params["proof_bound_logq"] = float(proof_bound)
    ms = 0.0 if started is None else round((time.perf_counter() - started) * 1000, 3)
    return VerificationReport(
        check=check, params=params, residual_logq=float(upper),
        bound_logq=float(bound), passed=passed, inconclusive=inconclusive, ms=ms)


def base_params(cfg: GroundConfig, **extra) -> dict:
    out = {"q": cfg.q, "m": cfg.m, "e": cfg.e, "N": cfg.N}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# the evaluation pairing


def ev_pair(zv: ZetaVector, av: AGFVector, j: int) -> TateSeries:
    """P_j = sum_i twist(omega_i, j) * zeta_i, truncated at the common
    degree; the factors carry their own certified precisions."""
    acc = None
    for om, ze in zip(av.series, zv.series):
        term = om.twist(j) * ze
        acc = term if acc is None else acc + term
    return acc


def _one_like(ts: TateSeries) -> TateSeries:
    cfg = ts.config
    prec = max(c.prec for c in ts.coeffs) + cfg.window_cap
    return TateSeries([cfg.one(prec)] + [cfg.zero(prec) for _ in range(ts.D)])


def main_identity_residual(P0: TateSeries) -> TateSeries:
    """(theta - t) * P_0 - 1 as a Tate series."""
    cfg = P0.config
    return P0.scalar_mul(cfg.theta(2 * cfg.window_cap)) - P0.mul_t() - _one_like(P0)


def check_main_identity(P0: TateSeries, floor_logq: Fraction,
                        params: dict | None = None,
                        timed: bool = False) -> VerificationReport:
    """The pairing at twist 0 inverts theta - t: every coefficient of
    (theta - t) P_0 - 1 up to degree D - 1 must sit below the floor."""
    started = time.perf_counter() if timed else None
    resid = main_identity_residual(P0)
    upper, cert = _norms_of([resid.coeff(j) for j in range(resid.D)])
    p = dict(params or {})
    p.update({"D": P0.D, "floor_logq": float(floor_logq)})
    return _report("main-identity", p, upper, cert, Fraction(floor_logq),
                   started=started)


def check_twist_vanishing(Pj: TateSeries, j: int, rank: int,
                          floor_logq: Fraction, params: dict | None = None,
                          timed: bool = False) -> VerificationReport:
    """P_j vanishes for 1 <= j <= r - 1, in degrees k >= j - 1; the lower
    coefficients are unconstrained (the pairing determines them only up to a
    (j-1)-dimensional space) and are reported, not judged."""
    started = time.perf_counter() if timed else None
    if not 1 <= j <= rank - 1:
        raise ValueError(f"twist vanishing needs 1 <= j <= rank-1, got j={j}, rank={rank}")
    degrees = range(j - 1, Pj.D + 1)
    upper, cert = _norms_of([Pj.coeff(k) for k in degrees])
    p = dict(params or {})
    p.update({"j": j, "rank": rank, "D": Pj.D,
              "degree_window": [j - 1, Pj.D], "floor_logq": float(floor_logq)})
    return _report("twist-vanishing", p, upper, cert, Fraction(floor_logq),
                   started=started)


# ---------------------------------------------------------------------------
# enumerated-sum identities with proof bounds


def _ball(lat: Lattice, B_index: int):
    ob = lat.ordered()
    bound = -ob.uval(B_index)
    m = ob.span_index_of_norm(bound)
    return ob, bound, m


def _log_r(ob, i: int) -> Fraction:
    """log_q of the i-th norm-sequence value."""
    return Fraction(-ob.uval(i), ob.config.e)


def _exp_ball_values(lat: Lattice, ob, exp, c: CInfApprox, m: int,
                     frob: int = 0) -> tuple[dict, list]:
    """Certified values exp(c * v_k) (optionally twisted by q^frob) for the
    first m ordered-basis vectors, plus the (d, i) -> k position map; the
    F_q-linearity of exp and of the twist turns every ball point into a
    combination of these."""
    cfg = lat.config
    pos = {}
    E = {}
    for k in range(1, m + 1):
        pos[ob.pair(k)] = k
        v = exp.eval_at(c * ob.element(k))
        if frob:
            cap = cfg.q ** frob * v.val_lower_bound() + cfg.window_cap
            v = v.frobenius(frob, prec_cap=cap)
        E[k] = v
    return pos, E


def _combine(cfg: GroundConfig, pos: dict, E: dict, coords) -> CInfApprox | None:
    acc = None
    for i, a in enumerate(coords):
        for d in range(a.degree() + 1):
            cv = a.coeff(d)
            if not cv.any():
                continue
            term = E[pos[(d, i)]].mul_elt(cv)
            acc = term if acc is None else acc + term
    return acc


def check_identity1(lat: Lattice, chi_values, B_index: int = 10,
                    K: int = 8, floor_logq: Fraction = Fraction(-10),
                    params: dict | None = None,
                    timed: bool = False) -> VerificationReport:
    """beta + sum over the ball of chi(lambda)/lambda, against the tail bound
    ||beta|| * (r_N / r_{m+1})^(q^N - q^(N-1)) with N the interleaving index
    of ker(chi) in the lattice's norm sequence."""
    started = time.perf_counter() if timed else None
    cfg = lat.config
    pe = poonen_beta(lat, chi_values, K=K)
    ob, bound, m = _ball(lat, B_index)
    NI = pe.kernel.interleave_index
    if m < NI:
        raise PrecisionError(
            f"enumeration depth {m} is below the interleaving index {NI}")
    acc = pe.beta
    for pt in lat.enumerate_up_to(bound):
        cv = pe.chi_of_coords(pt.coords)
        if not cv.any():
            continue
        acc = acc + pt.value.inv().mul_elt(cv)
    q = cfg.q
    proof = pe.beta.norm_logq() + (q**NI - q**(NI - 1)) * (_log_r(ob, NI) - _log_r(ob, m + 1))
    upper, cert = _norms_of([acc])
    p = base_params(cfg, B_index=B_index, span=m, K=K,
                    interleave_index=NI, floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("identity1", p, upper, cert, Fraction(floor_logq),
                   proof_bound=proof, started=started)


def check_identity2(lat: Lattice, c: CInfApprox, B_index: int = 10,
                    K: int = 8, floor_logq: Fraction = Fraction(-10),
                    params: dict | None = None,
                    timed: bool = False) -> VerificationReport:
    """c + sum over the ball of exp(c*lambda)/lambda for ||c|| < 1, against
    the tail bound ||c||^(q^m) at span dimension m."""
    started = time.perf_counter() if timed else None
    cfg = lat.config
    if not c.certified_nonzero:
        raise ValueError("c must be certified nonzero")
    if c.valuation() <= 0:
        raise ValueError("identity needs ||c|| < 1")
    ob, bound, m = _ball(lat, B_index)
    exp = exp_from_lattice(lat, K, cfg.N)
    pos, E = _exp_ball_values(lat, ob, exp, c, m)
    acc = c
    for pt in lat.enumerate_up_to(bound):
        v = _combine(cfg, pos, E, pt.coords)
        acc = acc + v * pt.value.inv()
    proof = cfg.q**m * c.norm_logq()
    upper, cert = _norms_of([acc])
    p = base_params(cfg, B_index=B_index, span=m, K=K,
                    c_logq=float(c.norm_logq()), floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("identity2", p, upper, cert, Fraction(floor_logq),
                   proof_bound=proof, started=started)


def check_identity3(lat: Lattice, c: CInfApprox, j: int = 1,
                    B_index: int = 10, K: int = 8,
                    floor_logq: Fraction = Fraction(-10),
                    params: dict | None = None,
                    timed: bool = False) -> VerificationReport:
    """sum over the ball of exp(c*lambda)^(q^j)/lambda for rank >= 2, j >= 1
    and ||c|| <= q^(-j); the tail estimate at depth m is

        ||c||^(q^m) * prod_{i=j+1}^m r_{i-j}^(q^(i-1)-q^i)
                    * prod_{i=1}^m  r_i^(q^i-q^(i-1)).
    """
    started = time.perf_counter() if timed else None
    cfg = lat.config
    if lat.rank < 2:
        raise ValueError("identity needs a lattice of rank at least 2")
    if j < 1:
        raise ValueError("twist exponent j must be at least 1")
    if not c.certified_nonzero or c.norm_logq() > -j:
        raise ValueError("identity needs ||c|| <= q^(-j)")
    ob, bound, m = _ball(lat, B_index)
    if m < j + 1:
        raise PrecisionError(f"enumeration depth {m} too shallow for j = {j}")
    exp = exp_from_lattice(lat, K, cfg.N)
    pos, E = _exp_ball_values(lat, ob, exp, c, m, frob=j)
    acc = None
    for pt in lat.enumerate_up_to(bound):
        v = _combine(cfg, pos, E, pt.coords)
        term = v * pt.value.inv()
        acc = term if acc is None else acc + term
    q = cfg.q
    proof = q**m * c.norm_logq()
    for i in range(j + 1, m + 1):
        proof += (q ** (i - 1) - q**i) * _log_r(ob, i - j)
    for i in range(1, m + 1):
        proof += (q**i - q ** (i - 1)) * _log_r(ob, i)
    upper, cert = _norms_of([acc])
    p = base_params(cfg, B_index=B_index, span=m, K=K, j=j,
                    c_logq=float(c.norm_logq()), floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("identity3", p, upper, cert, Fraction(floor_logq),
                   proof_bound=proof, started=started)


# ---------------------------------------------------------------------------
# oracles and certificates


def check_pellarin(lat: Lattice, D: int, deg_bound: int,
                   K: int = 8, floor_logq: Fraction = Fraction(-10),
                   params: dict | None = None,
                   timed: bool = False) -> VerificationReport:
    """Main identity with the dual series computed by direct enumeration of
    ring elements (bypassing the coordinate machinery): an independent oracle
    for the rank-1 zeta pipeline.  A small degree bound leaves the folded
    tail above the floor and the verdict inconclusive, never a failure."""
    started = time.perf_counter() if timed else None
    cfg = lat.config
    if lat.rank != 1:
        raise ValueError("the Pellarin-type check applies to rank-1 lattices")
    rho = lat.basis_element(0)
    zp = pellarin_series(cfg, rho, D, deg_bound)
    phi = module_from_lattice(lat, K=max(K, 8))
    om = agf(lat, phi, 1, D, K=K)
    resid = main_identity_residual(om * zp)
    upper, cert = _norms_of([resid.coeff(j) for j in range(resid.D)])
    p = base_params(cfg, D=D, deg_bound=deg_bound, K=K,
                    floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("pellarin", p, upper, cert, Fraction(floor_logq),
                   started=started)


def check_invertibility(lat: Lattice, D: int, K: int = 8,
                        floor_logq: Fraction = Fraction(-20),
                        params: dict | None = None,
                        timed: bool = False) -> VerificationReport:
    """Rank-1 universal special function: unit certificate with strictly
    decreasing coefficient norms, and omega * omega^(-1) - 1 below floor."""
    started = time.perf_counter() if timed else None
    cfg = lat.config
    if lat.rank != 1:
        raise ValueError("the invertibility check applies to rank-1 lattices")
    phi = module_from_lattice(lat, K=max(K, 8))
    om = agf(lat, phi, 1, D, K=K)
    ok_unit, cert_unit = om.is_unit_with_certificate()
    norms = [om.coeff(j).norm_logq_upper() for j in range(D + 1)]
    decreasing = all(a > b for a, b in zip(norms, norms[1:]))
    resid = om * om.invert_unit() - _one_like(om)
    upper, cert = _norms_of(resid.coeffs)
    p = base_params(cfg, D=D, K=K, unit=ok_unit,
                    strictly_decreasing=decreasing,
                    dominance_caveat=cert_unit.get("caveat", ""),
                    floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("invertibility", p, upper, cert, Fraction(floor_logq),
                   extra_ok=ok_unit and decreasing, started=started)


def check_exp(phi: DrinfeldModule, K: int = 8,
              floor_logq: Fraction = Fraction(-10),
              params: dict | None = None,
              timed: bool = False) -> VerificationReport:
    """Functional-equation residual of the module exponential up to tau^K."""
    started = time.perf_counter() if timed else None
    cfg = phi.config
    exp = exp_from_module(phi, K)
    resid = exp_functional_residual(phi, exp)
    upper, cert = _norms_of(resid.coeffs)
    p = base_params(cfg, K=K, rank=phi.rank, floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("exp-residual", p, upper, cert, Fraction(floor_logq),
                   started=started)


def check_module_from_lattice(lat: Lattice, K: int = 8, cross_K: int = 6,
                              floor_logq: Fraction = Fraction(-10),
                              params: dict | None = None,
                              timed: bool = False) -> VerificationReport:
    """Two-pipeline cross-check: recover the module, re-derive its
    exponential from the coefficients alone, and compare e_1..e_cross_K
    against the direct lattice exponential."""
    started = time.perf_counter() if timed else None
    cfg = lat.config
    phi = module_from_lattice(lat, K=K)
    direct = exp_from_lattice(lat, cross_K, cfg.N)
    via = exp_from_module(phi, cross_K)
    diffs = [direct.coeff(k) - via.coeff(k) for k in range(1, cross_K + 1)]
    upper, cert = _norms_of(diffs)
    spurious = phi.provenance["coeff_uval_bounds"][phi.rank:]
    p = base_params(cfg, K=K, cross_K=cross_K,
                    detected_rank=phi.rank,
                    spurious_coeff_logq=[float(Fraction(-u, cfg.e)) for u in spurious],
                    floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("module-round-trip", p, upper, cert, Fraction(floor_logq),
                   started=started)


def check_agf(lat: Lattice, D: int, K: int = 8,
              floor_logq: Fraction = Fraction(-10),
              params: dict | None = None,
              timed: bool = False) -> VerificationReport:
    """Special-equation residual phi_theta(omega_i) - t*omega_i over all i."""
    started = time.perf_counter() if timed else None
    cfg = lat.config
    phi = module_from_lattice(lat, K=max(K, 8))
    av = agf_vector(lat, phi, D, K=K)
    coeffs = []
    for om in av.series:
        _, resid = special_equation_residual(phi, om)
        coeffs.extend(resid.coeffs)
    upper, cert = _norms_of(coeffs)
    p = base_params(cfg, D=D, K=K, rank=lat.rank, floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("agf-special-equation", p, upper, cert, Fraction(floor_logq),
                   started=started)


def check_zeta(lat: Lattice, D: int, B_index: int = 40,
               floor_logq: Fraction = Fraction(-10),
               params: dict | None = None,
               timed: bool = False) -> VerificationReport:
    """Cleared adjoint relation on every dual special function."""
    started = time.perf_counter() if timed else None
    cfg = lat.config
    phi = module_from_lattice(lat, K=8)
    zv = zeta_vector(lat, D, B_index=B_index)
    uppers = []
    certs = []
    for ze in zv.series:
        _, resid = dual_relation_residual(phi, ze)
        u, ce = _norms_of(resid.coeffs)
        uppers.append(u)
        if ce is not None:
            certs.append(ce)
    upper = max(uppers)
    cert = max(certs) if certs else None
    p = base_params(cfg, D=D, B_index=B_index, span=zv.span_size,
                    rank=lat.rank, floor_logq=float(floor_logq))
    p.update(params or {})
    return _report("zeta-dual-relation", p, upper, cert, Fraction(floor_logq),
                   started=started)


def check_determinant(lat: Lattice, D: int, K: int = 8,
                      params: dict | None = None,
                      timed: bool = False) -> VerificationReport:
    """Trivialization determinant certified nonzero.  The 'residual' is the
    negated certificate norm so that pass keeps its <= reading against the
    certificate's own magnitude."""
    started = time.perf_counter() if timed else None
    cfg = lat.config
    phi = module_from_lattice(lat, K=max(K, 8))
    av = agf_vector(lat, phi, D, K=K)
    cert = det_certificate(trivialization(av))
    p = base_params(cfg, D=D, K=K, rank=lat.rank,
                    nonzero=bool(cert["nonzero"]))
    p.update(params or {})
    if cert["nonzero"]:
        p["det_t_degree"] = cert["t_degree"]
        p["det_norm_logq"] = float(cert["norm_logq"])
        rep = VerificationReport(check="det-certificate", params=p,
                                 residual_logq=float(cert["norm_logq"]),
                                 bound_logq=float(cert["norm_logq"]),
                                 passed=True, inconclusive=False)
    else:
        rep = VerificationReport(check="det-certificate", params=p,
                                 residual_logq=float(cert["floor_logq"]),
                                 bound_logq=float(cert["floor_logq"]),
                                 passed=False, inconclusive=True)
    if started is not None:
        rep.ms = round((time.perf_counter() - started) * 1000, 3)
    return rep
