"""Drinfeld modules over A = F_q[theta] and their exponential series.

A Drinfeld module of rank r is determined by the image of theta under the
structure map: a twisted polynomial

    phi_theta = theta + a_1 tau + ... + a_r tau^r,        a_r != 0,

with coefficients in the completed field at infinity.  This module provides
the two constructions that the rest of the library pivots on and keeps them
deliberately independent so they can be played against each other:

* ``exp_from_module`` solves the functional equation
  ``phi_theta . exp = exp . theta`` coefficient by coefficient, starting from
  the module coefficients a_1..a_r.  No lattice is involved.

* ``exp_from_lattice`` delegates to the product-over-lattice-points engine in
  ``lattice`` and only repackages its certified coefficients.

* ``module_from_lattice`` runs the reverse solve: given the lattice
  exponential, it recovers the twisted-polynomial coefficients b_k of
  phi_theta one at a time and detects the rank by watching the b_k become
  certified-small.  Composing it with ``exp_from_module`` and comparing
  against ``exp_from_lattice`` is the round-trip consistency check used by
  the verification layer.

The dual (adjoint) object is never materialised: its coefficients involve
q-th roots, which leave the coefficient field we compute in.  Everything the
library needs from it is expressed through the tau^r-cleared relation checked
by ``dual_relation_residual``.
"""

from __future__ import annotations

from fractions import Fraction

from .rings import APoly, TateSeries, TwistedSeries
from .scalars import CInfApprox, GroundConfig, PrecisionError
from . import lattice as _lattice


def _exact_scalar(config: GroundConfig, terms) -> CInfApprox:
    """An exact combination of theta powers carried with a double window of
    digits, enough that downstream products are capped by their own rule and
    never by this constant."""
    lead = min(exp for exp, _ in terms)
    return config.from_terms(terms, prec=lead + 2 * config.window_cap)


class DrinfeldModule:
    """phi_theta = theta + a_1 tau + ... + a_r tau^r with a_r certified nonzero.

    ``coeffs`` holds (a_1, ..., a_r); the constant term theta is implicit.
    ``provenance`` is an optional dict of construction metadata (for modules
    recovered from a lattice it records the rank-detection evidence)."""

    __slots__ = ("config", "coeffs", "lattice", "provenance")

    def __init__(self, config: GroundConfig, coeffs, lattice=None, provenance=None):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise ValueError("rank must be at least 1")
        for a in coeffs:
            if not isinstance(a, CInfApprox):
                raise TypeError("module coefficients must be scalar approximations")
        if not coeffs[-1].certified_nonzero:
            raise ValueError("top coefficient a_r is not certified nonzero")
        self.config = config
        self.coeffs = coeffs
        self.lattice = lattice
        self.provenance = provenance

    @classmethod
    def carlitz(cls, config: GroundConfig) -> "DrinfeldModule":
        """The rank-1 module phi_theta = theta + tau."""
        return cls(config, [config.one(2 * config.window_cap)])

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    def phi_theta(self) -> TwistedSeries:
        cfg = self.config
        theta = _exact_scalar(cfg, [(-cfg.e, 1)])
        return TwistedSeries(cfg, [theta, *self.coeffs])

    def phi_of(self, a: APoly) -> TwistedSeries:
        """Image of a ring element a(theta) under the structure map, computed
        by Horner composition phi_a = sum c_d phi_theta^d.  The tau-degree is
        r*deg(a) and the constant term is a(theta)."""
        cfg = self.config
        if a.is_zero:
            return TwistedSeries(cfg, [cfg.zero(2 * cfg.window_cap)])
        pt = self.phi_theta()
        acc = None
        for d in range(a.degree(), -1, -1):
            const = TwistedSeries.constant(
                cfg, cfg.from_terms([(0, a.coeff(d))], prec=2 * cfg.window_cap)
            )
            acc = const if acc is None else acc * pt + const
        return acc

    def __repr__(self) -> str:
        return f"DrinfeldModule(rank={self.rank}, q={self.config.q})"


class ExpSeries:
    """Truncated exponential sum e_k x^(q^k), k = 0..K, with e_0 = 1.

    When the series came from a lattice, ``basis_uvals`` holds certified
    leading-term valuations lv_1, lv_2, ... of the ordered lattice basis
    (extended lazily from ``source``); they give a lower bound on val(e_k)
    for every k, which is what lets ``eval_at`` bound the omitted tail
    k > K instead of silently dropping it."""

    __slots__ = ("config", "coeffs", "err_uvals", "source")

    def __init__(self, config: GroundConfig, coeffs, err_uvals=None, source=None):
        coeffs = list(coeffs)
        if not coeffs:
            raise ValueError("need at least the k = 0 coefficient")
        self.config = config
        self.coeffs = coeffs
        self.err_uvals = list(err_uvals) if err_uvals is not None else None
        self.source = source

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> CInfApprox:
        return self.coeffs[k]

    def as_twisted(self) -> TwistedSeries:
        return TwistedSeries(self.config, list(self.coeffs), order=len(self.coeffs))

    def tail_uval(self, x_uval: int, max_scan: int = 500) -> int:
        """Certified lower bound on val(sum_{k>K} e_k x^(q^k)) for any x with
        val(x) >= x_uval.  Uses val(e_k) >= VE_k = sum_{i<=k} (q^i - q^(i-1)) *
        (-lv_i); the term bounds VE_k + q^k*x_uval eventually increase (the
        increments are (q^(k+1) - q^k)*(x_uval - lv_{k+1}) and the lv_k
        decrease without bound), so a finite scan gives the minimum."""
        if self.source is None:
            raise PrecisionError("no lattice data attached: tail not boundable")
        cfg = self.config
        q = cfg.q
        K = self.K
        ve = 0
        for i in range(1, K + 2):
            ve += (q**i - q ** (i - 1)) * (-self.source.uval(i))
        best = ve + q ** (K + 1) * x_uval
        k = K + 1
        while True:
            nxt = self.source.uval(k + 1)
            if x_uval > nxt:
                return best
            k += 1
            if k > K + max_scan:
                raise PrecisionError("tail bound scan did not close")
            ve += (q**k - q ** (k - 1)) * (-nxt)
            best = min(best, ve + q**k * x_uval)

    def eval_at(self, x: CInfApprox, with_tail: bool = True) -> CInfApprox:
        """Evaluate at a scalar.  With lattice data the result's precision is
        clipped by the tail bound, making it a certified value of the full
        exponential; without it the result is only the truncated sum."""
        cfg = self.config
        q = cfg.q
        acc = None
        for k, ek in enumerate(self.coeffs):
            cap = q**k * x.val_lower_bound() + cfg.window_cap
            term = ek * x.frobenius(k, prec_cap=cap)
            acc = term if acc is None else acc + term
        if with_tail and self.source is not None:
            acc = acc.truncate(min(acc.prec, self.tail_uval(x.val_lower_bound())))
        return acc

    def __repr__(self) -> str:
        return f"ExpSeries(K={self.K}, q={self.config.q})"


def exp_from_module(phi: DrinfeldModule, K: int) -> ExpSeries:
    """Solve phi_theta . exp = exp . theta for e_0..e_K.

    Comparing tau^k coefficients gives the triangular recursion

        e_k * (theta^(q^k) - theta) = sum_{i=1}^{min(k,r)} a_i * e_{k-i}^(q^i)

    with e_0 = 1; the divisor is exact and nonzero, so each step is a single
    certified division.  For the Carlitz module over F_3 this yields
    e_1 = 1/(theta^3 - theta)."""
    cfg = phi.config
    q = cfg.q
    coeffs = [cfg.one(2 * cfg.window_cap)]
    for k in range(1, K + 1):
        rhs = None
        for i in range(1, min(k, phi.rank) + 1):
            prev = coeffs[k - i]
            cap = q**i * prev.val_lower_bound() + cfg.window_cap
            term = phi.coeffs[i - 1] * prev.frobenius(i, prec_cap=cap)
            rhs = term if rhs is None else rhs + term
        divisor = _exact_scalar(cfg, [(-cfg.e * q**k, 1), (-cfg.e, -1)])
        coeffs.append(rhs / divisor)
    return ExpSeries(cfg, coeffs)


def exp_functional_residual(phi: DrinfeldModule, exp: ExpSeries) -> TwistedSeries:
    """phi_theta * exp - exp * theta as a twisted series truncated at the
    exp's own order; zero-at-precision in every coefficient is the pass
    condition for the functional equation up to tau^K."""
    cfg = phi.config
    E = exp.as_twisted()
    theta_c = TwistedSeries.constant(cfg, _exact_scalar(cfg, [(-cfg.e, 1)]))
    return phi.phi_theta() * E - E * theta_c


def exp_from_lattice(lat, K: int, target_uval: int) -> ExpSeries:
    """Certified e_0..e_K for the exponential attached to a lattice (or to an
    already-ordered basis).  Each coefficient's precision reflects both the
    arithmetic and the truncation depth of the product over lattice points."""
    source = _lattice._as_source(lat)
    res = _lattice.e_coeffs(source, K, target_uval)
    return ExpSeries(source.config, res.values, err_uvals=res.err_uvals, source=source)


def module_from_lattice(lat, K: int = 8, safety: int = 2) -> DrinfeldModule:
    """Recover the Drinfeld module whose period lattice is the given one.

    From the lattice exponential the coefficients of phi_theta come out of
    the same triangular system read in the other direction:

        b_k = e_k * (theta^(q^k) - theta) - sum_{i=1}^{k-1} b_i * e_{k-i}^(q^i).

    The true b_k vanish for k > rank, so the detected rank is the last index
    whose b_k is NOT certified small, where certified small means the norm
    bound is below q^(-(N/2)/e).  K must leave at least ``safety`` indices of
    certified-small slack beyond the detected rank, otherwise the detection
    is refused rather than guessed."""
    cfg = _lattice._as_source(lat).config
    q = cfg.q
    target = cfg.N // 2 + 1 + cfg.e * q**K + 8
    exp = exp_from_lattice(lat, K, target)
    bs = []
    for k in range(1, K + 1):
        divisor = _exact_scalar(cfg, [(-cfg.e * q**k, 1), (-cfg.e, -1)])
        bk = exp.coeff(k) * divisor
        for i in range(1, k):
            prev = exp.coeff(k - i)
            cap = q**i * prev.val_lower_bound() + cfg.window_cap
            bk = bk - bs[i - 1] * prev.frobenius(i, prec_cap=cap)
        bs.append(bk)
    small = [b.val_lower_bound() * 2 > cfg.N for b in bs]
    if all(small):
        raise PrecisionError("every coefficient is certified small: no rank found")
    rank = max(k for k in range(1, K + 1) if not small[k - 1])
    if rank > K - safety:
        raise PrecisionError(
            f"coefficient b_{rank} is not certified small; K = {K} leaves no "
            f"room beyond any candidate rank (need {safety} slack indices)"
        )
    for a in bs[:rank]:
        if not a.certified_nonzero:
            raise PrecisionError(
                "a coefficient below the detected rank is neither certified "
                "nonzero nor certified small: raise the precision target"
            )
    provenance = {
        "detected_rank": rank,
        "coeff_uval_bounds": [b.val_lower_bound() for b in bs],
        "zero_threshold_uval": cfg.N // 2,
        "depth_K": K,
    }
    return DrinfeldModule(cfg, bs[:rank], lattice=lat, provenance=provenance)


def dual_relation_residual(
    phi: DrinfeldModule, zeta: TateSeries
) -> tuple[Fraction, TateSeries]:
    """Residual of the tau^r-cleared adjoint relation on a Tate series.

    With a_0 = theta and writing f^(j) for the coefficientwise q^j-power
    twist, a series zeta killed by the adjoint of phi_theta - t satisfies

        sum_{k=0}^{r} a_k^(q^(r-k)) * zeta^((r-k)) = t * zeta^((r)).

    (For the Carlitz module: theta^q * zeta^((1)) + zeta = t * zeta^((1)).)
    Returns a certified upper bound on log_q of the max coefficient norm of
    the defect, together with the defect itself; the zero series gives a
    bound at the precision floor."""
    cfg = phi.config
    r = phi.rank
    theta = _exact_scalar(cfg, [(-cfg.e, 1)])
    coeffs = [theta, *phi.coeffs]
    acc = None
    for k in range(0, r + 1):
        j = r - k
        ak = coeffs[k]
        cap = cfg.q**j * ak.val_lower_bound() + cfg.window_cap
        term = zeta.twist(j).scalar_mul(ak.frobenius(j, prec_cap=cap))
        acc = term if acc is None else acc + term
    resid = acc - zeta.twist(r).mul_t()
    return resid.max_norm_logq_upper(), resid
