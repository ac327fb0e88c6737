"""Rings built over the scalar layer.

Three players: polynomials with F_q coefficients (used both as elements of
A = F_q[theta] and as polynomials in the Tate variable t), twisted polynomials
in the q-power Frobenius tau (with tau*c = c^q*tau), and Tate series: power
series in t truncated at a fixed degree whose coefficients are scalars at the
infinite place.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .scalars import CInfApprox, GroundConfig, PrecisionError

__all__ = [
    "APoly",
    "DifferentialForm",
    "TwistedSeries",
    "TateSeries",
]


class APoly:
    """Polynomial with coefficients in F_q (inside the residue field).

    Coefficients are field coordinate vectors, low degree first, trimmed.
    Each coefficient must be fixed by the q-power Frobenius; this is checked
    on construction when the residue field is larger than F_q.
    """

    __slots__ = ("config", "coeffs")

    def __init__(self, config: GroundConfig, coeffs):
        field = config.field
        vecs = []
        for c in coeffs:
            if isinstance(c, (int, np.integer)):
                vecs.append(field.from_int(int(c)))
            else:
                v = np.asarray(c, dtype=np.int64) % config.p
                if v.shape != (field.deg,):
                    raise ValueError(f"coefficient must have length {field.deg}")
                vecs.append(v)
        while vecs and not vecs[-1].any():
            vecs.pop()
        if field.deg > 1 and config.m > 1:
            ms = field.frob_power(config.s % field.deg)
            for v in vecs:
                if ((ms @ v) % config.p != v).any():
                    raise ValueError("coefficient is not fixed by the q-power Frobenius")
        self.config = config
        self.coeffs = vecs

    @classmethod
    def zero(cls, config: GroundConfig) -> "APoly":
        return cls(config, [])

    @classmethod
    def one(cls, config: GroundConfig) -> "APoly":
        return cls(config, [1])

    @classmethod
    def x(cls, config: GroundConfig) -> "APoly":
        return cls(config, [0, 1])

    @classmethod
    def enumerate_up_to_degree(cls, config: GroundConfig, max_deg: int) -> Iterator["APoly"]:
        """All q^(max_deg+1) polynomials of degree <= max_deg, each exactly
        once (zero first, then by degree), in a deterministic order."""
        elems = config.field.fq_elements()
        nonzero = elems[1:]
        yield cls.zero(config)
        def lists(length):
            if length == 0:
                yield []
                return
            for rest in lists(length - 1):
                for c in elems:
                    yield rest + [c]
        for d in range(max_deg + 1):
            for low in lists(d):
                for top in nonzero:
                    yield cls(config, low + [top])

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> np.ndarray:
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return self.config.field.zero()

    def __add__(self, other: "APoly") -> "APoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return APoly(self.config, [(self.coeff(i) + other.coeff(i)) % self.config.p for i in range(n)])

    def __neg__(self) -> "APoly":
        return APoly(self.config, [(-c) % self.config.p for c in self.coeffs])

    def __sub__(self, other: "APoly") -> "APoly":
        return self + (-other)

    def __mul__(self, other: "APoly") -> "APoly":
        if self.is_zero or other.is_zero:
            return APoly.zero(self.config)
        field = self.config.field
        out = [field.zero() for _ in range(len(self.coeffs) + len(other.coeffs) - 1)]
        for i, a in enumerate(self.coeffs):
            if not a.any():
                continue
            for j, b in enumerate(other.coeffs):
                if b.any():
                    out[i + j] = (out[i + j] + field.elt_mul(a, b)) % self.config.p
        return APoly(self.config, out)

    def scale(self, c) -> "APoly":
        field = self.config.field
        if isinstance(c, (int, np.integer)):
            c = field.from_int(int(c))
        return APoly(self.config, [field.elt_mul(v, c) for v in self.coeffs])

    def shift(self, k: int) -> "APoly":
        """Multiply by x^k."""
        if self.is_zero:
            return self
        return APoly(self.config, [self.config.field.zero()] * k + self.coeffs)

    def eval_theta(self, prec: int | None = None) -> CInfApprox:
        """The element sum c_i * theta^i of the completion."""
        cfg = self.config
        return cfg.from_terms([(-cfg.e * i, c) for i, c in enumerate(self.coeffs)], prec)

    def eval_scalar(self, x: CInfApprox) -> CInfApprox:
        """Horner evaluation at an arbitrary scalar."""
        cfg = self.config
        acc = cfg.zero(x.prec) if self.is_zero else None
        for c in reversed(self.coeffs):
            term = cfg.from_terms([(0, c)], prec=None)
            acc = term if acc is None else acc * x + term
        return acc if acc is not None else cfg.zero()

    def eval_t(self, D: int, prec: int | None = None) -> "TateSeries":
        """The same polynomial read in the Tate variable, truncated at t^D."""
        cfg = self.config
        coeffs = []
        for j in range(D + 1):
            coeffs.append(cfg.from_terms([(0, self.coeff(j))], prec))
        return TateSeries(coeffs)

    def key(self) -> tuple:
        """Hashable deterministic key (used for ordering enumerations)."""
        return tuple(tuple(int(x) for x in c) for c in self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, APoly):
            return NotImplemented
        return self.config == other.config and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        if self.is_zero:
            return "APoly(0)"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c.any():
                cs = str(int(c[0])) if self.config.field.deg == 1 else "(" + ",".join(map(str, map(int, c))) + ")"
                terms.append(f"{cs}*x^{i}" if i else cs)
        return "APoly(" + " + ".join(terms) + ")"


class DifferentialForm:
    """A 1-form x*dtheta at the infinite place; only the residue is used.

    The residue of theta^k dtheta is 1 for k = -1 and 0 otherwise.  Reading
    it off a scalar needs the unramified rational case (e = 1, m = 1), where
    the u-digit at exponent 1 is the theta^(-1) coefficient.
    """

    __slots__ = ("value",)

    def __init__(self, value: CInfApprox):
        self.value = value

    def residue(self) -> np.ndarray:
        cfg = self.value.config
        if cfg.e != 1 or cfg.m != 1:
            raise NotImplementedError("residue extraction needs e == 1 and m == 1")
        return self.value.digit(1)


class TwistedSeries:
    """Polynomial (or truncated series) in tau with tau*c = c^q*tau.

    coeffs[i] multiplies tau^i.  order is the first tau-index whose
    coefficient is unknown; math.inf marks an exact polynomial (all higher
    coefficients are exactly zero).
    """

    __slots__ = ("config", "coeffs", "order")

    def __init__(self, config: GroundConfig, coeffs: list[CInfApprox], order=math.inf):
        if order != math.inf and len(coeffs) != order:
            raise ValueError("a truncated twisted series stores exactly `order` coefficients")
        self.config = config
        self.coeffs = list(coeffs)
        self.order = order

    @classmethod
    def constant(cls, config: GroundConfig, c: CInfApprox) -> "TwistedSeries":
        return cls(config, [c])

    @property
    def tau_degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, i: int) -> CInfApprox:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        if i < self.order:
            return self.config.zero(prec=self.config.N * 10)
        raise PrecisionError(f"tau^{i} coefficient is beyond series order {self.order}")

    def __add__(self, other: "TwistedSeries") -> "TwistedSeries":
        order = min(self.order, other.order)
        n = max(len(self.coeffs), len(other.coeffs))
        if order != math.inf:
            n = min(n, order)
        return TwistedSeries(self.config, [self.coeff(i) + other.coeff(i) for i in range(n)], order)

    def __neg__(self) -> "TwistedSeries":
        return TwistedSeries(self.config, [-c for c in self.coeffs], self.order)

    def __sub__(self, other: "TwistedSeries") -> "TwistedSeries":
        return self + (-other)

    def __mul__(self, other: "TwistedSeries") -> "TwistedSeries":
        """Twisted product: tau^i * c = c^(q^i) * tau^i."""
        order = min(self.order, other.order)
        if self.order == other.order == math.inf:
            n = len(self.coeffs) + len(other.coeffs) - 1 if self.coeffs and other.coeffs else 0
        else:
            n = order
        cfg = self.config
        out = []
        for k in range(n):
            acc = None
            for i in range(k + 1):
                if i >= len(self.coeffs) or k - i >= len(other.coeffs):
                    continue
                b = other.coeffs[k - i]
                cap = cfg.q**i * b.val_lower_bound() + cfg.window_cap
                term = self.coeffs[i] * b.frobenius(i, prec_cap=cap)
                acc = term if acc is None else acc + term
            out.append(acc if acc is not None else cfg.zero(prec=cfg.N * 10))
        return TwistedSeries(cfg, out, order)

    def apply(self, x: CInfApprox, prec_cap: int | None = None) -> CInfApprox:
        """Evaluate sum c_i x^(q^i) at a scalar."""
        if self.order != math.inf:
            raise PrecisionError("cannot apply a truncated twisted series exactly")
        acc = None
        for i, c in enumerate(self.coeffs):
            term = c * x.frobenius(i, prec_cap=prec_cap)
            acc = term if acc is None else acc + term
        return acc if acc is not None else self.config.zero()

    def __repr__(self) -> str:
        parts = [f"({c!r})*tau^{i}" for i, c in enumerate(self.coeffs)]
        tail = "" if self.order == math.inf else f" + O(tau^{self.order})"
        return "Twisted[" + " + ".join(parts) + tail + "]"


class TateSeries:
    """Power series in t truncated at degree D, scalar coefficients.

    The series is known modulo t^(D+1), and each retained coefficient
    carries its own u-adic absolute precision.
    """

    __slots__ = ("config", "coeffs")

    def __init__(self, coeffs: list[CInfApprox]):
        if not coeffs:
            raise ValueError("a Tate series stores at least the t^0 coefficient")
        self.config = coeffs[0].config
        self.coeffs = list(coeffs)

    @classmethod
    def zeros(cls, config: GroundConfig, D: int, prec: int | None = None) -> "TateSeries":
        return cls([config.zero(prec) for _ in range(D + 1)])

    @classmethod
    def one(cls, config: GroundConfig, D: int, prec: int | None = None) -> "TateSeries":
        return cls([config.one(prec)] + [config.zero(prec) for _ in range(D)])

    @property
    def D(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> CInfApprox:
        return self.coeffs[j]

    def truncate_degree(self, D: int) -> "TateSeries":
        if D >= self.D:
            return self
        return TateSeries(self.coeffs[: D + 1])

    def __add__(self, other: "TateSeries") -> "TateSeries":
        D = min(self.D, other.D)
        return TateSeries([self.coeffs[j] + other.coeffs[j] for j in range(D + 1)])

    def __neg__(self) -> "TateSeries":
        return TateSeries([-c for c in self.coeffs])

    def __sub__(self, other: "TateSeries") -> "TateSeries":
        return self + (-other)

    def __mul__(self, other: "TateSeries") -> "TateSeries":
        D = min(self.D, other.D)
        out = []
        for k in range(D + 1):
            acc = None
            for i in range(k + 1):
                if i <= self.D and k - i <= other.D:
                    term = self.coeffs[i] * other.coeffs[k - i]
                    acc = term if acc is None else acc + term
            out.append(acc)
        return TateSeries(out)

    def scalar_mul(self, c: CInfApprox) -> "TateSeries":
        return TateSeries([c * x for x in self.coeffs])

    def mul_t(self) -> "TateSeries":
        """Multiply by t (the top coefficient falls off the truncation)."""
        first = self.config.zero(max(c.prec for c in self.coeffs) + self.config.window_cap)
        return TateSeries([first] + self.coeffs[:-1])

    def twist(self, k: int = 1, prec_cap: int | None = None) -> "TateSeries":
        """Coefficientwise q^k-power Frobenius (t is fixed)."""
        return TateSeries([c.frobenius(k, prec_cap=prec_cap) for c in self.coeffs])

    def is_zero_at_prec(self) -> bool:
        return all(c.is_zero_at_prec for c in self.coeffs)

    def max_norm_logq_upper(self):
        """Certified upper bound on max_j log_q||coeff_j||."""
        return max(c.norm_logq_upper() for c in self.coeffs)

    def min_prec(self) -> int:
        return min(c.prec for c in self.coeffs)

    def is_unit_with_certificate(self) -> tuple[bool, dict]:
        """Unit test by strict dominance of the constant coefficient.

        Sufficient on the closed unit disk: if ||c_0|| > ||c_j|| for every
        1 <= j <= D, the constant term dominates everywhere, so the series
        has no zero with |t| <= 1.  The certificate records the norms and
        that dominance was checked up to the stored degree D only.
        """
        c0 = self.coeffs[0]
        if not c0.certified_nonzero:
            return False, {"reason": f"constant coefficient is zero at precision {c0.prec}"}
        n0 = c0.norm_logq()
        rest = []
        for j in range(1, self.D + 1):
            nj = self.coeffs[j].norm_logq_upper()
            rest.append(str(nj))
            if nj >= n0:
                return False, {
                    "reason": f"coefficient t^{j} is not dominated",
                    "logq_norm_c0": str(n0),
                    f"logq_norm_bound_c{j}": str(nj),
                }
        return True, {
            "logq_norm_c0": str(n0),
            "logq_norm_bounds": rest,
            "caveat": f"dominance verified up to stored degree D={self.D}",
        }

    def invert_unit(self, max_extra_terms: int = 40) -> "TateSeries":
        """Inverse via the geometric series, valid under strict dominance.

        Writes f = c_0 (1 - g) and sums powers of g until the added term is
        zero at precision in every coefficient.  Powers of g beyond the Tate
        degree are forced through the (zero at precision) constant term of g,
        so the loop terminates.
        """
        ok, cert = self.is_unit_with_certificate()
        if not ok:
            raise PrecisionError(f"not certified invertible: {cert['reason']}")
        cfg = self.config
        c0inv = self.coeffs[0].inv()
        fc0 = self.scalar_mul(c0inv)
        pmax = max(c.prec for c in fc0.coeffs) + 1
        one = TateSeries.one(cfg, self.D, prec=pmax)
        g = one - fc0
        acc = one
        power = one
        for _ in range(self.D + max_extra_terms):
            power = power * g
            if power.is_zero_at_prec():
                break
            acc = acc + power
        else:
            raise PrecisionError("geometric inversion did not stabilize")
        return acc.scalar_mul(c0inv)

    def serialize(self) -> dict:
        return {"D": self.D, "coeffs": [c.serialize() for c in self.coeffs]}

    def __repr__(self) -> str:
        return "Tate[" + ", ".join(f"t^{j}: {c!r}" for j, c in enumerate(self.coeffs[:4])) + (", ..." if self.D > 3 else "") + "]"
