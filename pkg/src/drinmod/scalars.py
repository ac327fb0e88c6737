"""Exact scalar arithmetic at the infinite place of F_q(theta).

The completion at infinity is approximated inside F_{q^m}((u)) where u is a
fixed e-th root of 1/theta, so v(u) = 1 and v(theta) = -e.  Every scalar is a
finite window of u-digits together with an absolute precision: the value is
congruent to the stored digits modulo u^prec.  All arithmetic propagates both
the digits and the precision, so a result is either certified nonzero (its
leading digit is stored and exact) or zero at the stated precision.

Norms are written multiplicatively as ||x|| = q^(-v(x)/e) with v the
u-valuation; exponents are kept as exact integers (scaled by e) throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "FqField",
    "GroundConfig",
    "CInfApprox",
    "PrecisionError",
]


class PrecisionError(ValueError):
    """Raised when an operation needs more certified digits than are stored."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def factor_prime_power(q: int) -> tuple[int, int]:
    """Write q = p^s with p prime, or raise ValueError."""
    if q < 2:
        raise ValueError(f"q must be a prime power, got {q}")
    for p in range(2, q + 1):
        if q % p == 0:
            if not _is_prime(p):
                raise ValueError(f"q={q} is not a prime power")
            s = 0
            r = q
            while r % p == 0:
                r //= p
                s += 1
            if r != 1:
                raise ValueError(f"q={q} is not a prime power")
            return p, s
    raise ValueError(f"q={q} is not a prime power")


# -- dense polynomial helpers over F_p (coefficient lists, low degree first) --

def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mul(a: list[int], b: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_trim(out)


def _poly_mod(a: list[int], f: list[int], p: int) -> list[int]:
    a = list(a)
    df = len(f) - 1
    inv_lead = pow(f[-1], p - 2, p)
    while len(a) - 1 >= df and a:
        if a[-1] == 0:
            a.pop()
            continue
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - df
        for i, fi in enumerate(f):
            a[shift + i] = (a[shift + i] - c * fi) % p
        a.pop()
    return _poly_trim(a)


def _poly_powmod(a: list[int], n: int, f: list[int], p: int) -> list[int]:
    result = [1]
    base = _poly_mod(a, f, p)
    while n:
        if n & 1:
            result = _poly_mod(_poly_mul(result, base, p), f, p)
        base = _poly_mod(_poly_mul(base, base, p), f, p)
        n >>= 1
    return result


def _poly_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = list(a), list(b)
    while b:
        a, b = b, _poly_mod(a, b, p)
    return a


def _prime_divisors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _find_irreducible(p: int, d: int) -> list[int]:
    """First monic irreducible of degree d over F_p in lexicographic order.

    Deterministic so that the field presentation (and everything serialized
    downstream) is reproducible across runs and machines.
    """
    if d == 1:
        return [0, 1]
    x = [0, 1]
    for code in range(p ** d):
        coeffs = []
        c = code
        for _ in range(d):
            coeffs.append(c % p)
            c //= p
        f = coeffs + [1]
        if f[0] == 0:
            continue
        xq = _poly_powmod(x, p ** d, f, p)
        if _poly_trim([(xq[i] if i < len(xq) else 0) - (x[i] if i < len(x) else 0) for i in range(max(len(xq), 2))]) not in ([],):
            continue
        ok = True
        for r in _prime_divisors(d):
            xqr = _poly_powmod(x, p ** (d // r), f, p)
            diff = [(xqr[i] if i < len(xqr) else 0) - (x[i] if i < len(x) else 0) for i in range(max(len(xqr), 2))]
            g = _poly_gcd(f, _poly_trim([c % p for c in diff]), p)
            if len(g) - 1 != 0:
                ok = False
                break
        if ok:
            return f
    raise RuntimeError(f"no irreducible of degree {d} over F_{p}")


def _kernel_mod_p(mat: np.ndarray, p: int) -> list[np.ndarray]:
    """Basis of the right kernel of mat over F_p (rows of the result)."""
    m = mat % p
    rows, cols = m.shape
    m = m.copy()
    pivots = []
    r = 0
    for c in range(cols):
        piv = None
        for i in range(r, rows):
            if m[i, c] % p:
                piv = i
                break
        if piv is None:
            continue
        m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, c]), p - 2, p)
        m[r] = m[r] * inv % p
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % p
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = np.zeros(cols, dtype=np.int64)
        v[fc] = 1
        for ri, pc in enumerate(pivots):
            v[pc] = (-m[ri, fc]) % p
        basis.append(v)
    return basis


class FqField:
    """The residue field F_{q^m} = F_p[y]/(f), q = p^s, deg f = s*m.

    Elements are numpy int64 vectors of length s*m (coordinates in the power
    basis 1, y, ..., y^(deg-1)).  The class also provides the vectorized
    kernels used by CInfApprox: row-wise products of u-digit arrays and the
    matrix of the p-power Frobenius.
    """

    def __init__(self, p: int, s: int, m: int):
        if not _is_prime(p):
            raise ValueError(f"p={p} is not prime")
        self.p = p
        self.s = s
        self.m = m
        self.q = p ** s
        self.deg = s * m
        self.modulus = _find_irreducible(p, self.deg)
        # reduction[i] = coefficient vector of y^(deg+i) mod f, for the
        # product kernel; shape (deg-1, deg).
        red = []
        cur = _poly_mod([0] * self.deg + [1], self.modulus, p)
        for _ in range(self.deg - 1):
            red.append([cur[j] if j < len(cur) else 0 for j in range(self.deg)])
            cur = _poly_mod([0] + cur, self.modulus, p)
        self.reduction = np.array(red, dtype=np.int64).reshape(max(self.deg - 1, 0), self.deg)
        # Column j of frob_matrix is y^(j*p) mod f: the matrix of x -> x^p.
        cols = []
        for j in range(self.deg):
            v = _poly_powmod([0, 1], p, self.modulus, p) if j == 1 else _poly_powmod([0] * j + [1] if j else [1], p, self.modulus, p)
            cols.append([v[i] if i < len(v) else 0 for i in range(self.deg)])
        self.frob_matrix = np.array(cols, dtype=np.int64).T % p
        self._frob_powers: dict[int, np.ndarray] = {0: np.eye(self.deg, dtype=np.int64)}

    # -- single elements (int64 vectors of length deg) --

    def zero(self) -> np.ndarray:
        return np.zeros(self.deg, dtype=np.int64)

    def one(self) -> np.ndarray:
        v = self.zero()
        v[0] = 1
        return v

    def from_int(self, c: int) -> np.ndarray:
        v = self.zero()
        v[0] = c % self.p
        return v

    def elt_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prod = _poly_mul([int(x) for x in a], [int(x) for x in b], self.p)
        prod = _poly_mod(prod, self.modulus, self.p)
        out = self.zero()
        out[: len(prod)] = prod
        return out

    def elt_inv(self, a: np.ndarray) -> np.ndarray:
        if not a.any():
            raise ZeroDivisionError("inverse of zero field element")
        order = self.p ** self.deg - 1
        result = self.one()
        base = a.copy()
        n = order - 1
        while n:
            if n & 1:
                result = self.elt_mul(result, base)
            base = self.elt_mul(base, base)
            n >>= 1
        return result

    def frob_power(self, k: int) -> np.ndarray:
        """Matrix of x -> x^(p^k) on F_{p^deg}; k is reduced mod deg."""
        k %= self.deg
        if k not in self._frob_powers:
            mk = self._frob_powers[0]
            for cached in sorted(self._frob_powers):
                if cached <= k:
                    mk, base = self._frob_powers[cached], cached
            prev = mk
            steps = k - base
            for _ in range(steps):
                prev = prev @ self.frob_matrix % self.p
            self._frob_powers[k] = prev
        return self._frob_powers[k]

    def fq_elements(self) -> list[np.ndarray]:
        """The q elements of the subfield F_q, as fixed points of x -> x^(p^s).

        Sorted by coordinate tuple so iteration order is deterministic.
        """
        ms = self.frob_power(self.s % self.deg) if self.deg > 1 else np.eye(1, dtype=np.int64)
        kernel = _kernel_mod_p(ms - np.eye(self.deg, dtype=np.int64), self.p)
        elems = [self.zero()]
        # span the kernel basis over F_p
        for v in kernel:
            new = []
            for c in range(1, self.p):
                for e in elems:
                    new.append((e + c * v) % self.p)
            elems.extend(new)
        if len(elems) != self.q:
            raise RuntimeError("subfield enumeration has wrong size")
        return sorted(elems, key=lambda v: tuple(int(x) for x in v))

    # -- row arrays: shape (L, deg), one row per u-digit --

    def arr_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        la, lb = a.shape[0], b.shape[0]
        if la == 0 or lb == 0:
            return np.zeros((0, self.deg), dtype=np.int64)
        if self.deg == 1:
            out = np.convolve(a[:, 0], b[:, 0]) % self.p
            return out.reshape(-1, 1)
        full = np.zeros((la + lb - 1, 2 * self.deg - 1), dtype=np.int64)
        for d1 in range(self.deg):
            col = a[:, d1]
            if not col.any():
                continue
            for d2 in range(self.deg):
                col2 = b[:, d2]
                if not col2.any():
                    continue
                full[:, d1 + d2] += np.convolve(col, col2)
        full %= self.p
        out = full[:, : self.deg]
        high = full[:, self.deg:]
        if high.any():
            out = (out + high @ self.reduction) % self.p
        return out

    def arr_frob(self, a: np.ndarray, pk: int) -> np.ndarray:
        """Apply x -> x^(p^pk) to every row."""
        if a.shape[0] == 0 or self.deg == 1:
            return a
        mat = self.frob_power(pk)
        return a @ mat.T % self.p


@lru_cache(maxsize=None)
def _field_cache(p: int, s: int, m: int) -> FqField:
    return FqField(p, s, m)


@dataclass(frozen=True)
class GroundConfig:
    """Ambient parameters: q = p^s, residue extension degree m, ramification
    index e (u^e = 1/theta), and working precision N in u-digits.

    window_cap bounds the number of stored digits per scalar; operations that
    would exceed it truncate their result, which only lowers abs_prec and so
    never invalidates a certificate.
    """

    p: int
    s: int
    m: int
    e: int
    N: int
    window_cap: int | None = None

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.s < 1 or self.m < 1 or self.e < 1:
            raise ValueError("s, m, e must be positive")
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.window_cap is None:
            object.__setattr__(self, "window_cap", self.N + 96)

    @property
    def q(self) -> int:
        return self.p ** self.s

    @property
    def field(self) -> FqField:
        return _field_cache(self.p, self.s, self.m)

    # -- constructors --

    def zero(self, prec: int | None = None) -> "CInfApprox":
        prec = self.N if prec is None else prec
        return CInfApprox(self, prec, prec, np.zeros((0, self.field.deg), dtype=np.int64))

    def one(self, prec: int | None = None) -> "CInfApprox":
        return self.from_terms([(0, 1)], prec)

    def theta(self, prec: int | None = None) -> "CInfApprox":
        return self.from_terms([(-self.e, 1)], prec)

    def u_pow(self, k: int, prec: int | None = None) -> "CInfApprox":
        return self.from_terms([(k, 1)], prec)

    def theta_pow(self, n: int, prec: int | None = None) -> "CInfApprox":
        return self.from_terms([(-self.e * n, 1)], prec)

    def from_terms(self, terms, prec: int | None = None) -> "CInfApprox":
        """Build from [(u_exponent, coeff)] where coeff is an int (image of
        the prime field) or a length-deg coordinate vector."""
        field = self.field
        prec = self.N if prec is None else prec
        cmap: dict[int, np.ndarray] = {}
        for exp, c in terms:
            if isinstance(c, (int, np.integer)):
                vec = field.from_int(int(c))
            else:
                vec = np.asarray(c, dtype=np.int64) % self.p
                if vec.shape != (field.deg,):
                    raise ValueError(f"coefficient vector must have length {field.deg}")
            if exp in cmap:
                cmap[exp] = (cmap[exp] + vec) % self.p
            else:
                cmap[exp] = vec
        cmap = {e: v for e, v in cmap.items() if v.any() and e < prec}
        if not cmap:
            return self.zero(prec)
        lo = min(cmap)
        hi = max(cmap)
        arr = np.zeros((hi - lo + 1, field.deg), dtype=np.int64)
        for exp, vec in cmap.items():
            arr[exp - lo] = vec
        return CInfApprox(self, lo, prec, arr)


class CInfApprox:
    """A scalar known modulo u^prec.

    Invariants: arr has shape (L, deg); if L == 0 the value is zero at
    precision prec and val == prec; otherwise arr[0] is nonzero (so val is the
    exact u-valuation and the element is certified nonzero), arr[-1] is
    nonzero, and val + L <= prec.  Entries lie in [0, p).
    """

    __slots__ = ("config", "val", "prec", "arr")

    def __init__(self, config: GroundConfig, val: int, prec: int, arr: np.ndarray):
        arr = np.asarray(arr, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != config.field.deg:
            raise ValueError("digit array must have shape (L, deg)")
        # normalize: trim zero rows at both ends, drop digits >= prec
        if arr.shape[0]:
            keep = arr.shape[0] - max(0, val + arr.shape[0] - prec)
            arr = arr[:max(keep, 0)]
        nz = np.flatnonzero(arr.any(axis=1))
        if nz.size == 0:
            val = prec
            arr = np.zeros((0, config.field.deg), dtype=np.int64)
        else:
            lo, hi = int(nz[0]), int(nz[-1])
            arr = arr[lo:hi + 1]
            val += lo
        arr.setflags(write=False)
        self.config = config
        self.val = val
        self.prec = prec
        self.arr = arr

    # -- predicates and numeric views --

    @property
    def is_zero_at_prec(self) -> bool:
        return self.arr.shape[0] == 0

    @property
    def certified_nonzero(self) -> bool:
        return self.arr.shape[0] > 0

    def valuation(self) -> int:
        """Exact u-valuation; PrecisionError if only zero-at-prec is known."""
        if self.is_zero_at_prec:
            raise PrecisionError(f"value is zero at precision {self.prec}; valuation unknown")
        return self.val

    def val_lower_bound(self) -> int:
        """A certified lower bound on the u-valuation (= val, or prec if the
        stored window is zero)."""
        return self.val

    def norm(self) -> float:
        """||x|| = q^(-v/e); 0.0 when zero at precision (an upper bound)."""
        if self.is_zero_at_prec:
            return 0.0
        try:
            return float(self.config.q) ** (-self.val / self.config.e)
        except OverflowError:
            return math.inf

    def norm_logq(self) -> Fraction:
        """log_q||x|| exactly, for certified-nonzero values."""
        return Fraction(-self.valuation(), self.config.e)

    def norm_logq_upper(self) -> Fraction:
        """Certified upper bound on log_q||x|| (uses prec when zero-at-prec)."""
        return Fraction(-self.val, self.config.e)

    # -- arithmetic --

    def _check_compatible(self, other: "CInfApprox") -> None:
        if self.config != other.config:
            raise ValueError("operands live over different ground configurations")

    def __add__(self, other: "CInfApprox") -> "CInfApprox":
        self._check_compatible(other)
        prec = min(self.prec, other.prec)
        lo = min(self.val, other.val)
        hi = min(max(self.val + self.arr.shape[0], other.val + other.arr.shape[0]), prec)
        if hi <= lo:
            return self.config.zero(prec)
        out = np.zeros((hi - lo, self.config.field.deg), dtype=np.int64)
        for x in (self, other):
            if x.arr.shape[0]:
                a, b = x.val - lo, min(x.val + x.arr.shape[0], hi) - lo
                if b > a:
                    out[a:b] = (out[a:b] + x.arr[: b - a]) % self.config.p
        return CInfApprox(self.config, lo, prec, out)

    def __neg__(self) -> "CInfApprox":
        return CInfApprox(self.config, self.val, self.prec, (-self.arr) % self.config.p)

    def __sub__(self, other: "CInfApprox") -> "CInfApprox":
        return self + (-other)

    def __mul__(self, other: "CInfApprox") -> "CInfApprox":
        self._check_compatible(other)
        cfg = self.config
        # abs_prec of a product: each factor's uncertainty is scaled by the
        # other factor's valuation (val is exact for certified-nonzero input,
        # and a lower bound never exceeding prec otherwise).
        prec = min(self.prec + other.val, other.prec + self.val)
        if self.is_zero_at_prec or other.is_zero_at_prec:
            return cfg.zero(prec)
        val = self.val + other.val
        prec = min(prec, val + cfg.window_cap)
        arr = cfg.field.arr_mul(self.arr, other.arr)
        return CInfApprox(cfg, val, prec, arr)

    def mul_scalar(self, c: int) -> "CInfApprox":
        return CInfApprox(self.config, self.val, self.prec, self.arr * (c % self.config.p) % self.config.p)

    def mul_elt(self, c: np.ndarray) -> "CInfApprox":
        """Multiply by a single residue-field element (exact constant)."""
        c = np.asarray(c, dtype=np.int64) % self.config.p
        if not c.any():
            # the constant is exactly zero, so the product is too
            return self.config.zero(self.prec + self.config.window_cap)
        arr = self.config.field.arr_mul(self.arr, c.reshape(1, -1))
        return CInfApprox(self.config, self.val, self.prec, arr)

    def shift(self, k: int) -> "CInfApprox":
        """Multiply by the exact monomial u^k."""
        return CInfApprox(self.config, self.val + k, self.prec + k, self.arr)

    def inv(self) -> "CInfApprox":
        """Newton inversion. Needs a certified-nonzero leading digit; the
        relative precision (window length) is preserved: prec -> prec - 2*val."""
        if self.is_zero_at_prec:
            raise PrecisionError(f"cannot invert: zero at precision {self.prec}")
        cfg = self.config
        field = cfg.field
        w = self.prec - self.val  # window length >= 1
        c = self.arr  # unit part, c[0] != 0
        g = field.elt_inv(c[0]).reshape(1, -1)
        known = 1
        while known < w:
            known = min(2 * known, w)
            cg = field.arr_mul(c[:known], g)[:known]
            # g <- g*(2 - c*g) truncated to `known` digits
            corr = (-cg) % cfg.p
            corr[0] = (corr[0] + 2 * field.one()) % cfg.p
            g = field.arr_mul(g, corr)[:known]
        return CInfApprox(cfg, -self.val, self.prec - 2 * self.val, g)

    def __truediv__(self, other: "CInfApprox") -> "CInfApprox":
        return self * other.inv()

    def frobenius(self, k: int, prec_cap: int | None = None) -> "CInfApprox":
        """x -> x^(q^k), exact on digits (characteristic p), exponents and
        abs_prec scale by q^k.  prec_cap truncates the result's precision to
        keep windows bounded in iterated use."""
        if k < 0:
            raise ValueError("frobenius power must be nonnegative")
        cfg = self.config
        Q = cfg.q ** k
        new_prec = self.prec * Q
        if prec_cap is not None:
            new_prec = min(new_prec, prec_cap)
        if self.is_zero_at_prec:
            return cfg.zero(new_prec)
        new_val = self.val * Q
        L = self.arr.shape[0]
        # digit at exponent val+i moves to Q*(val+i)
        n_keep = L
        while n_keep > 0 and new_val + (n_keep - 1) * Q >= new_prec:
            n_keep -= 1
        if n_keep <= 0:
            return cfg.zero(new_prec)
        digits = cfg.field.arr_frob(self.arr[:n_keep], (cfg.s * k) % cfg.field.deg if cfg.field.deg > 1 else 0)
        out = np.zeros(((n_keep - 1) * Q + 1, cfg.field.deg), dtype=np.int64)
        out[::Q] = digits
        return CInfApprox(cfg, new_val, new_prec, out)

    def pow_int(self, n: int) -> "CInfApprox":
        if n < 0:
            return self.inv().pow_int(-n)
        if n == 0:
            return self.config.one()
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def truncate(self, new_prec: int) -> "CInfApprox":
        """Forget digits at exponents >= new_prec (no-op if new_prec >= prec)."""
        if new_prec >= self.prec:
            return self
        return CInfApprox(self.config, self.val, new_prec, self.arr)

    # -- comparison and serialization --

    def __eq__(self, other) -> bool:
        if not isinstance(other, CInfApprox):
            return NotImplemented
        return (self.config == other.config and self.val == other.val
                and self.prec == other.prec and self.arr.shape == other.arr.shape
                and bool((self.arr == other.arr).all()))

    __hash__ = None

    def agrees_with(self, other: "CInfApprox") -> bool:
        """True when both are congruent modulo u^min(precs)."""
        return (self - other).is_zero_at_prec

    def digit(self, exp: int) -> np.ndarray:
        """Coefficient of u^exp (must satisfy exp < prec)."""
        if exp >= self.prec:
            raise PrecisionError(f"digit u^{exp} is beyond precision {self.prec}")
        i = exp - self.val
        if 0 <= i < self.arr.shape[0]:
            return self.arr[i].copy()
        return self.config.field.zero()

    def serialize(self) -> dict:
        coeffs = []
        for i in range(self.arr.shape[0]):
            row = self.arr[i]
            if row.any():
                c = int(row[0]) if self.config.field.deg == 1 else [int(x) for x in row]
                coeffs.append([self.val + i, c])
        return {"val": self.val, "prec": self.prec, "coeffs": coeffs}

    @staticmethod
    def deserialize(config: GroundConfig, data: dict) -> "CInfApprox":
        terms = []
        for exp, c in data["coeffs"]:
            terms.append((exp, c))
        out = config.from_terms(terms, data["prec"])
        if out.is_zero_at_prec and data["coeffs"]:
            raise ValueError("serialized coefficients inconsistent with precision")
        return out

    def __repr__(self) -> str:
        cfg = self.config
        if self.is_zero_at_prec:
            return f"CInf(O(u^{self.prec}))"
        parts = []
        shown = 0
        for i in range(self.arr.shape[0]):
            row = self.arr[i]
            if not row.any():
                continue
            if cfg.field.deg == 1:
                cs = str(int(row[0]))
            else:
                cs = "(" + ",".join(str(int(x)) for x in row) + ")"
            parts.append(f"{cs}*u^{self.val + i}")
            shown += 1
            if shown >= 6:
                parts.append("...")
                break
        return "CInf(" + " + ".join(parts) + f" + O(u^{self.prec}))"
