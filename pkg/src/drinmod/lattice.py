"""Rank-r A-lattices: certification, enumeration, ordered bases, the Moore
recursion for exponential coefficients, power sums, and codimension-1
kernels of F_q-linear functionals.

The certificate accepted here (basis valuations pairwise distinct modulo e,
or equal-valuation groups with F_q-independent leading residues) makes every
norm computation exact: the norm of sum a_i pi_i is max_i ||a_i|| ||pi_i||.
All enumeration counts, ordered-basis norms, and stabilization bounds below
rely on that equality.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .rings import APoly
from .scalars import CInfApprox, GroundConfig, PrecisionError

__all__ = [
    "Lattice",
    "LatticeError",
    "LatticePoint",
    "OrderedBasis",
    "LatticeOrderedBasis",
    "KernelOrderedBasis",
    "MoorePoly",
    "e_coeffs",
    "EcoeffsResult",
    "power_sum",
    "span_elements",
    "sublattice_kernel",
    "ordered_basis",
]


class LatticeError(ValueError):
    """Basis fails the orthogonality certificate."""


class _FieldOps:
    """Exact linear algebra over the residue field for certificates."""

    def __init__(self, config: GroundConfig):
        self.config = config
        self.field = config.field
        deg = self.field.deg
        # matrix of x -> x^q on the residue field
        self.qfrob = self.field.frob_power(config.s % deg) if deg > 1 else np.eye(1, dtype=np.int64)

    def qpow(self, x: np.ndarray) -> np.ndarray:
        return (self.qfrob @ x) % self.config.p

    def det(self, mat: list[list[np.ndarray]]) -> np.ndarray:
        """Exact determinant by cofactor expansion (small sizes only)."""
        k = len(mat)
        f = self.field
        if k == 1:
            return mat[0][0]
        acc = f.zero()
        sign = 1
        for i in range(k):
            minor = [row[1:] for j, row in enumerate(mat) if j != i]
            term = f.elt_mul(mat[i][0], self.det(minor))
            acc = (acc + sign * term) % self.config.p
            sign = -sign
        return acc

    def moore_independent(self, vectors: list[np.ndarray]) -> bool:
        """x_1..x_k are F_q-linearly independent iff the Moore determinant
        det(x_i^(q^j))_{i,j=0..k-1} is nonzero."""
        mat = []
        for x in vectors:
            row = []
            cur = x
            for _ in range(len(vectors)):
                row.append(cur)
                cur = self.qpow(cur)
            mat.append(row)
        return bool(self.det(mat).any())


class _FqEchelon:
    """Row echelon over F_q for vectors whose entries are residue-field
    elements lying in F_q; used for greedy independence filtering."""

    def __init__(self, config: GroundConfig, width: int):
        self.config = config
        self.field = config.field
        self.width = width
        self.pivots: dict[int, list[np.ndarray]] = {}

    def try_add(self, vec: list[np.ndarray]) -> bool:
        """Reduce vec against stored pivots; absorb it if independent.
        Returns True when vec was independent of the current span."""
        f, p = self.field, self.config.p
        v = [x.copy() for x in vec]
        for col in sorted(self.pivots):
            if v[col].any():
                c = v[col]
                prow = self.pivots[col]
                for j in range(self.width):
                    v[j] = (v[j] - f.elt_mul(c, prow[j])) % p
        col = next((j for j in range(self.width) if v[j].any()), None)
        if col is None:
            return False
        cinv = f.elt_inv(v[col])
        self.pivots[col] = [f.elt_mul(cinv, x) for x in v]
        return True


@dataclass(frozen=True)
class LatticePoint:
    value: CInfApprox
    coords: tuple[APoly, ...]
    uval: int  # exact u-valuation; the norm is q^(-uval/e)


class Lattice:
    """A certified free A-lattice given by an orthogonal basis.

    Basis elements are stored as exact u-digit term lists; monomial(d, i)
    materializes theta^d * pi_i with a full window of digits, so deep
    ordered bases never run out of precision.
    """

    def __init__(self, config: GroundConfig, basis: list[CInfApprox], certificate: dict):
        self.config = config
        self.rank = len(basis)
        self.basis_terms = []
        self.uvals = []
        for b in basis:
            if not b.certified_nonzero:
                raise LatticeError("basis element is zero at its stored precision")
            terms = [(exp, np.array(c if isinstance(c, list) else [c], dtype=np.int64))
                     for exp, c in b.serialize()["coeffs"]]
            self.basis_terms.append(terms)
            self.uvals.append(b.val)
        self.certificate = certificate

    @classmethod
    def certify(cls, config: GroundConfig, basis: list[CInfApprox]) -> "Lattice":
        """Accept iff basis valuations are pairwise distinct mod e, or every
        equal-valuation group has F_q-independent leading residues.  A pair
        congruent mod e with unequal valuations is rejected."""
        if not basis:
            raise LatticeError("empty basis")
        for b in basis:
            if not b.certified_nonzero:
                raise LatticeError("basis element is zero at its stored precision")
        ops = _FieldOps(config)
        groups: dict[int, list[int]] = {}
        for i, b in enumerate(basis):
            groups.setdefault(b.val % config.e, []).append(i)
        route_groups = []
        for _, idxs in sorted(groups.items()):
            if len(idxs) == 1:
                continue
            for a, b2 in itertools.combinations(idxs, 2):
                if basis[a].val != basis[b2].val:
                    raise LatticeError(
                        f"basis elements {a + 1} and {b2 + 1} have valuations "
                        f"{basis[a].val} and {basis[b2].val}, congruent mod e={config.e} "
                        "but unequal: certificate does not apply")
            leads = [basis[i].arr[0] for i in idxs]
            if not ops.moore_independent(leads):
                raise LatticeError(
                    f"leading residues of basis elements {[i + 1 for i in idxs]} "
                    "are F_q-linearly dependent")
            route_groups.append([i + 1 for i in idxs])
        cert = {
            "rule": "valuations distinct mod e" if not route_groups
                    else "independent leading residues in equal-valuation groups",
            "valuations": [b.val for b in basis],
            "e": config.e,
        }
        if route_groups:
            cert["groups"] = route_groups
        return cls(config, basis, cert)

    def monomial(self, d: int, i: int) -> CInfApprox:
        """theta^d * pi_i, exact, with a full window of digits."""
        cfg = self.config
        shift = -cfg.e * d
        terms = [(exp + shift, c) for exp, c in self.basis_terms[i]]
        prec = self.uvals[i] + shift + cfg.window_cap
        return cfg.from_terms(terms, prec)

    def basis_element(self, i: int) -> CInfApprox:
        return self.monomial(0, i)

    def point(self, coords: tuple[APoly, ...]) -> CInfApprox:
        """Exact value of sum a_i(theta) pi_i."""
        cfg = self.config
        acc = None
        for i, a in enumerate(coords):
            for d in range(a.degree() + 1):
                c = a.coeff(d)
                if not c.any():
                    continue
                term = self.monomial(d, i).mul_elt(c)
                acc = term if acc is None else acc + term
        return acc if acc is not None else cfg.zero(cfg.window_cap)

    def point_uval(self, coords: tuple[APoly, ...]) -> int | None:
        """Exact valuation of a nonzero point, from the certificate."""
        best = None
        for i, a in enumerate(coords):
            if a.is_zero:
                continue
            v = -self.config.e * a.degree() + self.uvals[i]
            best = v if best is None else min(best, v)
        return best

    def enumerate_up_to(self, bound_scaled: int):
        """All nonzero lattice points of norm <= q^(bound_scaled / e), i.e.
        u-valuation >= -bound_scaled, as LatticePoints in a deterministic
        order.  The certificate turns the norm condition into independent
        degree caps deg a_i <= (bound_scaled + uval_i)/e."""
        cfg = self.config
        ranges = []
        for lv in self.uvals:
            cap = (bound_scaled + lv) // cfg.e
            # floor division safely handles negative caps
            if cap < 0:
                ranges.append([APoly.zero(cfg)])
            else:
                ranges.append(list(APoly.enumerate_up_to_degree(cfg, cap)))
        for coords in itertools.product(*ranges):
            if all(a.is_zero for a in coords):
                continue
            yield LatticePoint(self.point(coords), tuple(coords), self.point_uval(coords))

    def count_up_to(self, bound_scaled: int) -> int:
        total = 1
        for lv in self.uvals:
            cap = (bound_scaled + lv) // self.config.e
            if cap >= 0:
                total *= self.config.q ** (cap + 1)
        return total - 1

    def ordered(self, alt_tie_break: bool = False) -> "LatticeOrderedBasis":
        return LatticeOrderedBasis(self, alt_tie_break=alt_tie_break)

    def describe(self) -> str:
        return f"rank-{self.rank} lattice, basis valuations {self.uvals}"


class LatticeOrderedBasis:
    """Lazy ordered basis of a certified lattice.

    The elements are the monomials theta^d pi_i sorted by norm; the
    certificate makes each one a least-norm choice outside the span of its
    predecessors, so the norm sequence is the sorted multiset of the
    exponents e*d - uval_i.  Tie-breaking between equal-norm monomials is
    deterministic (basis index, reversed under alt_tie_break)."""

    def __init__(self, lat: Lattice, alt_tie_break: bool = False):
        self.lattice = lat
        self.config = lat.config
        self._pairs: list[tuple[int, int]] = []
        self._heap = []
        for i in range(lat.rank):
            key_i = lat.rank - 1 - i if alt_tie_break else i
            heapq.heappush(self._heap, (-lat.uvals[i], key_i, 0, i))

    def _extend_to(self, n: int) -> None:
        e = self.config.e
        while len(self._pairs) < n:
            exp, key_i, d, i = heapq.heappop(self._heap)
            self._pairs.append((d, i))
            heapq.heappush(self._heap, (exp + e, key_i, d + 1, i))

    def pair(self, k: int) -> tuple[int, int]:
        """(d, i) for the k-th basis vector; k is 1-indexed."""
        self._extend_to(k)
        return self._pairs[k - 1]

    def element(self, k: int) -> CInfApprox:
        d, i = self.pair(k)
        return self.lattice.monomial(d, i)

    def uval(self, k: int) -> int:
        d, i = self.pair(k)
        return -self.config.e * d + self.lattice.uvals[i]

    def norm_uvals(self, n: int) -> list[int]:
        return [self.uval(k) for k in range(1, n + 1)]

    def span_index_of_norm(self, bound_scaled: int) -> int:
        """Largest m with uval(v_m) >= -bound_scaled.  The span of v_1..v_m
        is then exactly the set of lattice points of norm <= q^(bound/e)."""
        m = 0
        while self.uval(m + 1) >= -bound_scaled:
            m += 1
        return m


@dataclass
class OrderedBasis:
    """Finite view of an ordered basis with exact norm data."""

    elements: list[CInfApprox]
    uvals: list[int]
    pairs: list[tuple[int, int]] | None = None

    def norm_logq(self, k: int) -> Fraction:
        return Fraction(-self.uvals[k - 1], self.elements[k - 1].config.e)


def ordered_basis(lat: Lattice, n: int, alt_tie_break: bool = False) -> OrderedBasis:
    src = lat.ordered(alt_tie_break=alt_tie_break)
    return OrderedBasis(
        elements=[src.element(k) for k in range(1, n + 1)],
        uvals=src.norm_uvals(n),
        pairs=[src.pair(k) for k in range(1, n + 1)],
    )


def _as_source(lat_or_basis):
    if isinstance(lat_or_basis, Lattice):
        return lat_or_basis.ordered()
    return lat_or_basis


class MoorePoly:
    """The q-linear polynomial with kernel V_n = span(v_1..v_n), normalized
    so its x^(q^0) coefficient is 1; coeffs[k] multiplies x^(q^k)."""

    def __init__(self, config: GroundConfig, coeffs: list[CInfApprox]):
        self.config = config
        self.coeffs = coeffs

    @classmethod
    def initial(cls, config: GroundConfig) -> "MoorePoly":
        return cls(config, [config.one(2 * config.window_cap)])

    @property
    def depth(self) -> int:
        return len(self.coeffs) - 1

    def apply(self, x: CInfApprox) -> CInfApprox:
        cfg = self.config
        acc = None
        for k, c in enumerate(self.coeffs):
            if x.certified_nonzero:
                xk = x.frobenius(k, prec_cap=x.val * cfg.q ** k + cfg.window_cap)
            else:
                xk = x.frobenius(k)
            term = c * xk
            acc = term if acc is None else acc + term
        return acc

    def extend(self, v: CInfApprox) -> tuple["MoorePoly", CInfApprox]:
        """Adjoin v to the kernel: P'(x) = P(x) - P(x)^q / P(v)^(q-1).

        Returns (P', w) with w = P(v); w must be certified nonzero, which is
        exactly the condition v outside span(V_n) at working precision."""
        cfg = self.config
        w = self.apply(v)
        if not w.certified_nonzero:
            raise PrecisionError("candidate vector is in the kernel at working precision")
        scale = w.pow_int(cfg.q - 1).inv()
        new_coeffs = [self.coeffs[0]]
        for k in range(1, len(self.coeffs) + 1):
            prev = self.coeffs[k - 1]
            if prev.certified_nonzero:
                fk = prev.frobenius(1, prec_cap=prev.val * cfg.q + cfg.window_cap)
            else:
                fk = prev.frobenius(1)
            corr = fk * scale
            if k < len(self.coeffs):
                new_coeffs.append(self.coeffs[k] - corr)
            else:
                new_coeffs.append(-corr)
        return MoorePoly(cfg, new_coeffs), w


def _stab_uvals(config: GroundConfig, basis_uvals: list[int], K: int) -> list:
    """Valuation lower bounds for e_{Lambda,k} - e_{V_n,k} when stopping at
    depth n = len(basis_uvals) - 1 (the last entry is the valuation of
    v_{n+1}, the first omitted vector).

    Each omitted Moore step n' >= n changes e_k by e_{n',k-1}^q / w^(q-1)
    with w = P_{n'}(v_{n'+1}); the factors obey
      val(w_{n'+1}) = q^(n') lv_{n'+1} - sum_{i<=n'} (q^i - q^(i-1)) lv_i
    (exact, no cancellation: distances from v_{n'+1} to kernel points all
    realize the maximum) and the coefficient bound
      val(e_{n',k-1}) >= VE_{k-1} := -sum_{i<=k-1} (q^i - q^(i-1)) lv_i.
    val(w) is weakly decreasing in n', so ultrametrically the first omitted
    step bounds the whole tail."""
    q = config.q
    n = len(basis_uvals) - 1
    VE = [0]
    for k in range(1, K + 1):
        if k <= n + 1:
            VE.append(VE[-1] - (q ** k - q ** (k - 1)) * basis_uvals[k - 1])
        else:
            VE.append(VE[-1])
    lvn1 = basis_uvals[n]
    val_w = q ** n * lvn1
    for i in range(1, n + 1):
        val_w -= (q ** i - q ** (i - 1)) * basis_uvals[i - 1]
    out = [None]  # e_0 = 1 exactly
    for k in range(1, K + 1):
        out.append(q * VE[k - 1] - (q - 1) * val_w)
    return out


@dataclass
class EcoeffsResult:
    values: list[CInfApprox]   # e_0..e_K, stabilization folded into prec
    depth: int                 # Moore depth used
    err_uvals: list            # certified tail-valuation bound per k (None for k=0)


def e_coeffs(source, K: int, target_uval: int, max_depth: int = 400) -> EcoeffsResult:
    """Exponential coefficients e_0..e_K of the locally finite subspace with
    the given ordered basis, each certified modulo u^target_uval.

    Runs the Moore recursion deep enough that the stabilization bound
    certifies every e_k to the target, then folds that bound into each
    coefficient's absolute precision, so downstream zero-at-precision tests
    account for the truncated tail automatically."""
    source = _as_source(source)
    cfg = source.config
    P = MoorePoly.initial(cfg)
    n = 0
    while True:
        uvals = [source.uval(k) for k in range(1, n + 2)]
        stab = _stab_uvals(cfg, uvals, K)
        if n >= K and all(s is None or s >= target_uval for s in stab):
            break
        if n >= max_depth:
            raise PrecisionError(
                f"stabilization bound did not reach u^{target_uval} within depth {max_depth}")
        P, _ = P.extend(source.element(n + 1))
        n += 1
    values = []
    for k in range(K + 1):
        c = P.coeffs[k]
        if stab[k] is not None:
            c = c.truncate(min(c.prec, stab[k]))
        values.append(c)
    return EcoeffsResult(values=values, depth=n, err_uvals=stab)


def span_elements(config: GroundConfig, vectors: list[CInfApprox]):
    """All F_q-combinations of the given vectors with their coefficient index
    tuples, zero included; q^len(vectors) results, deterministic order."""
    consts = config.field.fq_elements()
    for combo in itertools.product(range(len(consts)), repeat=len(vectors)):
        acc = None
        for ci, v in zip(combo, vectors):
            c = consts[ci]
            if not c.any():
                continue
            term = v.mul_elt(c)
            acc = term if acc is None else acc + term
        yield combo, acc if acc is not None else config.zero(config.window_cap)


def power_sum(source, m: int, d: int, budget: int = 300000) -> CInfApprox:
    """Sum of v^d over all v in V_m = span(v_1..v_m), by brute force.
    (0^d = 0 for d >= 1, so the zero vector contributes nothing.)"""
    if d < 1:
        raise ValueError("power sums are defined for d >= 1")
    source = _as_source(source)
    cfg = source.config
    if cfg.q ** m > budget:
        raise PrecisionError(f"power sum over q^{m} elements exceeds budget")
    vectors = [source.element(k) for k in range(1, m + 1)]
    acc = None
    for combo, v in span_elements(cfg, vectors):
        if all(c == 0 for c in combo):
            continue
        term = v.pow_int(d)
        acc = term if acc is None else acc + term
    return acc if acc is not None else cfg.zero(cfg.window_cap)


class KernelOrderedBasis:
    """Ordered basis of W = ker(chi) for an F_q-linear functional chi given
    by its values on the first P ordered-basis vectors of the parent (chi
    vanishes on every later one).

    The finite part (inside span(v_1..v_P)) is chosen greedily over the
    whole span, sorted by norm then serialized form; beyond it the parent's
    vectors v_{P+1}, v_{P+2}, ... lie in W outright.  Any element mixing in
    a tail coordinate has norm at least r_{P+1}, so the merged sequence is a
    valid greedy choice at every step."""

    def __init__(self, parent, chi_values: list[np.ndarray], span_budget: int = 11):
        self.parent = _as_source(parent)
        self.config = self.parent.config
        cfg = self.config
        P = len(chi_values)
        chi_values = [np.asarray(v, dtype=np.int64) % cfg.p for v in chi_values]
        if P > span_budget:
            raise PrecisionError(f"kernel prefix of length {P} exceeds span budget")
        if not any(v.any() for v in chi_values):
            raise ValueError("functional vanishes on the stored prefix")
        self.prefix_len = P
        field = cfg.field
        consts = field.fq_elements()
        vectors = [self.parent.element(k) for k in range(1, P + 1)]
        members = []
        for combo, v in span_elements(cfg, vectors):
            if all(c == 0 for c in combo):
                continue
            acc = field.zero()
            for ci, chi_v in zip(combo, chi_values):
                acc = (acc + field.elt_mul(consts[ci], chi_v)) % cfg.p
            if acc.any():
                continue
            members.append(((-v.val, _serial_key(v), combo), combo, v))
        members.sort(key=lambda t: t[0])
        ech = _FqEchelon(cfg, P)
        self.head: list[CInfApprox] = []
        self.head_combos: list[tuple[int, ...]] = []
        for _, combo, v in members:
            if not ech.try_add([consts[c] for c in combo]):
                continue
            self.head.append(v)
            self.head_combos.append(combo)
            if len(self.head) == P - 1:
                break
        if len(self.head) != P - 1:
            raise RuntimeError("kernel of a nonzero functional must have codimension 1")
        self.interleave_index = self._interleave_index()

    def element(self, k: int) -> CInfApprox:
        if k <= len(self.head):
            return self.head[k - 1]
        return self.parent.element(k + 1)

    def uval(self, k: int) -> int:
        if k <= len(self.head):
            return self.head[k - 1].val
        return self.parent.uval(k + 1)

    def norm_uvals(self, n: int) -> list[int]:
        return [self.uval(k) for k in range(1, n + 1)]

    def _interleave_index(self) -> int:
        n_check = self.prefix_len + 4
        r = [self.parent.uval(k) for k in range(1, n_check + 2)]
        s = [self.uval(k) for k in range(1, n_check + 1)]
        for m in range(1, n_check + 1):
            if all(s[i - 1] == r[i - 1] for i in range(1, m)) and \
               all(s[i - 1] == r[i] for i in range(m, n_check + 1)):
                return m
        raise RuntimeError("norm sequences do not interleave at codimension 1")


def _serial_key(v: CInfApprox):
    return tuple((exp, tuple(c) if isinstance(c, list) else (c,))
                 for exp, c in v.serialize()["coeffs"])


def sublattice_kernel(lat_or_basis, chi_values: list[np.ndarray]) -> KernelOrderedBasis:
    """Kernel of the functional chi (given by its values on an ordered-basis
    prefix of the parent) with its own ordered basis and interleaving index."""
    return KernelOrderedBasis(lat_or_basis, chi_values)
