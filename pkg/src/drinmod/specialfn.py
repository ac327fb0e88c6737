"""Special functions attached to a lattice-module pair: Anderson generating
functions, the rigid analytic trivialization and its determinant certificate,
dual special functions (zeta vectors), Pellarin-type series, and the duality
elements (beta, g_beta) coming from the F_q-linear functional picture.

Two computational routes run through this module on purpose.  Zeta
coefficients have a closed form: for an F_q-linear functional chi on the
ball V_m = span(v_1..v_m) of lattice points with W = ker(chi) and chi(u) = 1,

    sum_{lam in V_m, lam != 0} chi(lam)/lam = -1/P_W(u),

where P_W is the q-linear polynomial with kernel W normalized to have
linear coefficient 1 (group the sum by the level sets chi = c, use the
logarithmic derivative P_W'/P_W = 1/P_W of an additive polynomial on each
coset, and sum c * 1/(c P_W(u)) over c != 0, which is q - 1 = -1 times
1/P_W(u)).  The functionals that occur here are coefficient extractions,
whose values on the monomial ordered basis are Kronecker deltas, so W is
simply the span of all ball monomials except one and P_W(u) comes out of a
Moore value recursion that shares its prefix across all coefficients.  The
brute-force sum over enumerated lattice points stays available as an
independent oracle at small ball sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .drinfeld import DrinfeldModule, ExpSeries, exp_from_lattice
from .lattice import Lattice, KernelOrderedBasis, _as_source, sublattice_kernel
from .rings import APoly, TateSeries, TwistedSeries
from .scalars import CInfApprox, GroundConfig, PrecisionError


# ---------------------------------------------------------------------------
# Anderson generating functions


@dataclass
class AGFVector:
    """The r series omega_i(t) = sum_j exp_Lambda(pi_i / theta^(j+1)) t^j."""

    lattice: Lattice
    module: DrinfeldModule
    series: list[TateSeries]
    exp: ExpSeries
    D: int

    @property
    def rank(self) -> int:
        return len(self.series)

    def min_prec(self) -> int:
        return min(s.min_prec() for s in self.series)


def agf(lat: Lattice, phi: DrinfeldModule, i: int, D: int,
        K: int = 8, target_uval: int | None = None,
        exp: ExpSeries | None = None) -> TateSeries:
    """The i-th Anderson generating function (i is 1-based), coefficient by
    coefficient: the t^j coefficient is the certified value of the lattice
    exponential at pi_i / theta^(j+1)."""
    cfg = lat.config
    if exp is None:
        exp = exp_from_lattice(lat, K, cfg.N if target_uval is None else target_uval)
    coeffs = []
    for j in range(D + 1):
        x = lat.monomial(-(j + 1), i - 1)
        coeffs.append(exp.eval_at(x))
    return TateSeries(coeffs)


def agf_vector(lat: Lattice, phi: DrinfeldModule, D: int,
               K: int = 8, target_uval: int | None = None) -> AGFVector:
    cfg = lat.config
    exp = exp_from_lattice(lat, K, cfg.N if target_uval is None else target_uval)
    series = [agf(lat, phi, i, D, exp=exp) for i in range(1, lat.rank + 1)]
    return AGFVector(lattice=lat, module=phi, series=series, exp=exp, D=D)


def special_equation_residual(phi: DrinfeldModule,
                              omega: TateSeries) -> tuple[Fraction, TateSeries]:
    """Residual of phi_theta(omega) - t*omega, where phi_theta acts on the
    Tate algebra with tau as the coefficientwise q-power twist.  Returns a
    certified upper bound on log_q of the max coefficient norm, and the
    residual itself."""
    cfg = phi.config
    acc = omega.scalar_mul(cfg.theta(2 * cfg.window_cap))
    for i, a in enumerate(phi.coeffs, start=1):
        acc = acc + omega.twist(i).scalar_mul(a)
    resid = acc - omega.mul_t()
    return resid.max_norm_logq_upper(), resid


# ---------------------------------------------------------------------------
# Rigid analytic trivialization


@dataclass
class TrivializationMatrix:
    """r x r matrix with entry (i, j) = omega_i twisted j - 1 times."""

    entries: list[list[TateSeries]]

    @property
    def rank(self) -> int:
        return len(self.entries)


def trivialization(agfv: AGFVector) -> TrivializationMatrix:
    r = agfv.rank
    entries = [[agfv.series[i].twist(j) for j in range(r)] for i in range(r)]
    return TrivializationMatrix(entries=entries)


def _tate_det(rows: list[list[TateSeries]]) -> TateSeries:
    if len(rows) == 1:
        return rows[0][0]
    acc = None
    for j in range(len(rows)):
        minor = [[row[k] for k in range(len(row)) if k != j] for row in rows[1:]]
        term = rows[0][j] * _tate_det(minor)
        if j % 2:
            term = -term
        acc = term if acc is None else acc + term
    return acc


def det_certificate(triv: TrivializationMatrix) -> dict:
    """Cofactor-expansion determinant with a nonvanishing certificate: the
    lowest t-degree whose coefficient is certified nonzero, and that
    coefficient's exact norm.  Failure to certify any coefficient is
    reported, not masked."""
    det = _tate_det(triv.entries)
    for j in range(det.D + 1):
        c = det.coeff(j)
        if c.certified_nonzero:
            return {
                "nonzero": True,
                "t_degree": j,
                "norm_logq": c.norm_logq(),
                "det": det,
            }
    return {"nonzero": False, "floor_logq": det.max_norm_logq_upper(), "det": det}


# ---------------------------------------------------------------------------
# Zeta vectors (dual special functions)


@dataclass
class ZetaVector:
    """The r series zeta_i(t); coefficient j is -sum over nonzero lattice
    points of (theta^j-coefficient of the i-th A-coordinate) / point, summed
    over the ball spanned by the first span_size ordered-basis vectors, with
    the first omitted norm folded into each coefficient's precision."""

    lattice: Lattice
    series: list[TateSeries]
    bound_scaled: int
    span_size: int
    tail_uval: int
    B_index: int


def _frob_cap(cfg: GroundConfig, x: CInfApprox) -> int:
    return cfg.q * x.val_lower_bound() + cfg.window_cap


def _moore_fold(cfg: GroundConfig, values: list[CInfApprox], start: int,
                cinv: CInfApprox) -> None:
    """One Moore step y <- y - y^q * cinv applied in place from start on."""
    for k in range(start, len(values)):
        y = values[k]
        values[k] = y - y.frobenius(1, prec_cap=_frob_cap(cfg, y)) * cinv


def _pivot_inverse(cfg: GroundConfig, w: CInfApprox) -> CInfApprox:
    if not w.certified_nonzero:
        raise PrecisionError(
            "Moore pivot is zero at working precision; raise the window")
    return w.pow_int(1 - cfg.q)


def _side_eval(cfg: GroundConfig, u: CInfApprox, rest: list[CInfApprox]) -> CInfApprox:
    """Finish the value recursion for the kernel spanned by ``rest`` (already
    reduced against the shared prefix) and return 1/P_W(u)."""
    vals = list(rest)
    y = u
    for idx in range(len(vals)):
        cinv = _pivot_inverse(cfg, vals[idx])
        y = y - y.frobenius(1, prec_cap=_frob_cap(cfg, y)) * cinv
        _moore_fold(cfg, vals, idx + 1, cinv)
    if not y.certified_nonzero:
        raise PrecisionError(
            "P_W(u) is zero at working precision; raise the window")
    return y.inv()


def zeta_vector(lat: Lattice, D: int, B_index: int = 40,
                fold_tail: bool = True) -> ZetaVector:
    """Closed-form zeta coefficients over the ball picked by the B_index-th
    ordered-basis norm.  The t^j coefficient of zeta_i is 1/P_W(u) with
    u = theta^j pi_i and W the span of every other ball monomial (or an
    exact zero when that monomial exceeds the ball)."""
    cfg = lat.config
    ob = lat.ordered()
    bound = -ob.uval(B_index)
    m = ob.span_index_of_norm(bound)
    tail_uval = -ob.uval(m + 1)
    excl_at: dict[int, tuple[int, int]] = {}
    for k in range(1, m + 1):
        d, i = ob.pair(k)
        if d <= D:
            excl_at[k] = (i, d)
    out: list[list[CInfApprox | None]] = [[None] * (D + 1) for _ in range(lat.rank)]
    values = [ob.element(k) for k in range(1, m + 1)]
    for n in range(m):
        if n + 1 in excl_at:
            i, d = excl_at[n + 1]
            out[i][d] = _side_eval(cfg, values[n], values[n + 1:])
        cinv = _pivot_inverse(cfg, values[n])
        _moore_fold(cfg, values, n + 1, cinv)
    series = []
    for i in range(lat.rank):
        coeffs = []
        for d in range(D + 1):
            c = out[i][d]
            if c is None:
                c = cfg.zero(tail_uval)
            elif fold_tail:
                c = c.truncate(min(c.prec, tail_uval))
            coeffs.append(c)
        series.append(TateSeries(coeffs))
    return ZetaVector(lattice=lat, series=series, bound_scaled=bound,
                      span_size=m, tail_uval=tail_uval, B_index=B_index)


def zeta_brute(lat: Lattice, D: int, B_index: int = 40) -> list[TateSeries]:
    """The same ball sums by direct enumeration of lattice points; an
    independent oracle for zeta_vector at small ball sizes (no tail fold)."""
    cfg = lat.config
    ob = lat.ordered()
    bound = -ob.uval(B_index)
    sums: list[list[CInfApprox | None]] = [[None] * (D + 1) for _ in range(lat.rank)]
    for pt in lat.enumerate_up_to(bound):
        inv = pt.value.inv()
        for i, a in enumerate(pt.coords):
            for d in range(min(a.degree(), D) + 1):
                c = a.coeff(d)
                if not c.any():
                    continue
                term = inv.mul_elt(c)
                sums[i][d] = term if sums[i][d] is None else sums[i][d] + term
    series = []
    for i in range(lat.rank):
        coeffs = [-s if s is not None else cfg.zero(cfg.N + cfg.window_cap)
                  for s in sums[i]]
        series.append(TateSeries(coeffs))
    return series


def pellarin_series(cfg: GroundConfig, rho: CInfApprox, D: int,
                    max_deg: int) -> TateSeries:
    """Rank-1 dual special function for the lattice A*rho by direct summation
    over ring elements: -sum_{a != 0, deg a <= max_deg} a(t) / (rho * a(theta)),
    with the first omitted degree folded into the precision."""
    if not rho.certified_nonzero:
        raise PrecisionError("lattice generator is zero at its precision")
    acc = None
    for a in APoly.enumerate_up_to_degree(cfg, max_deg):
        if a.is_zero:
            continue
        c = (rho * a.eval_theta()).inv()
        term = a.eval_t(D).scalar_mul(c)
        acc = term if acc is None else acc + term
    tail_uval = cfg.e * (max_deg + 1) - rho.valuation()
    out = [(-c).truncate(min(c.prec, tail_uval)) for c in acc.coeffs]
    return TateSeries(out)


# ---------------------------------------------------------------------------
# Duality elements


@dataclass
class PoonenElement:
    """beta and g_beta for an F_q-linear functional chi on the lattice.

    chi is stored by its values on the first len(chi_values) ordered-basis
    vectors of the parent (zero beyond); W = ker chi carries its own ordered
    basis, exp_w its exponential coefficients, and
    g_beta = beta * sum_n e_{W,n} tau^n satisfies (1 - tau) . g_beta =
    beta * exp_Lambda and g_beta(lam) = chi(lam) on lattice points."""

    lattice: Lattice
    chi_values: list[np.ndarray]
    kernel: KernelOrderedBasis
    exp_w: ExpSeries
    beta: CInfApprox
    lambda0: CInfApprox
    lambda0_index: int
    K: int

    def g_coeffs(self) -> list[CInfApprox]:
        return [self.beta * e for e in self.exp_w.coeffs]

    def g_series(self) -> TwistedSeries:
        return TwistedSeries(self.beta.config, self.g_coeffs(),
                             order=len(self.exp_w.coeffs))

    def eval_g(self, x: CInfApprox) -> CInfApprox:
        return self.beta * self.exp_w.eval_at(x)

    def chi_of_coords(self, coords) -> np.ndarray:
        """chi at the lattice point with the given A-coordinates, read off
        the monomial expansion against the stored prefix values."""
        cfg = self.beta.config
        parent = self.kernel.parent
        acc = cfg.field.zero()
        for k, chi_v in enumerate(self.chi_values, start=1):
            if not chi_v.any():
                continue
            d, i = parent.pair(k)
            c = coords[i].coeff(d)
            if not c.any():
                continue
            acc = (acc + cfg.field.elt_mul(chi_v, c)) % cfg.p
        return acc


def _beta_from_point(exp_w: ExpSeries, lam: CInfApprox,
                     chi_val: np.ndarray) -> CInfApprox:
    value = exp_w.eval_at(lam)
    if not value.certified_nonzero:
        raise PrecisionError(
            "kernel exponential vanishes at the chosen point at this "
            "precision, which the certificates forbid; raise the precision")
    return value.inv().mul_elt(chi_val)


def poonen_beta(lat: Lattice, chi_values, K: int = 8,
                target_uval: int | None = None) -> PoonenElement:
    """Constructive duality element for a nonzero functional chi.

    Picks the first ordered-basis vector lam_0 with chi(lam_0) != 0 (a
    least-norm point outside W, since every strictly smaller point lies in
    the span of earlier basis vectors, where chi vanishes), computes the
    kernel exponential, and sets beta = chi(lam_0) / exp_W(lam_0)."""
    cfg = lat.config
    chi_values = [np.asarray(v, dtype=np.int64) % cfg.p for v in chi_values]
    kernel = sublattice_kernel(lat, chi_values)
    ob = kernel.parent
    k0 = next((k for k, v in enumerate(chi_values, start=1) if v.any()), None)
    if k0 is None:
        raise ValueError("functional vanishes on the stored prefix")
    lam0 = ob.element(k0)
    exp_w = exp_from_lattice(kernel, K, cfg.N if target_uval is None else target_uval)
    beta = _beta_from_point(exp_w, lam0, chi_values[k0 - 1])
    return PoonenElement(lattice=lat, chi_values=chi_values, kernel=kernel,
                         exp_w=exp_w, beta=beta, lambda0=lam0,
                         lambda0_index=k0, K=K)
