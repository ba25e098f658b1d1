"""Certified evaluation of j, chi, xi and chi* on the upper half-plane.

Points are exact: tau = re + im_scale*sqrt(im_root)*i with rational re,
im_scale and a positive integer im_root.  This covers both rational test
points (im_root = 1) and CM points (-b + sqrt(|D|) i) / (2a), and makes
fundamental-domain reduction exact integer/rational arithmetic with no
floating tolerance anywhere.

Evaluation goes through the quotient representations j = E4^3/Delta,
chi = E2E4E6/Delta, xi = E4E6/Delta: each finite series is evaluated by
Horner on the certified ball q = e^{2 pi i tau}, the discarded tail is
bounded by the generic order-N generator in tails.py, and the quotient is a
ball division.  chi* is assembled as chi - (3/(pi y)) xi with a certified
pi and exact y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq

from . import qseries, tails
from .ball import BallField, BallError, CertifiedValue
from .qseries import QExpansion


class EvaluationError(ArithmeticError):
    pass


def _isqrt_floor(n: int) -> int:
    return math.isqrt(n)


@dataclass(frozen=True)
class UHPoint:
    """Exact point tau = re + im_scale*sqrt(im_root)*i, im > 0, with a working
    precision in bits (>= 64) used when the point is evaluated."""

    re: Fraction
    im_scale: Fraction
    im_root: int = 1
    prec: int = 128

    def __post_init__(self):
        if self.im_scale <= 0 or self.im_root < 1:
            raise EvaluationError("point must lie in the upper half-plane")
        if self.prec < 64:
            raise EvaluationError("precision must be >= 64 bits")

    @classmethod
    def from_rational(cls, re, im, prec: int = 128) -> "UHPoint":
        return cls(Fraction(re), Fraction(im), 1, prec)

    @classmethod
    def from_quadratic(cls, re, im_scale, im_root: int, prec: int = 128) -> "UHPoint":
        return cls(Fraction(re), Fraction(im_scale), im_root, prec)

    def with_prec(self, prec: int) -> "UHPoint":
        return UHPoint(self.re, self.im_scale, self.im_root, prec)

    # -- exact geometry ----------------------------------------------------

    @property
    def im_squared(self) -> Fraction:
        return self.im_scale * self.im_scale * self.im_root

    @property
    def norm_squared(self) -> Fraction:
        return self.re * self.re + self.im_squared

    def im_lower(self) -> Fraction:
        """Exact rational lower bound for Im tau."""
        s = self.im_squared
        # floor(sqrt(num * den)) / den underestimates sqrt(num/den)
        return Fraction(_isqrt_floor(s.numerator * s.denominator), s.denominator)

    def im_upper(self) -> Fraction:
        s = self.im_squared
        return Fraction(_isqrt_floor(s.numerator * s.denominator) + 1, s.denominator)

    def in_fundamental_domain(self) -> bool:
        return self.norm_squared >= 1 and -Fraction(1, 2) <= self.re <= Fraction(1, 2)

    def im_ball(self, field: BallField) -> CertifiedValue:
        root = field.sqrt_int(self.im_root)
        return field.scale_fraction(root, self.im_scale)

    def ball(self, field: BallField) -> CertifiedValue:
        y = self.im_ball(field)
        return field.add(field.exact(self.re), field.mul_i(y))


IDENTITY = (1, 0, 0, 1)


def _mat_mul(m1, m2):
    a1, b1, c1, d1 = m1
    a2, b2, c2, d2 = m2
    return (a1 * a2 + b1 * c2, a1 * b2 + b1 * d2, c1 * a2 + d1 * c2, c1 * b2 + d1 * d2)


def apply_matrix(m, tau: UHPoint) -> UHPoint:
    """Exact Moebius action of an integer matrix with positive determinant."""
    a, b, c, d = m
    det = a * d - b * c
    if det <= 0:
        raise EvaluationError("matrix must have positive determinant")
    # (a tau + b)/(c tau + d) with tau = x + s*sqrt(r) i stays in Q(sqrt(-r))
    x, s, r = tau.re, tau.im_scale, tau.im_root
    nx = a * x + b
    ny = Fraction(a) * s  # coefficient of sqrt(r) i in numerator
    dx = c * x + d
    dy = Fraction(c) * s
    den = dx * dx + dy * dy * r
    if den == 0:
        raise EvaluationError("matrix pole at the given point")
    out_x = (nx * dx + ny * dy * r) / den
    out_s = (ny * dx - nx * dy) / den
    return UHPoint(out_x, out_s, r, tau.prec)


def reduce_to_fundamental_domain(tau: UHPoint) -> tuple[UHPoint, tuple[int, int, int, int]]:
    """SL2(Z)-reduce tau into the closed fundamental domain, exactly.

    Returns (reduced point, matrix m) with m . tau = reduced point.  Boundary
    convention: Re = +1/2 is mapped to -1/2, and points on |tau| = 1 are
    normalized to Re <= 0, matching the reduced-form conventions.
    """
    x, s, r = tau.re, tau.im_scale, tau.im_root
    m = IDENTITY
    half = Fraction(1, 2)
    while True:
        # nearest-integer translate (ties toward zero keep |x| <= 1/2)
        k = (x + half).__floor__()
        if x - k == half:
            k += 1  # send Re = +1/2 to -1/2
        if k != 0:
            x = x - k
            m = _mat_mul((1, -k, 0, 1), m)
        n2 = x * x + s * s * r
        if n2 >= 1:
            break
        # S: tau -> -1/tau
        x, s = -x / n2, s / n2
        m = _mat_mul((0, -1, 1, 0), m)
    if x == half:
        x -= 1
        m = _mat_mul((1, -1, 0, 1), m)
    if x * x + s * s * r == 1 and x > 0:
        n2 = x * x + s * s * r
        x = -x / n2
        s = s / n2
        m = _mat_mul((0, -1, 1, 0), m)
    return UHPoint(x, s, r, tau.prec), m


# -- q and series evaluation ----------------------------------------------


def q_ball(tau: UHPoint, field: BallField) -> CertifiedValue:
    """Certified ball for q = e^{2 pi i tau}."""
    two_i_tau = field.scale_fraction(field.mul_i(tau.ball(field)), Fraction(2))
    w = field.mul(field.pi(), two_i_tau)
    return field.exp(w)


def q_abs_upper(tau: UHPoint) -> Fraction:
    """Rational upper bound for |q| = e^{-2 pi Im tau}, coarsened to a 48-bit
    dyadic so downstream exact tail arithmetic stays small."""
    up = gmpy2.context(precision=96, round=gmpy2.RoundUp)
    down = gmpy2.context(precision=96, round=gmpy2.RoundDown)
    y_lo = tau.im_lower()
    expo = down.mul(down.const_pi(), mpfr(mpq(-2 * y_lo.numerator, y_lo.denominator), precision=96))
    qa = up.exp(expo)
    n, d = qa.as_integer_ratio()
    f = Fraction(int(n), int(d))
    if f >= 1:
        return Fraction(999, 1000)
    scaled = f * (1 << 48)
    return Fraction(scaled.numerator // scaled.denominator + 1, 1 << 48)


def eval_qexp(f: QExpansion, tau: UHPoint, tail_const=0, field: BallField | None = None) -> CertifiedValue:
    """Evaluate a finite expansion at tau in the fundamental domain and add
    the caller-supplied bound for the discarded tail to the radius."""
    if not tau.in_fundamental_domain():
        raise EvaluationError("eval_qexp requires tau in the fundamental domain")
    field = field or BallField(tau.prec)
    q = q_ball(tau, field)
    val = _eval_expansion(f, q, field)
    tail = Fraction(tail_const) if not isinstance(tail_const, Fraction) else tail_const
    if tail < 0:
        raise EvaluationError("tail_const must be nonnegative")
    return field.widen_fraction(val, tail) if tail else val


def _eval_expansion(f: QExpansion, q: CertifiedValue, field: BallField) -> CertifiedValue:
    if f.is_zero:
        return field.exact(0)
    poly = field.horner(f.coeffs, q)
    if f.lead:
        poly = field.mul(poly, field.pow_int(q, f.lead))
    return poly


def _eval_kind(kind: str, order: int, tau: UHPoint, q: CertifiedValue,
               qa: Fraction, field: BallField) -> CertifiedValue:
    series = {
        "e2e4e6": qseries.e2e4e6_product,
        "e4cubed": qseries.e4_cubed,
        "e4e6": qseries.e4e6_product,
        "delta": qseries.delta,
    }[kind](order)
    val = _eval_expansion(series, q, field)
    return field.widen_fraction(val, tails.series_tail(kind, order, qa))


def _auto_order(tau: UHPoint, prec: int, qa: Fraction) -> int:
    # absolute tail target ~ 2^-(prec+8) relative to the q^-1 magnitude
    target = Fraction(1, 2 ** (prec + 8)) / qa
    return max(
        4,
        tails.order_for_tail("e2e4e6", qa, target),
        tails.order_for_tail("e4cubed", qa, target),
        tails.order_for_tail("delta", qa, target * qa),
    )


def _reduced(tau: UHPoint) -> UHPoint:
    red, _ = reduce_to_fundamental_domain(tau)
    return red


def _quotient_eval(kind_num: str, tau: UHPoint, prec: int | None, order: int | None) -> CertifiedValue:
    tau = _reduced(tau)
    prec = prec or tau.prec
    field = BallField(prec)
    qa = q_abs_upper(tau)
    n = order or _auto_order(tau, prec, qa)
    q = q_ball(tau, field)
    num = _eval_kind(kind_num, n, tau, q, qa, field)
    den = _eval_kind("delta", n, tau, q, qa, field)
    try:
        return field.div(num, den)
    except BallError as exc:
        raise EvaluationError(f"Delta ball contains zero at order {n}; raise order/precision") from exc


def eval_j(tau: UHPoint, prec: int | None = None, order: int | None = None) -> CertifiedValue:
    """Certified enclosure of j(tau); tau is reduced internally."""
    return _quotient_eval("e4cubed", tau, prec, order)


def eval_chi(tau: UHPoint, prec: int | None = None, order: int | None = None) -> CertifiedValue:
    """Certified enclosure of the holomorphic part chi(tau)."""
    return _quotient_eval("e2e4e6", tau, prec, order)


def eval_xi(tau: UHPoint, prec: int | None = None, order: int | None = None) -> CertifiedValue:
    """Certified enclosure of xi(tau)."""
    return _quotient_eval("e4e6", tau, prec, order)


def eval_chi_star(tau: UHPoint, prec: int | None = None, order: int | None = None) -> CertifiedValue:
    """Certified enclosure of chi*(tau) = chi - (3/(pi y)) xi on the reduced point.

    chi* is SL2(Z)-invariant, so reducing first both sharpens |q| and keeps
    the nonholomorphic correction evaluated at the reduced imaginary part.
    """
    red = _reduced(tau)
    prec = prec or red.prec
    field = BallField(prec)
    qa = q_abs_upper(red)
    n = order or _auto_order(red, prec, qa)
    q = q_ball(red, field)
    num_chi = _eval_kind("e2e4e6", n, red, q, qa, field)
    num_xi = _eval_kind("e4e6", n, red, q, qa, field)
    den = _eval_kind("delta", n, red, q, qa, field)
    try:
        chi = field.div(num_chi, den)
        xi = field.div(num_xi, den)
    except BallError as exc:
        raise EvaluationError(f"Delta ball contains zero at order {n}; raise order/precision") from exc
    y = red.im_ball(field)
    s = field.div(field.exact(3), field.mul(field.pi(), y))
    return field.sub(chi, field.mul(s, xi))


def eval_function(name: str, tau: UHPoint, prec: int | None = None, order: int | None = None) -> CertifiedValue:
    fn = {"j": eval_j, "chi": eval_chi, "xi": eval_xi, "chi-star": eval_chi_star}.get(name)
    if fn is None:
        raise EvaluationError(f"unknown function {name!r}")
    return fn(tau, prec=prec, order=order)
