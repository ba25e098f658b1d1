"""Complex ball arithmetic on top of gmpy2 (MPFR/MPC).

A CertifiedValue is a midpoint with a rigorous error radius: the exact value
is guaranteed to lie within rad of mid.  Midpoints are computed at the field
precision with round-to-nearest (MPFR/MPC operations are correctly rounded,
so each operation contributes at most one unit in the last place per
component, covered by a 2^(2-prec)*|mid| bump); radii are combined at a fixed
64-bit precision rounding toward +infinity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr, mpq

_RAD_PREC = 64


class BallError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CertifiedValue:
    """Complex midpoint plus a radius that truly bounds the error."""

    mid: "mpc"
    rad: "mpfr"

    def contains_zero(self) -> bool:
        up = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundUp)
        down = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundDown)
        return down.sqrt(down.norm(self.mid)) <= up.add(self.rad, mpfr(0))

    def abs_upper(self) -> "mpfr":
        up = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundUp)
        return up.add(up.sqrt(up.norm(self.mid)), self.rad)

    def abs_lower(self) -> "mpfr":
        up = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundUp)
        down = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundDown)
        lo = down.sub(down.sqrt(down.norm(self.mid)), up.add(self.rad, mpfr(0)))
        return lo if lo > 0 else mpfr(0)

    def overlaps(self, other: "CertifiedValue") -> bool:
        up = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundUp)
        down = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundDown)
        wp = max(self.mid.real.precision, other.mid.real.precision) + 32
        d = down.sqrt(down.norm(gmpy2.context(precision=wp).sub(self.mid, other.mid)))
        return d <= up.add(self.rad, other.rad)

    def contains_fraction(self, re: Fraction, im: Fraction = Fraction(0)) -> bool:
        prec = max(self.mid.real.precision, 128) + 64
        ctx = gmpy2.context(precision=prec)
        up = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundUp)
        dr = ctx.sub(self.mid.real, mpfr(mpq(re.numerator, re.denominator), precision=prec))
        di = ctx.sub(self.mid.imag, mpfr(mpq(im.numerator, im.denominator), precision=prec))
        dist = up.sqrt(up.add(up.mul(dr, dr), up.mul(di, di)))
        return dist <= self.rad

    def to_json(self) -> dict:
        return {
            "mid_re": _mpfr_str(self.mid.real),
            "mid_im": _mpfr_str(self.mid.imag),
            "rad": _mpfr_str(self.rad),
        }

    def __str__(self) -> str:
        return f"[{self.mid} +/- {self.rad}]"


def _mpfr_str(x: "mpfr") -> str:
    return repr(x).replace("mpfr('", "").replace("')", "").split("',")[0]


class BallField:
    """Operation context for CertifiedValue arithmetic at a fixed precision."""

    def __init__(self, prec: int):
        if prec < 64:
            raise BallError("precision must be >= 64")
        self.prec = prec
        self._mid = gmpy2.context(precision=prec, allow_complex=True)
        self._up = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundUp)
        self._down = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundDown)
        # one-ulp-per-component bound, relative to |mid|
        self._eps = mpfr(gmpy2.exp2(2 - prec))

    # -- radius helpers (all RoundUp) -------------------------------------

    def _rup(self, *terms) -> "mpfr":
        acc = mpfr(0)
        for t in terms:
            acc = self._up.add(acc, t)
        return acc

    def _abs_up(self, z: "mpc") -> "mpfr":
        return self._up.sqrt(self._up.norm(z))

    def _abs_down(self, z: "mpc") -> "mpfr":
        return self._down.sqrt(self._down.norm(z))

    def _round_bump(self, mid: "mpc") -> "mpfr":
        return self._up.mul(self._abs_up(mid), self._eps)

    # -- constructors ------------------------------------------------------

    def exact(self, re, im=0) -> CertifiedValue:
        """Ball around an exact integer/Fraction pair (radius = conversion error)."""
        re = Fraction(re)
        im = Fraction(im)
        mre = mpfr(mpq(re.numerator, re.denominator), precision=self.prec)
        mim = mpfr(mpq(im.numerator, im.denominator), precision=self.prec)
        mid = mpc(mre, mim, precision=self.prec)
        # correctly rounded conversions: off by at most one ulp per component
        return CertifiedValue(mid, self._round_bump(mid))

    def from_mid_rad(self, mid: "mpc", rad) -> CertifiedValue:
        return CertifiedValue(mpc(mid, precision=self.prec), mpfr(rad, precision=_RAD_PREC))

    def pi(self) -> CertifiedValue:
        up = gmpy2.context(precision=self.prec, round=gmpy2.RoundUp)
        down = gmpy2.context(precision=self.prec, round=gmpy2.RoundDown)
        hi, lo = up.const_pi(), down.const_pi()
        mid = mpc(self._mid.div(self._mid.add(hi, lo), mpfr(2)), precision=self.prec)
        rad = self._up.sub(mpfr(hi), mpfr(lo))
        return CertifiedValue(mid, self._rup(rad, self._round_bump(mid)))

    def sqrt_int(self, n: int) -> CertifiedValue:
        if n < 0:
            raise BallError("sqrt_int needs n >= 0")
        mid = mpc(self._mid.sqrt(mpfr(n, precision=self.prec)), precision=self.prec)
        return CertifiedValue(mid, self._round_bump(mid))

    # -- arithmetic --------------------------------------------------------

    def add(self, a: CertifiedValue, b: CertifiedValue) -> CertifiedValue:
        mid = self._mid.add(a.mid, b.mid)
        return CertifiedValue(mid, self._rup(a.rad, b.rad, self._round_bump(mid)))

    def sub(self, a: CertifiedValue, b: CertifiedValue) -> CertifiedValue:
        mid = self._mid.sub(a.mid, b.mid)
        return CertifiedValue(mid, self._rup(a.rad, b.rad, self._round_bump(mid)))

    def neg(self, a: CertifiedValue) -> CertifiedValue:
        return CertifiedValue(self._mid.minus(a.mid), a.rad)

    def mul(self, a: CertifiedValue, b: CertifiedValue) -> CertifiedValue:
        mid = self._mid.mul(a.mid, b.mid)
        rad = self._rup(
            self._up.mul(self._abs_up(a.mid), b.rad),
            self._up.mul(self._abs_up(b.mid), a.rad),
            self._up.mul(a.rad, b.rad),
            self._round_bump(mid),
        )
        return CertifiedValue(mid, rad)

    def div(self, a: CertifiedValue, b: CertifiedValue) -> CertifiedValue:
        """Quotient ball; requires the denominator ball to exclude zero."""
        b_lo = self._down.sub(self._abs_down(b.mid), self._up.add(b.rad, mpfr(0)))
        if not b_lo > 0:
            raise BallError("division by a ball containing zero")
        mid = self._mid.div(a.mid, b.mid)
        num = self._rup(
            self._up.mul(self._abs_up(a.mid), b.rad),
            self._up.mul(self._abs_up(b.mid), a.rad),
        )
        den = self._down.mul(self._abs_down(b.mid), b_lo)
        rad = self._rup(self._up.div(num, den), self._round_bump(mid))
        return CertifiedValue(mid, rad)

    def exp(self, a: CertifiedValue) -> CertifiedValue:
        mid = self._mid.exp(a.mid)
        # |e^z - e^mid| <= |e^mid| (e^rad - 1) for |z - mid| <= rad
        growth = self._up.expm1(self._up.add(a.rad, mpfr(0)))
        rad = self._rup(self._up.mul(self._abs_up(mid), growth), self._round_bump(mid))
        return CertifiedValue(mid, rad)

    def scale_fraction(self, a: CertifiedValue, f: Fraction) -> CertifiedValue:
        # via an exact ball: mixed mpc*mpq arithmetic does not honor the
        # context precision in gmpy2, so never multiply by mpq directly
        return self.mul(a, self.exact(Fraction(f)))

    def mul_i(self, a: CertifiedValue) -> CertifiedValue:
        # negate under the working context: bare -mpfr rounds at the default
        # (53-bit) context precision
        nre = self._mid.minus(a.mid.imag)
        return CertifiedValue(mpc(nre, a.mid.real, precision=self.prec), a.rad)

    def widen(self, a: CertifiedValue, extra) -> CertifiedValue:
        return CertifiedValue(a.mid, self._rup(a.rad, mpfr(extra)))

    def widen_fraction(self, a: CertifiedValue, extra: Fraction) -> CertifiedValue:
        # int -> mpfr conversions under the RoundUp context keep this an
        # upper bound even when numerator/denominator exceed 64 bits
        num = self._up.add(mpfr(0), extra.numerator)
        den = self._down.add(mpfr(0), extra.denominator)
        e = self._up.div(num, den)
        return CertifiedValue(a.mid, self._rup(a.rad, e))

    def pow_int(self, a: CertifiedValue, n: int) -> CertifiedValue:
        if n < 0:
            return self.div(self.exact(1), self.pow_int(a, -n))
        out = self.exact(1)
        base = a
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out

    def horner(self, coeffs, q: CertifiedValue) -> CertifiedValue:
        """Evaluate sum coeffs[k] q^k with exact rational coefficients."""
        acc = self.exact(0)
        for c in reversed(list(coeffs)):
            acc = self.mul(acc, q)
            if c:
                acc = self.add(acc, self.exact(c))
        return acc
