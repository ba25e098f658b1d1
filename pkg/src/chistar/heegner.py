"""Heegner points, singular moduli, chi*-special values and class polynomials.

CM points of discriminant D < 0 are enumerated through primitive reduced
binary quadratic forms (a, b, c); the attached point (-b + sqrt(|D|) i)/(2a)
lies in the fundamental domain by reducedness.  H_j and H_chi* are built as
certified ball products over the class, recognized exactly (integers for j,
rationals by continued-fraction reconstruction for chi*), and re-verified at
doubled precision before anything is reported.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import evaluator
from .ball import BallField, CertifiedValue
from .evaluator import UHPoint

CACHE_FORMAT_VERSION = 1


class HeegnerError(ValueError):
    pass


class PrecisionError(HeegnerError):
    """Requested precision unreachable within the escalation policy."""


def valid_discriminant(D: int) -> bool:
    return D < 0 and D % 4 in (0, 1)


def _require_valid(D: int) -> None:
    if not valid_discriminant(D):
        raise HeegnerError(f"{D} is not a negative discriminant (need D < 0, D = 0,1 mod 4)")


@dataclass(frozen=True, order=True)
class QuadraticForm:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a <= 0:
            raise HeegnerError("form must be positive definite (a > 0)")
        if self.discriminant >= 0:
            raise HeegnerError("form must have negative discriminant")

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    @property
    def is_primitive(self) -> bool:
        return math.gcd(math.gcd(self.a, self.b), self.c) == 1

    @property
    def is_principal(self) -> bool:
        return self.a == 1

    def point(self, prec: int = 128) -> UHPoint:
        """CM point (-b + sqrt(|D|) i)/(2a)."""
        return UHPoint(Fraction(-self.b, 2 * self.a), Fraction(1, 2 * self.a),
                       -self.discriminant, prec)


@dataclass(frozen=True)
class HeegnerPoint:
    form: QuadraticForm
    tau: UHPoint


def reduced_forms(D: int) -> list[QuadraticForm]:
    """All primitive reduced forms of discriminant D, principal form first
    (sorted by (a, b)); the count is the class number h(D)."""
    _require_valid(D)
    out = []
    a_max = math.isqrt(-D // 3)
    for a in range(1, a_max + 1):
        for b in range(-a, a + 1):
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if (abs(b) == a or a == c) and b < 0:
                continue
            f = QuadraticForm(a, b, c)
            if f.is_primitive:
                out.append(f)
    out.sort(key=lambda f: (f.a, f.b))
    return out


def class_number(D: int) -> int:
    return len(reduced_forms(D))


# -- precision policy -----------------------------------------------------


def _sum_inverse_a(forms) -> Fraction:
    return sum((Fraction(1, f.a) for f in forms), Fraction(0))


def initial_precision(D: int, forms=None) -> int:
    """Working precision scaled to pi*sqrt(|D|)*sum(1/a) (the log-height of
    the class polynomial), doubled for reconstruction headroom."""
    forms = forms or reduced_forms(D)
    height_bits = math.pi * math.sqrt(-D) * float(_sum_inverse_a(forms)) / math.log(2)
    return max(192, 2 * int(height_bits) + 128 + 8 * len(forms))


ESCALATION_ROUNDS = 2


# -- special values --------------------------------------------------------


def special_values(D: int, prec: Optional[int] = None, target_rad: Optional[Fraction] = None,
                   ) -> list[tuple[HeegnerPoint, CertifiedValue, CertifiedValue]]:
    """One (point, j, chi*) entry per class of D, radii below the target.

    Escalates precision twice before reporting failure (PrecisionError).
    """
    _require_valid(D)
    forms = reduced_forms(D)
    prec = prec or initial_precision(D, forms)
    target = target_rad if target_rad is not None else Fraction(1, 2 ** (prec // 2))
    for attempt in range(ESCALATION_ROUNDS + 1):
        p = prec << attempt
        out = []
        ok = True
        for f in forms:
            tau = f.point(p)
            jv = evaluator.eval_j(tau)
            cv = evaluator.eval_chi_star(tau)
            if _fr(jv.rad) > target or \
               _fr(cv.rad) > target:
                ok = False
                break
            out.append((HeegnerPoint(f, tau), jv, cv))
        if ok:
            return out
    raise PrecisionError(f"radius target {target} unreachable for D={D} "
                         f"after {ESCALATION_ROUNDS} escalations from {prec} bits")


# -- recognition ------------------------------------------------------------


def _fr(x) -> Fraction:
    """Exact Fraction from an mpfr (mpz components coerced to int)."""
    n, d = x.as_integer_ratio()
    return Fraction(int(n), int(d))


def _ball_real_parts(v: CertifiedValue) -> tuple[Fraction, Fraction]:
    mid = _fr(v.mid.real)
    rad = _fr(v.rad)
    imag = abs(_fr(v.mid.imag))
    return mid, rad + imag


def recognize_integer(v: CertifiedValue) -> Optional[int]:
    """The unique integer in the ball, if the real ball contains exactly one
    and the imaginary part encloses zero."""
    mid, rad = _ball_real_parts(v)
    if rad >= Fraction(1, 2):
        return None
    n = round(mid)
    if abs(mid - n) + rad < Fraction(1, 2) or abs(mid - n) <= rad:
        # unique candidate; containment not required beyond the half gap
        return int(n) if abs(mid - n) <= rad else None
    return None


def recognize_fraction(v: CertifiedValue, max_den: int) -> Optional[Fraction]:
    """Continued-fraction recognition with denominator cap; requires the ball
    small enough (rad < 1/(2 max_den^2)) that the candidate is unique."""
    mid, rad = _ball_real_parts(v)
    if rad >= Fraction(1, 2 * max_den * max_den):
        return None
    cand = mid.limit_denominator(max_den)
    return cand if abs(cand - mid) <= rad else None


# -- class polynomials -------------------------------------------------------


@dataclass(frozen=True)
class ClassPolynomial:
    """Monic polynomial prod (X - value(tau)) over the classes of D.

    coeffs[i] is the exact coefficient of X^i, i = 0..h; coeffs[h] == 1.
    """

    discriminant: int
    kind: str  # "j" | "chi-star"
    coeffs: tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def denominator_lcm(self) -> int:
        out = 1
        for c in self.coeffs:
            out = out * c.denominator // math.gcd(out, c.denominator)
        return out

    def monic(self) -> bool:
        return self.coeffs[-1] == 1

    def to_json(self) -> dict:
        payload = {
            "version": CACHE_FORMAT_VERSION,
            "D": self.discriminant,
            "kind": self.kind,
            "coeffs": [[c.numerator, c.denominator] for c in self.coeffs],
        }
        payload["checksum"] = _payload_checksum(payload)
        return payload

    @classmethod
    def from_json(cls, obj: dict) -> "ClassPolynomial":
        expected = obj.get("checksum")
        body = {k: obj[k] for k in ("version", "D", "kind", "coeffs")}
        if obj.get("version") != CACHE_FORMAT_VERSION or expected != _payload_checksum(body):
            raise HeegnerError("cache entry version/checksum mismatch")
        coeffs = tuple(Fraction(int(n), int(d)) for n, d in obj["coeffs"])
        return cls(int(obj["D"]), obj["kind"], coeffs)


def _payload_checksum(body: dict) -> str:
    canon = json.dumps({k: body[k] for k in ("version", "D", "kind", "coeffs")},
                       sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


class ClassPolyCache:
    """On-disk cache keyed by (D, kind); atomic write-temp-then-rename."""

    def __init__(self, directory: Optional[str]):
        self.directory = directory
        if directory:
            os.makedirs(directory, exist_ok=True)

    def _path(self, D: int, kind: str) -> str:
        return os.path.join(self.directory, f"classpoly_{kind}_{-D}.json")

    def get(self, D: int, kind: str) -> Optional[ClassPolynomial]:
        if not self.directory:
            return None
        path = self._path(D, kind)
        try:
            with open(path) as fh:
                return ClassPolynomial.from_json(json.load(fh))
        except FileNotFoundError:
            return None
        except (HeegnerError, json.JSONDecodeError, KeyError, ValueError):
            # corrupted or stale format: recompute, never reinterpret
            return None

    def put(self, poly: ClassPolynomial) -> None:
        if not self.directory:
            return
        path = self._path(poly.discriminant, poly.kind)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(poly.to_json(), fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _poly_from_roots(roots: list[CertifiedValue], f: BallField) -> list[CertifiedValue]:
    """Certified coefficients (ascending) of prod (X - root)."""
    coeffs = [f.exact(1)]
    for r in roots:
        nr = f.neg(r)
        new = [f.mul(coeffs[0], nr)]
        for i in range(1, len(coeffs)):
            new.append(f.add(coeffs[i - 1], f.mul(coeffs[i], nr)))
        new.append(f.exact(1))
        coeffs = new
    return coeffs


def _values_at_precision(D: int, kind: str, prec: int) -> list[CertifiedValue]:
    forms = reduced_forms(D)
    ev = evaluator.eval_j if kind == "j" else evaluator.eval_chi_star
    return [ev(f.point(prec)) for f in forms]


def _recognize_poly(D: int, kind: str, prec: int) -> Optional[list[Fraction]]:
    values = _values_at_precision(D, kind, prec)
    f = BallField(prec)
    balls = _poly_from_roots(values, f)
    max_den = 1 << max(prec // 4, 16)
    out = []
    for i, b in enumerate(balls):
        if i == len(balls) - 1:
            out.append(Fraction(1))
            continue
        if kind == "j":
            n = recognize_integer(b)
            cand = Fraction(n) if n is not None else None
        else:
            cand = recognize_fraction(b, max_den)
        if cand is None:
            return None
        out.append(cand)
    return out


def class_polynomial(D: int, kind: str, prec: Optional[int] = None,
                     cache: Optional[ClassPolyCache] = None) -> ClassPolynomial:
    """H_j or H_chi* for D, exactly recognized and re-verified at doubled
    precision; escalates twice before raising PrecisionError."""
    if kind not in ("j", "chi-star"):
        raise HeegnerError(f"unknown class polynomial kind {kind!r}")
    _require_valid(D)
    if cache:
        hit = cache.get(D, kind)
        if hit is not None:
            return hit
    prec = prec or initial_precision(D)
    for attempt in range(ESCALATION_ROUNDS + 1):
        p = prec << attempt
        first = _recognize_poly(D, kind, p)
        if first is None:
            continue
        second = _recognize_poly(D, kind, 2 * p)
        if second == first:
            poly = ClassPolynomial(D, kind, tuple(first))
            if cache:
                cache.put(poly)
            return poly
    raise PrecisionError(f"class polynomial recognition failed for D={D}, kind={kind}")


def class_polynomial_irreducible(poly: ClassPolynomial) -> bool:
    """Exact irreducibility over Q via sympy factorization of the cleared
    integer polynomial."""
    import sympy

    x = sympy.Symbol("x")
    lcm = poly.denominator_lcm
    expr = sum(int(c * lcm) * x**i for i, c in enumerate(poly.coeffs))
    _, factors = sympy.Poly(expr, x).factor_list()
    nontrivial = [f for f, _ in factors if f.degree() > 0]
    return len(nontrivial) == 1 and nontrivial[0].degree() == poly.degree and \
        all(mult == 1 for f, mult in factors if f.degree() > 0)


# -- chi* as a polynomial in j (exact evaluation route for the search) -------


def chi_star_in_terms_of_j(D: int, prec: Optional[int] = None) -> list[Fraction]:
    """Coefficients (ascending) of the unique Lambda in Q[X] of degree < h
    with chi*(tau_i) = Lambda(j(tau_i)) on every class; reconstructed and
    re-verified at doubled precision."""
    _require_valid(D)
    prec = prec or initial_precision(D)
    for attempt in range(ESCALATION_ROUNDS + 1):
        p = prec << attempt
        first = _interpolate_lambda(D, p)
        if first is None:
            continue
        second = _interpolate_lambda(D, 2 * p)
        if second == first:
            return first
    raise PrecisionError(f"chi*(j) interpolation failed for D={D}")


def _interpolate_lambda(D: int, prec: int) -> Optional[list[Fraction]]:
    forms = reduced_forms(D)
    h = len(forms)
    f = BallField(prec)
    jv = [evaluator.eval_j(fm.point(prec)) for fm in forms]
    cv = [evaluator.eval_chi_star(fm.point(prec)) for fm in forms]
    # Lagrange interpolation with certified balls
    acc = [f.exact(0)] * h
    for i in range(h):
        num = [f.exact(1)]
        den = f.exact(1)
        for k in range(h):
            if k == i:
                continue
            # num *= (X - j_k); den *= (j_i - j_k)
            nr = f.neg(jv[k])
            new = [f.mul(num[0], nr)]
            for t in range(1, len(num)):
                new.append(f.add(num[t - 1], f.mul(num[t], nr)))
            new.append(f.exact(1))
            num = new
            den = f.mul(den, f.sub(jv[i], jv[k]))
        try:
            scale = f.div(cv[i], den)
        except Exception:
            return None
        for t in range(len(num)):
            acc[t] = f.add(acc[t], f.mul(num[t], scale))
    max_den = 1 << max(prec // 4, 16)
    out = []
    for b in acc:
        cand = recognize_fraction(b, max_den)
        if cand is None:
            return None
        out.append(cand)
    return out


# -- gap lemma witness --------------------------------------------------------


GAP_THRESHOLD = 5595


@dataclass
class GapReport:
    discriminant: int
    applicable: bool
    passed: bool
    margins: list[Fraction] = field(default_factory=list)
    note: str = ""


def verify_gap(D: int, prec: Optional[int] = None) -> GapReport:
    """Check |x'| > |x| + 5595 for the principal chi* value x' against every
    non-principal x of the same discriminant, using certified values.

    Escalates precision if any comparison is inconclusive (radii straddle the
    threshold); the report carries exact rational margin lower bounds.
    """
    _require_valid(D)
    forms = reduced_forms(D)
    if len(forms) < 2:
        return GapReport(D, False, True, note="h(D) = 1, nothing to compare")
    if -D < 15:
        return GapReport(D, False, True, note="|D| < 15 outside the lemma's range")
    prec = prec or initial_precision(D)
    for attempt in range(ESCALATION_ROUNDS + 1):
        p = prec << attempt
        vals = [evaluator.eval_chi_star(f.point(p)) for f in forms]
        principal, rest = vals[0], vals[1:]
        lo = _fr(principal.abs_lower())
        margins = []
        conclusive = True
        for v in rest:
            hi = _fr(v.abs_upper())
            margin = lo - hi - GAP_THRESHOLD
            if margin <= 0:
                # inconclusive if radii could explain it; retry sharper
                width = _fr(principal.rad) + \
                    _fr(v.rad)
                if margin + 2 * width > 0:
                    conclusive = False
                    break
            margins.append(margin)
        if not conclusive:
            continue
        passed = all(m > 0 for m in margins)
        return GapReport(D, True, passed, margins)
    raise PrecisionError(f"verify_gap inconclusive for D={D} at the escalation cap")
