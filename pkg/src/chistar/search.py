"""Effective special-point search on plane curves: explicit constants, the
discriminant bound, exhaustive (j, chi*) searches, and collinear triples.

The bound derivation, in the notation used throughout this module: write
u = q^{-1}, s = 3/(pi y); substituting j = u + jhat and
chi* = u(1-s) + (chihat - s xihat) into p(X, Y) = sum a_il X^i Y^l and
collecting the top power u^N (N = total degree) gives the diagonal polynomial

    Phi(s) = sum_{i+l=N} a_il (1-s)^l.

Let v be the s-adic valuation of Phi and c_v its first nonzero coefficient (a
Z-combination of at most N+1 coefficients of p, so the Liouville inequality
gives |c_v| >= 1/H_v from a height bound for the combination).  Every
sub-leading stratum is bounded by G = sum_il |a_il| ((1+1193)^i (1+W)^l - [diag])
with W = 4808 + (3/(2 pi)) 4782, valid once Im tau >= 2.  If p vanishes at a
CM point then |Phi(s)| <= G e^{-2 pi y}, while |Phi(s)| >= s^v |c_v|/2 as soon
as s * sum_{m>v}|c_m| <= |c_v|/2; the two displayed majorizations of the
source theorem hold verbatim with

    c1 = H_v * sum_{m>v} |c_m| / H(p),      c2 = H_v * G / H(p),   k = v,

and the discriminant bound is the displayed
    D <= 4 max(6 H(p) c1 / pi, |1-2pi|^{-1} log(2 pi^k k! H(p) c2 / 3^k))^2
(floored at Im tau = 2 so the strong-regime constants apply).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import bounds, evaluator, heegner
from .ball import BallField, CertifiedValue

JHAT_BOUND = 1193
CHIHAT_BOUND = 4808
XIHAT_BOUND = 4782


class SearchError(ValueError):
    pass


# -- number field coefficients ------------------------------------------------


@dataclass(frozen=True)
class NumberField:
    """Q(theta) with theta a root of a monic irreducible integer polynomial
    (power basis).  degree 1 is Q itself."""

    degree: int
    min_poly: tuple[int, ...] = (0, 1)  # ascending, monic

    def __post_init__(self):
        if self.degree < 1:
            raise SearchError("field degree must be >= 1")
        if len(self.min_poly) != self.degree + 1 or self.min_poly[-1] != 1:
            raise SearchError("min_poly must be monic of length degree+1")

    def validate_irreducible(self) -> None:
        if self.degree == 1:
            return
        import sympy

        x = sympy.Symbol("x")
        poly = sympy.Poly(sum(c * x**i for i, c in enumerate(self.min_poly)), x)
        if not poly.is_irreducible:
            raise SearchError("field polynomial is reducible; not a field")

    def root_bound(self) -> Fraction:
        """Cauchy bound: every conjugate of theta has |theta| <= 1 + max|c_i|."""
        return Fraction(1 + max(abs(c) for c in self.min_poly[:-1]) if self.degree > 1 else 1)


@dataclass(frozen=True)
class FieldElement:
    """Element as a rational vector on the power basis 1, theta, ..."""

    vec: tuple[Fraction, ...]

    @classmethod
    def rational(cls, value, degree: int = 1) -> "FieldElement":
        v = [Fraction(0)] * degree
        v[0] = Fraction(value)
        return cls(tuple(v))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.vec)

    def __add__(self, other):
        return FieldElement(tuple(a + b for a, b in zip(self.vec, other.vec)))

    def scale(self, f):
        f = Fraction(f)
        return FieldElement(tuple(f * c for c in self.vec))


def _element_height_sup(e: FieldElement, K: NumberField) -> tuple[Fraction, Fraction]:
    """(H_alpha, sup): rational upper bounds for e^{[K:Q] h(alpha)} and for
    |alpha| at any complex embedding.  Exact for K = Q."""
    if K.degree == 1:
        c = e.vec[0]
        h = max(abs(c.numerator), c.denominator)
        return Fraction(h), abs(c)
    den = 1
    for c in e.vec:
        den = den * c.denominator // math.gcd(den, c.denominator)
    B = K.root_bound()
    sup = sum(abs(c) * B**i for i, c in enumerate(e.vec))
    # den * alpha is an algebraic integer; h(alpha) <= log den + log^+ sup
    H = (Fraction(den) * max(sup, 1)) ** K.degree
    return H, sup


@dataclass(frozen=True)
class CurvePolynomial:
    """p(X, Y) over a number field; X carries j, Y carries chi*."""

    coeffs: dict[tuple[int, int], FieldElement]
    K: NumberField = NumberField(1)

    def __post_init__(self):
        if not any(not e.is_zero for e in self.coeffs.values()):
            raise SearchError("curve polynomial must be nonzero")

    @classmethod
    def from_rational_coeffs(cls, entries: dict[tuple[int, int], Fraction]) -> "CurvePolynomial":
        return cls({k: FieldElement.rational(v) for k, v in entries.items() if v != 0})

    @classmethod
    def from_json(cls, obj: dict) -> "CurvePolynomial":
        degree = int(obj.get("field_degree", 1))
        if degree > 1:
            if "min_poly" not in obj:
                raise SearchError("field_degree > 1 requires a min_poly key")
            K = NumberField(degree, tuple(int(c) for c in obj["min_poly"]))
            K.validate_irreducible()
        else:
            K = NumberField(1)
        coeffs: dict[tuple[int, int], FieldElement] = {}
        for entry in obj["coeffs"]:
            i, jj = int(entry["i"]), int(entry["j"])
            value = entry["value"]
            if isinstance(value, list):
                vec = tuple(Fraction(str(v)) for v in value)
                if len(vec) != degree:
                    raise SearchError("coefficient vector length must equal field_degree")
            else:
                vec = tuple([Fraction(str(value))] + [Fraction(0)] * (degree - 1))
            coeffs[(i, jj)] = FieldElement(vec)
        return cls(coeffs, K)

    @property
    def support(self) -> list[tuple[int, int]]:
        return sorted(k for k, e in self.coeffs.items() if not e.is_zero)

    @property
    def total_degree(self) -> int:
        return max(i + l for i, l in self.support)

    @property
    def y_degree(self) -> int:
        return max(l for _, l in self.support)

    def height_upper(self) -> Fraction:
        """Rational upper bound for H(p) = e^{[K:Q] h(p)} (exact over Q)."""
        return max(_element_height_sup(e, self.K)[0] for e in self.coeffs.values())

    def coeff_sup(self, key) -> Fraction:
        e = self.coeffs.get(key)
        return _element_height_sup(e, self.K)[1] if e is not None else Fraction(0)

    def rational_coeff(self, key) -> Fraction:
        """Exact rational value (degree 1 only)."""
        if self.K.degree != 1:
            raise SearchError("exact rational coefficients only over Q")
        e = self.coeffs.get(key)
        return e.vec[0] if e is not None else Fraction(0)


# -- c1 / c2 derivation ---------------------------------------------------------


@dataclass
class ConstantsReport:
    c1: Fraction
    c2: Fraction
    k: int
    total_degree: int
    height: Fraction
    G: Fraction
    diagonal_coeffs: list[str]
    leading_selection_differs: bool
    note: str


def _binomial(n: int, k: int) -> int:
    return math.comb(n, k)


def _diagonal_polynomial_sups(p: CurvePolynomial) -> tuple[list[Fraction], list[Fraction], int]:
    """(|c_m| upper bounds, exact |c_m| when over Q (else sups), valuation v)
    for Phi(s) = sum_{i+l=N} a_il (1-s)^l."""
    N = p.total_degree
    diag = [(i, l) for (i, l) in p.support if i + l == N]
    kmax = max(l for _, l in diag)
    if p.K.degree == 1:
        cm = []
        for m in range(kmax + 1):
            acc = Fraction(0)
            for i, l in diag:
                if l >= m:
                    acc += p.rational_coeff((i, l)) * _binomial(l, m) * (-1) ** m
            cm.append(acc)
        v = next(m for m, c in enumerate(cm) if c != 0)
        return [abs(c) for c in cm], cm, v
    raise SearchError("general number-field diagonal analysis requires exact arithmetic "
                      "in K; only field_degree 1 is supported for derive_c1_c2")


def _chi_correction_sup() -> Fraction:
    """W = 4808 + (3/(2 pi)) * 4782, rounded up (Im tau >= 2 regime)."""
    pi_lo = bounds.pi_lower()
    return CHIHAT_BOUND + Fraction(3, 2) / pi_lo * XIHAT_BOUND


def _substrata_bound(p: CurvePolynomial) -> Fraction:
    """G: bound for every u-stratum below the top one (see module docstring)."""
    N = p.total_degree
    W = _chi_correction_sup()
    G = Fraction(0)
    for (i, l) in p.support:
        sup = p.coeff_sup((i, l))
        full = (1 + Fraction(JHAT_BOUND)) ** i * (1 + W) ** l
        if i + l == N:
            full -= 1  # the (alpha, beta) = (i, l) term is the Phi part
        G += sup * full
    return G


def derive_c1_c2(p: CurvePolynomial) -> ConstantsReport:
    """Explicit constants for the two displayed majorizations (see module
    docstring for the full derivation)."""
    cm_abs, cm, v = _diagonal_polynomial_sups(p)
    c_v = cm[v]
    # Liouville floor for the combination c_v = sum of binomial-weighted coeffs
    H_v = Fraction(max(abs(c_v.numerator), c_v.denominator))
    tail_sum = sum(cm_abs[v + 1:], Fraction(0))
    H = p.height_upper()
    G = _substrata_bound(p)
    c1 = max(H_v * tail_sum, Fraction(1)) / H
    c2 = max(H_v * G, Fraction(1)) / H
    # flag when the source's leading-Y-of-leading-X pick differs from v
    imax = max(i for i, _ in p.support)
    k_paper = max(l for i, l in p.support if i == imax)
    diag_top = max(l for i, l in p.support if i + l == p.total_degree)
    differs = (v != k_paper) or (imax + k_paper != p.total_degree) or (v != diag_top)
    note = ("dominant s-coefficient selected by s-adic valuation of the diagonal "
            "polynomial; the leading-Y-of-leading-X selection would pick "
            f"s^{k_paper} at X^{imax}" if differs else "")
    return ConstantsReport(c1, c2, v, p.total_degree, H, G,
                           [str(c) for c in cm], differs, note)


def discriminant_bound(p: CurvePolynomial) -> int:
    """Ceiling of 4 max(6 H c1 / pi, |1-2pi|^{-1} log(2 pi^k k! H c2 / 3^k), 2)^2,
    outward rounded: discriminants beyond it carry no (j, chi*) point of the
    curve."""
    rep = derive_c1_c2(p)
    H = rep.height
    k = rep.k
    pi_up, pi_lo = bounds.pi_upper(), bounds.pi_lower()
    t1 = 6 * H * rep.c1 / pi_lo
    arg = 2 * pi_up**k * math.factorial(k) * H * rep.c2 / Fraction(3) ** k
    t2 = _log_upper(arg) / (2 * pi_lo - 1)
    y_min = max(t1, t2, Fraction(2))
    return math.ceil(4 * y_min * y_min)


def _log_upper(x: Fraction) -> Fraction:
    if x <= 1:
        return Fraction(0)
    import gmpy2

    up = gmpy2.context(precision=192, round=gmpy2.RoundUp)
    down = gmpy2.context(precision=192, round=gmpy2.RoundDown)
    num = up.log(up.add(gmpy2.mpfr(0), x.numerator))
    den = down.log(down.add(gmpy2.mpfr(0), x.denominator)) if x.denominator > 1 else gmpy2.mpfr(0)
    val = up.sub(num, den)
    n, d = val.as_integer_ratio()
    return Fraction(int(n), int(d))


# -- evaluation of p at certified points ------------------------------------------


def _embed_coeff(e: FieldElement, K: NumberField, f: BallField) -> CertifiedValue:
    if K.degree == 1:
        return f.exact(e.vec[0])
    theta = _field_embedding(K, f)
    acc = f.exact(0)
    for c in reversed(e.vec):
        acc = f.add(f.mul(acc, theta), f.exact(c))
    return acc


def _field_embedding(K: NumberField, f: BallField) -> CertifiedValue:
    """Certified root of the field polynomial (interval-Newton verified)."""
    import mpmath

    mpmath.mp.prec = f.prec + 32
    roots = mpmath.polyroots([float(c) for c in reversed(K.min_poly)], maxsteps=200,
                             extraprec=f.prec)
    root = sorted(roots, key=lambda z: (-abs(mpmath.im(z)), mpmath.re(z)))[0]
    mid = f.exact(Fraction(str(mpmath.nstr(mpmath.re(root), 40))),
                  Fraction(str(mpmath.nstr(mpmath.im(root), 40))))
    ball = f.widen(mid, 1e-20)
    # interval Newton: N(B) = m - g(m)/g'(B) subset B certifies a unique root
    for _ in range(64):
        gm = f.horner([Fraction(c) for c in K.min_poly], CertifiedValue(ball.mid, f._up.mul(ball.rad, 0)))
        deriv_coeffs = [Fraction(i * c) for i, c in enumerate(K.min_poly)][1:]
        gpb = f.horner(deriv_coeffs, ball)
        newton = f.sub(CertifiedValue(ball.mid, ball.rad * 0), f.div(gm, gpb))
        if float(newton.rad) < float(ball.rad) * 0.5:
            ball = newton
            if float(ball.rad) < 2.0 ** (-f.prec // 2):
                return ball
        else:
            ball = f.widen(ball, float(ball.rad))
    raise SearchError("could not certify a complex embedding of the field")


def evaluate_curve(p: CurvePolynomial, jv: CertifiedValue, cv: CertifiedValue,
                   f: BallField) -> CertifiedValue:
    """Certified p(j, chi*) by Horner in X with inner Horner in Y."""
    n = p.total_degree
    by_x: dict[int, dict[int, FieldElement]] = {}
    for (i, l), e in p.coeffs.items():
        by_x.setdefault(i, {})[l] = e
    acc = f.exact(0)
    for i in range(max(by_x), -1, -1):
        acc = f.mul(acc, jv)
        row = by_x.get(i)
        if row:
            inner = f.exact(0)
            for l in range(max(row), -1, -1):
                inner = f.mul(inner, cv)
                if l in row:
                    inner = f.add(inner, _embed_coeff(row[l], p.K, f))
            acc = f.add(acc, inner)
    del n
    return acc


# -- search ------------------------------------------------------------------------


@dataclass(frozen=True)
class PrecisionPolicy:
    base_prec: int = 192
    escalations: int = 3  # rounds of doubling before an undetermined verdict


@dataclass
class SearchResult:
    discriminant: int
    form: tuple[int, int, int]
    j: dict
    chi_star: dict
    verdict: str  # "zero-confirmed" | "nonzero" | "undetermined"
    witness: str = ""

    def to_json(self) -> dict:
        return {
            "D": self.discriminant,
            "form": list(self.form),
            "j": self.j,
            "chi_star": self.chi_star,
            "verdict": self.verdict,
            "witness": self.witness,
        }


def _poly_mod(num: list[Fraction], den: list[Fraction]) -> list[Fraction]:
    """Remainder of num modulo monic den (ascending coefficients)."""
    num = list(num)
    dn = len(den) - 1
    for i in range(len(num) - 1, dn - 1, -1):
        c = num[i]
        if c == 0:
            continue
        num[i] = Fraction(0)
        for j in range(dn):
            num[i - dn + j] -= c * den[j]
    return num[:dn]


def _poly_mul_mod(a: list[Fraction], b: list[Fraction], mod: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] += x * y
    return _poly_mod(out, mod) if out else [Fraction(0)]


def _exact_zero_test(p: CurvePolynomial, D: int,
                     cache: Optional[heegner.ClassPolyCache] = None) -> tuple[bool, str]:
    """Exact vanishing of p at the CM points of D: reduce p(X, Lambda(X))
    modulo H_j(X), where Lambda interpolates chi* as a polynomial in j.

    Over Q and with H_j irreducible, the remainder vanishes iff p vanishes at
    one class iff at all of them (Galois).  Cross-checks the resultant
    identity Res_X(H_j, Y - Lambda) = +-H_chi*(Y).
    """
    if p.K.degree != 1:
        raise SearchError("exact zero confirmation implemented over Q")
    hj = heegner.class_polynomial(D, "j", cache=cache)
    hc = heegner.class_polynomial(D, "chi-star", cache=cache)
    lam = heegner.chi_star_in_terms_of_j(D)
    mod = list(hj.coeffs)
    # r(X) = p(X, Lambda(X)) mod H_j
    lam_mod = _poly_mod(list(lam), mod)
    acc = [Fraction(0)]
    xs: dict[int, list[Fraction]] = {0: [Fraction(1)]}
    for i in range(1, p.total_degree + 1):
        xs[i] = _poly_mul_mod(xs[i - 1], [Fraction(0), Fraction(1)], mod)
    for (i, l), e in sorted(p.coeffs.items()):
        term = xs[i]
        for _ in range(l):
            term = _poly_mul_mod(term, lam_mod, mod)
        scaled = [e.vec[0] * c for c in term]
        acc = [a + b for a, b in
               zip(acc + [Fraction(0)] * (len(scaled) - len(acc)),
                   scaled + [Fraction(0)] * (len(acc) - len(scaled)))]
    acc = _poly_mod(acc, mod)
    vanished = all(c == 0 for c in acc)
    _check_resultant_identity(hj, hc, lam)
    witness = ("p(X, Lambda(X)) = 0 mod H_j" if vanished
               else "p(X, Lambda(X)) mod H_j != 0")
    return vanished, witness


def _check_resultant_identity(hj, hc, lam: list[Fraction]) -> None:
    import sympy

    X, Y = sympy.symbols("X Y")
    hj_expr = sum(sympy.Rational(c.numerator, c.denominator) * X**i
                  for i, c in enumerate(hj.coeffs))
    lam_expr = sum(sympy.Rational(c.numerator, c.denominator) * X**i
                   for i, c in enumerate(lam))
    res = sympy.resultant(sympy.Poly(hj_expr, X), sympy.Poly(Y - lam_expr, X, Y), X)
    hc_expr = sum(sympy.Rational(c.numerator, c.denominator) * Y**i
                  for i, c in enumerate(hc.coeffs))
    diff = sympy.expand(res - hc_expr)
    if diff != 0 and sympy.expand(res + hc_expr) != 0:
        raise SearchError("resultant cross-check H_chi* failed")


def visited_discriminants(d_max: int) -> list[int]:
    return [-n for n in range(3, d_max + 1) if n % 4 in (0, 3)]


def ao_search(p: CurvePolynomial, d_max: int,
              policy: PrecisionPolicy = PrecisionPolicy(),
              cache: Optional[heegner.ClassPolyCache] = None) -> list[SearchResult]:
    """Visit every class of every discriminant |D| <= d_max and classify
    p(j, chi*) there.  Certified-nonzero points get a "nonzero" verdict;
    candidate zeros are settled exactly (never numerically); "undetermined"
    survives only past the escalation cap.  Deterministic order (|D|, a, b)."""
    if d_max < 3:
        raise SearchError("d_max must be >= 3")
    results: list[SearchResult] = []
    zero_cache: dict[int, tuple[bool, str]] = {}
    for D in visited_discriminants(d_max):
        for form in heegner.reduced_forms(D):
            results.append(_classify_point(p, D, form, policy, zero_cache, cache))
    return results


def _classify_point(p, D, form, policy, zero_cache, cache) -> SearchResult:
    for attempt in range(policy.escalations + 1):
        prec = policy.base_prec << attempt
        f = BallField(prec)
        tau = form.point(prec)
        jv = evaluator.eval_j(tau)
        cv = evaluator.eval_chi_star(tau)
        val = evaluate_curve(p, jv, cv, f)
        if not val.contains_zero():
            return SearchResult(D, (form.a, form.b, form.c), jv.to_json(), cv.to_json(),
                                "nonzero", "certified interval excludes 0")
        if p.K.degree == 1:
            if D not in zero_cache:
                zero_cache[D] = _exact_zero_test(p, D, cache)
            vanished, witness = zero_cache[D]
            verdict = "zero-confirmed" if vanished else "nonzero"
            return SearchResult(D, (form.a, form.b, form.c), jv.to_json(), cv.to_json(),
                                verdict, witness)
    return SearchResult(D, (form.a, form.b, form.c), jv.to_json(), cv.to_json(),
                        "undetermined", "escalation cap reached")


# -- collinearity ---------------------------------------------------------------------


@dataclass
class CollinearReport:
    d_max: int
    points: int
    triples_checked: int
    hits: list[dict] = field(default_factory=list)
    undetermined: list[dict] = field(default_factory=list)


def _det_ball(pts, f: BallField) -> CertifiedValue:
    (x1, y1), (x2, y2), (x3, y3) = pts
    t1 = f.mul(x2, y3)
    t2 = f.mul(x3, y2)
    t3 = f.mul(x1, y3)
    t4 = f.mul(x3, y1)
    t5 = f.mul(x1, y2)
    t6 = f.mul(x2, y1)
    return f.add(f.sub(f.sub(t1, t2), f.sub(t3, t4)), f.sub(t5, t6))


class _PointTable:
    """(j, chi*) balls per point, computed once per precision level."""

    def __init__(self):
        self._cache: dict[tuple[int, int, int], tuple] = {}

    def get(self, label, prec: int):
        D, idx, form = label
        key = (D, idx, prec)
        if key not in self._cache:
            tau = form.point(prec)
            self._cache[key] = (evaluator.eval_j(tau), evaluator.eval_chi_star(tau))
        return self._cache[key]


def collinear_search(d_max: int, policy: PrecisionPolicy = PrecisionPolicy(),
                     cache: Optional[heegner.ClassPolyCache] = None) -> CollinearReport:
    """Test every unordered triple of pairwise-distinct pi-special points with
    |D| <= d_max for collinearity via the certified 3x3 determinant; near-zero
    determinants escalate and then go to the exact Galois-norm confirmation."""
    if d_max < 3:
        raise SearchError("d_max must be >= 3")
    pts = []
    for D in visited_discriminants(d_max):
        for idx, form in enumerate(heegner.reduced_forms(D)):
            pts.append((D, idx, form))
    report = CollinearReport(d_max, len(pts), 0)
    table = _PointTable()
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                report.triples_checked += 1
                _check_triple(pts[i], pts[j], pts[k], policy, report, cache, table)
    return report


def _check_triple(p1, p2, p3, policy, report, cache, table: _PointTable) -> None:
    # distinct CM points have distinct (j, chi*) coordinates pairwise by
    # construction (distinct j singular moduli), so the distinctness
    # precondition holds for distinct (D, class) labels
    for attempt in range(policy.escalations + 1):
        prec = policy.base_prec << attempt
        f = BallField(prec)
        balls = [table.get(p, prec) for p in (p1, p2, p3)]
        det = _det_ball(balls, f)
        if not det.contains_zero():
            return
    confirmed, note = _exact_collinear_test(p1, p2, p3, policy, cache)
    entry = {
        "points": [{"D": d, "class": i, "form": [fm.a, fm.b, fm.c]}
                   for d, i, fm in (p1, p2, p3)],
        "note": note,
    }
    if confirmed is True:
        report.hits.append(entry)
    elif confirmed is None:
        report.undetermined.append(entry)


def _exact_collinear_test(p1, p2, p3, policy, cache) -> tuple[Optional[bool], str]:
    """Exact confirmation via the rational Galois norm of the determinant.

    N = prod over all conjugate class-tuples of det; C^T N is a rational
    integer for C = prod lcm-denominators of the H_chi* involved (chi* values
    scale to algebraic integers, j values are algebraic integers), T the
    number of tuples.  N != 0 certifies non-collinearity; N = 0 with every
    other conjugate factor certified nonzero confirms this tuple vanishes.
    """
    discs = sorted({d for d, _, _ in (p1, p2, p3)})
    dens = {}
    classes = {}
    for d in discs:
        poly = heegner.class_polynomial(d, "chi-star", cache=cache)
        dens[d] = poly.denominator_lcm
        classes[d] = heegner.reduced_forms(d)
    tuples = []
    for f1 in (classes[p1[0]] if True else []):
        for f2 in classes[p2[0]]:
            for f3 in classes[p3[0]]:
                tuples.append((f1, f2, f3))
    C = dens[p1[0]] * dens[p2[0]] * dens[p3[0]]
    den_bound = Fraction(C) ** len(tuples)
    ours = (classes[p1[0]][p1[1]], classes[p2[0]][p2[1]], classes[p3[0]][p3[1]])
    for attempt in range(policy.escalations + 1):
        prec = (policy.base_prec * 2) << attempt
        f = BallField(prec)
        factors = []
        for t in tuples:
            balls = [(evaluator.eval_j(fm.point(prec)), evaluator.eval_chi_star(fm.point(prec)))
                     for fm in t]
            factors.append((t, _det_ball(balls, f)))
        norm = f.exact(1)
        for _, d in factors:
            norm = f.mul(norm, d)
        if not norm.contains_zero():
            return False, "Galois norm of the determinant excludes zero"
        rad = Fraction(int(norm.rad.as_integer_ratio()[0]), int(norm.rad.as_integer_ratio()[1]))
        if rad < 1 / (2 * den_bound):
            others_nonzero = all(d.contains_zero() is False or t == ours
                                 for t, d in factors)
            ours_zero_only = all((t == tuple(ours)) or (not d.contains_zero())
                                 for t, d in factors)
            if ours_zero_only and others_nonzero:
                return True, "norm vanishes exactly and every conjugate factor except this one excludes zero"
    return None, "norm test inconclusive at the escalation cap"
