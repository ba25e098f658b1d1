"""Symbolic machinery for j-maps and chi-maps: levels, twists, and the
leading-term determinant analysis behind the collinearity results.

A nonconstant map of level r = a/d and twist eta = e^{2 pi i b/d} acts on
q-expansions by q -> eta q^r; fractional powers are handled by substituting
q = t^L with L the lcm of the level denominators, so everything reduces to
integer-exponent Laurent series whose coefficients are polynomials in the
symbol s = 3/(pi Im tau) over the cyclotomic rationals.  Twists are exact
(exponents are reduced fractions mod 1, products add exponents); zero tests
reduce coefficient vectors modulo the cyclotomic polynomial.

"Vanishes identically" is only ever certified to a finite order; every verdict
names the order it was checked to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from . import qseries

INF_ORDER: float = math.inf


class MapError(ValueError):
    pass


# -- cyclotomic rationals ----------------------------------------------------


@lru_cache(maxsize=128)
def _cyclotomic_coeffs(M: int) -> tuple[int, ...]:
    """Integer coefficients (ascending) of the M-th cyclotomic polynomial."""
    import sympy

    x = sympy.Symbol("x")
    return tuple(int(c) for c in reversed(sympy.Poly(sympy.cyclotomic_poly(M, x), x).all_coeffs()))


class Cyclotomic:
    """Element of Q(zeta_M) as a sparse vector on zeta_M^0 .. zeta_M^{M-1}."""

    __slots__ = ("M", "coeffs")

    def __init__(self, M: int, coeffs: Optional[dict[int, Fraction]] = None):
        if M < 1:
            raise MapError("cyclotomic order must be >= 1")
        self.M = M
        self.coeffs = {k % M: v for k, v in (coeffs or {}).items() if v != 0}

    @classmethod
    def from_fraction(cls, value, M: int = 1) -> "Cyclotomic":
        return cls(M, {0: Fraction(value)})

    @classmethod
    def root_of_unity(cls, exponent: Fraction, M: Optional[int] = None) -> "Cyclotomic":
        """e^{2 pi i exponent} for a rational exponent (mod 1)."""
        e = Fraction(exponent) % 1
        M = M or e.denominator
        if M % e.denominator:
            raise MapError(f"zeta order {M} does not contain denominator {e.denominator}")
        return cls(M, {int(e * M): Fraction(1)})

    def rescale(self, M2: int) -> "Cyclotomic":
        if M2 == self.M:
            return self
        if M2 % self.M:
            raise MapError("can only rescale to a multiple order")
        step = M2 // self.M
        return Cyclotomic(M2, {k * step: v for k, v in self.coeffs.items()})

    def _pair(self, other: "Cyclotomic") -> tuple["Cyclotomic", "Cyclotomic"]:
        M = self.M * other.M // math.gcd(self.M, other.M)
        return self.rescale(M), other.rescale(M)

    def __add__(self, other: "Cyclotomic") -> "Cyclotomic":
        a, b = self._pair(other)
        out = dict(a.coeffs)
        for k, v in b.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return Cyclotomic(a.M, out)

    def __neg__(self) -> "Cyclotomic":
        return Cyclotomic(self.M, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "Cyclotomic") -> "Cyclotomic":
        return self + (-other)

    def __mul__(self, other: "Cyclotomic") -> "Cyclotomic":
        a, b = self._pair(other)
        out: dict[int, Fraction] = {}
        for k1, v1 in a.coeffs.items():
            for k2, v2 in b.coeffs.items():
                k = (k1 + k2) % a.M
                out[k] = out.get(k, Fraction(0)) + v1 * v2
        return Cyclotomic(a.M, out)

    def scale(self, f) -> "Cyclotomic":
        f = Fraction(f)
        return Cyclotomic(self.M, {k: f * v for k, v in self.coeffs.items()})

    def reduced(self) -> tuple[Fraction, ...]:
        """Canonical vector: remainder mod Phi_M, length phi(M)."""
        phi = _cyclotomic_coeffs(self.M)
        deg = len(phi) - 1
        rem = [Fraction(0)] * self.M
        for k, v in self.coeffs.items():
            rem[k] += v
        # synthetic division by the monic Phi_M
        for i in range(self.M - 1, deg - 1, -1):
            c = rem[i]
            if c == 0:
                continue
            rem[i] = Fraction(0)
            for j in range(deg):
                rem[i - deg + j] -= c * phi[j]
        return tuple(rem[:deg])

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.reduced())

    def is_rational(self) -> Optional[Fraction]:
        red = self.reduced()
        if all(v == 0 for v in red[1:]):
            return red[0]
        return None

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Cyclotomic.from_fraction(other)
        if not isinstance(other, Cyclotomic):
            return NotImplemented
        return (self - other).is_zero

    def __hash__(self):
        raise TypeError("Cyclotomic is not hashable")

    def complex_approx(self) -> complex:
        import cmath

        return sum(complex(v) * cmath.exp(2j * cmath.pi * k / self.M)
                   for k, v in self.coeffs.items()) if self.coeffs else 0j

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"{v}*z{self.M}^{k}" if k else f"{v}"
                          for k, v in sorted(self.coeffs.items()))


# -- modular maps --------------------------------------------------------------


@dataclass(frozen=True)
class ModularMap:
    """j-map or chi-map: nonconstant (level, twist) or a constant special value.

    level is the rational a/d of the upper-triangular representative; the
    twist is stored as the exponent b/d of the root of unity e^{2 pi i b/d}.
    Constant maps reference (discriminant, class index) and have level 0.
    """

    kind: str  # "j" | "chi"
    level: Optional[Fraction] = None
    twist: Optional[Fraction] = None
    constant: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.kind not in ("j", "chi"):
            raise MapError(f"unknown map kind {self.kind!r}")
        if (self.level is None) == (self.constant is None):
            raise MapError("map must be either nonconstant (level/twist) or constant")
        if self.level is not None:
            if self.level <= 0:
                raise MapError("level must be a positive rational")
            if self.twist is None:
                raise MapError("nonconstant map needs a twist")

    @classmethod
    def nonconstant(cls, kind: str, level, twist) -> "ModularMap":
        return cls(kind, Fraction(level), Fraction(twist) % 1, None)

    @classmethod
    def constant_map(cls, kind: str, disc: int, class_index: int = 0) -> "ModularMap":
        return cls(kind, None, None, (disc, class_index))

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    @property
    def effective_level(self) -> Fraction:
        return Fraction(0) if self.is_constant else self.level

    def same_locus(self, other: "ModularMap") -> bool:
        """Same level and twist (nonconstant) or same source point (constant)."""
        if self.is_constant != other.is_constant:
            return False
        if self.is_constant:
            return self.constant == other.constant
        return self.level == other.level and self.twist == other.twist


@dataclass(frozen=True)
class ConsistentPair:
    """A j-map and chi-map of the same level and twist (or same source)."""

    jmap: ModularMap
    chimap: ModularMap

    def __post_init__(self):
        if self.jmap.kind != "j" or self.chimap.kind != "chi":
            raise MapError("pair must consist of a j-map and a chi-map")
        if not self.jmap.same_locus(self.chimap):
            raise MapError("pair is not consistent (level/twist or source differ)")

    @property
    def is_constant(self) -> bool:
        return self.jmap.is_constant

    @property
    def level(self) -> Fraction:
        return self.jmap.effective_level

    @property
    def twist(self) -> Optional[Fraction]:
        return self.jmap.twist


def constant_value(m: ModularMap) -> Fraction:
    """Exact value of a constant map, resolved through the class polynomial.

    Only h(D) = 1 discriminants give rational values usable in the exact
    cyclotomic calculus; anything else is rejected."""
    if not m.is_constant:
        raise MapError("not a constant map")
    from . import heegner

    D, idx = m.constant
    forms = heegner.reduced_forms(D)
    if idx >= len(forms):
        raise MapError(f"class index {idx} out of range for D={D}")
    if len(forms) != 1:
        raise MapError(f"constant maps need h(D) = 1 for exact values; h({D}) = {len(forms)}")
    kind = "j" if m.kind == "j" else "chi-star"
    poly = heegner.class_polynomial(D, kind)
    return -poly.coeffs[0]


# -- formal series: Laurent in t = q^{1/L}, coefficients in Q(zeta)[s] --------


class FormalSeries:
    """Sparse terms {(t_exp, s_pow): Cyclotomic} exact below t^order.

    order None means the series is an exact Laurent polynomial (no truncation).
    """

    __slots__ = ("terms", "order")

    def __init__(self, terms: dict[tuple[int, int], Cyclotomic], order: Optional[float]):
        self.terms = {k: v for k, v in terms.items() if not v.is_zero}
        self.order = INF_ORDER if order is None else order
        if self.terms and self.order is not INF_ORDER:
            if max(t for t, _ in self.terms) >= self.order:
                raise MapError("terms at or beyond the truncation order")

    @classmethod
    def constant(cls, value: Cyclotomic, order: Optional[float] = None) -> "FormalSeries":
        return cls({(0, 0): value}, order)

    @property
    def min_t(self) -> Optional[int]:
        return min((t for t, _ in self.terms), default=None)

    def _lead_for_order(self) -> float:
        lead = self.min_t
        return self.order if lead is None else lead

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        order = min(self.order, other.order)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        out = {k: v for k, v in out.items() if k[0] < order}
        return FormalSeries(out, order)

    def __neg__(self) -> "FormalSeries":
        return FormalSeries({k: -v for k, v in self.terms.items()}, self.order)

    def __sub__(self, other: "FormalSeries") -> "FormalSeries":
        return self + (-other)

    def __mul__(self, other: "FormalSeries") -> "FormalSeries":
        order = min(self.order + other._lead_for_order(),
                    other.order + self._lead_for_order())
        out: dict[tuple[int, int], Cyclotomic] = {}
        for (t1, s1), v1 in self.terms.items():
            for (t2, s2), v2 in other.terms.items():
                t = t1 + t2
                if t >= order:
                    continue
                key = (t, s1 + s2)
                prod = v1 * v2
                out[key] = out[key] + prod if key in out else prod
        return FormalSeries(out, order)

    def leading_monomial(self) -> Optional[tuple[int, int, Cyclotomic]]:
        """Lowest (t_exp, s_pow) monomial: the term dominating as Im tau grows."""
        if not self.terms:
            return None
        key = min(self.terms)
        return (key[0], key[1], self.terms[key])

    def vanishes_to_order(self, t_order: Optional[float] = None) -> tuple[bool, float]:
        """(verdict, effective order): no nonzero monomial below the order."""
        limit = self.order if t_order is None else min(t_order, self.order)
        return (all(t >= limit for t, _ in self.terms), limit)

    def __repr__(self) -> str:
        items = ", ".join(f"t^{t} s^{s}: {c!r}" for (t, s), c in sorted(self.terms.items()))
        return f"FormalSeries({{{items}}}, order={self.order})"


def det3(rows: list[list[FormalSeries]]) -> FormalSeries:
    a, b, c = rows[0]
    d, e, f = rows[1]
    g, h, i = rows[2]
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


# -- map expansions -------------------------------------------------------------


def _context(maps) -> tuple[int, int]:
    """(L, M): lcm of level denominators and of twist denominators."""
    L = 1
    M = 1
    for m in maps:
        if m.is_constant:
            continue
        L = L * m.level.denominator // math.gcd(L, m.level.denominator)
        M = M * m.twist.denominator // math.gcd(M, m.twist.denominator)
    return L, M


_SERIES = {
    "j": qseries.j_expansion,
    "chi": qseries.chi_expansion,
    "xi": qseries.xi_expansion,
}


def _substituted_terms(series_kind: str, level: Fraction, twist: Fraction,
                       q_order: int, L: int, M: int, s_pow: int,
                       scalar: Fraction) -> dict[tuple[int, int], Cyclotomic]:
    """scalar * f(eta q^level) as t-terms at the given s-power."""
    t_step_f = level * L
    if t_step_f.denominator != 1:
        raise MapError("level denominator does not divide the common lcm")
    t_step = int(t_step_f)
    order_t = q_order * L
    n_max = (order_t - 1) // t_step if t_step else -1
    f = _SERIES[series_kind](max(n_max + 1, 0))
    out: dict[tuple[int, int], Cyclotomic] = {}
    for n in range(f.lead, min(f.order, n_max + 1)):
        c = f.coeff(n)
        if c == 0:
            continue
        root = Cyclotomic.root_of_unity((twist * n) % 1, M)
        out[(n * t_step, s_pow)] = root.scale(c * scalar)
    return out


def map_expansion(m: ModularMap, q_order: int, L: Optional[int] = None,
                  M: Optional[int] = None) -> FormalSeries:
    """Formal expansion of a map to the requested q-order (t-order q_order*L).

    j-maps expand the j-series under q -> eta q^r; chi-maps carry the extra
    s-part -(1/r) xi(eta q^r) with s = 3/(pi y), since Im(g tau) = r Im tau.
    Constant maps resolve to their exact special value.
    """
    if L is None or M is None:
        L0, M0 = _context([m])
        L, M = L or L0, M or M0
    if m.is_constant:
        return FormalSeries.constant(Cyclotomic.from_fraction(constant_value(m), M),
                                     order=q_order * L)
    if m.kind == "j":
        terms = _substituted_terms("j", m.level, m.twist, q_order, L, M, 0, Fraction(1))
        return FormalSeries(terms, q_order * L)
    terms = _substituted_terms("chi", m.level, m.twist, q_order, L, M, 0, Fraction(1))
    terms.update(_substituted_terms("xi", m.level, m.twist, q_order, L, M, 1,
                                    -1 / m.level))
    return FormalSeries(terms, q_order * L)


def _leading_series(m: ModularMap, L: int, M: int) -> FormalSeries:
    """Leading terms only (exact Laurent polynomial, no truncation)."""
    if m.is_constant:
        return FormalSeries.constant(Cyclotomic.from_fraction(constant_value(m), M))
    t_exp = -int(m.level * L)
    eta = Cyclotomic.root_of_unity((-m.twist) % 1, M)
    if m.kind == "j":
        return FormalSeries({(t_exp, 0): eta}, None)
    return FormalSeries({(t_exp, 0): eta, (t_exp, 1): eta.scale(-1 / m.level)}, None)


def _ones_row(M: int, order: Optional[float] = None) -> list[FormalSeries]:
    one = Cyclotomic.from_fraction(1, M)
    return [FormalSeries.constant(one, order) for _ in range(3)]


# -- dominant term --------------------------------------------------------------


@dataclass(frozen=True)
class DominantTerm:
    q_exponent: Fraction
    s_power: int
    coefficient: Cyclotomic
    vanishes: bool
    note: str = ""


def dominant_term(pairs: tuple[ConsistentPair, ConsistentPair, ConsistentPair]) -> DominantTerm:
    """Dominant monomial of the collinearity determinant of three consistent
    pairs, from the leading terms alone.

    Assumes the caller has normalized levels so the first pair's level is
    strictly greater than the other two (the GL2-composition normalization is
    a precondition, not implemented here).  Sound because every discarded
    deeper series term contributes t-exponents strictly above the leading
    -(r1+r2)L monomial.
    """
    p1, p2, p3 = pairs
    if all(p.is_constant for p in pairs):
        raise MapError("degenerate configuration: all three pairs constant")
    r1 = p1.level
    if p1.is_constant or not (r1 > p2.level and r1 > p3.level):
        raise MapError("precondition violated: pair 1 must have strictly the highest level")
    L, M = _context([p.jmap for p in pairs] + [p.chimap for p in pairs])
    rows = [
        _ones_row(M),
        [_leading_series(p.jmap, L, M) for p in pairs],
        [_leading_series(p.chimap, L, M) for p in pairs],
    ]
    det = det3(rows)
    lead = det.leading_monomial()
    note = ""
    if not p2.is_constant and not p3.is_constant and p2.jmap.same_locus(p3.jmap):
        note = "pairs 2 and 3 are equal maps; determinant vanishes identically"
    if lead is None:
        return DominantTerm(Fraction(0), 0, Cyclotomic.from_fraction(0, M), True, note)
    t_exp, s_pow, coeff = lead
    return DominantTerm(Fraction(t_exp, L), s_pow, coeff, False, note)


# -- split determinants ----------------------------------------------------------


@dataclass
class SplitDeterminant:
    holomorphic: FormalSeries
    xi_part: FormalSeries
    hol_vanishes: bool
    xi_vanishes: bool
    order: int

    def to_json(self) -> dict:
        def lead_json(series):
            lm = series.leading_monomial()
            if lm is None:
                return None
            t, s, c = lm
            return {"t_exp": t, "s_pow": s, "coeff": repr(c)}

        return {
            "order": self.order,
            "holomorphic": {"vanishes_to_order": self.hol_vanishes,
                            "leading": lead_json(self.holomorphic)},
            "xi_part": {"vanishes_to_order": self.xi_vanishes,
                        "leading": lead_json(self.xi_part)},
        }


def _hol_side(m: ModularMap, q_order: int, L: int, M: int) -> FormalSeries:
    if m.is_constant:
        return FormalSeries.constant(Cyclotomic.from_fraction(constant_value(m), M),
                                     order=q_order * L)
    return FormalSeries(_substituted_terms("chi", m.level, m.twist, q_order, L, M, 0,
                                           Fraction(1)), q_order * L)


def _xi_side(m: ModularMap, q_order: int, L: int, M: int) -> FormalSeries:
    """-(1/level) xi(eta q^level); constants keep their value (displayed form)."""
    if m.is_constant:
        return FormalSeries.constant(Cyclotomic.from_fraction(constant_value(m), M),
                                     order=q_order * L)
    return FormalSeries(_substituted_terms("xi", m.level, m.twist, q_order, L, M, 0,
                                           -1 / m.level), q_order * L)


def split_determinant(fmaps, gmaps, q_order: int = 8) -> SplitDeterminant:
    """The two separated determinants (holomorphic chi side, -1/r xi side) for
    six chi-maps arranged as rows (1,1,1), (f1,f2,f3), (g1,g2,g3)."""
    fmaps, gmaps = list(fmaps), list(gmaps)
    if len(fmaps) != 3 or len(gmaps) != 3:
        raise MapError("split_determinant needs exactly 3 + 3 chi-maps")
    for m in fmaps + gmaps:
        if m.kind != "chi":
            raise MapError("split_determinant operates on chi-maps")
    L, M = _context(fmaps + gmaps)
    hol = det3([
        _ones_row(M, q_order * L),
        [_hol_side(m, q_order, L, M) for m in fmaps],
        [_hol_side(m, q_order, L, M) for m in gmaps],
    ])
    xi = det3([
        _ones_row(M, q_order * L),
        [_xi_side(m, q_order, L, M) for m in fmaps],
        [_xi_side(m, q_order, L, M) for m in gmaps],
    ])
    return SplitDeterminant(hol, xi, hol.vanishes_to_order()[0],
                            xi.vanishes_to_order()[0], q_order)


def combined_chi_determinant(fmaps, gmaps, q_order: int = 8) -> FormalSeries:
    """Full chi* determinant (holomorphic and s-parts together)."""
    L, M = _context(list(fmaps) + list(gmaps))
    full = [map_expansion(m, q_order, L, M) for m in fmaps]
    gull = [map_expansion(m, q_order, L, M) for m in gmaps]
    return det3([_ones_row(M, q_order * L), full, gull])


def pi_determinant(pairs, q_order: int = 8) -> FormalSeries:
    """Full collinearity determinant for three consistent (j, chi) pairs:
    the brute-force oracle behind dominant_term."""
    maps = [p.jmap for p in pairs] + [p.chimap for p in pairs]
    L, M = _context(maps)
    return det3([
        _ones_row(M, q_order * L),
        [map_expansion(p.jmap, q_order, L, M) for p in pairs],
        [map_expansion(p.chimap, q_order, L, M) for p in pairs],
    ])
