"""Exact arithmetic on truncated q-expansions of level-one modular objects.

Every series is a Laurent polynomial in q = e^{2 pi i tau} with exact rational
coefficients together with an explicit truncation order N: coefficients are
known exactly for all exponents < N and nothing is claimed at or beyond N.
Arithmetic propagates the weakest provable order, so silent precision loss
cannot happen.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence


class QSeriesError(ValueError):
    pass


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise QSeriesError(f"not an exact rational: {x!r}")


@dataclass(frozen=True)
class QExpansion:
    """Truncated Laurent series sum_{n=lead}^{order-1} coeffs[n-lead] q^n + O(q^order).

    Invariants: len(coeffs) == order - lead; a nonzero expansion has a nonzero
    leading coefficient.  The zero expansion has lead == order and no coeffs.
    """

    lead: int
    coeffs: tuple[Fraction, ...]
    order: int

    def __post_init__(self):
        if len(self.coeffs) != self.order - self.lead:
            raise QSeriesError("coefficient count does not match order - lead")
        if self.coeffs and self.coeffs[0] == 0:
            raise QSeriesError("leading coefficient must be nonzero")

    @classmethod
    def make(cls, lead: int, coeffs: Iterable, order: int) -> "QExpansion":
        """Build an expansion, normalizing away leading zeros."""
        cs = [_to_fraction(c) for c in coeffs]
        if len(cs) != order - lead:
            raise QSeriesError("coefficient count does not match order - lead")
        while cs and cs[0] == 0:
            cs.pop(0)
            lead += 1
        if not cs:
            lead = order
        return cls(lead, tuple(cs), order)

    @classmethod
    def zero(cls, order: int) -> "QExpansion":
        return cls(order, (), order)

    @classmethod
    def constant(cls, value, order: int) -> "QExpansion":
        if order < 1:
            raise QSeriesError("constant needs order >= 1")
        v = _to_fraction(value)
        if v == 0:
            return cls.zero(order)
        return cls.make(0, [v] + [Fraction(0)] * (order - 1), order)

    @classmethod
    def monomial(cls, coeff, exponent: int, order: int) -> "QExpansion":
        if order <= exponent:
            raise QSeriesError("order must exceed the monomial exponent")
        c = _to_fraction(coeff)
        if c == 0:
            return cls.zero(order)
        return cls.make(exponent, [c] + [Fraction(0)] * (order - 1 - exponent), order)

    # -- queries ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, n: int) -> Fraction:
        """Exact coefficient of q^n; n must be below the truncation order."""
        if n >= self.order:
            raise QSeriesError(f"coefficient q^{n} is beyond the known order O(q^{self.order})")
        if n < self.lead:
            return Fraction(0)
        return self.coeffs[n - self.lead]

    def coefficients(self) -> Sequence[Fraction]:
        return self.coeffs

    # -- arithmetic ------------------------------------------------------

    def _common_order(self, other: "QExpansion") -> int:
        return min(self.order, other.order)

    def __add__(self, other: "QExpansion") -> "QExpansion":
        if not isinstance(other, QExpansion):
            return NotImplemented
        order = self._common_order(other)
        lead = min(self.lead if not self.is_zero else order,
                   other.lead if not other.is_zero else order)
        lead = min(lead, order)
        cs = [self.coeff(n) + other.coeff(n) for n in range(lead, order)]
        return QExpansion.make(lead, cs, order)

    def __neg__(self) -> "QExpansion":
        return QExpansion(self.lead, tuple(-c for c in self.coeffs), self.order)

    def __sub__(self, other: "QExpansion") -> "QExpansion":
        if not isinstance(other, QExpansion):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> "QExpansion":
        f = _to_fraction(factor)
        if f == 0:
            return QExpansion.zero(self.order)
        return QExpansion(self.lead, tuple(f * c for c in self.coeffs), self.order)

    def __mul__(self, other: "QExpansion") -> "QExpansion":
        if not isinstance(other, QExpansion):
            return NotImplemented
        # A factor known to O(q^N) contaminates the product from exponent
        # N + lead(other) on, so the product order is the min over both sides.
        if self.is_zero or other.is_zero:
            order = min(self.order + (other.lead if not other.is_zero else other.order),
                        other.order + (self.lead if not self.is_zero else self.order))
            return QExpansion.zero(order)
        lead = self.lead + other.lead
        order = min(self.order + other.lead, other.order + self.lead)
        n_terms = order - lead
        out = [Fraction(0)] * n_terms
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            jmax = min(len(other.coeffs), n_terms - i)
            for j in range(jmax):
                b = other.coeffs[j]
                if b:
                    out[i + j] += a * b
        return QExpansion.make(lead, out, order)

    def pow(self, exponent: int) -> "QExpansion":
        if exponent < 0:
            return self.invert().pow(-exponent)
        if exponent == 0:
            return QExpansion.constant(1, self.order - self.lead if self.is_zero else self.order)
        result = self
        for _ in range(exponent - 1):
            result = result * self
        return result

    def invert(self) -> "QExpansion":
        """Multiplicative inverse; requires a nonzero leading coefficient."""
        if self.is_zero:
            raise QSeriesError("cannot invert the zero expansion")
        lead = self.lead
        unit = self.coeffs  # unit part c0 + c1 q + ..., c0 != 0
        n = len(unit)
        c0 = unit[0]
        inv = [Fraction(1) / c0]
        for k in range(1, n):
            acc = Fraction(0)
            for j in range(1, k + 1):
                acc += unit[j] * inv[k - j]
            inv.append(-acc / c0)
        # f = q^lead * unit known to relative order n, so 1/f is exact below
        # (order - lead) - lead.
        return QExpansion.make(-lead, inv, self.order - 2 * lead)

    def truncate(self, order: int) -> "QExpansion":
        if order > self.order:
            raise QSeriesError("cannot extend a truncated expansion")
        lead = min(self.lead, order)
        return QExpansion.make(lead, [self.coeff(n) for n in range(lead, order)], order)

    def agrees_with(self, other: "QExpansion") -> bool:
        """Coefficient-by-coefficient equality to the common order."""
        order = self._common_order(other)
        lo = min(self.lead, other.lead, order)
        return all(self.coeff(n) == other.coeff(n) for n in range(lo, order))

    # -- presentation ----------------------------------------------------

    def __str__(self) -> str:
        parts = []
        for n in range(self.lead, self.order):
            c = self.coeff(n)
            if c == 0:
                continue
            if n == 0:
                parts.append(f"{c}")
            elif n == 1:
                parts.append(f"{c}*q")
            else:
                parts.append(f"{c}*q^{n}")
        body = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        return f"{body} + O(q^{self.order})"

    def to_json(self) -> dict:
        return {
            "lead": self.lead,
            "order": self.order,
            "coeffs": [[c.numerator, c.denominator] for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QExpansion":
        coeffs = [Fraction(int(n), int(d)) for n, d in obj["coeffs"]]
        return cls.make(int(obj["lead"]), coeffs, int(obj["order"]))


@dataclass(frozen=True)
class AHMExpansion:
    """Almost-holomorphic expansion: polynomial in the symbol s = 3/(pi Im tau).

    parts[r] is the q-expansion multiplying s^r; part 0 is the holomorphic
    part.  (The un-scaled symbol 1/(pi y) would carry a factor 3^r on each
    part; chi* = chi - s*xi makes this normalization the natural one.)
    """

    parts: tuple[QExpansion, ...]

    def __post_init__(self):
        if not self.parts:
            raise QSeriesError("AHMExpansion needs at least one part")

    @property
    def degree(self) -> int:
        return len(self.parts) - 1

    def part(self, r: int) -> QExpansion:
        if r < len(self.parts):
            return self.parts[r]
        return QExpansion.zero(self.parts[0].order)

    def to_json(self) -> dict:
        return {"symbol": "3/(pi*y)", "parts": [p.to_json() for p in self.parts]}


# -- divisor sums --------------------------------------------------------


@lru_cache(maxsize=64)
def _sigma_sieve(k: int, n_max: int) -> tuple[int, ...]:
    """sigma_k(1..n_max) by sieving over divisors."""
    table = [0] * (n_max + 1)
    for d in range(1, n_max + 1):
        dk = d**k
        for m in range(d, n_max + 1, d):
            table[m] += dk
    return tuple(table)


def sigma(k: int, n: int) -> int:
    """Sum of k-th powers of the divisors of n."""
    if k < 1 or n < 1:
        raise QSeriesError("sigma requires k >= 1 and n >= 1")
    return _sigma_sieve(k, n)[n]


# -- the series zoo ------------------------------------------------------

_EISENSTEIN = {2: (1, -24), 4: (3, 240), 6: (5, -504)}


@lru_cache(maxsize=256)
def eisenstein(weight: int, order: int) -> QExpansion:
    """E_2, E_4 or E_6 to the requested order."""
    if weight not in _EISENSTEIN:
        raise QSeriesError(f"unsupported Eisenstein weight {weight}")
    if order < 1:
        raise QSeriesError("order must be >= 1")
    k, mult = _EISENSTEIN[weight]
    table = _sigma_sieve(k, max(order - 1, 1))
    coeffs = [Fraction(1)] + [Fraction(mult * table[n]) for n in range(1, order)]
    return QExpansion.make(0, coeffs, order)


@lru_cache(maxsize=256)
def delta(order: int) -> QExpansion:
    """Modular discriminant (E4^3 - E6^2)/1728."""
    if order < 2:
        raise QSeriesError("delta needs order >= 2")
    e4 = eisenstein(4, order)
    e6 = eisenstein(6, order)
    return (e4.pow(3) - e6 * e6).scale(Fraction(1, 1728))


@lru_cache(maxsize=256)
def eta_product(order: int) -> QExpansion:
    """Independent construction q * prod_{n>=1} (1 - q^n)^24, truncated.

    Factors with n >= order only touch exponents >= 1 + n > order, so the
    finite product is exact below the truncation.
    """
    if order < 2:
        raise QSeriesError("eta_product needs order >= 2")
    acc = [Fraction(0)] * order
    acc[0] = Fraction(1)
    for n in range(1, order):
        # (1 - q^n)^24 expanded by the binomial theorem, truncated
        factor_exps = []
        b = 1
        for k in range(0, 25):
            if n * k >= order:
                break
            factor_exps.append((n * k, Fraction((-1) ** k * b)))
            b = b * (24 - k) // (k + 1)
        new = [Fraction(0)] * order
        for e, c in factor_exps:
            for i in range(order - e):
                if acc[i]:
                    new[i + e] += acc[i] * c
        acc = new
    return QExpansion.make(1, acc[: order - 1], order)


@lru_cache(maxsize=256)
def _inv_delta(order: int) -> QExpansion:
    return delta(order).invert()


def _quotient_by_delta(numerator_order: int, numerator: QExpansion, order: int) -> QExpansion:
    prod = numerator * _inv_delta(numerator_order)
    return prod.truncate(order)


@lru_cache(maxsize=256)
def e2e4e6_product(order: int) -> QExpansion:
    return eisenstein(2, order) * eisenstein(4, order) * eisenstein(6, order)


@lru_cache(maxsize=256)
def e4_cubed(order: int) -> QExpansion:
    return eisenstein(4, order).pow(3)


@lru_cache(maxsize=256)
def e4e6_product(order: int) -> QExpansion:
    return eisenstein(4, order) * eisenstein(6, order)


def j_expansion(order: int) -> QExpansion:
    """j = E4^3 / Delta = q^-1 + 744 + 196884 q + ..."""
    if order < 0:
        raise QSeriesError("order must be >= 0")
    n = order + 2
    return _quotient_by_delta(n, e4_cubed(n), order)


def chi_expansion(order: int) -> QExpansion:
    """chi = E2 E4 E6 / Delta, the holomorphic part of chi*."""
    if order < 0:
        raise QSeriesError("order must be >= 0")
    n = order + 2
    return _quotient_by_delta(n, e2e4e6_product(n), order)


def xi_expansion(order: int) -> QExpansion:
    """xi = E4 E6 / Delta."""
    if order < 0:
        raise QSeriesError("order must be >= 0")
    n = order + 2
    return _quotient_by_delta(n, e4e6_product(n), order)


def chi_star_expansion(order: int) -> AHMExpansion:
    """chi* = chi - s*xi with s = 3/(pi Im tau); part 0 is chi, part 1 is -xi."""
    return AHMExpansion((chi_expansion(order), -xi_expansion(order)))


def integrality_check(order: int) -> None:
    """Abort (QSeriesError) unless j, Delta, chi, xi have integer coefficients
    up to the given order.  Empirical guard required by the module contract."""
    for name, f in (("j", j_expansion(order)), ("delta", delta(order)),
                    ("chi", chi_expansion(order)), ("xi", xi_expansion(order))):
        for n in range(f.lead, f.order):
            if f.coeff(n).denominator != 1:
                raise QSeriesError(f"non-integer coefficient in {name} at q^{n}")
