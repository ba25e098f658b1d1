"""Rigorous tail bounds for the truncated series used by the evaluator.

Every series kind carries a polynomial majorant (C, m) with |c_n| <= C * n^m
for all n >= 1 (and |c_0| <= 1).  For the Eisenstein factors this is the
elementary divisor bound sigma_k(n) <= d(n) n^k <= n^(k+1); products follow
from the convolution estimate

    sum_{a+b=n} C_F a^p C_G b^q  <=  (C_F + C_G + C_F C_G) n^(p+q+1),

and Delta = (E4^3 - E6^2)/1728 from the sum of its two majorants.  The tail
sum_{n>=N} C n^m t^n is then evaluated in closed form with exact rational
arithmetic via Eulerian polynomials:

    sum_{n>=0} n^m t^n = (sum_j A(m,j) t^(j+1)) / (1-t)^(m+1),

minus the exact partial sum below N.  The result is an exact rational upper
bound (in fact the exact value of the majorant tail) for any rational
0 <= t < 1 bounding |q|.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache


class TailError(ValueError):
    pass


# kind -> (C, m): |c_n| <= C n^m for n >= 1, |c_0| <= 1.
# e2/e4/e6: 24 n^2, 240 n^4, 504 n^6.  Products per the convolution estimate:
# e2e4 = (24+240+24*240, 7); e2e4e6 = (6024+504+6024*504, 14);
# e4e6 = (240+504+240*504, 11); e4sq = (240+240+240^2, 9);
# e4cubed = (58080+240+58080*240, 14); e6sq = (504+504+504^2, 13);
# delta = (e4cubed + e6sq)/1728 = 14252544/1728 = 8248 at power 14.
MAJORANTS: dict[str, tuple[int, int]] = {
    "e2": (24, 2),
    "e4": (240, 4),
    "e6": (504, 6),
    "e2e4e6": (3042624, 14),
    "e4cubed": (13997520, 14),
    "e4e6": (121704, 11),
    "delta": (8248, 14),
}


@lru_cache(maxsize=64)
def eulerian_row(m: int) -> tuple[int, ...]:
    """Eulerian numbers A(m, 0..m-1) via the standard recurrence."""
    if m < 1:
        raise TailError("eulerian_row needs m >= 1")
    row = [1]
    for mm in range(2, m + 1):
        prev = row
        row = []
        for k in range(mm):
            left = prev[k] if k < len(prev) else 0
            right = prev[k - 1] if k - 1 >= 0 else 0
            row.append((k + 1) * left + (mm - k) * right)
    return tuple(row)


def power_sum_total(m: int, t: Fraction) -> Fraction:
    """Exact value of sum_{n>=0} n^m t^n for rational 0 <= t < 1."""
    if not 0 <= t < 1:
        raise TailError("need 0 <= t < 1")
    if m == 0:
        return 1 / (1 - t)
    num = sum(a * t ** (j + 1) for j, a in enumerate(eulerian_row(m)))
    return num / (1 - t) ** (m + 1)


def power_sum_tail(m: int, t: Fraction, start: int) -> Fraction:
    """Exact value of sum_{n>=start} n^m t^n."""
    if start < 0:
        raise TailError("start must be >= 0")
    total = power_sum_total(m, t)
    partial = Fraction(0)
    tn = Fraction(1)
    for n in range(start):
        if n:
            partial += Fraction(n) ** m * tn
        tn *= t
    return total - partial


def majorant_tail(C: int, m: int, t: Fraction, start: int) -> Fraction:
    """Upper bound for sum_{n>=start} |c_n| t^n given |c_n| <= C n^m, start >= 1."""
    if start < 1:
        raise TailError("start must be >= 1 (the n = 0 term is not covered)")
    return C * power_sum_tail(m, t, start)


@lru_cache(maxsize=4096)
def series_tail(kind: str, order: int, q_abs: Fraction) -> Fraction:
    """Tail bound sum_{n>=order} |c_n(kind)| |q|^n for |q| <= q_abs < 1."""
    try:
        C, m = MAJORANTS[kind]
    except KeyError:
        raise TailError(f"no majorant for series kind {kind!r}") from None
    if order < 1:
        raise TailError("order must be >= 1")
    return majorant_tail(C, m, q_abs, order)


def _order_estimate(C: int, m: int, q_abs: Fraction, target: Fraction) -> int:
    """Float solve of C n^m q^n ~ target, the starting point for verification."""
    import math

    lq = -math.log(float(q_abs))
    lt = math.log(float(C)) - (math.log(float(target.numerator) or 1.0)
                               - math.log(float(target.denominator)))
    n = max(4.0, lt / lq)
    for _ in range(30):
        n = max(4.0, (lt + m * math.log(n) + math.log(2.0)) / lq)
    return max(2, int(n))


@lru_cache(maxsize=4096)
def order_for_tail(kind: str, q_abs: Fraction, target: Fraction, max_order: int = 100_000) -> int:
    """Small truncation order whose tail bound is <= target: a float estimate,
    then exact verification (bumping until the rigorous bound clears)."""
    if target <= 0:
        raise TailError("target must be positive")
    C, m = MAJORANTS[kind]
    n = _order_estimate(C, m, q_abs, target)
    while n <= max_order:
        if series_tail(kind, n, q_abs) <= target:
            return n
        n = n + max(4, n // 4)
    raise TailError(f"tail target {target} unreachable below order {max_order}")
