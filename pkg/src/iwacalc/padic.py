"""Truncated p-adic integers and mod-p binomial coefficients.

Everything downstream works with residues mod p^M stored as base-p digit
vectors, least significant digit first.  Digit access is the hot path: Lucas'
theorem reads C(lam, n) mod p straight off the digits, and the valuation vp
is the index of the first nonzero digit.  A residue that is zero at working
precision has vp >= M but nothing sharper can be said; such values are
reported as the marker `AtLeast(M)` rather than a number, and the marker
propagates through every valuation computed in the package.

Multi-indices (exponent vectors of monomials) are plain int tuples; the
helpers prefixed ``mi_`` implement the componentwise partial order and the
weight pairing used by the truncation modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union


class PrecisionError(ValueError):
    """A result is not determined at the working precision."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# ---------------------------------------------------------------------------
# Valuation values with truncation markers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtLeast:
    """A quantity known only to satisfy `value >= bound` at this precision."""

    bound: Fraction

    def __repr__(self) -> str:
        return f">={self.bound}"


Val = Union[int, Fraction, AtLeast]


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def val_min(values: Sequence[Val]) -> Val:
    """Minimum of exact values and lower bounds.

    The result is exact when some exact value is <= every unresolved bound;
    otherwise only a lower bound survives.
    """
    exacts = [_frac(v) for v in values if not isinstance(v, AtLeast)]
    bounds = [v.bound for v in values if isinstance(v, AtLeast)]
    if exacts and (not bounds or min(exacts) <= min(bounds)):
        return min(exacts)
    if bounds:
        return AtLeast(min(bounds))
    raise ValueError("val_min of an empty collection")


def val_add(a: Val, b: Val) -> Val:
    if isinstance(a, AtLeast) or isinstance(b, AtLeast):
        ba = a.bound if isinstance(a, AtLeast) else _frac(a)
        bb = b.bound if isinstance(b, AtLeast) else _frac(b)
        return AtLeast(ba + bb)
    return _frac(a) + _frac(b)


def val_sub_exact(a: Val, b) -> Val:
    """a - b where b must be exact."""
    if isinstance(b, AtLeast):
        raise ValueError("subtrahend must be resolved")
    if isinstance(a, AtLeast):
        return AtLeast(a.bound - _frac(b))
    return _frac(a) - _frac(b)


def ge_provable(a: Val, b: Val) -> bool:
    """True iff `a >= b` holds for every value compatible with the markers."""
    if isinstance(b, AtLeast):
        return False
    if isinstance(a, AtLeast):
        return a.bound >= _frac(b)
    return _frac(a) >= _frac(b)


def gt_provable(a: Val, b: Val) -> bool:
    if isinstance(b, AtLeast):
        return False
    if isinstance(a, AtLeast):
        return a.bound > _frac(b)
    return _frac(a) > _frac(b)


def ge_refuted(a: Val, b: Val) -> bool:
    """True iff `a >= b` is provably false (needs an upper bound on a)."""
    if isinstance(a, AtLeast):
        return False
    bb = b.bound if isinstance(b, AtLeast) else _frac(b)
    return _frac(a) < bb


def eq_compatible(computed: Val, claimed) -> bool:
    """Is the computed value compatible with an exact claim?

    An `AtLeast(b)` marker is compatible with any claim >= b; an exact value
    must match on the nose.
    """
    if isinstance(claimed, AtLeast):
        raise ValueError("claim must be resolved")
    if isinstance(computed, AtLeast):
        return _frac(claimed) >= computed.bound
    return _frac(computed) == _frac(claimed)


# ---------------------------------------------------------------------------
# Truncated p-adic integers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PadicInt:
    """Residue mod p^M as a digit vector; M = len(digits)."""

    p: int
    digits: tuple[int, ...]

    @property
    def precision(self) -> int:
        return len(self.digits)

    def value(self) -> int:
        """The canonical representative in [0, p^M)."""
        out = 0
        for d in reversed(self.digits):
            out = out * self.p + d
        return out

    def is_zero(self) -> bool:
        return not any(self.digits)

    def _check(self, other: "PadicInt") -> None:
        if self.p != other.p:
            raise ValueError(f"prime mismatch: {self.p} vs {other.p}")
        if self.precision != other.precision:
            raise PrecisionError(
                f"precision mismatch: {self.precision} vs {other.precision}")

    def __add__(self, other: "PadicInt") -> "PadicInt":
        self._check(other)
        return padic_make(self.value() + other.value(), self.p, self.precision)

    def __sub__(self, other: "PadicInt") -> "PadicInt":
        self._check(other)
        return padic_make(self.value() - other.value(), self.p, self.precision)

    def __mul__(self, other: "PadicInt") -> "PadicInt":
        self._check(other)
        return padic_make(self.value() * other.value(), self.p, self.precision)

    def __neg__(self) -> "PadicInt":
        return padic_make(-self.value(), self.p, self.precision)

    def __pow__(self, n: int) -> "PadicInt":
        if n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        m = self.p ** self.precision
        return padic_make(pow(self.value(), n, m), self.p, self.precision)

    def scale(self, n: int) -> "PadicInt":
        return padic_make(self.value() * n, self.p, self.precision)

    def vp(self) -> Val:
        """Index of the first nonzero digit, or AtLeast(M) for zero."""
        for i, d in enumerate(self.digits):
            if d:
                return i
        return AtLeast(Fraction(self.precision))

    def div_pow_p(self, r: int) -> "PadicInt":
        """Exact division by p^r; the result keeps M - r digits."""
        if r < 0:
            raise ValueError("r must be nonnegative")
        if r == 0:
            return self
        if r >= self.precision:
            raise PrecisionError(f"cannot drop {r} digits of {self.precision}")
        if any(self.digits[:r]):
            raise PrecisionError(f"{self!r} is not divisible by p^{r}")
        return PadicInt(self.p, self.digits[r:])

    def with_precision(self, M: int) -> "PadicInt":
        """Reduce to a lower precision (raising M is not meaningful)."""
        if M > self.precision:
            raise PrecisionError(f"cannot extend precision {self.precision} to {M}")
        return PadicInt(self.p, self.digits[:M])

    def __repr__(self) -> str:
        return f"PadicInt({format_padic(self)})"


def padic_make(value: int, p: int, M: int) -> PadicInt:
    """Reduce an integer mod p^M; p must be prime and M >= 1."""
    if not is_prime(p):
        raise ValueError(f"p = {p} is not prime")
    if M < 1:
        raise ValueError(f"precision M = {M} must be >= 1")
    r = value % p ** M
    digits = []
    for _ in range(M):
        r, d = divmod(r, p)
        digits.append(d)
    return PadicInt(p, tuple(digits))


def format_padic(x: PadicInt) -> str:
    """Digit form 'd0.d1.d2@p^M' used in reports."""
    return ".".join(str(d) for d in x.digits) + f"@{x.p}^{x.precision}"


def parse_padic(text: str, p: int, M: int) -> PadicInt:
    """Accepts the digit form or a plain decimal integer."""
    text = text.strip()
    if "@" in text:
        digit_part, mod_part = text.split("@")
        base, _, prec = mod_part.partition("^")
        if int(base) != p or int(prec) != M:
            raise ValueError(f"modulus {mod_part} does not match context {p}^{M}")
        digits = [int(d) for d in digit_part.split(".")]
        if len(digits) != M or any(d < 0 or d >= p for d in digits):
            raise ValueError(f"bad digit vector {digit_part!r} for p = {p}, M = {M}")
        return PadicInt(p, tuple(digits))
    return padic_make(int(text), p, M)


# ---------------------------------------------------------------------------
# Binomial coefficients mod p
# ---------------------------------------------------------------------------

def comb_mod(m: int, n: int, p: int) -> int:
    """C(m, n) mod p for plain nonnegative integers."""
    if n < 0 or m < 0:
        raise ValueError("comb_mod needs nonnegative arguments")
    if n > m:
        return 0
    return math.comb(m, n) % p


def binom_mod_p(lam: PadicInt, n: int) -> int:
    """C(lam, n) mod p by Lucas' theorem on the digits.

    Requires p^M > n so that every base-p digit of n is covered by a stored
    digit of lam; otherwise the answer would depend on digits beyond the
    working precision.
    """
    if n < 0:
        raise ValueError("n must be a nonnegative integer")
    p = lam.p
    if n >= p ** lam.precision:
        raise PrecisionError(
            f"binomial needs p^M > n: p^{lam.precision} = {p ** lam.precision} <= {n}")
    out = 1
    i = 0
    while n:
        n, nd = divmod(n, p)
        out = out * math.comb(lam.digits[i], nd) % p
        if out == 0:
            return 0
        i += 1
    return out


def multi_binom_mod_p(lams: Sequence[PadicInt], alpha: Sequence[int]) -> int:
    """Product of digitwise binomials, one factor per coordinate."""
    if len(lams) != len(alpha):
        raise ValueError("coordinate count mismatch")
    out = 1
    for lam, a in zip(lams, alpha):
        out = out * binom_mod_p(lam, a) % lam.p
        if out == 0:
            return 0
    return out


# ---------------------------------------------------------------------------
# Multi-index helpers
# ---------------------------------------------------------------------------

MultiIndex = tuple[int, ...]


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    out = tuple(x - y for x, y in zip(a, b))
    if any(x < 0 for x in out):
        raise ValueError(f"{a} - {b} leaves the exponent lattice")
    return out


def mi_leq(a: MultiIndex, b: MultiIndex) -> bool:
    return all(x <= y for x, y in zip(a, b))


def mi_norm(a: MultiIndex) -> int:
    return sum(a)


def mi_weight(a: MultiIndex, omega: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(x) * w for x, w in zip(a, omega)), Fraction(0))


def mi_range(bounds: Sequence[int]):
    """All multi-indices 0 <= alpha <= bounds, lexicographic order."""
    if not bounds:
        yield ()
        return
    for head in range(bounds[0] + 1):
        for tail in mi_range(bounds[1:]):
            yield (head,) + tail
