"""Truncated elements of the completed group algebra k[[G]], k = F_p.

Fix a model with basis g_1..g_d and put b_i = g_i - 1.  The monomials
b^a = b_1^{a_1} ... b_d^{a_d} (normal order) with weight <a, omega> below
the cutoff W/e form a k-basis of k[[G]] modulo the tail ideal
F_W = {x : w(x) >= W/e}; a TruncatedSeries is a coefficient map on that
basis.  All ring operations are exact mod F_W.

Multiplication routes every product through the group: each monomial is
expanded into group elements, b^a = sum_{c <= a} (-1)^{|a - c|} C(a, c) g^c,
the group elements are multiplied in the model, and each product is
re-expanded by the Mahler formula g^m = sum_b C(m, b) b^b.  For abelian
models the same answer is reached by adding exponents, and that shortcut is
taken by `*` (the two routes are compared in the test-suite corpus; use
`mul_reference` to force the group route).

The empty series has valuation marker AtLeast(W/e), consistent with the
rest of the package.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .groups import Automorphism, GroupElement, GroupModel, ModelError
from .padic import (
    AtLeast, MultiIndex, PrecisionError, Val, comb_mod, mi_range,
    mi_weight, multi_binom_mod_p,
)


class TruncationSpec:
    """Monomial basis below the cutoff plus the caches shared by all series."""

    def __init__(self, model: GroupModel, W: int):
        if W < 1:
            raise ValueError("cutoff W must be a positive integer (units of 1/e)")
        self.model = model
        self.W = W
        self.e = model.omega.e
        self.precision = model.precision
        self.cutoff = Fraction(W, self.e)
        self.omega = model.omega.values
        bounds = []
        for w in self.omega:
            # a_i * w < cutoff, so a_i <= ceil(cutoff / w) - 1
            q = self.cutoff / w
            bound = int(q) if q.denominator > 1 else int(q) - 1
            bounds.append(bound)
        basis = [a for a in mi_range(bounds) if mi_weight(a, self.omega) < self.cutoff]
        basis.sort(key=lambda a: (mi_weight(a, self.omega), a))
        self.basis: list[MultiIndex] = basis
        self.index = {a: i for i, a in enumerate(basis)}
        self.size = len(basis)
        max_exp = max((x for a in basis for x in a), default=0)
        if model.p ** model.precision <= max_exp:
            need = 1
            while model.p ** need <= max_exp:
                need += 1
            raise PrecisionError(
                f"cutoff W={W} uses exponents up to {max_exp}; coordinate precision "
                f"M={model.precision} is too small (need M >= {need})")
        self._weights = {a: mi_weight(a, self.omega) for a in basis}
        self.max_exponents = tuple(
            max((a[i] for a in basis), default=0) for i in range(model.rank))
        self._op_cache: dict = {}
        self._expand_cache: dict = {}
        self._embed_rows: dict = {}
        self._gel_cache: dict = {}
        self._gprod_keys: dict = {}
        self._aut_tables: dict = {}

    # -- basic structure ----------------------------------------------------

    def weight(self, a: MultiIndex) -> Fraction:
        w = self._weights.get(a)
        return w if w is not None else mi_weight(a, self.omega)

    def zero(self) -> "TruncatedSeries":
        return TruncatedSeries(self, {})

    def one(self) -> "TruncatedSeries":
        return self.monomial((0,) * self.model.rank)

    def monomial(self, a: Sequence[int], c: int = 1) -> "TruncatedSeries":
        return TruncatedSeries(self, {tuple(a): c})

    def from_dict(self, coeffs: Mapping[MultiIndex, int]) -> "TruncatedSeries":
        return TruncatedSeries(self, dict(coeffs))

    def from_vector(self, vec) -> "TruncatedSeries":
        coeffs = {self.basis[i]: int(v) for i, v in enumerate(vec) if v % self.model.p}
        return TruncatedSeries(self, coeffs)

    # -- expansion caches ---------------------------------------------------

    def _expand(self, a: MultiIndex):
        """b^a as a combination of group elements g^c, c <= a componentwise."""
        hit = self._expand_cache.get(a)
        if hit is not None:
            return hit
        p = self.model.p
        n = sum(a)
        out = []
        for c in mi_range(a):
            coeff = 1
            for ai, ci in zip(a, c):
                coeff = coeff * comb_mod(ai, ci, p) % p
            if coeff and (n - sum(c)) % 2:
                coeff = (p - coeff) % p
            if coeff:
                out.append((c, coeff))
        out = tuple(out)
        self._expand_cache[a] = out
        return out

    def _group_el(self, c: MultiIndex) -> GroupElement:
        hit = self._gel_cache.get(c)
        if hit is None:
            hit = self.model.element(c)
            self._gel_cache[c] = hit
        return hit

    def _embed_key(self, el: GroupElement):
        return tuple(x.digits for x in el.coords)

    def _embed_row(self, el: GroupElement) -> np.ndarray:
        key = self._embed_key(el)
        hit = self._embed_rows.get(key)
        if hit is None:
            hit = np.array(
                [multi_binom_mod_p(el.coords, b) for b in self.basis], dtype=np.int64)
            self._embed_rows[key] = hit
        return hit

    def _gprod_key(self, c1: MultiIndex, c2: MultiIndex):
        key = (c1, c2)
        hit = self._gprod_keys.get(key)
        if hit is None:
            prod = self.model.mul(self._group_el(c1), self._group_el(c2))
            self._embed_row(prod)
            hit = self._embed_key(prod)
            self._gprod_keys[key] = hit
        return hit


def truncation_make(model: GroupModel, W: int) -> TruncationSpec:
    return TruncationSpec(model, W)


class TruncatedSeries:
    """Coefficient map on the monomial basis; immutable by convention."""

    __slots__ = ("trunc", "coeffs")

    def __init__(self, trunc: TruncationSpec, coeffs: Mapping[MultiIndex, int]):
        p = trunc.model.p
        clean = {}
        for a, c in coeffs.items():
            a = tuple(int(x) for x in a)
            if len(a) != trunc.model.rank or any(x < 0 for x in a):
                raise ValueError(f"bad monomial exponent {a}")
            c = int(c) % p
            if c and a in trunc.index:
                clean[a] = c
            # monomials at or beyond the cutoff are 0 mod F_W and are dropped
        self.trunc = trunc
        self.coeffs = clean

    # -- ring structure -----------------------------------------------------

    def _check(self, other: "TruncatedSeries") -> None:
        if self.trunc is not other.trunc:
            raise ValueError("series from different truncations")

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = (out.get(a, 0) + c) % self.trunc.model.p
        return TruncatedSeries(self.trunc, out)

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + (-other)

    def __neg__(self) -> "TruncatedSeries":
        p = self.trunc.model.p
        return TruncatedSeries(self.trunc, {a: p - c for a, c in self.coeffs.items()})

    def scale(self, c: int) -> "TruncatedSeries":
        c = c % self.trunc.model.p
        return TruncatedSeries(self.trunc, {a: v * c for a, v in self.coeffs.items()})

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check(other)
        if self.trunc.model.kind == "abelian":
            t = self.trunc
            p = t.model.p
            out: dict = {}
            for a, ca in self.coeffs.items():
                for b, cb in other.coeffs.items():
                    key = tuple(x + y for x, y in zip(a, b))
                    if key in t.index:
                        out[key] = (out.get(key, 0) + ca * cb) % p
            return TruncatedSeries(t, out)
        return mul_reference(self, other)

    def pow(self, k: int) -> "TruncatedSeries":
        if k < 0:
            raise ValueError("negative series powers are undefined here")
        out = self.trunc.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        return (isinstance(other, TruncatedSeries) and self.trunc is other.trunc
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((id(self.trunc), tuple(sorted(self.coeffs.items()))))

    # -- inspection ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def support(self) -> list[MultiIndex]:
        return sorted(self.coeffs, key=lambda a: (self.trunc.weight(a), a))

    def coeff(self, a: Sequence[int]) -> int:
        return self.coeffs.get(tuple(a), 0)

    def valuation(self) -> Val:
        """w(x): least monomial weight, or AtLeast(W/e) for the empty series."""
        if not self.coeffs:
            return AtLeast(self.trunc.cutoff)
        return min(self.trunc.weight(a) for a in self.coeffs)

    def vector(self) -> np.ndarray:
        out = np.zeros(self.trunc.size, dtype=np.int64)
        for a, c in self.coeffs.items():
            out[self.trunc.index[a]] = c
        return out

    def __repr__(self) -> str:
        return f"TruncatedSeries({format_series(self)})"


def w_val(x: TruncatedSeries) -> Val:
    return x.valuation()


def mul_reference(x: TruncatedSeries, y: TruncatedSeries) -> TruncatedSeries:
    """Product via the group: expand, multiply elements, re-expand.

    This is the reference algorithm for every model kind; the abelian
    shortcut in `__mul__` must match it on the corpus.
    """
    t = x.trunc
    if t is not y.trunc:
        raise ValueError("series from different truncations")
    p = t.model.p
    xg: dict = {}
    for a, ca in x.coeffs.items():
        for c, s in t._expand(a):
            v = (xg.get(c, 0) + ca * s) % p
            if v:
                xg[c] = v
            else:
                xg.pop(c, None)
    yg: dict = {}
    for a, ca in y.coeffs.items():
        for c, s in t._expand(a):
            v = (yg.get(c, 0) + ca * s) % p
            if v:
                yg[c] = v
            else:
                yg.pop(c, None)
    prod: dict = {}
    for c1, v1 in xg.items():
        for c2, v2 in yg.items():
            key = t._gprod_key(c1, c2)
            prod[key] = (prod.get(key, 0) + v1 * v2) % p
    acc = np.zeros(t.size, dtype=np.int64)
    for key, v in prod.items():
        if v:
            acc += v * t._embed_rows[key]
    return t.from_vector(acc % p)


# ---------------------------------------------------------------------------
# Group elements and automorphisms inside the algebra
# ---------------------------------------------------------------------------

def group_embed(trunc: TruncationSpec, el: GroupElement) -> TruncatedSeries:
    """g as a series: g^m = sum_b C(m, b) b^b over the monomial basis."""
    if el.model is not trunc.model:
        raise ModelError("element belongs to a different model")
    return trunc.from_vector(trunc._embed_row(el))


def aut_images_table(trunc: TruncationSpec, phi: Automorphism) -> list[np.ndarray]:
    """Images of every basis monomial under the ring extension of phi.

    phi(b^a) = prod_i (phi(g_i) - 1)^{a_i} in normal order; the table is
    built in graded order so each entry is one series product.
    """
    hit = trunc._aut_tables.get(phi)
    if hit is not None:
        return hit
    if phi.model is not trunc.model:
        raise ModelError("automorphism belongs to a different model")
    one = trunc.one()
    moved = [group_embed(trunc, img) - one for img in phi.images]
    table: list[Optional[TruncatedSeries]] = [None] * trunc.size
    table[trunc.index[(0,) * trunc.model.rank]] = one
    for a in trunc.basis:
        if sum(a) == 0:
            continue
        j = max(i for i, v in enumerate(a) if v)
        prev = list(a)
        prev[j] -= 1
        table[trunc.index[a]] = table[trunc.index[tuple(prev)]] * moved[j]
    rows = [s.vector() for s in table]
    trunc._aut_tables[phi] = rows
    return rows


def aut_extend(trunc: TruncationSpec, phi: Automorphism,
               x: TruncatedSeries) -> TruncatedSeries:
    """Apply the ring extension of phi to x, exactly mod F_W."""
    rows = aut_images_table(trunc, phi)
    p = trunc.model.p
    acc = np.zeros(trunc.size, dtype=np.int64)
    for a, c in x.coeffs.items():
        acc += c * rows[trunc.index[a]]
    return trunc.from_vector(acc % p)


def relative_normal_form(x: TruncatedSeries, split: int) -> dict:
    """Regroup x = sum_g r_g * c^g with c_i = b_{split+i}.

    Keys are the exponent tuples g on the trailing rank-split coordinates;
    each r_g is a series supported on the leading block (trailing exponents
    zero).  The regrouping is exact because normal order already factors
    every monomial as (leading block) * (trailing block).
    """
    t = x.trunc
    d = t.model.rank
    if not 0 <= split <= d:
        raise ValueError(f"split must be in [0, {d}]")
    out: dict = {}
    for a, c in x.coeffs.items():
        gamma = a[split:]
        head = a[:split] + (0,) * (d - split)
        out.setdefault(gamma, {})[head] = c
    return {gamma: TruncatedSeries(t, coeffs) for gamma, coeffs in out.items()}


def series_frobenius(x: TruncatedSeries, k: int = 1) -> TruncatedSeries:
    """x^{p^k} for commutative models: scale exponents, keep coefficients."""
    if x.trunc.model.kind != "abelian":
        raise ValueError("Frobenius shortcut is only valid on abelian models")
    if k < 0:
        raise ValueError("k must be nonnegative")
    step = x.trunc.model.p ** k
    return TruncatedSeries(
        x.trunc, {tuple(v * step for v in a): c for a, c in x.coeffs.items()})


# ---------------------------------------------------------------------------
# Text form
# ---------------------------------------------------------------------------

def format_series(x: TruncatedSeries) -> str:
    """Canonical text: terms in basis order, 'c*b1^a1*b2^a2' with ^1 and a
    leading 1* omitted."""
    if not x.coeffs:
        return "0"
    parts = []
    for a in x.support():
        c = x.coeffs[a]
        factors = []
        for i, v in enumerate(a):
            if v == 1:
                factors.append(f"b{i + 1}")
            elif v > 1:
                factors.append(f"b{i + 1}^{v}")
        if not factors:
            parts.append(str(c))
        elif c == 1:
            parts.append("*".join(factors))
        else:
            parts.append("*".join([str(c)] + factors))
    return " + ".join(parts)


def parse_series(trunc: TruncationSpec, text: str) -> TruncatedSeries:
    """Inverse of format_series (whitespace tolerant; accepts explicit 1*)."""
    text = text.strip()
    if not text or text == "0":
        return trunc.zero()
    d = trunc.model.rank
    coeffs: dict = {}
    for term in text.split("+"):
        term = term.strip()
        if not term:
            raise ValueError("empty term in series literal")
        coeff = 1
        expo = [0] * d
        for factor in term.split("*"):
            factor = factor.strip()
            if not factor:
                raise ValueError(f"empty factor in term {term!r}")
            if factor[0] == "b":
                name, _, power = factor.partition("^")
                try:
                    idx = int(name[1:])
                except ValueError:
                    raise ValueError(f"bad variable {factor!r}") from None
                if not 1 <= idx <= d:
                    raise ValueError(f"variable {name} out of range 1..{d}")
                k = int(power) if power else 1
                if k < 0:
                    raise ValueError(f"negative exponent in {factor!r}")
                expo[idx - 1] += k
            else:
                coeff = coeff * int(factor)
        key = tuple(expo)
        coeffs[key] = (coeffs.get(key, 0) + coeff) % trunc.model.p
    return TruncatedSeries(trunc, coeffs)
