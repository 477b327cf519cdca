"""Exact arithmetic in truncated p-adic power-series rings.

``SeriesElt`` lives in R_{N,M} = (Z/p^N)[u]/(u^M) and records how many of its
leading u-coefficients are trustworthy (``eff_u``).  ``PolyQuotient`` models the
more general quotients (Z/p^N)[u]/(m) for a monic m, which the filtration
engine uses with m = E^K.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InsufficientPrecision, UsageError


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


def vp(x: int, p: int, cap: int) -> int:
    """p-adic valuation of ``x``, capped at ``cap`` (zero has valuation ``cap``)."""
    x = int(x)
    if x == 0:
        return cap
    v = 0
    while v < cap and x % p == 0:
        x //= p
        v += 1
    return v


@dataclass(frozen=True)
class Prec:
    """Working precision: residues mod p^n_p, series mod u^n_u."""

    p: int
    n_p: int
    n_u: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise UsageError(f"p={self.p} is not prime")
        if self.n_p < 1 or self.n_u < 1:
            raise UsageError("precision exponents must be >= 1")

    @property
    def modulus(self) -> int:
        return self.p ** self.n_p


@dataclass(frozen=True)
class SeriesElt:
    """Element of R_{N,M}; coefficients at index >= eff_u are unreliable."""

    coeffs: tuple
    prec: Prec
    eff_u: int

    def __post_init__(self):
        if len(self.coeffs) != self.prec.n_u:
            raise UsageError("coefficient list must have length n_u")
        if not 0 <= self.eff_u <= self.prec.n_u:
            raise UsageError("eff_u out of range")

    @classmethod
    def make(cls, coeffs: Iterable[int], prec: Prec, eff_u: int | None = None) -> "SeriesElt":
        q = prec.modulus
        c = [int(x) % q for x in coeffs][: prec.n_u]
        c += [0] * (prec.n_u - len(c))
        return cls(tuple(c), prec, prec.n_u if eff_u is None else min(eff_u, prec.n_u))

    @classmethod
    def const(cls, c: int, prec: Prec) -> "SeriesElt":
        return cls.make([c], prec)

    @classmethod
    def var(cls, prec: Prec) -> "SeriesElt":
        return cls.make([0, 1], prec)

    def _check(self, other: "SeriesElt"):
        if not isinstance(other, SeriesElt) or other.prec != self.prec:
            raise UsageError("series operands must share the same Prec")

    def _lift(self, other) -> "SeriesElt":
        if isinstance(other, int):
            return SeriesElt.const(other, self.prec)
        self._check(other)
        return other

    def __add__(self, other):
        other = self._lift(other)
        q = self.prec.modulus
        return SeriesElt(tuple((a + b) % q for a, b in zip(self.coeffs, other.coeffs)),
                         self.prec, min(self.eff_u, other.eff_u))

    __radd__ = __add__

    def __neg__(self):
        q = self.prec.modulus
        return SeriesElt(tuple((-a) % q for a in self.coeffs), self.prec, self.eff_u)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            q = self.prec.modulus
            return SeriesElt(tuple((a * other) % q for a in self.coeffs), self.prec, self.eff_u)
        self._check(other)
        M, q = self.prec.n_u, self.prec.modulus
        out = [0] * M
        a, b = self.coeffs, other.coeffs
        for i, x in enumerate(a):
            if x:
                for j in range(M - i):
                    out[i + j] += x * b[j]
        return SeriesElt(tuple(c % q for c in out), self.prec, min(self.eff_u, other.eff_u))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise UsageError("negative powers are not supported")
        out = SeriesElt.const(1, self.prec)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def reliable(self) -> tuple:
        return self.coeffs[: self.eff_u]

    def agrees(self, other: "SeriesElt") -> bool:
        """Equality on the range where both operands are reliable."""
        self._check(other)
        k = min(self.eff_u, other.eff_u)
        return self.coeffs[:k] == other.coeffs[:k]

    def is_zero(self) -> bool:
        return not any(self.reliable())

    def u_valuation(self) -> int:
        """Index of the first reliable nonzero coefficient, or eff_u if none."""
        for i, c in enumerate(self.reliable()):
            if c:
                return i
        return self.eff_u

    def __repr__(self):
        terms = [f"{c}*u^{i}" if i else str(c) for i, c in enumerate(self.reliable()) if c]
        body = " + ".join(terms) or "0"
        return f"SeriesElt({body} + O(u^{self.eff_u}), p^{self.prec.n_p})"


def series_add(x: SeriesElt, y: SeriesElt) -> SeriesElt:
    return x + y


def series_mul(x: SeriesElt, y: SeriesElt) -> SeriesElt:
    return x * y


def frobenius(x: SeriesElt) -> SeriesElt:
    """u -> u^p; the coefficient Frobenius is trivial because k = F_p."""
    p, M = x.prec.p, x.prec.n_u
    out = [0] * M
    for i, c in enumerate(x.coeffs):
        if p * i >= M:
            break
        out[p * i] = c
    return SeriesElt(tuple(out), x.prec, min(M, p * x.eff_u))


def eval_is_unit(x: SeriesElt) -> bool:
    if x.eff_u < 1:
        raise InsufficientPrecision("constant term is not reliable")
    return x.coeffs[0] % x.prec.p != 0


@dataclass(frozen=True)
class EisensteinPoly:
    """Monic E(u) = c_0 + ... + c_{e-1} u^{e-1} + u^e with p | c_i and v_p(c_0) = 1."""

    coeffs: tuple
    p: int
    n_p: int

    def __post_init__(self):
        q = self.p ** self.n_p
        c = tuple(int(x) % q for x in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if len(c) < 2 or c[-1] != 1:
            raise UsageError("Eisenstein polynomial must be monic of degree >= 1")
        if any(ci % self.p for ci in c[:-1]):
            raise UsageError("non-leading coefficients of E must be divisible by p")
        if self.n_p >= 2 and c[0] % (self.p * self.p) == 0:
            raise UsageError("constant term of E must have valuation exactly 1")

    @classmethod
    def default(cls, p: int, n_p: int) -> "EisensteinPoly":
        return cls((-p, 1), p, n_p)

    @property
    def e(self) -> int:
        return len(self.coeffs) - 1

    @property
    def modulus(self) -> int:
        return self.p ** self.n_p

    def pi(self) -> int:
        """The root pi in Z/p^N; only meaningful for e = 1."""
        if self.e != 1:
            raise UsageError("pi is a Z_p-scalar only for e = 1")
        return (-self.coeffs[0]) % self.modulus

    def a(self, flavor: str = "crys") -> int:
        """Amplifying constant: E'(pi) for crys, pi*E'(pi) for log (e = 1 only)."""
        if self.e != 1:
            raise UsageError("the Sen constant is a Z/p^N scalar only for e = 1")
        if flavor == "crys":
            return 1
        if flavor == "log":
            return self.pi()
        raise UsageError(f"unknown flavor {flavor!r}")

    def poly(self) -> list:
        return list(self.coeffs)

    def power(self, n: int) -> list:
        return poly_pow(self.poly(), n, self.modulus)

    def series(self, prec: Prec) -> SeriesElt:
        if prec.p != self.p or prec.n_p != self.n_p:
            raise UsageError("precision mismatch between E and the series ring")
        return SeriesElt.make(self.coeffs, prec)


def poly_mul(a: Sequence[int], b: Sequence[int], q: int) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return [c % q for c in out]


def poly_pow(a: Sequence[int], n: int, q: int) -> list:
    out = [1 % q]
    for _ in range(n):
        out = poly_mul(out, a, q)
    return out


def poly_divmod_monic(f: Sequence[int], g: Sequence[int], q: int) -> tuple:
    """Exact long division of f by the monic g over Z/q."""
    f = [c % q for c in f]
    dg = len(g) - 1
    if len(f) <= dg:
        return [0], f
    quo = [0] * (len(f) - dg)
    for i in range(len(f) - 1, dg - 1, -1):
        c = f[i]
        if c:
            quo[i - dg] = c
            for j in range(dg + 1):
                f[i - dg + j] = (f[i - dg + j] - c * g[j]) % q
    return quo, f[:dg]


def _divide_by_e_once(coeffs: list, known: int, E: EisensteinPoly, M: int):
    """One Weierstrass division by E on a series known below index ``known``.

    Uses u^e = E - (c_0 + ... + c_{e-1}u^{e-1}); the high part picks up a
    factor p per pass, so N passes exhaust it.  Each pass reads e more
    coefficients, hence the quotient is reliable below known - N*e.
    """
    q, e, N = E.modulus, E.e, E.n_p
    g = [(-c) % q for c in E.coeffs[:e]]
    quo = [0] * M
    cur = [c % q for c in coeffs[:known]] + [0] * max(0, e - known)
    L = known
    for _ in range(N):
        hi = cur[e:L]
        for j, h in enumerate(hi):
            quo[j] = (quo[j] + h) % q
        L = max(L - e, 0)
        new = [cur[i] if i < e else 0 for i in range(max(L, e))]
        for i, gi in enumerate(g):
            if gi:
                for j in range(min(len(hi), max(L, e) - i)):
                    new[i + j] = (new[i + j] + gi * hi[j]) % q
        cur = new
    if L < e:
        raise InsufficientPrecision(
            "Weierstrass remainder is not determined at this u-precision",
            needed={"n_u": known + (e - L)},
        )
    if any(cur[e:L]):
        raise AssertionError("high part survived N passes")
    return quo, L, cur[:e]


def weierstrass_divide(f: SeriesElt, E: EisensteinPoly, n: int, require_exact: bool = False):
    """Divide ``f`` by E^n; returns ``(q, exact)``.

    ``exact`` is true iff every successive remainder vanishes.  The quotient
    keeps eff_u(f) - n*e*N reliable coefficients.  With ``require_exact`` a
    nonzero remainder raises DomainError carrying it.
    """
    if n < 0:
        raise UsageError("n must be >= 0")
    if f.prec.p != E.p or f.prec.n_p != E.n_p:
        raise UsageError("precision mismatch between f and E")
    M = f.prec.n_u
    coeffs, known, exact = list(f.coeffs), f.eff_u, True
    first_rem = None
    for _ in range(n):
        coeffs, known, rem = _divide_by_e_once(coeffs, known, E, M)
        if any(rem) and exact:
            exact, first_rem = False, tuple(rem)
    q = SeriesElt(tuple(coeffs[i] if i < known else 0 for i in range(M)), f.prec, known)
    if require_exact and not exact:
        raise DomainError("division by E^n is not exact", remainder=first_rem)
    return q, exact


class PolyQuotient:
    """The ring (Z/p^N)[u]/(m) for a monic m of degree D, with Z/p^N-basis 1..u^{D-1}."""

    def __init__(self, p: int, N: int, modulus: Sequence[int]):
        q = p ** N
        m = [int(c) % q for c in modulus]
        if not m or m[-1] != 1 % q:
            raise UsageError("quotient modulus must be monic")
        self.p, self.N, self.q = p, N, q
        self.modulus = tuple(m)
        self.D = len(m) - 1

    @classmethod
    def series(cls, p: int, N: int, M: int) -> "PolyQuotient":
        return cls(p, N, [0] * M + [1])

    @classmethod
    def e_adic(cls, E: EisensteinPoly, K: int) -> "PolyQuotient":
        return cls(E.p, E.n_p, E.power(K))

    def key(self):
        return (self.p, self.N, self.modulus)

    def __eq__(self, other):
        return isinstance(other, PolyQuotient) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def reduce(self, f: Sequence[int]) -> tuple:
        if self.D == 0:
            return ()
        _, r = poly_divmod_monic(list(f), self.modulus, self.q)
        r = list(r) + [0] * (self.D - len(r))
        return tuple(r[: self.D])

    def mul(self, a: Sequence[int], b: Sequence[int]) -> tuple:
        return self.reduce(poly_mul(a, b, self.q))

    def add(self, a: Sequence[int], b: Sequence[int]) -> tuple:
        return tuple((x + y) % self.q for x, y in zip(a, b))

    def neg(self, a: Sequence[int]) -> tuple:
        return tuple((-x) % self.q for x in a)

    def one(self) -> tuple:
        return self.reduce([1])

    def zero(self) -> tuple:
        return (0,) * self.D

    def divides_out(self, f: Sequence[int], g: Sequence[int]):
        """Exact quotient of the representative f by the monic g, or None."""
        quo, rem = poly_divmod_monic(list(f), list(g), self.q)
        if any(rem):
            return None
        return quo

    def mult_matrix(self, a: Sequence[int]) -> np.ndarray:
        """Matrix T with T @ coeffs(x) = coeffs(a*x)."""
        T = np.zeros((self.D, self.D), dtype=object)
        for j in range(self.D):
            col = self.mul(a, [0] * j + [1])
            for i in range(self.D):
                T[i, j] = col[i]
        return T

    @cached_property
    def u_matrix(self) -> np.ndarray:
        return self.mult_matrix([0, 1])

    def is_unit(self, a: Sequence[int]) -> bool:
        """Unit test valid when m lies in (p, u), as for u^M and E^K."""
        return bool(a) and a[0] % self.p != 0


def u_power_vanishes(eff: int, E: EisensteinPoly, K: int) -> bool:
    """True iff u^eff lies in (p^N, E^K), i.e. coefficients past eff cannot matter mod E^K."""
    ring = PolyQuotient.e_adic(E, K)
    return not any(ring.reduce([0] * eff + [1]))


def max_e_adic_order(eff: int, E: EisensteinPoly) -> int:
    """Largest K such that a series known mod u^eff has a well-defined image mod (p^N, E^K)."""
    K = 0
    while u_power_vanishes(eff, E, K + 1):
        K += 1
    return K


def required_u_precision(K: int, E: EisensteinPoly) -> int:
    """Smallest n_u for which series data determines images mod (p^N, E^K)."""
    eff = K * E.e
    while not u_power_vanishes(eff, E, K):
        eff += 1
    return eff
