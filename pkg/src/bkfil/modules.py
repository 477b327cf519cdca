"""Submodules of free modules over truncated rings, via Z/p^N flattening.

An element of Q^d with Q = (Z/p^N)[u]/(m) is flattened to a row of length
d*deg(m) (component-major).  A Q-submodule is exactly a Z/p^N-submodule
closed under multiplication by u; closing under u^p instead gives
k[[u^p]]-submodules.  Equality is decided on Howell forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import Sequence

import numpy as np

from .errors import InsufficientPrecision, UsageError
from .linalg import HowellForm, Zpn
from .ring import PolyQuotient


_ALGEBRAS: dict = {}


def zpn(p: int, N: int) -> Zpn:
    key = (p, N)
    if key not in _ALGEBRAS:
        _ALGEBRAS[key] = Zpn(p, N)
    return _ALGEBRAS[key]


def act(ring: PolyQuotient, d: int, rows: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Apply the D x D coefficient map T to every component of every flattened row."""
    n = rows.shape[0]
    Z = zpn(ring.p, ring.N)
    if n == 0:
        return rows
    blocks = rows.reshape(n, d, ring.D).astype(object)
    out = np.einsum("ncj,ij->nci", blocks, T.astype(object)) % ring.q
    return out.reshape(n, d * ring.D).astype(Z.dtype)


def flatten(ring: PolyQuotient, vec: Sequence[Sequence[int]]) -> list:
    out = []
    for comp in vec:
        out.extend(ring.reduce(comp))
    return out


def unflatten(ring: PolyQuotient, d: int, row) -> list:
    D = ring.D
    return [tuple(int(x) for x in row[i * D:(i + 1) * D]) for i in range(d)]


@dataclass(frozen=True, eq=False)
class Submodule:
    """Submodule of Q^d closed under multiplication by u^step, stored as its Howell form."""

    ring: PolyQuotient
    d: int
    step: int
    howell: HowellForm

    @property
    def dim(self) -> int:
        return self.d * self.ring.D

    @property
    def basis(self) -> np.ndarray:
        return self.howell.rows

    @property
    def Z(self) -> Zpn:
        return zpn(self.ring.p, self.ring.N)

    @classmethod
    def from_rows(cls, ring: PolyQuotient, d: int, rows, step: int = 1, closed: bool = False) -> "Submodule":
        Z = zpn(ring.p, ring.N)
        n = d * ring.D
        R = Z.arr(rows, n) if not isinstance(rows, np.ndarray) else (rows.astype(Z.dtype) % Z.q)
        if R.ndim == 1:
            R = R.reshape(1, -1)
        if not closed and R.shape[0]:
            T = ring.u_matrix if step == 1 else _power(ring, ring.u_matrix, step)
            pieces, X = [R], R
            for _ in range(max(0, ceil((ring.D - 1) / step))):
                X = act(ring, d, X, T)
                pieces.append(X)
            R = np.vstack(pieces)
        return cls(ring, d, step, Z.howell(R, n))

    @classmethod
    def span(cls, ring: PolyQuotient, d: int, gens: Sequence[Sequence[Sequence[int]]], step: int = 1) -> "Submodule":
        rows = [flatten(ring, g) for g in gens]
        return cls.from_rows(ring, d, rows if rows else np.zeros((0, d * ring.D), dtype=zpn(ring.p, ring.N).dtype), step)

    @classmethod
    def full(cls, ring: PolyQuotient, d: int, step: int = 1) -> "Submodule":
        Z = zpn(ring.p, ring.N)
        return cls(ring, d, step, Z.howell(np.eye(d * ring.D, dtype=Z.dtype)))

    @classmethod
    def zero(cls, ring: PolyQuotient, d: int, step: int = 1) -> "Submodule":
        Z = zpn(ring.p, ring.N)
        return cls(ring, d, step, Z.howell(np.zeros((0, d * ring.D), dtype=Z.dtype), d * ring.D))

    def _compat(self, other: "Submodule"):
        if self.ring != other.ring or self.d != other.d:
            raise UsageError("submodules live in different ambient modules")

    def __eq__(self, other):
        if not isinstance(other, Submodule):
            return NotImplemented
        self._compat(other)
        return self.howell.key() == other.howell.key()

    def __hash__(self):
        return hash((self.ring, self.d, self.howell.key()))

    def contains(self, other: "Submodule") -> bool:
        self._compat(other)
        return self.Z.contains(self.howell, other.howell)

    def member(self, v) -> bool:
        return self.Z.member(self.howell, _as_row(self, v))

    def __add__(self, other: "Submodule") -> "Submodule":
        self._compat(other)
        return Submodule(self.ring, self.d, max(self.step, other.step), self.Z.sum(self.howell, other.howell))

    def scale(self, c: Sequence[int]) -> "Submodule":
        """c * S for a ring element c; closure is inherited."""
        T = self.ring.mult_matrix(c)
        rows = act(self.ring, self.d, np.array(self.basis), T)
        return Submodule(self.ring, self.d, self.step, self.Z.howell(rows, self.dim))

    def cardinality_log(self) -> int:
        """log_p of the number of elements."""
        return sum(self.ring.N - k for _, k in self.howell.pivots)

    def rank_fp(self) -> int:
        """Dimension when N = 1."""
        if self.ring.N != 1:
            raise UsageError("rank_fp is only defined over F_p")
        return len(self.howell)

    def elements_count(self) -> int:
        return self.ring.p ** self.cardinality_log()


def _as_row(S: Submodule, v):
    if isinstance(v, np.ndarray) and v.ndim == 1 and v.shape[0] == S.dim:
        return v
    v = list(v)
    if len(v) == S.d and all(isinstance(c, (list, tuple)) for c in v):
        return flatten(S.ring, v)
    return v


def _power(ring: PolyQuotient, T: np.ndarray, k: int) -> np.ndarray:
    out = np.eye(ring.D, dtype=object)
    for _ in range(k):
        out = (out.dot(T)) % ring.q
    return out


def intersect(a: Submodule, b: Submodule) -> Submodule:
    a._compat(b)
    step = a.step * b.step // _gcd(a.step, b.step)
    return Submodule(a.ring, a.d, step, a.Z.intersect(a.howell, b.howell))


def _gcd(x, y):
    while y:
        x, y = y, x % y
    return x


def membership(v, s: Submodule) -> bool:
    return s.member(v)


@dataclass(frozen=True)
class GradedInvariants:
    """Invariant factors of a finitely generated module over Z/p^N.

    ``torsion`` lists exponents in [1, N-1]; factors p^N are counted in
    ``free_rank`` and are free only up to the working precision.
    """

    torsion: tuple
    free_rank: int
    p: int
    N: int

    @property
    def exponent(self) -> int:
        return max(self.torsion, default=0)

    @property
    def generators(self) -> int:
        return self.free_rank + len(self.torsion)

    @property
    def is_zero(self) -> bool:
        return self.generators == 0

    @property
    def torsion_free(self) -> bool:
        return not self.torsion

    def as_dict(self) -> dict:
        return {"torsion": list(self.torsion), "free_rank": self.free_rank}

    def __str__(self):
        parts = [f"Z/p^{self.N}"] * self.free_rank + [f"Z/p^{k}" for k in self.torsion]
        return " + ".join(parts) if parts else "0"


def invariants_from_exponents(exps: Sequence[int], r: int, p: int, N: int) -> GradedInvariants:
    """Cokernel of a relation module with Smith exponents ``exps`` on r generators."""
    ks = list(exps) + [N] * (r - len(exps))
    tors = tuple(sorted(k for k in ks if 0 < k < N))
    free = sum(1 for k in ks if k >= N)
    return GradedInvariants(tors, free, p, N)


def quotient_invariants(big: Submodule, small: Submodule) -> GradedInvariants:
    """Invariant factors of big/small as a Z/p^N-module."""
    big._compat(small)
    if not big.contains(small):
        raise UsageError("quotient_invariants requires small to be contained in big")
    Z = big.Z
    G = np.array(big.basis)
    r = G.shape[0]
    if r == 0:
        return GradedInvariants((), 0, big.ring.p, big.ring.N)
    n = big.dim
    top = np.hstack([G, np.eye(r, dtype=Z.dtype)])
    S = np.array(small.basis)
    bot = np.hstack([S, np.zeros((S.shape[0], r), dtype=Z.dtype)]) if S.shape[0] else np.zeros((0, n + r), dtype=Z.dtype)
    H = Z.howell(np.vstack([top, bot]), n + r)
    rel = Z._kernel(H, n, r)
    exps, _ = Z.smith(rel.rows, r)
    return invariants_from_exponents(exps, r, big.ring.p, big.ring.N)


def smith_zpn(A, p: int, N: int) -> list:
    """Invariant factors (as integers p^k, k <= N) of a matrix over Z/p^N, sorted.

    One entry per position min(rows, cols); a vanishing factor reports p^N.
    """
    Z = zpn(p, N)
    M = Z.arr(A)
    r, c = M.shape
    exps, _ = Z.smith(M, c)
    ks = sorted(exps) + [N] * (min(r, c) - len(exps))
    return [p ** k for k in ks]


def saturation(S: Submodule) -> Submodule:
    """Computable shadow of (S tensor Q) intersected with the ambient lattice.

    Uses the Smith form of S: each invariant direction with a nonzero factor is
    replaced by its primitive vector.  Directions whose factor is p^N are lost,
    so callers compare ranks to detect that case.
    """
    Z = S.Z
    exps, Qinv = Z.smith(np.array(S.basis), S.dim)
    rows = Qinv[: len(exps)]
    return Submodule(S.ring, S.d, S.step, Z.howell(rows, S.dim))


def smith_rank(S: Submodule) -> int:
    exps, _ = S.Z.smith(np.array(S.basis), S.dim)
    return len(exps)


# ---------------------------------------------------------------- k_M Smith form


@dataclass(frozen=True)
class SmithDecompDVR:
    """A = X diag(u^a_i) Y over k_M = F_p[u]/(u^M)."""

    X: tuple
    Y: tuple
    exponents: tuple
    residual_zero: bool
    p: int
    M: int


def _kM_mul(a, b, p, M):
    out = [0] * M
    for i, x in enumerate(a):
        if x:
            for j in range(M - i):
                out[i + j] = (out[i + j] + x * b[j]) % p
    return out


def _kM_inv(a, p, M):
    """Inverse of a unit of k_M."""
    inv0 = pow(a[0], -1, p)
    b = [0] * M
    b[0] = inv0
    for n in range(1, M):
        s = sum(a[k] * b[n - k] for k in range(1, n + 1)) % p
        b[n] = (-s * inv0) % p
    return b


def _val_u(a):
    for i, c in enumerate(a):
        if c:
            return i
    return len(a)


def kM_matmul(A, B, p, M):
    n, m, k = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(k):
            acc = [0] * M
            for t in range(m):
                prod = _kM_mul(A[i][t], B[t][j], p, M)
                acc = [(x + y) % p for x, y in zip(acc, prod)]
            row.append(acc)
        out.append(row)
    return out


def smith_dvr(A, p: int, M: int) -> SmithDecompDVR:
    """Certified Smith decomposition over k_M with X, Y invertible and zero residual."""
    d = len(A)
    orig = [[[int(c) % p for c in (list(x) + [0] * M)[:M]] for x in row] for row in A]
    W = [[list(x) for x in row] for row in orig]
    one = [1] + [0] * (M - 1)
    zero = [0] * M
    X = [[list(one) if i == j else list(zero) for j in range(d)] for i in range(d)]
    Y = [[list(one) if i == j else list(zero) for j in range(d)] for i in range(d)]
    exps = []
    for t in range(d):
        best = None
        for i in range(t, d):
            for j in range(t, d):
                v = _val_u(W[i][j])
                if v < M and (best is None or v < best[0]):
                    best = (v, i, j)
        if best is None:
            raise InsufficientPrecision("det(A) vanishes in k_M; raise n_u", needed={"n_u": 2 * M})
        v, i, j = best
        if i != t:
            W[t], W[i] = W[i], W[t]
            for r in range(d):
                X[r][t], X[r][i] = X[r][i], X[r][t]
        if j != t:
            for r in range(d):
                W[r][t], W[r][j] = W[r][j], W[r][t]
            Y[t], Y[j] = Y[j], Y[t]
        w = W[t][t][v:] + [0] * v
        winv = _kM_inv(w, p, M)
        # row t <- winv * row t ; X column t <- X column t * w
        W[t] = [_kM_mul(winv, x, p, M) for x in W[t]]
        for r in range(d):
            X[r][t] = _kM_mul(X[r][t], w, p, M)
        for i2 in range(t + 1, d):
            b = W[i2][t]
            if any(b):
                f = b[v:] + [0] * v
                W[i2] = [[(x - y) % p for x, y in zip(W[i2][c], _kM_mul(f, W[t][c], p, M))] for c in range(d)]
                for r in range(d):
                    X[r][t] = [(x + y) % p for x, y in zip(X[r][t], _kM_mul(X[r][i2], f, p, M))]
        for j2 in range(t + 1, d):
            b = W[t][j2]
            if any(b):
                f = b[v:] + [0] * v
                for r in range(d):
                    W[r][j2] = [(x - y) % p for x, y in zip(W[r][j2], _kM_mul(W[r][t], f, p, M))]
                Y[t] = [[(x + y) % p for x, y in zip(Y[t][c], _kM_mul(f, Y[j2][c], p, M))] for c in range(d)]
        exps.append(v)
    D = [[([0] * exps[i] + [1] + [0] * M)[:M] if i == j else list(zero) for j in range(d)] for i in range(d)]
    prod = kM_matmul(kM_matmul(X, D, p, M), Y, p, M)
    ok = prod == orig
    tup = lambda Mx: tuple(tuple(tuple(x) for x in row) for row in Mx)
    order = sorted(range(d), key=lambda i: exps[i])
    if order != list(range(d)):
        raise AssertionError("pivot order should already be ascending")
    return SmithDecompDVR(tup(X), tup(Y), tuple(exps), ok, p, M)


# ---------------------------------------------------------------- determinants


def charpoly(A, add, mul, neg, zero, one) -> list:
    """Characteristic polynomial det(xI - A), highest degree first, division free.

    Works over any commutative ring given by the callables; uses Berkowitz's
    Toeplitz recursion on leading principal submatrices.
    """
    n = len(A)
    poly = [one]
    for k in range(n):
        R = [A[k][j] for j in range(k)]
        C = [A[i][k] for i in range(k)]
        t = [one, neg(A[k][k])]
        vec = C
        for _ in range(k):
            s = zero
            for x, y in zip(R, vec):
                s = add(s, mul(x, y))
            t.append(neg(s))
            vec = [_dot(add, mul, zero, [A[i][j] for j in range(k)], vec) for i in range(k)]
        new = []
        for i in range(k + 2):
            s = zero
            for j in range(min(i, k) + 1):
                if i - j < len(t):
                    s = add(s, mul(t[i - j], poly[j]))
            new.append(s)
        poly = new
    return poly


def _dot(add, mul, zero, xs, ys):
    s = zero
    for x, y in zip(xs, ys):
        s = add(s, mul(x, y))
    return s


def ring_det(ring: PolyQuotient, A) -> tuple:
    """Determinant of a square matrix over a PolyQuotient."""
    n = len(A)
    cp = charpoly(A, ring.add, ring.mul, ring.neg, ring.zero(), ring.one())
    c = cp[n]
    return c if n % 2 == 0 else ring.neg(c)


def zpn_charpoly(A, q: int) -> list:
    add = lambda x, y: (x + y) % q
    mul = lambda x, y: (x * y) % q
    neg = lambda x: (-x) % q
    return charpoly([[int(x) % q for x in row] for row in A], add, mul, neg, 0, 1 % q)


def howell_form(rows, p: int, N: int):
    """Canonical Howell matrix of the row span over Z/p^N."""
    return zpn(p, N).howell(rows).rows
