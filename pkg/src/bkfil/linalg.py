"""Row-style normal forms over the chain ring Z/p^N.

Vectors are rows.  ``howell`` returns the canonical generating matrix of a row
span; everything else (membership, intersection, kernels, affine solving) is
built on it.  ``smith`` returns the invariant factors together with the column
transform, which also gives saturations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HowellForm:
    """Canonical basis: rows sorted by pivot column, pivot = p^k, entries above pivots reduced."""

    rows: np.ndarray
    pivots: tuple  # (column, k) per row
    ncols: int

    def key(self) -> tuple:
        return tuple(tuple(int(x) for x in r) for r in self.rows)

    def __len__(self):
        return len(self.pivots)


class Zpn:
    """Linear algebra over Z/p^N."""

    def __init__(self, p: int, N: int):
        self.p, self.N, self.q = p, N, p ** N
        self.dtype = np.int64 if self.q * self.q < 2 ** 62 else object
        self.pows = [p ** k for k in range(N + 1)]

    def arr(self, rows, ncols: int | None = None) -> np.ndarray:
        if isinstance(rows, np.ndarray):
            a = rows.astype(self.dtype, copy=True)
        else:
            rows = list(rows)
            if rows and not hasattr(rows[0], "__len__"):
                rows = [rows]
            rows = [list(r) for r in rows]
            if not rows:
                return np.zeros((0, ncols or 0), dtype=self.dtype)
            a = np.array([[int(x) for x in r] for r in rows], dtype=self.dtype)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if ncols is not None and a.shape[1] != ncols:
            if a.shape[0] == 0:
                return np.zeros((0, ncols), dtype=self.dtype)
            raise ValueError("column count mismatch")
        return a % self.q

    def val(self, x: np.ndarray) -> np.ndarray:
        """Valuations of a vector of residues (zeros get N)."""
        v = np.zeros(len(x), dtype=np.int64)
        for k in range(1, self.N + 1):
            v += (x % self.pows[k] == 0)
        return v

    def howell(self, rows, ncols: int | None = None) -> HowellForm:
        A = self.arr(rows, ncols)
        c = A.shape[1]
        q, N = self.q, self.N
        act = A[np.any(A != 0, axis=1)]
        out, piv = [], []
        for col in range(c):
            if act.shape[0] == 0:
                break
            x = act[:, col]
            nz = np.nonzero(x)[0]
            if nz.size == 0:
                continue
            vals = self.val(x[nz])
            j = int(nz[int(np.argmin(vals))])
            k = int(vals.min())
            pk = self.pows[k]
            inv = pow(int(act[j, col]) // pk, -1, q)
            prow = (act[j] * inv) % q
            rest = np.delete(act, j, axis=0)
            if rest.shape[0]:
                f = rest[:, col] // pk
                rest = (rest - np.outer(f, prow)) % q
            if k > 0:
                extra = (prow * self.pows[N - k]) % q
                rest = np.vstack([rest, extra[None, :]])
            act = rest[np.any(rest != 0, axis=1)]
            out.append(prow)
            piv.append((col, k))
        H = np.array(out, dtype=self.dtype).reshape(len(out), c)
        for t, (col, k) in enumerate(piv):
            if t:
                f = H[:t, col] // self.pows[k]
                H[:t] = (H[:t] - np.outer(f, H[t])) % q
        H.setflags(write=False)
        return HowellForm(H, tuple(piv), c)

    def reduce(self, H: HowellForm, v) -> tuple:
        """Canonical coset representative of v modulo span(H), and success flag for membership."""
        v = self.arr(v, H.ncols)[0]
        member = True
        for t, (col, k) in enumerate(H.pivots):
            pk = self.pows[k]
            x = int(v[col])
            if x % pk:
                member = False
            f = x // pk
            if f:
                v = (v - f * H.rows[t]) % self.q
        if v.any():
            member = False
        return v, member

    def member(self, H: HowellForm, v) -> bool:
        return self.reduce(H, v)[1]

    def contains(self, big: HowellForm, small: HowellForm) -> bool:
        return all(self.member(big, r) for r in small.rows)

    def sum(self, *forms: HowellForm) -> HowellForm:
        n = forms[0].ncols
        rows = [f.rows for f in forms if len(f)]
        if not rows:
            return self.howell(np.zeros((0, n), dtype=self.dtype), n)
        return self.howell(np.vstack(rows), n)

    def intersect(self, a: HowellForm, b: HowellForm) -> HowellForm:
        n = a.ncols
        if len(a) == 0 or len(b) == 0:
            return self.howell(np.zeros((0, n), dtype=self.dtype), n)
        top = np.hstack([a.rows, a.rows])
        bot = np.hstack([b.rows, np.zeros_like(b.rows)])
        H = self.howell(np.vstack([top, bot]), 2 * n)
        keep = [t for t, (col, _) in enumerate(H.pivots) if col >= n]
        return self.howell(H.rows[keep, n:] if keep else np.zeros((0, n), dtype=self.dtype), n)

    def solve(self, gens, target):
        """Find z with sum_j z_j gens[j] = target.

        Returns ``(z, kernel)`` where kernel is the Howell form of all relations
        among the generators, or ``(None, kernel)`` when no solution exists.
        """
        G = self.arr(gens)
        r, n = G.shape
        aug = np.hstack([G, np.eye(r, dtype=self.dtype)])
        H = self.howell(aug, n + r)
        v = np.concatenate([self.arr(target, n)[0], np.zeros(r, dtype=self.dtype)])
        for t, (col, k) in enumerate(H.pivots):
            if col >= n:
                break
            pk = self.pows[k]
            x = int(v[col])
            if x % pk:
                return None, self._kernel(H, n, r)
            f = x // pk
            if f:
                v = (v - f * H.rows[t]) % self.q
        if v[:n].any():
            return None, self._kernel(H, n, r)
        return (-v[n:]) % self.q, self._kernel(H, n, r)

    def _kernel(self, H: HowellForm, n: int, r: int) -> HowellForm:
        keep = [t for t, (col, _) in enumerate(H.pivots) if col >= n]
        rows = H.rows[keep, n:] if keep else np.zeros((0, r), dtype=self.dtype)
        return self.howell(rows, r)

    def kernel(self, gens) -> HowellForm:
        """Relations among the rows of ``gens``."""
        G = self.arr(gens)
        r, n = G.shape
        H = self.howell(np.hstack([G, np.eye(r, dtype=self.dtype)]), n + r)
        return self._kernel(H, n, r)

    def smith(self, rows, ncols: int | None = None):
        """Invariant-factor exponents of the row span plus the inverse column transform.

        Returns ``(exps, Qinv)`` with rowspan(rows) = rowspan(diag(p^exps) @ Qinv[:len(exps)]).
        Positions where the factor vanishes are omitted from ``exps``.
        """
        A = self.arr(rows, ncols)
        r, c = A.shape
        q = self.q
        Qinv = np.eye(c, dtype=self.dtype)
        exps = []
        for t in range(min(r, c)):
            sub = A[t:, t:]
            nzr, nzc = np.nonzero(sub)
            if nzr.size == 0:
                break
            vals = self.val(sub[nzr, nzc])
            i = int(np.argmin(vals))
            k = int(vals[i])
            ri, ci = int(nzr[i]) + t, int(nzc[i]) + t
            if ri != t:
                A[[t, ri]] = A[[ri, t]]
            if ci != t:
                A[:, [t, ci]] = A[:, [ci, t]]
                Qinv[[t, ci]] = Qinv[[ci, t]]
            pk = self.pows[k]
            inv = pow(int(A[t, t]) // pk, -1, q)
            A[t] = (A[t] * inv) % q
            if t + 1 < r:
                f = A[t + 1:, t] // pk
                A[t + 1:] = (A[t + 1:] - np.outer(f, A[t])) % q
            if t + 1 < c:
                f = A[t, t + 1:] // pk
                A[:, t + 1:] = (A[:, t + 1:] - np.outer(A[:, t], f)) % q
                Qinv[t] = (Qinv[t] + f @ Qinv[t + 1:]) % q
            exps.append(k)
        return exps, Qinv

    def det(self, M) -> int:
        """Determinant of a square matrix via fraction-free elimination on integer lifts."""
        a = [[int(x) for x in row] for row in M]
        n = len(a)
        if n == 0:
            return 1 % self.q
        sign, prev = 1, 1
        for k in range(n - 1):
            if a[k][k] == 0:
                sw = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
                if sw is None:
                    return 0
                a[k], a[sw] = a[sw], a[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return (sign * a[n - 1][n - 1]) % self.q

    def inv(self, M):
        """Inverse of a square matrix, or None when it is singular mod p."""
        A = self.arr(M)
        n = A.shape[0]
        aug = np.hstack([A, np.eye(n, dtype=self.dtype)])
        H = self.howell(aug, 2 * n)
        if [c for c, _ in H.pivots[:n]] != list(range(n)) or any(k for _, k in H.pivots[:n]):
            return None
        return np.array(H.rows[:n, n:])

    def rank_mod_p(self, rows) -> int:
        A = self.arr(rows) % self.p
        return len(Zpn(self.p, 1).howell(A, A.shape[1]))
