"""Mod-p Breuil-Kisin modules over k_M = F_p[u]/(u^M).

phi(Mbar) is the k[[u^p]]-span of the columns of Abar; Mbar* is their
k[[u]]-span.  Both are handled as flattened F_p-subspaces of k_M^d, closed
under u^p and u respectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, InsufficientPrecision, UsageError
from .modules import Submodule, intersect, smith_dvr, zpn
from .ring import PolyQuotient


class ModpBK:
    """Mod-p Frobenius matrix Abar (column c = phi(e_c)) with entries in k_M."""

    def __init__(self, A, p: int, M: int, e: int = 1, label: str = ""):
        d = len(A)
        if d == 0 or any(len(r) != d for r in A):
            raise UsageError("mod-p Frobenius matrix must be square and nonempty")
        self.A = tuple(tuple(tuple(int(c) % p for c in (list(x) + [0] * M)[:M]) for x in row) for row in A)
        self.d, self.p, self.M, self.e, self.label = d, p, M, e, label
        self.ring = PolyQuotient.series(p, 1, M)
        self.k = PolyQuotient.series(p, 1, 1)
        self.smith = smith_dvr(self.A, p, M)
        if not self.smith.residual_zero:
            raise ConsistencyError("Smith decomposition over k_M did not certify")

    @classmethod
    def from_bk(cls, m) -> "ModpBK":
        """Reduction mod p of an integral module, read at its effective u-precision."""
        M = m.eff_u
        A = [[[c % m.p for c in x[:M]] for x in row] for row in m.A]
        return cls(A, m.p, M, m.e, m.label)

    @property
    def h(self) -> int:
        """Height with respect to u up to the factor e."""
        return -(-max(self.smith.exponents) // self.e)

    def _need_e1(self):
        if self.e != 1:
            raise UsageError("this construction assumes e = 1")

    def _require_room(self):
        if self.M <= max(self.smith.exponents) + self.p:
            raise InsufficientPrecision(
                f"n_u = {self.M} must exceed max jump + p = {max(self.smith.exponents) + self.p}",
                needed={"n_u": max(self.smith.exponents) + self.p + 1})

    @cached_property
    def columns(self) -> list:
        return [[c for r in range(self.d) for c in self.A[r][col]] for col in range(self.d)]

    @cached_property
    def mstar(self) -> Submodule:
        return Submodule.from_rows(self.ring, self.d, self.columns, step=1)

    @cached_property
    def phi(self) -> Submodule:
        return Submodule.from_rows(self.ring, self.d, self.columns, step=self.p)

    @cached_property
    def full(self) -> Submodule:
        return Submodule.full(self.ring, self.d)

    def u_power(self, n: int) -> Submodule:
        return self.full.scale([0] * n + [1]) if n < self.M else Submodule.zero(self.ring, self.d)

    def fil_mstar(self, n: int) -> Submodule:
        return self.mstar if n <= 0 else intersect(self.mstar, self.u_power(n))

    def fil_phi(self, n: int) -> Submodule:
        return self.phi if n <= 0 else intersect(self.phi, self.u_power(n))

    def digit(self, S: Submodule, n: int) -> Submodule:
        """Subspace of k^d formed by the u^n coefficients of S, for S inside u^n Mbar."""
        Z = zpn(self.p, 1)
        R = np.array(S.basis).reshape(-1, self.d, self.M)
        if n > 0 and R.size and np.any(R[:, :, :n]):
            raise ConsistencyError("digit requested below the u-valuation")
        rows = R[:, :, n] if n < self.M else np.zeros((R.shape[0], self.d), dtype=Z.dtype)
        return Submodule.from_rows(self.k, self.d, rows.astype(Z.dtype), closed=True)

    # ------------------------------------------------------------ jumps

    @cached_property
    def conj(self) -> list:
        """Fil_n of the mod-p conjugate filtration, n = 0..h+1."""
        if self.M < max(self.smith.exponents) + 2:
            raise InsufficientPrecision("n_u too small for the mod-p conjugate filtration",
                                        needed={"n_u": max(self.smith.exponents) + 2})
        return [self.digit(self.fil_mstar(n), n) for n in range(self.h * self.e + 2)]

    def conj_dims(self) -> list:
        return [S.cardinality_log() for S in self.conj]


def jumps(mbar: ModpBK) -> tuple:
    """Smith exponents of Abar, cross-checked against the conjugate gradeds."""
    a = mbar.smith.exponents
    mbar._need_e1()
    dims = mbar.conj_dims()
    grs = [dims[0]] + [dims[n] - dims[n - 1] for n in range(1, len(dims))]
    for n, g in enumerate(grs):
        if g != sum(1 for x in a if x == n):
            raise ConsistencyError(f"jump multiplicity at {n} disagrees with dim gr_{n}")
    return tuple(a)


def multiset_congruence_check(mbar: ModpBK, weights: Sequence[int]) -> dict:
    a = sorted(jumps(mbar))
    w = sorted(weights)
    p = mbar.p
    same = sorted(x % p for x in a) == sorted(x % p for x in w)
    bounded = max(a) <= max(w)
    return {"ok": same and bounded, "jumps": a, "weights": w, "residues_match": same, "bounded": bounded}


# ---------------------------------------------------------------- sub-Hodge


@dataclass(frozen=True)
class SubHodgeFiltration:
    dims: tuple          # dim Fil^n_Hod, n = 0..h+1
    dr_dims: tuple       # dim Fil^n of the mod-p de Rham module
    injective: bool


def sub_hodge(mbar: ModpBK) -> SubHodgeFiltration:
    mbar._need_e1()
    mbar._require_room()
    p, h = mbar.p, mbar.h
    up = [0] * p + [1]
    u1 = [0, 1]
    umstar = mbar.mstar.scale(u1)
    dims, dr, inj = [], [], True
    for n in range(h + 2):
        F = mbar.fil_phi(n)
        low = mbar.fil_phi(n - p).scale(up)
        if not F.contains(low):
            raise ConsistencyError("u^p Fil^(n-p) phi is not inside Fil^n phi")
        dims.append(F.cardinality_log() - low.cardinality_log())
        if intersect(F, umstar) != low:
            inj = False
        G = mbar.fil_mstar(n) + umstar
        dr.append(G.cardinality_log() - umstar.cardinality_log())
    if not inj:
        raise ConsistencyError("sub-Hodge filtration does not inject into the de Rham filtration")
    if dims[0] != mbar.d or dims[-1] != 0:
        raise ConsistencyError("sub-Hodge filtration has wrong endpoints")
    return SubHodgeFiltration(tuple(dims), tuple(dr), inj)


def unaligned_check(mbar: ModpBK) -> dict:
    sh = sub_hodge(mbar)
    bad = [n for n, (a, b) in enumerate(zip(sh.dims, sh.dr_dims)) if a != b]
    out = {"ok": not bad, "sub_hodge": list(sh.dims), "de_rham": list(sh.dr_dims)}
    if bad:
        out["witness_n"] = bad[0]
        return out
    Y = mbar.smith.Y
    in_up = all(c == 0 for row in Y for x in row for i, c in enumerate(x) if i % mbar.p)
    out["Y"] = "k[[u^p]]" if in_up else "criterion-only"
    return out


# ---------------------------------------------------------------- sub-conjugate


@dataclass(frozen=True)
class SubConjPieces:
    """pieces[n][i] = N_{n,i} as a subspace of k^d, for n = 0..h+1 and i < p."""

    pieces: tuple
    conj: tuple
    p: int

    def N(self, n: int, i: int) -> Submodule:
        if n < 0:
            return Submodule.zero(self.conj[0].ring, self.conj[0].d)
        return self.pieces[min(n, len(self.pieces) - 1)][i]


def sub_conjugate_pieces(mbar: ModpBK, crystalline: bool = False) -> tuple:
    """Compute N_{n,i}; returns (pieces, relation report)."""
    mbar._need_e1()
    mbar._require_room()
    p, h = mbar.p, mbar.h
    C = {}
    zero = Submodule.zero(mbar.k, mbar.d)
    for m in range(-p, h + 2):
        C[m] = zero if m < 0 else mbar.digit(mbar.fil_phi(m), m)
    pieces = tuple(tuple(C[n - i] if n - i >= 0 else zero for i in range(p)) for n in range(h + 2))
    conj = tuple(mbar.conj)
    sc = SubConjPieces(pieces, conj, p)
    rel = {"shift_equal": True, "wrap_inclusion": True, "inside_conj": True, "graded_match": True}
    for n in range(h + 2):
        for i in range(p):
            if not conj[n].contains(sc.N(n, i)):
                rel["inside_conj"] = False
        for i in range(1, p):
            if sc.N(n - 1, i - 1) != sc.N(n, i):
                rel["shift_equal"] = False
        if not sc.N(n, 0).contains(sc.N(n - 1, p - 1)):
            rel["wrap_inclusion"] = False
    sh = sub_hodge(mbar)
    hd = list(sh.dims) + [0]
    for n in range(h + 2):
        lhs = sum(sc.N(n, i).cardinality_log() for i in range(p)) - sum(sc.N(n - 1, i).cardinality_log() for i in range(p))
        if lhs != hd[n] - hd[n + 1]:
            rel["graded_match"] = False
    if crystalline:
        inj, bij = True, True
        for n in range(h + 2):
            total = zero
            for i in range(p):
                total = total + sc.N(n, i)
            s = sum(sc.N(n, i).cardinality_log() for i in range(p))
            if total.cardinality_log() != s:
                inj = False
            if total != conj[n]:
                bij = False
        rel["direct_sum_injective"] = inj
        rel["direct_sum_bijective"] = bij
    return sc, rel


# ---------------------------------------------------------------- zip lemma


def _validate_zip(P, Q, Pt, Qt, h):
    if not (len(P) == len(Q) == len(Pt) == len(Qt) == h + 2):
        raise UsageError("dimension sequences must have length h + 2")
    for name, seq, dec in (("P", P, True), ("Q", Q, False), ("P~", Pt, True), ("Q~", Qt, False)):
        for a, b in zip(seq, seq[1:]):
            if (dec and a < b) or (not dec and a > b):
                raise UsageError(f"{name} is not monotone")
    D = P[0]
    if P[-1] != 0 or Q[0] != 0 or Q[-1] != D or Pt[0] != D or Pt[-1] != 0 or Qt[0] != 0 or Qt[-1] != D:
        raise UsageError("filtrations must be concentrated in [0, h] with full ends")
    grP = [P[i] - P[i + 1] for i in range(h + 1)]
    grQ = [Q[i + 1] - Q[i] for i in range(h + 1)]
    grPt = [Pt[i] - Pt[i + 1] for i in range(h + 1)]
    grQt = [Qt[i + 1] - Qt[i] for i in range(h + 1)]
    if grP != grQ:
        raise UsageError("gradeds of P and Q differ in dimension")
    if grPt != grQt:
        raise UsageError("gradeds of the sub-filtrations differ in dimension")
    if any(a > b for a, b in zip(Pt, P)) or any(a > b for a, b in zip(Qt, Q)):
        raise UsageError("sub-filtrations are not contained in the filtrations")


def zip_proof_induction(P, Q, Pt, Qt, h) -> bool:
    """Inductive dimension count, returning whether every step closes.

    Q[i] is dim Q_(i-1), so Q_i sits at index i + 1.
    """
    for i in range(h + 1):
        if Pt[i] != P[i] or Qt[i] != Q[i]:
            return False
        # dim Q~_i - dim Q~_(i-1) = dim P~^i - dim P~^(i+1) >= dim P^i - dim P^(i+1)
        gain_sub = Pt[i] - Pt[i + 1]
        gain = P[i] - P[i + 1]
        if Qt[i] + gain_sub < Q[i] + gain:
            return False
        if Qt[i + 1] != Qt[i] + gain_sub:
            return False
        if Qt[i + 1] > Q[i + 1]:
            return False
        # so dim Q~_i >= dim Q_i, and containment gives equality, which pins P~^(i+1)
        if Qt[i + 1] != Q[i + 1] or Pt[i + 1] != P[i + 1]:
            return False
    return True


def zip_proof_hodge_numbers(P, Q, Pt, Qt, h) -> bool:
    """Second proof: compare the Hodge numbers t of all four filtrations."""
    tP = sum(P[1:h + 1])
    tPt = sum(Pt[1:h + 1])
    D = P[0]
    tQ = h * D - sum(Q[1:h + 1])
    tQt = h * D - sum(Qt[1:h + 1])
    grP = [P[i] - P[i + 1] for i in range(h + 1)]
    grPt = [Pt[i] - Pt[i + 1] for i in range(h + 1)]
    if tP != sum(i * g for i, g in enumerate(grP)) or tPt != sum(i * g for i, g in enumerate(grPt)):
        return False
    if not (tP == tQ and tPt == tQt and tP >= tPt and tQ <= tQt):
        return False
    # t(P) = t(Q) <= t(Q~) = t(P~) <= t(P) forces equality term by term
    return tP == tPt and all(a == b for a, b in zip(P, Pt)) and all(a == b for a, b in zip(Q, Qt))


def zip_check(P_dims, Q_dims, Psub_dims, Qsub_dims, h: int) -> dict:
    """Check the zip lemma on dimension data.

    ``P_dims[i]`` is dim P^i and ``Q_dims[i]`` is dim Q_(i-1), for i = 0..h+1.
    """
    P, Q, Pt, Qt = (list(map(int, x)) for x in (P_dims, Q_dims, Psub_dims, Qsub_dims))
    _validate_zip(P, Q, Pt, Qt, h)
    a = zip_proof_induction(P, Q, Pt, Qt, h)
    b = zip_proof_hodge_numbers(P, Q, Pt, Qt, h)
    return {"conclusion": "coincide" if a and b else "differ", "induction": a, "hodge_numbers": b, "agree": a == b}


def zip_check_spaces(P, Q, Pt, Qt, h: int) -> dict:
    """Zip lemma on actual subspaces: validates inclusions, then checks coincidence."""
    for a, b in zip(Pt, P):
        if not b.contains(a):
            raise UsageError("P~^i is not inside P^i")
    for a, b in zip(Qt, Q):
        if not b.contains(a):
            raise UsageError("Q~_i is not inside Q_i")
    dim = lambda S: S.cardinality_log()
    res = zip_check([dim(x) for x in P], [dim(x) for x in Q], [dim(x) for x in Pt], [dim(x) for x in Qt], h)
    res["spaces_equal"] = all(a == b for a, b in zip(P, Pt)) and all(a == b for a, b in zip(Q, Qt))
    return res


def phi_submodule(mbar: ModpBK) -> Submodule:
    """phi(Mbar) as the u^p-closed span of the columns of Abar."""
    return mbar.phi
