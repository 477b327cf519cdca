"""Sen operators on M_HT: verification, linear solving, and the torsion theorems.

Everything here is linear algebra on the conjugate filtration.  The operator
is supplied or solved for; nothing is built from Galois data.  Matrices act
on column coordinate vectors, so a row vector v maps to v @ Theta.T.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Optional, Sequence

import numpy as np

from .bk import BKModule, CheckResult, reduce_submodule, weak_frobenius_check
from .errors import InsufficientPrecision, UsageError
from .modp import ModpBK, jumps, sub_conjugate_pieces
from .modules import Submodule, saturation, smith_rank, zpn, zpn_charpoly
from .ring import PolyQuotient


@dataclass(frozen=True)
class SenOperator:
    theta: tuple   # d x d residues mod p^N
    a: int
    flavor: str = "crys"

    @classmethod
    def make(cls, theta, m: BKModule, flavor: Optional[str] = None) -> "SenOperator":
        flavor = flavor or m.flavor
        q = m.prec.modulus
        th = tuple(tuple(int(x) % q for x in row) for row in theta)
        if len(th) != m.d or any(len(r) != m.d for r in th):
            raise UsageError("Sen operator must be d x d")
        return cls(th, m.E.a(flavor), flavor)

    def matrix(self, q: int) -> np.ndarray:
        return np.array(self.theta, dtype=object) % q


def _apply(rows: np.ndarray, T: np.ndarray, q: int) -> np.ndarray:
    if rows.shape[0] == 0:
        return rows
    return (rows.astype(object).dot(T.T.astype(object)) % q)


def _image_inside(rows, T, target: Submodule, q: int) -> bool:
    img = _apply(np.asarray(rows), T, q)
    return all(target.member([int(x) for x in r]) for r in img)


def _poly_from_roots(roots: Sequence[int], q: int) -> list:
    poly = [1 % q]
    for r in roots:
        new = poly + [0]
        for i, c in enumerate(poly):
            new[i + 1] = (new[i + 1] - r * c) % q
        poly = new
    return poly


def _matpow_poly(T: np.ndarray, roots, q: int) -> np.ndarray:
    d = T.shape[0]
    out = np.eye(d, dtype=object)
    for r in roots:
        out = (out.dot((T - r * np.eye(d, dtype=object)) % q)) % q
    return out


def _need_weights(m: BKModule):
    if m.declared_weights is None:
        raise UsageError("this check needs declared weights")
    return m.declared_weights


class _Chain:
    """Conjugate filtration reduced to the certified precision N_eff."""

    def __init__(self, m: BKModule):
        Ne = m.N_eff
        if Ne < 1:
            raise InsufficientPrecision("every p-adic digit is lost; raise n_p", needed={"n_p": m.N + m.loss + 1})
        self.N, self.q = Ne, m.p ** Ne
        self.Z = zpn(m.p, Ne)
        if Ne == m.N:
            self.ring = m.ht_ring
            self.pieces = [m.conj(n) for n in range(m.h + 2)]
        else:
            self.ring = PolyQuotient(m.p, Ne, m.ht_ring.modulus)
            self.pieces = [reduce_submodule(m.conj(n), self.ring) for n in range(m.h + 2)]
        self.zero = Submodule.zero(self.ring, m.d)

    def __call__(self, n: int) -> Submodule:
        if n < 0:
            return self.zero
        return self.pieces[min(n, len(self.pieces) - 1)]


def verify_sen(m: BKModule, op: SenOperator) -> dict:
    """Check the filtered Sen clauses (i)-(iv) plus the semisimplicity clause."""
    w = _need_weights(m)
    if m.e != 1:
        raise UsageError("Sen operator checks assume e = 1")
    ch = _Chain(m)
    q, a = ch.q, op.a
    T = op.matrix(q)
    I = np.eye(m.d, dtype=object)
    top = m.h + 1
    res = {"precision": ch.N}
    first_i = first_ii = None
    for n in range(top + 1):
        rows = ch(n).basis
        if first_i is None and not _image_inside(rows, (T - n * a * I) % q, ch(n - 1), q):
            first_i = n
        if first_ii is None and not _image_inside(rows, T, ch(n), q):
            first_ii = n
    res["i_shift"] = {"ok": first_i is None, "first_bad_n": first_i}
    res["ii_graded_scalar"] = {"ok": first_i is None and first_ii is None, "first_bad_n": first_ii}
    if first_i is None and first_ii is not None:
        # (Theta - na) Fil_n inside Fil_(n-1) inside Fil_n forces Theta Fil_n inside Fil_n
        res["implication_consistent"] = False
    else:
        res["implication_consistent"] = True
    cp = zpn_charpoly(T.tolist(), q)
    want = _poly_from_roots([a * r for r in w], q)
    res["iii_charpoly"] = {"ok": cp == want, "charpoly": cp, "expected": want}
    iv_ok, iv_inconclusive = True, False
    mult = {}
    for r in w:
        mult[r] = mult.get(r, 0) + 1
    for n in range(top + 1):
        S = ch(n)
        expected = sum(1 for r in w if r <= n)
        if smith_rank(S) != expected:
            iv_inconclusive = True
            continue
        sat = saturation(S)
        roots = [a * j for j, k in mult.items() if j <= n for _ in range(k)]
        P = _matpow_poly(T, roots, q)
        if _apply(np.asarray(sat.basis), P, q).any():
            iv_ok = False
    res["iv_eigen_filtration"] = {"ok": False if not iv_ok else (None if iv_inconclusive else True)}
    scaled = sorted((a * r) % q for r in w)
    if len(set(scaled)) == len(scaled):
        res["semisimple"] = {"ok": res["iii_charpoly"]["ok"]}
    else:
        res["semisimple"] = {"ok": None, "reason": "eigenvalues collide mod p^N"}
    res["ok"] = all(v.get("ok") is not False for k, v in res.items() if isinstance(v, dict)) and res["implication_consistent"]
    return res


def solve_sen(m: BKModule) -> dict:
    """Solve the linear constraints on Theta over Z/p^N.

    Returns the canonical representative (reduced modulo the homogeneous
    solutions) and the size of the solution space.
    """
    w = _need_weights(m)
    if m.e != 1:
        raise UsageError("solve_sen needs e = 1")
    if not m.crystalline:
        raise UsageError("solve_sen requires the crystalline flag")
    ch = _Chain(m)
    Z, q = ch.Z, ch.q
    d, a = m.d, m.E.a(m.flavor)
    nth = d * d
    blocks = []  # (n, generator row v, target chain rows)
    for n in range(m.h + 2):
        tgt = np.asarray(ch(n - 1).basis)
        for v in ch(n).basis:
            blocks.append((n, [int(x) for x in v], tgt))
    nc = sum(t.shape[0] for _, _, t in blocks)
    U = nth + nc
    eqs, rhs = [], []
    off = nth
    for n, v, tgt in blocks:
        for k in range(d):
            row = [0] * U
            for l in range(d):
                row[k * d + l] = v[l]
            for j in range(tgt.shape[0]):
                row[off + j] = (-int(tgt[j][k])) % q
            eqs.append(row)
            rhs.append((n * a * v[k]) % q)
        off += tgt.shape[0]
    tr = [0] * U
    for k in range(d):
        tr[k * d + k] = 1
    eqs.append(tr)
    rhs.append((a * sum(w)) % q)
    C = np.array(eqs, dtype=object).T % q
    z, ker = Z.solve(C.astype(Z.dtype), rhs)
    if z is None:
        return {"ok": False, "reason": "no operator satisfies the constraints", "dimension": None}
    proj = Z.howell(np.asarray(ker.rows)[:, :nth] if len(ker) else np.zeros((0, nth), dtype=Z.dtype), nth)
    rep, _ = Z.reduce(proj, np.asarray(z)[:nth])
    theta = [[int(rep[k * d + l]) for l in range(d)] for k in range(d)]
    out = {
        "ok": True,
        "theta": theta,
        "dimension": len(proj),
        "log_p_size": sum(ch.N - k for _, k in proj.pivots),
        "precision": ch.N,
        "unique": len(proj) == 0,
    }
    out["verify"] = verify_sen(m, SenOperator.make(theta, m))
    return out


def det_check(m: BKModule, op: SenOperator, top: Optional[int] = None) -> dict:
    """det((Theta - n a) restricted to Fil_m) against prod over r_i <= m of a(r_i - n)."""
    w = _need_weights(m)
    ch = _Chain(m)
    Z, q, a = ch.Z, ch.q, op.a
    T = op.matrix(q)
    top = max(w) if top is None else top
    bad, skipped = [], []
    for mm in range(top + 1):
        S = ch(mm)
        exps, Qinv = Z.smith(np.asarray(S.basis), m.d)
        if any(exps):
            skipped.append(mm)
            continue
        r = len(exps)
        Qm = Z.inv(Qinv)
        for n in range(top + 1):
            if r == 0:
                got = 1 % q
            else:
                img = _apply(np.asarray(Qinv[:r]), (T - n * a * np.eye(m.d, dtype=object)) % q, q)
                coords = (img.dot(np.asarray(Qm).astype(object)) % q)[:, :r]
                got = Z.det(coords.tolist())
            want = prod((a * (ri - n)) for ri in w if ri <= mm) % q
            if got != want:
                bad.append({"m": mm, "n": n, "det": got, "expected": want})
    return {"ok": not bad if not skipped else (False if bad else None), "mismatches": bad, "non_free_m": skipped}


# ---------------------------------------------------------------- theorem checks


def legendre(n: int, p: int) -> int:
    """v_p(n!)."""
    v, x = 0, n
    while x:
        x //= p
        v += x
    return v


def alpha(x: int, weights: Sequence[int], p: int) -> int:
    """Number of weights congruent to x mod p and at most x."""
    return sum(1 for r in weights if r <= x and (x - r) % p == 0)


def _crys_gate(m: BKModule) -> Optional[str]:
    if not m.crystalline:
        return "module is not flagged crystalline"
    if m.e != 1:
        return "e != 1: the eigenvalue argument is vacuous"
    if m.flavor != "crys":
        return "log flavor: the eigenvalue argument is vacuous"
    if m.declared_weights is None:
        return "no declared weights"
    return None


def vanishing_check(m: BKModule) -> CheckResult:
    why = _crys_gate(m)
    if why:
        return CheckResult(None, {"reason": why}, status="not-applicable")
    w, p = m.declared_weights, m.p
    rd = max(w)
    rows, viol = [], []
    for n in range(m.h + 2):
        g = m.graded(n)
        actual = "zero" if g.is_zero else ("torsion-free" if g.torsion_free else "torsion")
        if n >= rd + 1:
            clause, expect = "(1) n > r_d", "zero"
        elif not any(n >= r and (n - r) % p == 0 for r in w):
            clause, expect = "(2) n not in r_i + kp", "zero"
        elif n == rd or not any(n >= r + p and (n - r) % p == 0 for r in w):
            clause, expect = "(3) n not in r_i + kp with k >= 1", "torsion-free"
        else:
            clause, expect = "unconstrained", None
        ok = expect is None or (expect == "zero" and g.is_zero) or (expect == "torsion-free" and g.torsion_free)
        row = {"n": n, "clause": clause, "expected": expect or "-", "actual": actual,
               "invariants": g.as_dict()}
        if expect == "zero":
            row["verdict"] = "forced-zero" if g.is_zero else "violated"
        rows.append(row)
        if not ok:
            viol.append(n)
    alpha_table = {n: alpha(n, w, p) for n in range(m.h + 2)}
    return CheckResult(not viol, {"rows": rows, "violations": viol, "alpha": alpha_table, "precision": m.N_eff})


def torsion_bounds_check(m: BKModule) -> CheckResult:
    why = _crys_gate(m)
    if why:
        return CheckResult(None, {"reason": why}, status="not-applicable")
    w, p, d = m.declared_weights, m.p, m.d
    rd = max(w)
    uniform = legendre(rd - 1, p) if rd >= 1 else 0
    viol, rows = [], []
    for n in range(m.h + 2):
        g = m.graded(n)
        e_bound = min(legendre(n, p), uniform)
        a_n, a_np = alpha(n, w, p), alpha(n - p, w, p)
        gens, tors = g.generators, len(g.torsion)
        row = {"n": n, "exponent": g.exponent, "exp_bound": e_bound, "generators": gens,
               "alpha_n": a_n, "torsion_generators": tors, "alpha_n_minus_p": a_np,
               "free_rank": g.free_rank}
        rows.append(row)
        if g.exponent > e_bound:
            viol.append(("exponent", n))
        if gens > a_n or tors > a_np or gens > d:
            viol.append(("generators", n))
        if g.free_rank != a_n - a_np:
            viol.append(("free rank", n))
    detail = {"rows": rows, "violations": viol, "precision": m.N_eff}
    # conditional clause for weights {0, p+1} in rank 2 without the weak Frobenius shape
    if d == 2 and sorted(w) == [0, p + 1]:
        wf = weak_frobenius_check(m, raise_on_disagree=False)
        if wf.ok and not wf.detail["torsion_free"]:
            gp = m.graded(p)
            cond = gp.free_rank == 0 and gp.torsion == (1,)
            detail["gr_p_is_Fp"] = cond
            if not cond:
                viol.append(("gr_p", p))
    if viol:
        return CheckResult(False, detail)
    if m.N_eff <= uniform:
        return CheckResult(None, detail)
    return CheckResult(True, detail)


# ---------------------------------------------------------------- mod p


def _fp_rank(rows, p: int) -> int:
    A = np.asarray(rows, dtype=object) % p
    if A.size == 0:
        return 0
    return len(zpn(p, 1).howell(A.astype(np.int64), A.shape[1]))


def _kernel_dim(T: np.ndarray, p: int) -> int:
    d = T.shape[0]
    return d - _fp_rank(T, p)


def modp_sen_check(mbar: ModpBK, theta_bar, a: int = 1, weights: Optional[Sequence[int]] = None,
                   determined: bool = True) -> dict:
    """Mod-p clauses for a reduced Sen operator.

    Pass ``determined=False`` when theta_bar is one of several solutions of the
    linear constraints: the p-Griffiths and nilpotency clauses concern the
    actual operator, so they are then reported but not judged.
    """
    p, d = mbar.p, mbar.d
    T = np.array(theta_bar, dtype=object) % p
    I = np.eye(d, dtype=object)
    conj = mbar.conj
    res = {}
    bad = []
    for n in range(len(conj)):
        rows = np.asarray(conj[n].basis)
        prev = conj[n - 1] if n else Submodule.zero(mbar.k, d)
        if not _image_inside(rows, (T - n * a * I) % p, prev, p) or not _image_inside(rows, T, conj[n], p):
            bad.append(n)
    res["containments"] = {"ok": not bad, "bad_n": bad}
    if weights is not None:
        cp = zpn_charpoly(T.tolist(), p)
        res["charpoly"] = {"ok": cp == _poly_from_roots([a * r for r in weights], p)}
    if a % p == 0:
        res["eigen_counts"] = res["p_griffiths"] = res["nilpotency"] = {"ok": None, "status": "not-applicable"}
        res["ok"] = all(v.get("ok") is not False for v in res.values() if isinstance(v, dict))
        return res
    ainv = pow(a, -1, p)
    th = (T * ainv) % p
    b = jumps(mbar)
    counts = {}
    for s in range(p):
        M = np.eye(d, dtype=object)
        for _ in range(d):
            M = (M.dot((th - s * I) % p)) % p
        gdim = _kernel_dim(M, p)
        mu_b = sum(1 for x in b if x % p == s)
        entry = {"generalized_dim": gdim, "mu_B": mu_b}
        ok = gdim == mu_b
        if weights is not None:
            entry["mu_R"] = sum(1 for x in weights if x % p == s)
            ok = ok and gdim == entry["mu_R"]
        entry["ok"] = ok
        counts[s] = entry
    res["eigen_counts"] = {"ok": all(c["ok"] for c in counts.values()), "by_residue": counts}
    sc, rel = sub_conjugate_pieces(mbar)
    pg_bad, nil_bad = [], []
    for n in range(len(conj)):
        for i in range(p):
            N = sc.N(n, i)
            rows = np.asarray(N.basis)
            if rows.shape[0] == 0:
                continue
            shift = (th - ((n - i) % p) * I) % p
            if not _image_inside(rows, shift, sc.N(n - p, i), p):
                pg_bad.append((n, i))
            P = np.eye(d, dtype=object)
            for _ in range(n // p + 1):
                P = (P.dot(shift)) % p
            if _apply(rows, P, p).any():
                nil_bad.append((n, i))
    res["p_griffiths"] = {"ok": not pg_bad, "bad": pg_bad}
    res["nilpotency"] = {"ok": not nil_bad, "bad": nil_bad}
    if not determined:
        for k in ("p_griffiths", "nilpotency"):
            res[k] = {"ok": None, "status": "not-determined", "observed": res[k]["ok"], "bad": res[k]["bad"],
                      "reason": "operator is not pinned down by the linear constraints"}
    res["relations"] = rel
    res["ok"] = all(v.get("ok") is not False for v in res.values() if isinstance(v, dict) and "ok" in v)
    return res
