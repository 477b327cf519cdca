"""Effective Breuil-Kisin modules: height, Nygaard, Hodge and conjugate filtrations.

All submodules in play contain E^{h+2} M, so the engine works in the exact
quotient Q = (Z/p^N)[u]/(E^{h+2}) instead of truncating u-adically.  The
input series are known mod u^{n_u}; their image in Q is well defined once
u^{n_u} vanishes in Q, which is what the precision check enforces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import ConsistencyError, InsufficientPrecision, NotEffective, UsageError
from .modules import (
    GradedInvariants, Submodule, act, intersect, quotient_invariants, ring_det,
    saturation, smith_rank, zpn,
)
from .ring import (
    EisensteinPoly, PolyQuotient, Prec, max_e_adic_order, poly_divmod_monic,
    required_u_precision,
)


@dataclass(frozen=True)
class FiltrationChain:
    """Submodules indexed by n = 0..len-1."""

    pieces: tuple
    direction: str  # "decreasing" or "increasing"

    def __getitem__(self, n):
        return self.pieces[n]

    def __len__(self):
        return len(self.pieces)

    def is_monotone(self) -> bool:
        for a, b in zip(self.pieces, self.pieces[1:]):
            ok = a.contains(b) if self.direction == "decreasing" else b.contains(a)
            if not ok:
                return False
        return True


def reduce_submodule(S: Submodule, ring: PolyQuotient) -> Submodule:
    """Image of S in the same ambient module over a lower p-adic precision."""
    Z = zpn(ring.p, ring.N)
    rows = np.array(S.basis).astype(object) % ring.q
    return Submodule(ring, S.d, S.step, Z.howell(rows.astype(Z.dtype), S.dim))


def _poly_reduce_mod(coeffs, eff, ring: PolyQuotient):
    return ring.reduce([int(c) for c in list(coeffs)[:eff]])


def e_digit_matrix(E: EisensteinPoly, K: int) -> np.ndarray:
    """Matrix sending u-coefficients mod E^K to E-adic digits (index j*e + i for u^i E^j)."""
    e, q = E.e, E.modulus
    D = e * K
    T = np.zeros((D, D), dtype=object)
    g = E.poly()
    for k in range(D):
        f = [0] * k + [1]
        for j in range(K):
            quo, rem = poly_divmod_monic(f, g, q)
            rem = list(rem) + [0] * (e - len(rem))
            for i in range(e):
                T[j * e + i, k] = rem[i]
            f = quo
    return T


class BKModule:
    """An effective Breuil-Kisin module of rank d given by its Frobenius matrix.

    ``A[r][c]`` is the coefficient list (u-power order) of the r-th coordinate
    of phi(e_c).  Data are known mod u^{eff_u}, by default mod u^{n_u}.
    """

    def __init__(self, A, E: EisensteinPoly, prec: Prec, *, eff_u: Optional[int] = None,
                 crystalline: bool = False, weights: Optional[Sequence[int]] = None,
                 flavor: str = "crys", label: str = "", sen_operator=None,
                 h_max: Optional[int] = None):
        if E.p != prec.p or E.n_p != prec.n_p:
            raise UsageError("E and Prec disagree on p or n_p")
        d = len(A)
        if d == 0 or any(len(row) != d for row in A):
            raise UsageError("Frobenius matrix must be square and nonempty")
        if flavor not in ("crys", "log"):
            raise UsageError(f"unknown flavor {flavor!r}")
        q, M = prec.modulus, prec.n_u
        self.A = tuple(tuple(tuple((int(c) % q for c in (list(x) + [0] * M)[:M])) for x in row) for row in A)
        self.d, self.E, self.prec = d, E, prec
        self.p, self.N, self.e = prec.p, prec.n_p, E.e
        self.eff_u = M if eff_u is None else min(eff_u, M)
        self.crystalline = bool(crystalline)
        self.declared_weights = tuple(sorted(int(w) for w in weights)) if weights is not None else None
        self.flavor, self.label = flavor, label
        self.sen_operator = sen_operator
        if self.declared_weights is not None and any(w < 0 for w in self.declared_weights):
            raise UsageError("weights must be >= 0")
        if self.declared_weights is not None and len(self.declared_weights) != d:
            raise UsageError("need exactly d weights")
        if h_max is None:
            h_max = max(4 * d, d * max(self.declared_weights)) if self.declared_weights else 4 * d
        self.h_max = h_max
        self._analyze_det()
        self._find_height()
        if self.declared_weights is not None:
            if self.declared_weights[-1] > self.h:
                raise UsageError(f"largest weight {self.declared_weights[-1]} exceeds height {self.h}")
            if sum(self.declared_weights) != self.s:
                raise UsageError(f"weights sum to {sum(self.declared_weights)} but v_E(det A) = {self.s}")

    # ------------------------------------------------------------ precision

    @property
    def K_max(self) -> int:
        return max_e_adic_order(self.eff_u, self.E)

    def _ring(self, K: int) -> PolyQuotient:
        return PolyQuotient.e_adic(self.E, K)

    def _matrix_in(self, ring: PolyQuotient):
        return [[_poly_reduce_mod(x, self.eff_u, ring) for x in row] for row in self.A]

    def _need(self, K: int, why: str):
        n_u = required_u_precision(K, self.E)
        raise InsufficientPrecision(f"{why}: needs E-adic order {K}, i.e. n_u >= {n_u}", needed={"n_u": n_u})

    def _analyze_det(self):
        K = self.K_max
        if K < 1:
            self._need(1, "input precision too small to read A mod E")
        ring = self._ring(K)
        det = ring_det(ring, self._matrix_in(ring))
        g = self.E.poly()
        f, s = list(det), 0
        while s < K:
            quo, rem = poly_divmod_monic(f, g, ring.q)
            if any(rem):
                break
            f, s = quo, s + 1
        if s >= K:
            self._need(2 * K + 2, "det(A) vanishes modulo the available E-power")
        if f[0] % self.p == 0:
            raise NotEffective("det(A) is not a unit times a power of E")
        self.s = s

    def _columns_flat(self, ring: PolyQuotient):
        A = self._matrix_in(ring)
        return [[c for r in range(self.d) for c in A[r][col]] for col in range(self.d)]

    def _closure_gens(self, ring: PolyQuotient, rows):
        """Rows u^k * v for every v and k < deg, in the order (v, k)."""
        Z = zpn(self.p, self.N)
        R = Z.arr(rows, self.d * ring.D)
        out = []
        X = R
        pieces = [X]
        for _ in range(ring.D - 1):
            X = act(ring, self.d, X, ring.u_matrix)
            pieces.append(X)
        for i in range(R.shape[0]):
            for k in range(ring.D):
                out.append(pieces[k][i])
        return np.array(out, dtype=Z.dtype).reshape(len(out), self.d * ring.D)

    def _combine(self, ring: PolyQuotient, z, count: int):
        """Turn solve coefficients over (v, u^k) generators into ring elements per v."""
        D = ring.D
        return [ring.reduce([int(z[i * D + k]) for k in range(D)]) for i in range(count)]

    def _find_height(self):
        K = self.K_max
        ring = self._ring(K)
        Z = zpn(self.p, self.N)
        gens = self._closure_gens(ring, self._columns_flat(ring))
        span = Z.howell(gens, self.d * ring.D)
        for h in range(0, self.h_max + 1):
            if h > self.s:
                break
            if h + 1 > K:
                self._need(h + 1, "height search")
            Eh = ring.reduce(self.E.power(h))
            ok = True
            for j in range(self.d):
                v = [0] * (self.d * ring.D)
                v[j * ring.D:(j + 1) * ring.D] = Eh
                if not Z.member(span, v):
                    ok = False
                    break
            if ok:
                self.h = h
                if h + 2 > K:
                    self._need(h + 2, "filtrations")
                self.K = h + 2
                self.Q = self._ring(self.K)
                self._witness()
                return
        raise NotEffective(f"no height h <= {self.h_max} satisfies A*B = E^h*I")

    def _witness(self):
        Q, d, Z = self.Q, self.d, zpn(self.p, self.N)
        gens = self._closure_gens(Q, self._columns_flat(Q))
        Eh = Q.reduce(self.E.power(self.h))
        B = [[None] * d for _ in range(d)]
        for j in range(d):
            v = [0] * (d * Q.D)
            v[j * Q.D:(j + 1) * Q.D] = Eh
            z, _ = Z.solve(gens, v)
            if z is None:
                raise ConsistencyError("height witness lost when passing to E^(h+2)")
            col = self._combine(Q, z, d)
            for i in range(d):
                B[i][j] = col[i]
        self.B = tuple(tuple(r) for r in B)

    # ------------------------------------------------------------ chains

    @cached_property
    def A_Q(self):
        return self._matrix_in(self.Q)

    @cached_property
    def full(self) -> Submodule:
        return Submodule.full(self.Q, self.d)

    @cached_property
    def phi_image(self) -> Submodule:
        return Submodule.from_rows(self.Q, self.d, self._columns_flat(self.Q))

    def e_power_full(self, n: int) -> Submodule:
        return self.full.scale(self.Q.reduce(self.E.power(n)))

    @cached_property
    def nygaard(self) -> FiltrationChain:
        pieces = [intersect(self.phi_image, self.e_power_full(n)) for n in range(self.h + 2)]
        if pieces[self.h + 1] != pieces[self.h].scale(self.Q.reduce(self.E.poly())):
            raise ConsistencyError("Fil^(h+1) differs from E*Fil^h")
        return FiltrationChain(tuple(pieces), "decreasing")

    def fil(self, n: int) -> Submodule:
        if n < 0:
            return self.phi_image
        if n <= self.h + 1:
            return self.nygaard[n]
        raise UsageError("index beyond h+1; use E^(n-h) * Fil^h")

    @cached_property
    def hodge_graded(self) -> dict:
        Eq = self.Q.reduce(self.E.poly())
        out = {}
        for n in range(self.h + 2):
            nxt = self.fil(n + 1) if n + 1 <= self.h + 1 else self.fil(self.h + 1).scale(Eq)
            small = nxt + self.fil(n - 1).scale(Eq)
            out[n] = quotient_invariants(self.fil(n), small)
        return out

    @cached_property
    def ht_ring(self) -> PolyQuotient:
        return PolyQuotient(self.p, self.N, self.E.poly())

    @cached_property
    def _digits(self) -> np.ndarray:
        return e_digit_matrix(self.E, self.K)

    def digits(self, rows) -> np.ndarray:
        """E-adic digits of flattened rows of Q^d: shape (n, d, K, e)."""
        R = np.asarray(rows).astype(object)
        n = R.shape[0]
        blocks = R.reshape(n, self.d, self.Q.D)
        out = np.einsum("ncj,ij->nci", blocks, self._digits) % self.Q.q
        return out.reshape(n, self.d, self.K, self.e)

    def divide_to_ht(self, rows, n: int) -> np.ndarray:
        """(v / E^n) mod E for rows v lying in E^n Q^d, as rows of (Z/p^N)^{d e}."""
        R = np.asarray(rows)
        Z = zpn(self.p, self.N)
        if R.shape[0] == 0:
            return np.zeros((0, self.d * self.e), dtype=Z.dtype)
        dg = self.digits(R)
        if n and np.any(dg[:, :, :n, :] % self.Q.q):
            raise ConsistencyError(f"element expected in E^{n}M is not divisible by E^{n}")
        return dg[:, :, n, :].reshape(R.shape[0], self.d * self.e).astype(Z.dtype)

    @cached_property
    def conjugate(self) -> FiltrationChain:
        pieces = []
        for n in range(self.h + 2):
            rows = self.divide_to_ht(self.fil(n).basis, n)
            pieces.append(Submodule.from_rows(self.ht_ring, self.d, rows))
        chain = FiltrationChain(tuple(pieces), "increasing")
        if pieces[self.h] != Submodule.full(self.ht_ring, self.d):
            raise ConsistencyError("Fil_h of the conjugate filtration is not everything")
        return chain

    def conj(self, n: int) -> Submodule:
        if n < 0:
            return Submodule.zero(self.ht_ring, self.d)
        return self.conjugate[min(n, self.h + 1)]

    @cached_property
    def conj_graded(self) -> dict:
        return {n: quotient_invariants(self.conj(n), self.conj(n - 1)) for n in range(self.h + 2)}

    # ------------------------------------------------------------ precision loss

    @cached_property
    def loss(self) -> int:
        """p-adic digits lost by intersecting over Z/p^N instead of Z_p.

        If M/(M* + E^n M) has torsion of exponent t, the filtration computed
        mod p^N agrees with the true one mod p^(N-t) and no further.
        """
        t = 0
        for n in range(1, self.h + 2):
            t = max(t, quotient_invariants(self.full, self.phi_image + self.e_power_full(n)).exponent)
        return t

    @property
    def N_eff(self) -> int:
        return self.N - self.loss

    @cached_property
    def certified_graded(self) -> Optional[dict]:
        """Hodge gradeds as modules over Z/p^N_eff; these are the true gradeds at that precision."""
        Ne = self.N_eff
        if Ne < 1:
            return None
        if Ne == self.N:
            return dict(self.hodge_graded)
        ring = PolyQuotient(self.p, Ne, self.Q.modulus)
        red = {n: reduce_submodule(self.fil(n), ring) for n in range(-1, self.h + 2)}
        Eq = ring.reduce(self.E.poly())
        out = {}
        for n in range(self.h + 2):
            nxt = red[n + 1] if n + 1 <= self.h + 1 else red[self.h + 1].scale(Eq)
            out[n] = quotient_invariants(red[n], nxt + red[n - 1].scale(Eq))
        return out

    def graded(self, n: int) -> GradedInvariants:
        """Certified invariants of gr_n M_HT (equivalently gr^n M_dR)."""
        g = self.certified_graded
        if g is None:
            raise InsufficientPrecision("every p-adic digit is lost; raise n_p", needed={"n_p": self.N + self.loss + 1})
        if n < 0 or n > self.h + 1:
            return GradedInvariants((), 0, self.p, self.N_eff)
        return g[n]

    # ------------------------------------------------------------ weights

    @cached_property
    def derived_weights(self) -> Optional[tuple]:
        """Weights read off the free ranks of the certified gradeds, or None if inconclusive."""
        if self.certified_graded is None:
            return None
        ws = []
        for n, g in self.certified_graded.items():
            if g.free_rank % self.e:
                return None
            ws += [n] * (g.free_rank // self.e)
        return tuple(ws) if len(ws) == self.d else None

    @property
    def weights(self) -> Optional[tuple]:
        return self.declared_weights if self.declared_weights is not None else self.derived_weights

    # ------------------------------------------------------------ de Rham side

    @cached_property
    def dr_ring(self) -> PolyQuotient:
        return self.ht_ring

    def dr_coordinates(self, rows) -> np.ndarray:
        """Coordinates y mod E of elements v = A*y of M*.

        A*z = 0 mod E^K forces z = 0 mod E^(K-h), so y mod E is determined by
        any solution of A*y = v over Q.  The witness B is not used here since
        B*A = E^h need not hold modulo E^K.
        """
        Q, d = self.Q, self.d
        R = np.asarray(rows)
        Z = zpn(self.p, self.N)
        if R.shape[0] == 0:
            return np.zeros((0, d * self.e), dtype=Z.dtype)
        gens = self._closure_gens(Q, self._columns_flat(Q))
        out = np.zeros((R.shape[0], d * Q.D), dtype=object)
        for k, v in enumerate(R):
            z, _ = Z.solve(gens, [int(x) for x in v])
            if z is None:
                raise ConsistencyError("element of Fil is not in the image of A")
            y = self._combine(Q, z, d)
            for i in range(d):
                out[k, i * Q.D:(i + 1) * Q.D] = y[i]
        return self.divide_to_ht(out.astype(Z.dtype), 0)

    @cached_property
    def hodge_dr(self) -> FiltrationChain:
        """Fil^n M_dR inside M_dR ~ (O_K/p^N)^d, n = 0..h+1."""
        pieces = [Submodule.from_rows(self.dr_ring, self.d, self.dr_coordinates(self.fil(n).basis))
                  for n in range(self.h + 2)]
        return FiltrationChain(tuple(pieces), "decreasing")

    # ------------------------------------------------------------ base change

    def base_change(self, U) -> "BKModule":
        """The same module in the basis e*U for a constant U in GL_d(Z/p^N): A -> U^-1 A U."""
        Z = zpn(self.p, self.N)
        Uinv = Z.inv(U)
        if Uinv is None:
            raise UsageError("base change matrix is not invertible")
        q, M, d = self.prec.modulus, self.prec.n_u, self.d
        U = [[int(x) % q for x in row] for row in U]
        Ui = [[int(x) for x in row] for row in Uinv]
        AU = [[[sum(self.A[r][k][t] * U[k][c] for k in range(d)) % q for t in range(M)] for c in range(d)] for r in range(d)]
        new = [[[sum(Ui[r][k] * AU[k][c][t] for k in range(d)) % q for t in range(M)] for c in range(d)] for r in range(d)]
        return BKModule(new, self.E, self.prec, eff_u=self.eff_u, crystalline=self.crystalline,
                        weights=self.declared_weights, flavor=self.flavor, label=self.label,
                        h_max=self.h_max)

    def summary(self) -> dict:
        return {
            "label": self.label, "d": self.d, "p": self.p, "N": self.N, "n_u": self.prec.n_u,
            "eff_u": self.eff_u, "e": self.e, "height": self.h, "v_E_det": self.s,
            "weights": list(self.weights) if self.weights is not None else None,
        }


# ---------------------------------------------------------------- checks


@dataclass
class CheckResult:
    ok: Optional[bool]  # None = inconclusive or not applicable
    detail: dict = field(default_factory=dict)
    status: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = {True: "pass", False: "fail", None: "inconclusive-at-precision"}[self.ok]


def matching_check(m: BKModule) -> CheckResult:
    for n in range(m.h + 2):
        a, b = m.hodge_graded[n], m.conj_graded[n]
        if a != b:
            return CheckResult(False, {"n": n, "gr_dR": a.as_dict(), "gr_HT": b.as_dict()})
    return CheckResult(True, {"n_range": [0, m.h + 1]})


def chain_check(m: BKModule) -> CheckResult:
    ny = m.nygaard
    if not ny.is_monotone():
        return CheckResult(False, {"chain": "nygaard"})
    if not m.conjugate.is_monotone():
        return CheckResult(False, {"chain": "conjugate"})
    if ny[0] != m.phi_image or ny[m.h + 1] != ny[m.h].scale(m.Q.reduce(m.E.poly())):
        return CheckResult(False, {"chain": "nygaard endpoints"})
    if ny[m.h] != m.e_power_full(m.h):
        return CheckResult(False, {"chain": "Fil^h != E^h M"})
    if m.certified_graded is None:
        return CheckResult(None, {"reason": "all digits lost", "loss": m.loss})
    total = sum(g.free_rank for g in m.certified_graded.values())
    if total != m.d * m.e:
        return CheckResult(None, {"free_rank_total": total, "expected": m.d * m.e})
    return CheckResult(True, {"free_rank_total": total})


def weight_consistency(m: BKModule) -> CheckResult:
    dw = m.derived_weights
    if dw is None:
        return CheckResult(None, {"derived": None})
    if m.declared_weights is None:
        return CheckResult(True, {"derived": list(dw)})
    ok = tuple(dw) == m.declared_weights
    return CheckResult(ok, {"derived": list(dw), "declared": list(m.declared_weights)})


# ---------------------------------------------------------------- adapted bases


def _mult(weights, n):
    return sum(1 for w in weights if w == n)


def greedy_adapted(m: BKModule, weights) -> Optional[list]:
    """Try to build an adapted basis of M* from lifts of the conjugate filtration.

    Returns the list of (weight, flattened row) pairs if it verifies, else None.
    """
    if m.e != 1:
        raise UsageError("adapted bases are implemented for e = 1")
    Z = zpn(m.p, m.N)
    chosen, tags = [], []
    for n in range(m.h + 1):
        need = _mult(weights, n)
        got = 0
        for row in m.conj(n).basis:
            if got == need:
                break
            if Z.rank_mod_p(chosen + [list(row)]) > len(chosen):
                chosen.append([int(x) for x in row])
                tags.append(n)
                got += 1
        if got != need:
            return None
        span = Submodule.from_rows(m.ht_ring, m.d, chosen if chosen else np.zeros((0, m.d), dtype=Z.dtype))
        if span != m.conj(n):
            return None
    if len(chosen) != m.d:
        return None
    basis = []
    for r, f in zip(tags, chosen):
        G = np.array(m.fil(r).basis)
        z, _ = Z.solve(m.divide_to_ht(G, r), f)
        if z is None:
            return None
        v = (np.array(z, dtype=object).dot(G.astype(object))) % m.Q.q
        basis.append((r, v.astype(Z.dtype)))
    for n in range(m.h + 2):
        rows = [act(m.Q, m.d, v.reshape(1, -1), m.Q.mult_matrix(m.Q.reduce(m.E.power(max(n - r, 0)))))[0]
                for r, v in basis]
        if Submodule.from_rows(m.Q, m.d, rows) != m.fil(n):
            return None
    return basis


def adapted_basis(m: BKModule) -> Optional[list]:
    """Adapted basis of M* when every conjugate graded is torsion free; None otherwise.

    Each entry is (r_i, e_i) with e_i given as d ring elements of Q.
    """
    if m.e != 1 or m.weights is None:
        return None
    if m.derived_weights is None or not all(m.graded(n).torsion_free for n in range(m.h + 2)):
        return None
    b = greedy_adapted(m, m.weights)
    if b is None:
        raise ConsistencyError("gradeds are torsion free but the adapted basis did not verify")
    return [(r, _unflat(m, v)) for r, v in b]


def _unflat(m: BKModule, v):
    D = m.Q.D
    return [tuple(int(x) for x in v[i * D:(i + 1) * D]) for i in range(m.d)]


def _mat_mul(ring: PolyQuotient, X, Y):
    n, k, c = len(X), len(Y), len(Y[0])
    out = []
    for i in range(n):
        row = []
        for j in range(c):
            s = ring.zero()
            for t in range(k):
                s = ring.add(s, ring.mul(X[i][t], Y[t][j]))
            row.append(s)
        out.append(row)
    return out


def decompose_from_basis(m: BKModule, basis) -> Optional[dict]:
    """A = X Lambda Y with X, Y invertible, built from an adapted basis (e = 1)."""
    Q, d, Z = m.Q, m.d, zpn(m.p, m.N)
    cols = [_unflat(m, v) for _, v in basis]
    X = [[None] * d for _ in range(d)]
    for i, (r, _) in enumerate(basis):
        gr = m.E.power(r)
        for k in range(d):
            quo, rem = poly_divmod_monic(list(cols[i][k]), gr, Q.q)
            if any(rem):
                return None
            X[k][i] = Q.reduce(quo)
    gens = m._closure_gens(Q, [np.asarray(v) for _, v in basis])
    Y = [[None] * d for _ in range(d)]
    Aflat = m._columns_flat(Q)
    for j in range(d):
        z, _ = Z.solve(gens, Aflat[j])
        if z is None:
            return None
        col = m._combine(Q, z, d)
        for i in range(d):
            Y[i][j] = col[i]
    Lam = [[Q.reduce(m.E.power(basis[i][0])) if i == j else Q.zero() for j in range(d)] for i in range(d)]
    prod = _mat_mul(Q, _mat_mul(Q, X, Lam), Y)
    detX, detY = ring_det(Q, X), ring_det(Q, Y)
    ok = prod == [list(r) for r in m.A_Q] and Q.is_unit(detX) and Q.is_unit(detY)
    return {"X": X, "Y": Y, "ok": ok}


def weak_frobenius_check(m: BKModule, raise_on_disagree: bool = True) -> CheckResult:
    """Cross-check torsion freeness, adapted-basis existence and matrix shape."""
    if m.e != 1:
        return CheckResult(None, {"reason": "e != 1"}, status="not-applicable")
    w = m.derived_weights
    if w is None:
        return CheckResult(None, {"reason": "weights undetermined"})
    v4 = all(m.graded(n).torsion_free for n in range(m.h + 2))
    basis = greedy_adapted(m, w)
    v2 = basis is not None
    v3 = False
    if basis is not None:
        dec = decompose_from_basis(m, basis)
        v3 = bool(dec and dec["ok"])
    detail = {"torsion_free": v4, "adapted_basis": v2, "decomposable": v3}
    agree = v2 == v3 == v4
    detail["agree"] = agree
    if not agree and raise_on_disagree:
        raise ConsistencyError(f"weak Frobenius verdicts disagree: {detail}")
    return CheckResult(agree, detail)


# ---------------------------------------------------------------- torsion crosscheck


def _exp_in(big: Submodule, small: Submodule) -> int:
    return quotient_invariants(big, small).exponent


def torsion_crosscheck(m: BKModule) -> CheckResult:
    """Saturation cokernels against the torsion exponents of the gradeds."""
    w = m.derived_weights
    if w is None:
        return CheckResult(None, {"reason": "weights undetermined"})
    if m.loss:
        return CheckResult(None, {"reason": "precision loss", "loss": m.loss})
    e, rd = m.e, max(w)
    n_dr = max((g.exponent for g in m.hodge_graded.values()), default=0)
    n_ht = max((g.exponent for g in m.conj_graded.values()), default=0)
    viol = []
    cf, cg = {}, {}
    for i in range(m.h + 2):
        F = m.hodge_dr[i]
        if smith_rank(F) != e * sum(1 for r in w if r >= i):
            return CheckResult(None, {"reason": "rank loss at precision", "i": i})
        cf[i] = _exp_in(saturation(F), F)
        G = m.conj(i)
        if smith_rank(G) != e * sum(1 for r in w if r <= i):
            return CheckResult(None, {"reason": "rank loss at precision", "i": i})
        cg[i] = _exp_in(saturation(G), G)
    cg[-1] = 0
    for i in range(m.h + 2):
        if cf[i] > i * n_dr:
            viol.append(("coker f", i, cf[i], i * n_dr))
        if i <= rd and cg[i] > (rd - i) * n_ht:
            viol.append(("coker g", i, cg[i], (rd - i) * n_ht))
    for i in range(m.h + 1):
        if m.hodge_graded[i].exponent > max(cf[i], cf[i + 1]):
            viol.append(("gr^i from f", i))
        if m.conj_graded[i].exponent > max(cg[i - 1], cg[i]):
            viol.append(("gr_i from g", i))
    detail = {"coker_f": [cf[i] for i in range(m.h + 2)],
              "coker_g": [cg[i] for i in range(m.h + 2)],
              "n": n_dr, "violations": viol}
    return CheckResult(not viol, detail)


def base_change_check(m: BKModule, U) -> CheckResult:
    m2 = m.base_change(U)
    for n in range(m.h + 2):
        if m.hodge_graded[n] != m2.hodge_graded[n] or m.conj_graded[n] != m2.conj_graded[n]:
            return CheckResult(False, {"n": n})
    if m2.h != m.h:
        return CheckResult(False, {"height": [m.h, m2.h]})
    return CheckResult(True, {})


# ---------------------------------------------------------------- functional entry points


def minimal_height(A, E: EisensteinPoly, prec: Prec, h_max: Optional[int] = None) -> tuple:
    """Smallest h with A B = E^h I solvable, and a witness B over (Z/p^N)[u]/E^(h+2)."""
    m = BKModule(A, E, prec, h_max=h_max)
    return m.h, m.B


def phi_image(m: BKModule) -> Submodule:
    return m.phi_image


def nygaard(m: BKModule) -> FiltrationChain:
    return m.nygaard


def hodge_graded(m: BKModule) -> dict:
    return m.hodge_graded


def conjugate_filtration(m: BKModule) -> FiltrationChain:
    return m.conjugate
