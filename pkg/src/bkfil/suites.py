"""Suite runner: apply groups of checks to a list of modules and collect a Report.

Suites:
  universal    holds for every effective module (fuzz included)
  crystalline  theorem checks, run only on modules flagged crystalline
  modp         mod-p jumps, sub-Hodge and sub-conjugate structure
  sen          Sen operator solving and verification (flagged, e = 1)
  all          everything above
"""

from __future__ import annotations

import random
from typing import Callable

from . import bk, modp, sen
from .corpus import random_gl
from .errors import BKError, ConsistencyError, InsufficientPrecision, NotEffective, UsageError
from .report import CheckRecord, Report, jsonable
from .spec_io import ModuleSpec, from_dict

SUITES = ("universal", "crystalline", "modp", "sen", "all")


def _cr(res: bk.CheckResult):
    return res.status, res.detail


def _bool(ok, detail):
    return ({True: "pass", False: "fail", None: "inconclusive-at-precision"}[ok], detail)


def _na(reason: str):
    return "not-applicable", {"reason": reason}


class _Ctx:
    """Lazily built objects shared by the checks of one module."""

    def __init__(self, spec: ModuleSpec, m: bk.BKModule, seed: int, index: int):
        self.spec, self.m = spec, m
        self.rng = random.Random(f"{seed}:{index}")
        self._mbar = None
        self._sol = None

    @property
    def mbar(self) -> modp.ModpBK:
        if self._mbar is None:
            self._mbar = modp.ModpBK.from_bk(self.m)
        return self._mbar

    @property
    def solved(self) -> dict:
        if self._sol is None:
            self._sol = sen.solve_sen(self.m)
        return self._sol

    def operator(self):
        if self.spec.sen_operator is not None:
            return sen.SenOperator.make(self.spec.sen_operator, self.m)
        sol = self.solved
        return sen.SenOperator.make(sol["theta"], self.m) if sol["ok"] else None


def _flag_gate(c: _Ctx):
    m = c.m
    if not m.crystalline:
        return "module is not flagged crystalline"
    if m.declared_weights is None:
        return "no declared weights"
    return None


def _sen_gate(c: _Ctx):
    why = _flag_gate(c)
    if why:
        return why
    if c.m.e != 1:
        return "e != 1"
    return None


# ---------------------------------------------------------------- universal


def c_matching(c):
    return _cr(bk.matching_check(c.m))


def c_chain(c):
    return _cr(bk.chain_check(c.m))


def c_base_change(c):
    U = random_gl(c.rng, c.m.p, c.m.N, c.m.d)
    st, det = _cr(bk.base_change_check(c.m, U))
    return st, dict(det, U=U)


def c_sub_conjugate(c):
    if c.m.e != 1:
        return _na("e != 1")
    _, rel = modp.sub_conjugate_pieces(c.mbar, crystalline=c.m.crystalline)
    return _bool(all(rel.values()), rel)


def c_weak_frobenius(c):
    return _cr(bk.weak_frobenius_check(c.m, raise_on_disagree=False))


# ---------------------------------------------------------------- crystalline


def _gated(fn):
    def run(c):
        why = _flag_gate(c)
        if why:
            return _na(why)
        return fn(c)
    run.__name__ = fn.__name__
    return run


@_gated
def c_weights(c):
    return _cr(bk.weight_consistency(c.m))


@_gated
def c_vanishing(c):
    return _cr(sen.vanishing_check(c.m))


@_gated
def c_torsion_bounds(c):
    return _cr(sen.torsion_bounds_check(c.m))


@_gated
def c_multiset(c):
    if c.m.e != 1:
        return _na("e != 1")
    r = modp.multiset_congruence_check(c.mbar, c.m.declared_weights)
    return _bool(r["ok"], r)


@_gated
def c_unaligned(c):
    if c.m.e != 1:
        return _na("e != 1")
    r = modp.unaligned_check(c.mbar)
    return _bool(r["ok"], r)


c_weak_frobenius_flagged = _gated(c_weak_frobenius)


@_gated
def c_torsion_crosscheck(c):
    return _cr(bk.torsion_crosscheck(c.m))


# ---------------------------------------------------------------- modp


def c_jumps(c):
    if c.m.e != 1:
        return _na("e != 1")
    return "pass", {"jumps": list(modp.jumps(c.mbar))}


def c_sub_hodge(c):
    if c.m.e != 1:
        return _na("e != 1")
    sh = modp.sub_hodge(c.mbar)
    return "pass", {"sub_hodge": list(sh.dims), "de_rham": list(sh.dr_dims)}


def c_unaligned_info(c):
    if c.m.e != 1:
        return _na("e != 1")
    r = modp.unaligned_check(c.mbar)
    if not c.m.crystalline:
        return "not-applicable", dict(r, reason="no crystallinity claim; result is informational")
    return _bool(r["ok"], r)


# ---------------------------------------------------------------- sen


def _sen_gated(fn):
    def run(c):
        why = _sen_gate(c)
        if why:
            return _na(why)
        return fn(c)
    run.__name__ = fn.__name__
    return run


@_sen_gated
def c_solve_sen(c):
    sol = c.solved
    if not sol["ok"]:
        return "fail", dict(sol, error="assertion-refuted-or-bug")
    return _bool(sol["verify"]["ok"], sol)


@_sen_gated
def c_verify_sen(c):
    op = c.operator()
    if op is None:
        return "fail", {"error": "no operator available"}
    r = sen.verify_sen(c.m, op)
    return _bool(r["ok"], r)


@_sen_gated
def c_det(c):
    op = c.operator()
    if op is None:
        return "fail", {"error": "no operator available"}
    r = sen.det_check(c.m, op)
    return _bool(r["ok"], r)


@_sen_gated
def c_modp_sen(c):
    op = c.operator()
    if op is None:
        return "fail", {"error": "no operator available"}
    th = [[x % c.m.p for x in row] for row in op.theta]
    determined = c.spec.sen_operator is not None or c.solved["unique"]
    r = sen.modp_sen_check(c.mbar, th, op.a % c.m.p, c.m.declared_weights, determined=determined)
    return _bool(r["ok"], r)


CHECKS = {
    "universal": [("matching", c_matching), ("chains", c_chain), ("base-change", c_base_change),
                  ("sub-conjugate", c_sub_conjugate), ("weak-frobenius-agreement", c_weak_frobenius)],
    "crystalline": [("weights", c_weights), ("vanishing", c_vanishing), ("torsion-bounds", c_torsion_bounds),
                    ("multiset-congruence", c_multiset), ("unaligned", c_unaligned),
                    ("weak-frobenius", c_weak_frobenius_flagged), ("torsion-crosscheck", c_torsion_crosscheck)],
    "modp": [("jumps", c_jumps), ("sub-hodge", c_sub_hodge), ("sub-conjugate", c_sub_conjugate),
             ("unaligned", c_unaligned_info)],
    "sen": [("solve-sen", c_solve_sen), ("verify-sen", c_verify_sen), ("det-lemma", c_det),
            ("modp-sen", c_modp_sen)],
}


def checks_for(suite: str) -> list:
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
    if suite != "all":
        return CHECKS[suite]
    seen, out = set(), []
    for s in ("universal", "crystalline", "modp", "sen"):
        for name, fn in CHECKS[s]:
            if name not in seen:
                seen.add(name)
                out.append((name, fn))
    return out


def _precision(m: bk.BKModule) -> dict:
    out = {"n_p": m.N, "n_u": m.prec.n_u}
    try:
        out["N_eff"] = m.N_eff
    except BKError:
        pass
    return out


def _run_one(name: str, fn: Callable, ctx: _Ctx):
    try:
        return fn(ctx)
    except ConsistencyError as exc:
        return "fail", {"error": "assertion-refuted-or-bug", "message": str(exc)}
    except InsufficientPrecision as exc:
        return "inconclusive-at-precision", {"reason": str(exc), "needed": exc.needed}
    except UsageError as exc:
        return "not-applicable", {"reason": str(exc)}


def run_suite(modules, suite: str, seed: int = 0, build_kw: dict | None = None) -> Report:
    """Run a suite over ModuleSpec objects or raw JSON records; records keep input order."""
    checks = checks_for(suite)
    rep = Report(suite)
    for i, item in enumerate(modules):
        label = ""
        try:
            spec = item if isinstance(item, ModuleSpec) else from_dict(item)
            label = spec.label
            m = spec.build(**(build_kw or {}))
        except InsufficientPrecision as exc:
            rep.add(CheckRecord(label or f"#{i}", i, "build", "inconclusive-at-precision",
                                {"reason": str(exc), "needed": exc.needed}))
            continue
        except (UsageError, NotEffective) as exc:
            rep.errors.append({"index": i, "label": label, "message": f"{type(exc).__name__}: {exc}"})
            continue
        ctx = _Ctx(spec, m, seed, i)
        prec = _precision(m)
        for name, fn in checks:
            verdict, detail = _run_one(name, fn, ctx)
            rep.add(CheckRecord(label or f"#{i}", i, name, verdict, jsonable(detail), prec))
    return rep
