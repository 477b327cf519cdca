"""Command-line driver.

Exit codes: 0 all pass, 1 some check failed, 2 usage or parse error,
3 inconclusive results present while --strict is set.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import modp, sen
from .bk import BKModule
from .errors import BKError, InsufficientPrecision, NotEffective, UsageError
from .report import jsonable
from .spec_io import dumps, emit, from_dict, load
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--strict", action="store_true", help="exit 3 when any result is inconclusive")
    c.add_argument("--prec-np", type=int, default=None, help="override p-adic precision n_p")
    c.add_argument("--prec-nu", type=int, default=None, help="override u-adic precision n_u")
    c.add_argument("--format", choices=("text", "json"), default="text")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = _Parser(prog="bkfil", description="Filtrations and gradeds of effective Frobenius modules.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub.add_parser("analyze", parents=[common], help="filtrations and gradeds table")
    p.add_argument("file")
    p = sub.add_parser("modp", parents=[common], help="mod-p jumps and sub-Hodge data")
    p.add_argument("file")
    p = sub.add_parser("check", parents=[common], help="run a check suite")
    p.add_argument("file")
    p.add_argument("--suite", choices=SUITES, default="universal")
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("corpus", parents=[common], help="generate corpus module files")
    p.add_argument("--kind", choices=corpus_mod.KINDS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory (stdout if omitted)")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--max-weight", type=int, default=None)
    p.add_argument("--d", type=int, default=2)
    p = sub.add_parser("sen", parents=[common], help="verify or solve Sen operators")
    p.add_argument("action", choices=("verify", "solve"))
    p.add_argument("file")
    return ap


def _specs(args) -> list:
    out = []
    for rec in load(args.file):
        s = from_dict(rec)
        if args.prec_np is not None or args.prec_nu is not None:
            s = s.with_precision(args.prec_np, args.prec_nu)
        out.append(s)
    return out


def _write(text: str):
    sys.stdout.write(text)


def _graded_table(m: BKModule) -> str:
    lines = [f"module {m.label or '-'}: d={m.d} p={m.p} n_p={m.N} n_u={m.prec.n_u} e={m.e} "
             f"height={m.h} v_E(det)={m.s} loss={m.loss} N_eff={m.N_eff}",
             f"weights: {list(m.weights) if m.weights is not None else 'undetermined'}"]
    head = ("n", "log_p|Fil_n|", "gr^n M_dR", "gr_n M_HT", "certified")
    rows = []
    for n in range(m.h + 2):
        cert = str(m.graded(n)) if m.certified_graded is not None else "lost"
        rows.append((str(n), str(m.conj(n).cardinality_log()),
                     str(m.hodge_graded[n]), str(m.conj_graded[n]), cert))
    w = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(head)]
    fmt = lambda r: "  ".join(s.ljust(x) for s, x in zip(r, w)).rstrip()
    lines += [fmt(head), fmt(tuple("-" * x for x in w))] + [fmt(r) for r in rows]
    return "\n".join(lines) + "\n"


def _analyze_dict(m: BKModule) -> dict:
    out = m.summary()
    out.update({"loss": m.loss, "N_eff": m.N_eff})
    out["gradeds"] = [{"n": n, "dR": m.hodge_graded[n].as_dict(), "HT": m.conj_graded[n].as_dict(),
                       "certified": m.graded(n).as_dict() if m.certified_graded is not None else None}
                      for n in range(m.h + 2)]
    return out


def cmd_analyze(args) -> int:
    specs = _specs(args)
    results = [s.build() for s in specs]
    if args.format == "json":
        _write(dumps(jsonable([_analyze_dict(m) for m in results])))
    else:
        _write("\n".join(_graded_table(m) for m in results))
    return EXIT_OK


def cmd_modp(args) -> int:
    out, code = [], EXIT_OK
    for s in _specs(args):
        mbar = modp.ModpBK.from_bk(s.build())
        r = {"label": s.label, "jumps": list(modp.jumps(mbar)), "conj_dims": mbar.conj_dims()}
        sh = modp.sub_hodge(mbar)
        r["sub_hodge"], r["de_rham"] = list(sh.dims), list(sh.dr_dims)
        r["unaligned"] = modp.unaligned_check(mbar)
        _, rel = modp.sub_conjugate_pieces(mbar, crystalline=s.crystalline)
        r["sub_conjugate"] = rel
        if s.weights is not None:
            r["multiset"] = modp.multiset_congruence_check(mbar, s.weights)
            if s.crystalline and not r["multiset"]["ok"]:
                code = EXIT_FAIL
        if not all(rel.values()):
            code = EXIT_FAIL
        out.append(r)
    if args.format == "json":
        _write(dumps(jsonable(out)))
    else:
        for r in out:
            _write(f"module {r['label'] or '-'}\n")
            for k in ("jumps", "conj_dims", "sub_hodge", "de_rham"):
                _write(f"  {k}: {r[k]}\n")
            _write(f"  unaligned: {'yes' if r['unaligned']['ok'] else 'no'} ({r['unaligned'].get('Y', '-')})\n")
            _write(f"  sub-conjugate relations: {r['sub_conjugate']}\n")
            if "multiset" in r:
                _write(f"  residues match weights: {r['multiset']['ok']}\n")
    return code


def cmd_check(args) -> int:
    recs = load(args.file)
    specs = []
    for rec in recs:
        try:
            s = from_dict(rec)
            if args.prec_np is not None or args.prec_nu is not None:
                s = s.with_precision(args.prec_np, args.prec_nu)
            specs.append(s)
        except UsageError:
            specs.append(rec)  # recorded as a per-module error by the runner
    rep = run_suite(specs, args.suite, seed=args.seed)
    _write(rep.to_json() if args.format == "json" else rep.to_text())
    return rep.exit_code(args.strict)


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "module"


def cmd_corpus(args) -> int:
    params = {"p": args.p, "count": args.count, "d": args.d}
    if args.prec_np is not None:
        params["n_p"] = args.prec_np
    if args.prec_nu is not None:
        params["n_u"] = args.prec_nu
    if args.max_weight is not None:
        params["max_weight"] = args.max_weight
    specs = corpus_mod.corpus_generate(args.kind, params, args.seed)
    if args.out is None:
        _write(dumps([s.to_dict() for s in specs]))
        return EXIT_OK
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(specs):
        (out / f"{i:04d}-{_safe(s.label)}.json").write_text(emit(s), encoding="utf-8")
    sys.stderr.write(f"wrote {len(specs)} modules to {out}\n")
    return EXIT_OK


def cmd_sen(args) -> int:
    results, code = [], EXIT_OK
    for s in _specs(args):
        m = s.build()
        if args.action == "verify":
            if s.sen_operator is None:
                raise UsageError(f"module {s.label or '-'} has no sen_operator field")
            r = sen.verify_sen(m, sen.SenOperator.make(s.sen_operator, m))
            ok = r["ok"]
            inconclusive = any(isinstance(v, dict) and v.get("ok") is None for v in r.values())
        else:
            r = sen.solve_sen(m)
            ok = r["ok"] and r["verify"]["ok"]
            inconclusive = False
        r = dict(r, label=s.label)
        results.append(r)
        if not ok:
            code = EXIT_FAIL
        elif inconclusive and args.strict and code == EXIT_OK:
            code = EXIT_INCONCLUSIVE
    if args.format == "json":
        _write(dumps(jsonable(results)))
    else:
        for r in results:
            _write(f"module {r['label'] or '-'}\n")
            for k, v in r.items():
                if k != "label":
                    _write(f"  {k}: {jsonable(v)}\n")
    return code


COMMANDS = {"analyze": cmd_analyze, "modp": cmd_modp, "check": cmd_check, "corpus": cmd_corpus, "sen": cmd_sen}


def main(argv=None) -> int:
    args = None
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.cmd](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except InsufficientPrecision as exc:
        # nothing could be computed: a parameter problem unless --strict asks for code 3
        sys.stderr.write(f"bkfil: inconclusive at precision: {exc} (needed: {exc.needed})\n")
        return EXIT_INCONCLUSIVE if args is not None and args.strict else EXIT_USAGE
    except (UsageError, NotEffective) as exc:
        sys.stderr.write(f"bkfil: error: {exc}\n")
        return EXIT_USAGE
    except BKError as exc:
        sys.stderr.write(f"bkfil: check failed: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
