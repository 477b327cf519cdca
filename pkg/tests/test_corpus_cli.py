import json
import random
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from bkfil import corpus
from bkfil.cli import main
from bkfil.errors import UsageError
from bkfil.spec_io import dumps, emit, from_dict, parse, parse_records
from bkfil.suites import checks_for, run_suite

from oracles import ppow


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(dumps(obj), encoding="utf-8")
    return str(path)


def torsion_spec(weights=(0, 2), crystalline=True):
    p, N = 3, 4
    q = p ** N
    E = (-p % q, 1)
    A = (((-p % q, 1), (p,)), ((0,), (-p % q, 1)))
    return from_dict({"p": p, "n_p": N, "n_u": 10, "E": list(E), "A": [[list(x) for x in r] for r in A],
                      "weights": list(weights), "crystalline": crystalline, "label": "torsion"})


# ---------------------------------------------------------------- serialization


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["e", "tri"]))
def test_json_round_trip(seed, kind):
    rng = random.Random(seed)
    gen = corpus.fuzz_isogeny if kind == "e" else corpus.triangular_isogeny
    spec = gen(rng, rng.choice((2, 3)), 3, 2, [rng.randrange(3), rng.randrange(3)])
    text = emit(spec)
    back = parse(text)
    assert back == spec and emit(back) == text
    assert text.endswith("\n")


def test_parse_record_shapes():
    spec = corpus.rank1(3, 1, N=3)
    one = spec.to_dict()
    assert parse_records(dumps(one)) == [one]
    assert len(parse_records(dumps([one, one]))) == 2
    assert len(parse_records(dumps({"modules": [one]}))) == 1


def test_parse_rejects_bad_records():
    spec = corpus.rank1(3, 1, N=3).to_dict()
    for bad in [dict(spec, p=4), dict(spec, A=[[[1]], [[0]]]), dict(spec, n_p=True), dict(spec, flavor="x"),
                {k: v for k, v in spec.items() if k != "A"}]:
        with pytest.raises(UsageError):
            from_dict(bad)
    with pytest.raises(UsageError):
        parse("{not json")


# ---------------------------------------------------------------- corpus families


def test_rank_one_construction():
    p, N = 3, 4
    s = corpus.rank1(p, 2, c=1, N=N)
    want = ppow([-p % p ** N, 1], 2, p ** N)
    assert list(s.A[0][0][:3]) == want and not any(s.A[0][0][3:])
    assert s.weights == (2,) and s.crystalline


def test_tensor_adds_weights():
    s = corpus.tensor(corpus.rank1(3, 1, N=4), corpus.rank1(3, 2, N=4))
    m = s.build()
    assert s.weights == (3,) and m.h == 3 and m.derived_weights == (3,)
    t = corpus.tensor(corpus.diagonal(3, (0, 1), 4), corpus.rank1(3, 2, N=4))
    assert t.build().derived_weights == (2, 3)


def test_direct_sum_concatenates_weights():
    s = corpus.direct_sum([corpus.rank1(3, 0, N=4), corpus.rank1(3, 3, N=4)])
    assert s.weights == (0, 3) and s.build().derived_weights == (0, 3)


def test_corpus_is_deterministic():
    for kind in ("d", "e", "tri", "certified"):
        a = corpus.corpus_generate(kind, {"p": 2, "count": 4, "max_weight": 2}, seed=5)
        b = corpus.corpus_generate(kind, {"p": 2, "count": 4, "max_weight": 2}, seed=5)
        assert [emit(s) for s in a] == [emit(s) for s in b]


def test_unknown_kind_is_usage_error():
    with pytest.raises(UsageError):
        corpus.corpus_generate("zzz", {}, 0)


# ---------------------------------------------------------------- suite runner


def test_empty_input_gives_empty_report():
    rep = run_suite([], "all")
    assert rep.records == [] and rep.errors == [] and rep.exit_code() == 0


def test_all_suite_names_are_unique():
    names = [n for n, _ in checks_for("all")]
    assert len(names) == len(set(names))
    with pytest.raises(UsageError):
        checks_for("nope")


def test_rank_one_passes_everything():
    specs = [corpus.rank1(3, r, N=4) for r in range(4)]
    rep = run_suite(specs, "all")
    c = rep.counts()
    assert c["fail"] == 0 and c["inconclusive-at-precision"] == 0 and c["pass"] > 0


def test_unflagged_fuzz_skips_theorem_checks():
    rng = random.Random(41)
    specs = [corpus.fuzz_isogeny(rng, 3, 3, 2, [1, 2]) for _ in range(3)]
    rep = run_suite(specs, "crystalline")
    assert {r.verdict for r in rep.records} == {"not-applicable"}


def test_reports_are_byte_identical():
    specs = corpus.corpus_generate("tri", {"p": 2, "count": 3}, seed=9)
    a = run_suite(specs, "all", seed=4).to_json()
    b = run_suite(specs, "all", seed=4).to_json()
    assert a == b


def test_scrambled_family_matches_parent():
    base = corpus.corpus_generate("b", {"p": 3, "count": 3, "max_weight": 3}, seed=2)
    rng = random.Random(2)
    scrambled = [corpus.base_change(s, corpus.random_gl(rng, s.p, s.n_p, s.d)) for s in base]
    va = [(i, c, v) for i, c, v in run_suite(base, "all").verdicts() if c != "base-change"]
    vb = [(i, c, v) for i, c, v in run_suite(scrambled, "all").verdicts() if c != "base-change"]
    assert va == vb


def test_bad_record_becomes_error():
    good = corpus.rank1(3, 1, N=3).to_dict()
    rep = run_suite([good, dict(good, p=4)], "universal")
    assert rep.errors and rep.errors[0]["index"] == 1 and rep.exit_code() == 2


def test_false_flag_fails():
    rep = run_suite([torsion_spec()], "crystalline")
    assert rep.exit_code() == 1
    assert ("vanishing", "fail") in [(r.check, r.verdict) for r in rep.records]


# ---------------------------------------------------------------- CLI


def test_cli_check_exit_codes(tmp_path, capsys):
    good = write(tmp_path, "good.json", [corpus.rank1(3, r, N=4).to_dict() for r in range(3)])
    assert main(["check", good, "--suite", "all"]) == 0
    bad = write(tmp_path, "bad.json", torsion_spec().to_dict())
    assert main(["check", bad, "--suite", "crystalline"]) == 1
    assert main(["check", str(tmp_path / "missing.json")]) == 2
    # v_2(4!) = 3 >= n_p = 2: the torsion bound cannot be certified
    weak = write(tmp_path, "weak.json", corpus.rank1(2, 5, N=2).to_dict())
    assert main(["check", weak, "--suite", "crystalline"]) == 0
    assert main(["check", weak, "--suite", "crystalline", "--strict"]) == 3
    capsys.readouterr()


def test_cli_usage_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["check"]) == 2
    assert main(["corpus", "--kind", "zzz"]) == 2
    f = write(tmp_path, "m.json", corpus.rank1(3, 1, N=3).to_dict())
    assert main(["sen", "verify", f]) == 2  # no operator stored
    capsys.readouterr()


def test_cli_json_output_is_canonical(tmp_path, capsys):
    f = write(tmp_path, "m.json", corpus.rank1(3, 2, N=4).to_dict())
    assert main(["check", f, "--suite", "universal", "--format", "json"]) == 0
    out = capsys.readouterr().out
    data = json.loads(out)
    assert out == dumps(data)
    assert data["counts"]["pass"] == len(data["records"])


def test_cli_analyze_and_modp(tmp_path, capsys):
    f = write(tmp_path, "m.json", corpus.diagonal(3, (0, 2), 4).to_dict())
    assert main(["analyze", f]) == 0
    out = capsys.readouterr().out
    assert "height=2" in out and "gr_n M_HT" in out
    assert main(["analyze", f, "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data[0]["gradeds"][2]["HT"]["free_rank"] == 1
    assert main(["modp", f, "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["jumps"] == [0, 2]


def test_cli_sen(tmp_path, capsys):
    spec = corpus.diagonal(3, (0, 2), 4).to_dict()
    f = write(tmp_path, "m.json", spec)
    assert main(["sen", "solve", f, "--format", "json"]) == 0
    theta = json.loads(capsys.readouterr().out)[0]["theta"]
    assert theta == [[0, 0], [0, 2]]
    g = write(tmp_path, "s.json", dict(spec, sen_operator=theta))
    assert main(["sen", "verify", g]) == 0
    h = write(tmp_path, "w.json", dict(spec, sen_operator=[[0, 0], [0, 1]]))
    assert main(["sen", "verify", h]) == 1
    capsys.readouterr()


def test_cli_corpus_writes_files(tmp_path, capsys):
    out = tmp_path / "c"
    assert main(["corpus", "--kind", "a", "--p", "2", "--max-weight", "2", "--out", str(out)]) == 0
    files = sorted(out.iterdir())
    assert files and files[0].name.startswith("0000-")
    assert main(["check", str(files[0]), "--suite", "all"]) == 0
    assert main(["corpus", "--kind", "e", "--p", "2", "--count", "2"]) == 0
    capsys.readouterr()


def test_cli_precision_override(tmp_path, capsys):
    f = write(tmp_path, "m.json", corpus.rank1(3, 4, N=4).to_dict())
    assert main(["check", f, "--prec-nu", "4", "--format", "json"]) == 0
    rec = json.loads(capsys.readouterr().out)["records"][0]
    assert rec["check"] == "build" and rec["verdict"] == "inconclusive-at-precision"
    assert main(["check", f, "--prec-nu", "4", "--strict"]) == 3
    assert main(["analyze", f, "--prec-nu", "4"]) == 2
    assert main(["analyze", f, "--prec-nu", "4", "--strict"]) == 3
    assert main(["check", f, "--prec-np", "3"]) == 0
    capsys.readouterr()


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "bkfil", "corpus", "--kind", "a", "--p", "2", "--max-weight", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and isinstance(json.loads(res.stdout), list)
