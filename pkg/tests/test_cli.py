import json

import numpy as np
import pytest

from mhls.cli import run
from mhls.filtration import deserialize_tree
from mhls.reports import parse_report


def test_gen_dyadic(tmp_path, capsys):
    out = tmp_path / "tree.json"
    assert run(["gen", "--tree-kind", "dyadic", "--depth", "1", "--out", str(out)]) == 0
    assert out.read_text() == '{"children": [{"p": 0.5}, {"p": 0.5}]}'


def test_gen_chain_and_random(tmp_path):
    out = tmp_path / "c.json"
    assert run(["gen", "--tree-kind", "chain", "--chain", "1,0.5,0.25", "--out", str(out)]) == 0
    t = deserialize_tree(out.read_text())
    assert t.depth == 2
    out2 = tmp_path / "r.json"
    assert run(["gen", "--tree-kind", "random", "--depth", "4", "--seed", "7", "--out", str(out2)]) == 0
    assert run(["gen", "--tree-kind", "random", "--depth", "4", "--seed", "7", "--out", str(out2)]) == 0


def test_apply_matches_spec_example(tmp_path, capsys):
    tree = tmp_path / "tree.json"
    fn = tmp_path / "f.json"
    run(["gen", "--tree-kind", "dyadic", "--depth", "2", "--out", str(tree)])
    fn.write_text(json.dumps({"level": 2, "values": [4, 0, 0, 0]}))
    code = run(
        ["apply", "--op", "ia", "--alpha", "0.5", "--p", "1.3333333333",
         "--tree", str(tree), "--fn", str(fn)]
    )
    assert code == 0
    assert capsys.readouterr().out.strip() == "[1.70711, -0.29289, -0.70711, -0.70711]"


def test_check_duality_csv_rows(tmp_path, capsys):
    out = tmp_path / "dual.csv"
    code = run(
        ["check", "duality", "--tree-kind", "random", "--depth", "6", "--trials", "25",
         "--alpha", "0.5", "--p", "1.3333333333", "--seed", "42", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "experiment,seed,trial,ratio,bound,pass"
    assert len(lines) == 26


def test_check_outputs_are_byte_identical(tmp_path):
    args = ["check", "weak1", "--trials", "10", "--alpha", "0.5", "--p", "1.2",
            "--seed", "11", "--format", "json"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_check_failure_exits_2(tmp_path, capsys):
    code = run(
        ["check", "duality", "--trials", "5", "--depth", "5", "--alpha", "0.5",
         "--p", "1.3333333333", "--tol", "0", "--out", str(tmp_path / "d.csv")]
    )
    assert code == 2


def test_usage_error_exits_1(capsys):
    assert run(["check", "duality", "--trials", "5"]) == 1  # no exponents
    assert "usage" in capsys.readouterr().err
    assert run(["frobnicate"]) == 1
    assert run([]) == 1


def test_io_error_exits_1(tmp_path):
    assert run(
        ["apply", "--alpha", "0.5", "--p", "1.3333333333",
         "--tree", str(tmp_path / "missing.json"), "--fn", str(tmp_path / "f.json")]
    ) == 1


def test_witness_refeed_reproduces_ratio(tmp_path, capsys):
    rep_path = tmp_path / "rep.json"
    assert run(
        ["check", "duality", "--trials", "15", "--depth", "6", "--alpha", "0.5",
         "--p", "1.3333333333", "--seed", "3", "--format", "json", "--out", str(rep_path)]
    ) == 0
    rep = parse_report(rep_path.read_text())
    tree_path = tmp_path / "wtree.json"
    tree_path.write_text(json.dumps(rep.witness["tree"]))
    f_path, g_path = tmp_path / "wf.json", tmp_path / "wg.json"
    f_path.write_text(json.dumps(rep.witness["functions"][0]))
    g_path.write_text(json.dumps(rep.witness["functions"][1]))
    out2 = tmp_path / "single.json"
    assert run(
        ["check", "duality", "--tree", str(tree_path), "--fn", str(f_path), "--fn", str(g_path),
         "--alpha", "0.5", "--p", "1.3333333333", "--format", "json", "--out", str(out2)]
    ) == 0
    single = parse_report(out2.read_text())
    assert abs(single.worst_case - rep.worst_case) <= 1e-9 * max(1.0, rep.worst_case)


def test_probe_unbounded_csv_and_slope(tmp_path, capsys):
    out = tmp_path / "probe.csv"
    code = run(
        ["probe", "unbounded", "--alpha", "0.5", "--p", "1.3333333333", "--skews", "20",
         "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "skew,ratio"
    assert len(lines) == 21
    msg = capsys.readouterr().out
    slope = float(msg.split("slope=")[1].split(" ")[0])
    assert abs(slope + 0.5) / 0.5 < 0.05
    data = np.array([list(map(float, ln.split(","))) for ln in lines[1:]])
    assert data[0, 0] == 0.25 and data[-1, 0] == 2.0**-21


def test_probe_sharpness_json(tmp_path, capsys):
    out = tmp_path / "sh.json"
    assert run(
        ["probe", "sharpness", "--alpha", "0.5", "--p", "1.3333333333", "--skews", "12",
         "--format", "json", "--out", str(out)]
    ) == 0
    doc = json.loads(out.read_text())
    assert len(doc["skews"]) == 12
    ratios = np.asarray(doc["ratios"])
    assert ratios.max() / ratios.min() < 4.0


def test_search_report(tmp_path, capsys):
    out = tmp_path / "search.json"
    assert run(
        ["search", "--op", "ia", "--alpha", "0.5", "--p", "1.3333333333", "--budget", "200",
         "--seed", "5", "--depth", "3", "--format", "json", "--out", str(out)]
    ) == 0
    rep = parse_report(out.read_text())
    assert rep.worst_case > 0
    assert rep.trials >= 200
    from mhls import lab

    assert abs(lab.reevaluate_witness(rep) - rep.worst_case) <= 1e-9 * rep.worst_case


def test_check_transform_single_instance(tmp_path, capsys):
    tree = tmp_path / "t.json"
    fn = tmp_path / "f.json"
    tree.write_text(
        json.dumps({"children": [
            {"p": 0.9, "children": [{"p": 0.6}, {"p": 0.3}]},
            {"p": 0.1, "children": [{"p": 0.05}, {"p": 0.05}]},
        ]})
    )
    fn.write_text(json.dumps({"level": 2, "values": [1.0, -2.0, 3.0, -3.0]}))
    code = run(
        ["check", "transform", "--tree", str(tree), "--fn", str(fn),
         "--alpha", "0.5", "--p", "1.3333333333", "--format", "json",
         "--out", str(tmp_path / "tr.json")]
    )
    assert code == 0  # previsible kinds pass; the atomic defect is reported
    rep = parse_report((tmp_path / "tr.json").read_text())
    atomic_row = rep.rows[-1]
    assert atomic_row.ratio > 0.1


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "mhls" in capsys.readouterr().out
