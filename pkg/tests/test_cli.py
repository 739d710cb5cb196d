import csv
import io
import json
import os

import pytest

from ifsline.cli import RunConfig, build_parser, classify, main, run
from ifsline.errors import PreconditionError, ValidationError
from ifsline.io import load_family, load_ifs

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "demos", "data")


def data(name):
    return os.path.join(DATA, name)


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    a = build_parser().parse_args(list(argv))
    cfg = RunConfig(a.command, a.ifs, a.family, a.depth, a.budget, a.target, a.x, a.r, a.N, a.out, a.format, a.seed)
    return run(cfg, out, err), out.getvalue(), err.getvalue()


@pytest.mark.parametrize(
    "argv, case, label",
    [
        (("--family", "cantor_family.json"), "CASE_2A", "CERTIFIED"),
        (("--family", "ratio06_family.json"), "CASE_1", "GENERIC_EXPECTATION"),
        (("--ifs", "mixed_small.json"), "CASE_2B", "CERTIFIED"),
        (("--ifs", "dyadic.json"), "EXCEPTIONAL", "CERTIFIED"),
        (("--ifs", "mixed.json"), "CASE_1", "GENERIC_EXPECTATION"),
    ],
)
def test_classify_cases(argv, case, label):
    code, out, _ = invoke("classify", argv[0], data(argv[1]))
    assert code == 0
    rep = json.loads(out)
    assert (rep["result"]["case"], rep["result"]["label"]) == (case, label)


def test_envelope_schema():
    code, out, _ = invoke("classify", "--ifs", data("cantor.json"), "--budget", "5000")
    rep = json.loads(out)
    assert code == 0
    assert (rep["schema"], rep["tool"], rep["command"], rep["status"]) == (1, "ifsline", "classify", "completed")
    assert rep["version"]
    assert rep["budgets"]["budget"] == 5000
    assert rep["result"]["pair_sum_below_one"] is True


def test_classify_caveats():
    rep = classify(load_family(data("ratio06_family.json")))
    assert any("first category" in c for c in rep.caveats)
    small = classify(load_ifs(data("mixed_small.json")))
    assert small.wsp.witness is not None
    assert abs(small.s0.value - 0.8567375604994066) < 1e-12


def test_classify_rejects_nonaffine():
    from fractions import Fraction as F

    from ifsline import Ifs, IfsMap, bump

    g = Ifs([IfsMap(F(1, 3), 0, (bump(F(1, 8), F(1, 6), F(1, 10)),)), IfsMap(F(1, 3), F(2, 3))], ambient=(0, 1), rho="1/2", beta="1/4")
    with pytest.raises(PreconditionError):
        classify(g)


def test_csv_tables():
    code, out, _ = invoke("phi-count", "--ifs", data("mixed.json"), "--x", "0", "--r", "1/10000", "--N", "2", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows == [["scale", "count"], ["1/10000", "62"]]
    code, out, _ = invoke("wsp-witness", "--ifs", data("mixed.json"), "--format", "csv")
    assert list(csv.reader(io.StringIO(out)))[:2] == [["i", "j", "count"], ["5", "8", "23"]]
    code, out, _ = invoke("transversality", "--family", data("cantor_family.json"), "--format", "csv")
    assert list(csv.reader(io.StringIO(out))) == [["i", "j", "bound"], ["1", "2", "1/3"]]


def test_dim_table_header():
    code, out, _ = invoke("dim", "--ifs", data("cantor.json"), "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["method", "value", "lower", "upper", "certified"]
    assert {r[0] for r in rows[1:]} == {"similarity", "bowen", "assouad"}


def test_budget_exhaustion_writes_partial():
    code, out, err = invoke("separation", "--ifs", data("mixed.json"), "--depth", "31", "--budget", "2000", "--format", "csv")
    assert code == 2
    assert "resource limit" in err
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "d_n"] and rows[1] == ["1", "1/3"]
    code, out, _ = invoke("separation", "--ifs", data("mixed.json"), "--depth", "31", "--budget", "2000")
    assert code == 2 and json.loads(out)["status"] == "resource_limit"


def test_input_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{bad")
    code, out, err = invoke("dim", "--ifs", str(bad))
    assert code == 1 and out == "" and "invalid JSON" in err
    assert invoke("dim", "--ifs", str(tmp_path / "missing.json"))[0] == 1
    assert invoke("dim")[0] == 1
    assert invoke("phi-count", "--ifs", data("mixed.json"))[0] == 1


def test_out_file(tmp_path):
    target = tmp_path / "rep.json"
    code, out, _ = invoke("classify", "--ifs", data("cantor.json"), "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["result"]["case"] == "CASE_2A"


def test_main_exit_codes(capsys):
    assert main(["classify", "--ifs", data("cantor.json")]) == 0
    assert main(["dim", "--ifs", data("cantor.json"), "--budget", "0"]) == 1
    assert "budget must be positive" in capsys.readouterr().err


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig("plot")
    with pytest.raises(ValidationError):
        RunConfig("dim", depth=0)
    with pytest.raises(ValidationError):
        RunConfig("dim", format="xml")
    cfg = RunConfig("dim", budget=7, seed=3)
    assert cfg.budgets() == {"budget": 7, "depth": None, "target": 10, "seed": 3}
