import csv
import io
import json

import pytest

from cdshift.cli import format_report, run
from cdshift.tolerances import DEFAULTS, load_tolerances


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(map(str, argv)), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, _ = call(*argv)
    data = json.loads(out)
    assert data["exit_status"] == code
    return code, data


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_classify_chain(fixtures_dir):
    code, data = report("classify", fixtures_dir / "scalar_chain.json")
    r = data["results"]
    assert code == 0
    assert r["irreducible"] and r["kernel_exists"]
    assert r["eta_threshold"]["value"] == pytest.approx(0.5, abs=1e-6)
    assert r["contraction_class"] == "SimilarToContraction"
    assert data["tolerances"] == DEFAULTS


def test_classify_reducible(fixtures_dir):
    code, data = report("classify", fixtures_dir / "reducible_22.json")
    assert code == 0
    assert not data["results"]["irreducible"]
    assert len(data["results"]["components"]) == 2


def test_classify_negative_eta(tmp_path):
    p = write(tmp_path, "s.json", '{"eta": -1, "multiplicities": [1, 1], "blocks": [[[1]]]}')
    code, data = report("classify", p)
    assert code == 1
    assert data["results"]["reason"] == "eta must be positive"


def test_kernel_points(fixtures_dir, tmp_path):
    spec = write(tmp_path, "s.json", '{"eta": 1.5, "multiplicities": [1]}')
    code, data = report("kernel", spec, "--points", fixtures_dir / "points.json")
    vals = data["results"]["kernel_values"]
    assert code == 0
    assert vals[0]["value"] == [[[1.0, 0.0]]]
    assert vals[1]["value"][0][0][0] == pytest.approx(0.94 ** -3)
    assert all(r["passed"] for r in data["results"]["residuals"].values())


def test_kernel_requires_existence(tmp_path):
    p = write(tmp_path, "s.json", '{"eta": 0.4, "multiplicities": [1, 1], "blocks": [[[1]]]}')
    code, _, err = call("kernel", p)
    assert code == 1 and "no reproducing kernel" in err


def test_realize_weight_table(tmp_path):
    spec = write(tmp_path, "s.json", '{"eta": 1, "multiplicities": [1]}')
    out = tmp_path / "w.csv"
    code, data = report("realize", spec, "--n-max", 3, "--out", out)
    rows = list(csv.reader(out.open()))
    assert code == 0
    assert rows[0] == ["n", "grade", "index", "weight"]
    assert float(rows[1][3]) == pytest.approx(0.5 ** 0.5)


def test_realize_hardy_and_diagnostics(tmp_path):
    spec = write(tmp_path, "s.json", '{"eta": 0.5, "multiplicities": [1]}')
    out = tmp_path / "w.csv"
    code, data = report("realize", spec, "--n-max", 60, "--out", out)
    assert code == 0
    assert {r[3] for r in list(csv.reader(out.open()))[1:]} == {"1.0"}


def test_realize_fit(fixtures_dir):
    code, data = report("realize", fixtures_dir / "type_121.json", "--n-max", 200)
    fit = data["results"]["diagnostics"]["decay_exponent"]
    assert code == 0 and fit["passed"] and fit["tolerance"] == 0.1


@pytest.mark.parametrize("name", ["scalar_chain", "type_121", "reducible_22"])
def test_verify_fixtures_pass(fixtures_dir, name):
    code, data = report("verify", fixtures_dir / f"{name}.json")
    assert code == 0
    assert all(c["passed"] for c in data["results"]["checks"].values())


def test_verify_corrupted_fixture_fails(fixtures_dir):
    code, data = report("verify", fixtures_dir / "corrupted_chain.json")
    assert code == 3
    assert not data["results"]["checks"]["normalizer_oracle"]["passed"]


def test_verify_identity_panel(fixtures_dir):
    _, data = report("verify", fixtures_dir / "type_121.json", "--identity-panel")
    checks = data["results"]["checks"]
    for name in ("cocycle", "two_path_multiplier", "intertwining", "kernel_invariance"):
        assert checks[name]["max_residual"] <= 1e-14


def test_reports_are_deterministic(fixtures_dir):
    a = call("verify", fixtures_dir / "type_121.json", "--seed", 7, "--samples", 5)
    b = call("verify", fixtures_dir / "type_121.json", "--seed", 7, "--samples", 5)
    assert a == b


def test_canonical_121(fixtures_dir):
    code, data = report("canonical", fixtures_dir / "type_121.json")
    r = data["results"]
    assert code == 0
    assert (r["a"], r["b"], r["c"]) == pytest.approx((1, 1, 1))
    assert r["kernel_exists"] and r["agreement"]


def test_canonical_121_violation(tmp_path):
    p = write(tmp_path, "s.json", '{"eta": 1, "multiplicities": [1, 2, 1], "blocks": [[[1.5], [0]], [[1, 1]]]}')
    code, data = report("canonical", p)
    assert code == 1
    assert "a^2 < 2 eta" in data["results"]["violated"]


def test_canonical_negative_chain(tmp_path):
    p = write(tmp_path, "s.json", '{"eta": 1, "multiplicities": [1, 1, 1], "blocks": [[[-1]], [[[0, 1]]]]}')
    code, data = report("canonical", p)
    assert code == 0 and data["results"]["y"] == [1.0, 1.0]


def test_canonical_unsupported(fixtures_dir):
    code, _, err = call("canonical", fixtures_dir / "reducible_22.json")
    assert code == 2 and "(1, 2, 1)" in err


@pytest.mark.parametrize("text", ['{"eta": 1,', '{"eta": 1, "multiplicities": [1, 2], "blocks": [[[1, 0]]]}'])
def test_input_errors(tmp_path, text):
    code, out, err = call("classify", write(tmp_path, "s.json", text))
    assert code == 2 and out == "" and "input error" in err


def test_missing_file(tmp_path):
    assert call("classify", tmp_path / "nope.json")[0] == 2


def test_tolerance_override(fixtures_dir, tmp_path, monkeypatch):
    tol = write(tmp_path, "tol.json", '{"normalizer_oracle": 1.0, "kernel_origin": 1.0}')
    code, data = report("verify", fixtures_dir / "corrupted_chain.json", "--tol-file", tol)
    assert code == 0 and data["tolerances"]["normalizer_oracle"] == 1.0
    monkeypatch.setenv("CDSHIFT_TOL_FILE", str(tol))
    assert load_tolerances()["kernel_origin"] == 1.0


def test_bad_tolerance_file(fixtures_dir, tmp_path):
    tol = write(tmp_path, "tol.json", '{"bogus": 1.0}')
    assert call("verify", fixtures_dir / "scalar_chain.json", "--tol-file", tol)[0] == 2


def test_human_summary(fixtures_dir):
    code, out, _ = call("classify", fixtures_dir / "scalar_chain.json", "--human")
    assert code == 0
    assert "kernel exists: True" in out and "exit status: 0" in out


def test_format_report_is_json():
    obj = {"a": [[1.0, 2.0], [3.0, 4.0]], "b": {"c": [[[1, 0]]]}, "d": []}
    assert json.loads(format_report(obj)) == obj
