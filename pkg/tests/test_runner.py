import json
from pathlib import Path

import pytest

from oridt import engine
from oridt.runner import main, parse_vector
from oridt.torus import ModuleSeries

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
A2_SYMPLECTIC = str(CONFIGS / "a2_symplectic.json")
K2_SYMPLECTIC = str(CONFIGS / "k2_symplectic.json")


@pytest.fixture(autouse=True)
def _no_cache(monkeypatch):
    monkeypatch.delenv("ORIDT_CACHE", raising=False)


def _run(capsys, *argv):
    code = main([*argv, "-l", "quiet"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_parse_vector():
    assert parse_vector("1,0,-1") == [1, 0, -1]


def test_validate(capsys):
    code, report = _run(capsys, "validate", "-c", A2_SYMPLECTIC)
    assert code == 0
    assert report["valid"] is True
    assert report["node_partition"] == {"plus": ["-1"], "fixed": [], "minus": ["1"]}
    assert report["components"] == ["A2"]
    assert report["hyperbolic"] is False


def test_validate_reports_violations(capsys, tmp_path):
    data = json.loads(Path(A2_SYMPLECTIC).read_text(encoding="utf-8"))
    data["quiver"]["s"] = {"-1": 1, "1": -1}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    code, report = _run(capsys, "validate", "-c", str(path))
    assert code == 2
    assert report["error"]["type"] == "QuiverValidationError"
    kinds = {v["kind"] for v in report["error"]["details"]["violations"]}
    assert kinds == {"SignConditionViolatedError"}


def test_orientifold_series(capsys):
    code, report = _run(capsys, "series", "-c", A2_SYMPLECTIC, "--kind", "orientifold", "--theta", "plus",
                        "--bound", "2")
    assert code == 0
    assert report["terms"] == [{"dim": [0, 0], "value": "1"}, {"dim": [1, 1], "value": "1"}]
    assert report["variable"] == "v = q^(1/2)"


def test_semistable_series(capsys):
    code, report = _run(capsys, "series", "-c", A2_SYMPLECTIC, "--kind", "semistable", "--theta", "plus",
                        "--bound", "2")
    assert code == 0
    assert {"dim": [1, 1], "value": "v/(v^2-1)"} in report["terms"]


def test_unknown_stability(capsys):
    code, report = _run(capsys, "series", "-c", A2_SYMPLECTIC, "--kind", "semistable", "--theta", "nope")
    assert code == 2
    assert report["error"]["type"] == "ConfigError"


def test_wallcross(capsys):
    code, report = _run(capsys, "wallcross", "-c", A2_SYMPLECTIC, "--theta", "plus", "--theta", "minus")
    assert code == 0
    assert report["equal"] is True
    assert report["summary"] == "equal through total dimension 4"


def test_factorize_orientifold(capsys):
    code, report = _run(capsys, "factorize", "-c", A2_SYMPLECTIC, "--theta", "plus", "--orientifold")
    assert code == 0
    assert report["sigma_omega"] == [{"dim": [0, 0], "omega": 1}, {"dim": [1, 1], "omega": 1}]
    assert report["round_trip"] is True
    assert report["finite_type"] and report["sigma_generic"]
    assert report["nonnegative"] is True


def test_oracle_matches_formula(capsys):
    code, report = _run(capsys, "oracle", "-c", K2_SYMPLECTIC, "--theta", "plus", "--prime", "3", "--dim", "1,1",
                        "--census")
    assert code == 0
    assert report["match"] is True
    [result] = report["results"]
    assert result["prime"] == 3
    assert result["formula"] == "4"
    assert result["oracle"] == "4"
    assert result["match"] is True
    assert result["classes"] == 9


def test_oracle_defaults_to_configured_primes(capsys):
    code, report = _run(capsys, "oracle", "-c", K2_SYMPLECTIC, "--theta", "plus", "--dim", "1,1")
    assert code == 0
    assert [r["prime"] for r in report["results"]] == [3, 5]
    assert all(r["match"] and r["formula"] == r["oracle"] for r in report["results"])
    assert report["results"][0]["oracle"] == "4"
    assert report["results"][0]["classes"] is None
    assert report["match"] is True


def test_oracle_needs_some_prime(capsys, tmp_path):
    data = json.loads(Path(K2_SYMPLECTIC).read_text(encoding="utf-8"))
    data["oracle"]["primes"] = []
    path = tmp_path / "no_primes.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    code, report = _run(capsys, "oracle", "-c", str(path), "--theta", "plus", "--dim", "1,1")
    assert code == 2
    assert report["error"]["type"] == "ConfigError"


def test_oracle_rejects_even_prime(capsys):
    code, report = _run(capsys, "oracle", "-c", K2_SYMPLECTIC, "--theta", "plus", "--prime", "4", "--dim", "1,1")
    assert code == 1
    assert report["error"]["type"] == "EvenPrimeError"


def test_oracle_cap(capsys, tmp_path):
    data = json.loads(Path(K2_SYMPLECTIC).read_text(encoding="utf-8"))
    data["oracle"]["point_cap"] = 5
    path = tmp_path / "capped.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    code, report = _run(capsys, "oracle", "-c", str(path), "--theta", "plus", "--prime", "3", "--dim", "1,1")
    assert code == 3
    assert report["error"]["details"]["required"] == 9


def test_dilog(capsys):
    code, report = _run(capsys, "dilog", "--identity", "a2-symplectic", "--bound", "4")
    assert code == 0
    assert report["equal"] is True
    assert report["summary"] == "equal through total dimension 4"


@pytest.mark.parametrize("bound", ["-1", "13"])
def test_dilog_bound_is_range_checked(capsys, bound):
    code, report = _run(capsys, "dilog", "--identity", "pentagon", "--bound", bound)
    assert code == 2
    assert report["error"]["type"] == "ConfigError"
    assert "outside 0..12" in report["error"]["message"]


def test_factorize_reports_negative_orientifold_invariants(capsys, monkeypatch):
    def flipped(q, theta, bound, cache=None):
        return ModuleSeries(q, bound, {(0, 0): 1, (1, 1): -1})

    monkeypatch.setattr(engine, "orientifold_series", flipped)
    code, report = _run(capsys, "factorize", "-c", A2_SYMPLECTIC, "--theta", "plus", "--orientifold",
                        "--bound", "2")
    assert code == 1
    assert report["nonnegative"] is False
    assert report["round_trip"] is True
    assert {"dim": [1, 1], "omega": -1} in report["sigma_omega"]
    assert any("negative" in w for w in report["warnings"])


def test_delta(capsys):
    code, report = _run(capsys, "delta", "-c", A2_SYMPLECTIC, "--d", "1,0", "--e", "0,0", "--theta", "plus")
    assert code == 0
    assert (report["I"], report["omega_d"], report["sigma_omega_e"], report["delta"]) == (1, 1, 1, 1)


def test_schema(capsys):
    code, report = _run(capsys, "schema")
    assert code == 0
    assert "run_config" in report["schemas"]


def test_missing_config(capsys):
    code, report = _run(capsys, "validate")
    assert code == 2
    assert report["error"]["type"] == "ConfigError"


def test_golden_files(capsys, tmp_path):
    argv = ["dilog", "--identity", "pentagon", "--bound", "3", "--golden", str(tmp_path)]
    code, _ = _run(capsys, *argv)
    assert code == 1
    code, _ = _run(capsys, *argv, "--write-golden")
    assert code == 0
    assert (tmp_path / "dilog_pentagon_3.json").exists()
    code, _ = _run(capsys, *argv)
    assert code == 0
    (tmp_path / "dilog_pentagon_3.json").write_text("{}\n", encoding="utf-8")
    code, report = _run(capsys, *argv)
    assert code == 1
    assert report["error"]["type"] == "GoldenMismatchError"


def test_summary_goes_to_stderr(capsys):
    assert main(["dilog", "--identity", "pentagon", "--bound", "2"]) == 0
    captured = capsys.readouterr()
    assert "dilog: equal through total dimension 2" in captured.err
    assert json.loads(captured.out)["identity"] == "pentagon"


def test_bad_arguments_exit_through_argparse():
    with pytest.raises(SystemExit) as info:
        main(["series"])
    assert info.value.code == 2
