import json

import pytest

from symker.cli import main


def test_kernel_eval_prints_value(capsys):
    assert main(["kernel-eval", "--family", "heat", "--t", "1", "--r", "0"]) == 0
    assert capsys.readouterr().out.strip() == "0.008258"


def test_weight_class_non_member(capsys):
    rc = main(["weight-class", "--family", "heat", "--p", "2", "--weight", "dexp:-1", "--no-write"])
    assert rc == 0
    assert "non-member" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["kernel-eval", "--family", "heat", "--t", "-1", "--r", "0"],
        ["kernel-eval", "--family", "frac_heat", "--t", "1", "--r", "0"],
        ["converge", "--weight", "nonsense-weight", "--no-write"],
        ["bogus"],
        ["converge", "--p", "0.3", "--no-write"],
    ],
)
def test_usage_errors_exit_two(argv):
    assert main(argv) == 2


def test_zoo_writes_results(tmp_path, capsys):
    assert main(["zoo", "--out", str(tmp_path)]) == 0
    files = sorted(p.suffix for p in tmp_path.iterdir())
    assert ".csv" in files and ".json" in files


def test_converge_from_config_file(tmp_path, capsys):
    cfg = {"experiment": "converge", "family": {"kind": "frac_poisson", "sigma": 0.5, "zeta": 1.0}, "weight": "exp:-4", "p": 2.0}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    rc = main(["converge", "--config", str(path), "--out", str(tmp_path / "out")])
    assert rc == 0
    assert "divergence witness triggered" in capsys.readouterr().out
