from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from rittlab.cli import build_all, clean, main


def _write(tmp_path: Path, text: str) -> str:
    p = tmp_path / "cfg.toml"
    p.write_text(text)
    return str(p)


def _report(out: Path, command: str) -> dict:
    return json.loads((out / f"{command}.json").read_text())


def _without_clock(path: Path) -> str:
    return "\n".join(line for line in path.read_text().splitlines() if '"wall_clock"' not in line)


SCM_RITT = """
[measure]
family = "scm"
nodes = [[0.5, 1.0]]
n_max = 200

[[analysis]]
kind = "ritt"
m = 1
n_max = 2000
"""

BERNOULLI_BAR = """
[measure]
family = "coeffs"
offset = 0
coeffs = [0.5, 0.5]

[[analysis]]
kind = "bar"
"""


def test_scm_ritt_bounded(tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", "--config", _write(tmp_path, SCM_RITT), "--out", str(out)]) == 0
    rep = _report(out, "analyze")
    res = rep["analyses"][0]["result"]["m=1"]
    assert res["verdict"] == "bounded" and res["convention"].startswith("fit-based")
    assert rep["analyses"][0]["op"] == "ritt" and rep["analyses"][0]["params"]["n_max"] == 2000
    assert rep["config"]["measure"]["family"] == "scm"


def test_bernoulli_bar_diverges(tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", "--config", _write(tmp_path, BERNOULLI_BAR), "--out", str(out)]) == 0
    res = _report(out, "analyze")["analyses"][0]["result"]
    assert res["verdict"] == "diverges" and res["bar_trend"] == pytest.approx(1.0, abs=0.01)
    assert res["convention"].startswith("grid-restricted")


def test_strict_mode(tmp_path):
    cfg = _write(tmp_path, BERNOULLI_BAR)
    assert main(["analyze", "--config", cfg, "--out", str(tmp_path / "o"), "--strict"]) == 3
    cfg = _write(tmp_path, SCM_RITT)
    assert main(["analyze", "--config", cfg, "--out", str(tmp_path / "o"), "--strict"]) == 0


def test_empty_analysis_list(tmp_path):
    out = tmp_path / "out"
    cfg = _write(tmp_path, '[measure]\nfamily = "delta"\n')
    assert main(["analyze", "--config", cfg, "--out", str(out)]) == 0
    rep = _report(out, "analyze")
    assert rep["analyses"] == [] and rep["series"] == [] and "wall_clock" in rep


def test_series_files(tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", "--config", _write(tmp_path, BERNOULLI_BAR), "--out", str(out)]) == 0
    files = _report(out, "analyze")["series"]
    assert files == ["00_bar_main_bar.csv", "00_bar_main_sector.csv"]
    with open(out / files[0]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n_or_theta", "value", "error_bound"]
    assert float(rows[-1][0]) == pytest.approx(3.141592653589793)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[measure\nfamily = 1", "line 1"),
        ('[measure]\nfamily = "nope"', "unknown family"),
        ('[measure]\nfamily = "cm"\nn_max = 10', "need 'nodes' or 'density'"),
        ('[measure]\nfamily = "cm"\nnodes = [[1.0, 1.0]]\nn_max = 10', "atom at 1"),
        ('[measure]\nfamily = "delta"\n[[analysis]]\nkind = "magic"', "unknown kind"),
        ('[measure]\nfamily = "delta"\n[[analysis]]\nkind = "bar"\ntarget = "x"', "unknown target"),
        (
            '[measures.a]\nfamily = "delta"\n[[combinator]]\nname = "m"\nop = "mixture"\nargs = ["a", "a"]\nalpha = 2.0',
            "weight",
        ),
        ('[measures.a]\nfamily = "delta"\n[[combinator]]\nname = "m"\nop = "reverse"\nargs = ["b"]', "unknown measure"),
    ],
)
def test_invalid_configs_exit_2(tmp_path, capsys, text, fragment):
    code = main(["analyze", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")])
    assert code == 2
    assert fragment in capsys.readouterr().err


def test_unreachable_tail_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, '[measure]\nfamily = "cm"\nnodes = [[0.99, 1.0]]\nn_max = 10\ntrim = 1e-12\n')
    assert main(["build", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "n_max" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["analyze", "--out", str(tmp_path)]) == 2
    assert main(["analyze", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)]) == 2


def test_build_writes_coefficients(tmp_path):
    out = tmp_path / "out"
    cfg = _write(tmp_path, '[measure]\nfamily = "cm"\nnodes = [[0.5, 1.0]]\nn_max = 60\n')
    assert main(["build", "--config", cfg, "--out", str(out)]) == 0
    rep = _report(out, "build")
    assert rep["measures"]["main"]["tail_bound"] == 2.0**-61
    with open(out / "measure_main.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[1] == ["0.0", "0.5", repr(2.0**-61)]


COMBO = """
target = "conv"

[measures.g]
family = "gamma"
gamma = 0.5
n_max = 4000

[measures.t]
family = "coeffs"
offset = -1
coeffs = [0.3333333333333333, 0.3333333333333334, 0.3333333333333333]

[[combinator]]
name = "mix"
op = "mixture"
args = ["g", "t"]
alpha = 0.5

[[combinator]]
name = "conv"
op = "convolve"
args = ["g", "t"]

[[combinator]]
name = "back"
op = "reverse"
args = ["t"]

[[analysis]]
kind = "hypothesis_h"

[[analysis]]
kind = "hypothesis_h"
target = "mix"

[[analysis]]
kind = "bar"
target = "back"

[[analysis]]
kind = "moments"
target = "g"
"""


def test_combinators(tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", "--config", _write(tmp_path, COMBO), "--out", str(out), "--threads", "3"]) == 0
    rep = _report(out, "analyze")
    assert set(rep["measures"]) == {"g", "t", "mix", "conv", "back"} and rep["target"] == "conv"
    items = [a["result"] for a in rep["analyses"]]
    assert items[0]["verdict"] == "pass" and items[1]["verdict"] == "pass"
    assert items[0]["psi"] == "cm+quadratic"
    assert items[2]["verdict"] == "bounded"
    assert [a["index"] for a in rep["analyses"]] == [0, 1, 2, 3]


def test_duplicate_names():
    with pytest.raises(ValueError, match="duplicate"):
        build_all({"measure": {"family": "delta"}, "measures": {"main": {"family": "delta"}}})


def test_clean_non_finite():
    assert clean({"a": float("inf"), "b": [float("-inf"), float("nan")], "c": (1, 2.5)}) == {
        "a": "inf", "b": ["-inf", "nan"], "c": [1, 2.5]
    }


def test_analyze_is_deterministic(tmp_path):
    cfg = _write(tmp_path, COMBO)
    for d in ("a", "b"):
        assert main(["analyze", "--config", cfg, "--out", str(tmp_path / d), "--threads", "4"]) == 0
    assert _without_clock(tmp_path / "a" / "analyze.json") == _without_clock(tmp_path / "b" / "analyze.json")
    for f in (tmp_path / "a").glob("*.csv"):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


BATTERY = """
[battery]
j_max = 10
families = ["cm", "scm"]
catalogue_n_max = 1024
"""


def test_battery_small(tmp_path):
    out = tmp_path / "out"
    assert main(["battery", "--config", _write(tmp_path, BATTERY), "--out", str(out), "--strict"]) == 0
    rep = _report(out, "battery")
    assert set(rep["families"]) == {"cm", "scm"}
    assert all(f["agree"] for f in rep["families"].values())
    assert rep["catalogue"]["geometric"]["cns1"] == "growing"


def test_battery_seed_override(tmp_path):
    out = tmp_path / "out"
    cfg = _write(tmp_path, BATTERY)
    assert main(["battery", "--config", cfg, "--out", str(out), "--seed", "7"]) == 0
    assert _report(out, "battery")["seed"] == 7


def test_weak_type_and_bc_analyses(tmp_path):
    text = """
[measure]
family = "coeffs"
offset = -1
coeffs = [0.25, 0.5, 0.25]

[[analysis]]
kind = "weak_type"
Ns = [16, 32, 64]

[[analysis]]
kind = "bc"
N = 64
k_max = 4
l_max = 32

[[analysis]]
kind = "square"
Ns = [8, 16]

[[analysis]]
kind = "aperiodic"
"""
    out = tmp_path / "out"
    assert main(["analyze", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    res = [a["result"] for a in _report(out, "analyze")["analyses"]]
    assert res[0]["verdict"] == "bounded" and len(res[0]["labels"]) == 8
    assert res[1]["verdict"] == "bounded"
    assert "no verdict" in res[2]["note"]
    assert res[3]["verdict"] == "pass"


def test_selftest(tmp_path, capsys):
    assert main(["selftest", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8 and all(line.startswith("PASS") for line in lines)


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "rittlab.cli", "selftest", "--out", str(tmp_path)], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "FAIL" not in proc.stdout


def test_bad_seed(tmp_path):
    with pytest.raises(SystemExit):
        main(["selftest", "--out", str(tmp_path), "--seed", "-1"])
