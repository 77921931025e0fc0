"""Command-line regression tests against stored golden outputs.

Regenerate the golden files with ``HFLAB_REGEN_GOLDEN=1 pytest tests/test_cli.py``.
"""

import csv
import io
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from hflab.cli import main

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("HFLAB_REGEN_GOLDEN") == "1"
RTOL, ATOL = 1e-6, 1e-10

CASES = {
    "solve": ["solve", "--atom", "He", "--points", "400"],
    "nodes": ["nodes", "--atom", "Be", "--points", "400"],
    "tails": ["tails", "--atom", "He", "--points", "400", "--shell", "1s"],
    "tunneling": ["tunneling", "--Ii", "5", "--Io", "0.5", "--E", "1", "2"],
    "phases": ["phases", "--channel", "square-well", "--e-min", "1e-3", "--e-max", "10", "--per-decade", "4"],
    "levinson": ["levinson", "--channel", "square-well"],
    "green_hf": ["green", "--atom", "He", "--points", "400"],
    "green_local": ["green", "--atom", "He", "--scheme", "hartree", "--points", "400"],
    "gauge": ["gauge", "--atom", "He", "--scheme", "hartree", "--points", "400", "--omega-max", "20"],
    "model_coulomb": ["model", "coulomb", "--Z", "10", "--n", "2", "--alpha", "4", "--family", "5"],
    "model_oscillator": ["model", "oscillator", "--beta-tilde", "1", "--family", "5"],
    "model_rpa": ["model", "rpa", "--n", "2", "--l", "1"],
    "figdata": ["figdata", "--atom", "He", "--points", "400"],
}


def _close(a, b, where):
    if isinstance(a, dict):
        assert isinstance(b, dict) and set(a) == set(b), where
        for k in a:
            if k != "versions":
                _close(a[k], b[k], f"{where}.{k}")
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b), where
        for i, (x, y) in enumerate(zip(a, b)):
            _close(x, y, f"{where}[{i}]")
    elif isinstance(a, bool) or a is None or isinstance(a, str):
        assert a == b, where
    else:
        assert b == pytest.approx(a, rel=RTOL, abs=ATOL, nan_ok=True), where


def _cells(text):
    rows = list(csv.reader(io.StringIO(text)))
    out = [rows[0]]
    for row in rows[1:]:
        parsed = []
        for cell in row:
            try:
                parsed.append(float(cell))
            except ValueError:
                parsed.append(cell)
        out.append(parsed)
    return out


def _compare(golden: Path, produced: Path):
    names = sorted(p.name for p in golden.iterdir())
    assert names == sorted(p.name for p in produced.iterdir())
    for name in names:
        a, b = (golden / name).read_text(), (produced / name).read_text()
        if name.endswith(".json"):
            _close(json.loads(a), json.loads(b), name)
        else:
            _close(_cells(a), _cells(b), name)


@pytest.mark.parametrize("case", sorted(CASES))
def test_golden(case, tmp_path):
    out = tmp_path / case
    assert main(["--out", str(out), "--quiet"] + CASES[case]) == 0
    target = GOLDEN / case
    if REGEN:
        shutil.rmtree(target, ignore_errors=True)
        shutil.copytree(out, target)
    assert target.is_dir(), f"missing golden output for {case}; run with HFLAB_REGEN_GOLDEN=1"
    _compare(target, out)


@pytest.mark.parametrize("case", ["solve", "tunneling", "model_coulomb"])
def test_repeat_runs_byte_identical(case, tmp_path):
    for d in ("a", "b"):
        assert main(["--out", str(tmp_path / d), "--quiet"] + CASES[case]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_manifest_contents(tmp_path):
    main(["--out", str(tmp_path), "--quiet"] + CASES["tunneling"])
    m = json.loads((tmp_path / "run.json").read_text())
    assert m["command"] == "tunneling"
    assert "--out" not in m["argv"]
    assert m["outputs"] == ["tunneling.csv", "tunneling.json"]
    assert {"hflab", "numpy", "scipy", "python"} <= set(m["versions"])


def test_format_selection(tmp_path):
    main(["--out", str(tmp_path), "--quiet", "--format", "csv"] + CASES["tunneling"])
    assert sorted(p.name for p in tmp_path.iterdir()) == ["run.json", "tunneling.csv"]


@pytest.mark.parametrize("argv, code", [
    (["bogus"], 1),
    (["solve", "--atom", "Xx"], 1),
    (["solve", "--atom", "He", "--points", "50"], 1),
    (["gauge", "--atom", "He", "--shell", "1s"], 1),
    (["solve", "--atom", "Be", "--points", "400", "--max-iterations", "2"], 2),
    (["model", "oscillator", "--beta-tilde", "-2"], 3),
])
def test_exit_codes(argv, code, tmp_path, capsys):
    assert main(["--out", str(tmp_path), "--quiet"] + argv) == code
    assert capsys.readouterr().err.startswith("error (")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hflab", "--out", str(tmp_path)] + CASES["tunneling"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
