from __future__ import annotations

import json
import subprocess
import sys
from importlib import resources

import pytest

from belief_arena.cli import main
from belief_arena.formats import parse_game


def corpus(name):
    return str(resources.files("belief_arena.corpus").joinpath(f"{name}.game"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", corpus("g_coin"))
    assert code == 0


def test_validate_reports_errors(tmp_path, capsys):
    bad = tmp_path / "bad.game"
    text = open(corpus("g_coin")).read().replace("1/2 c0 d0 dead", "1/3 c0 d0 dead")
    bad.write_text(text)
    code, out, _ = run(capsys, "validate", str(bad))
    assert code == 1
    assert "sums to" in out


def test_parse_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.game"
    bad.write_text("states a\nbogus\n")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 1
    assert "line 2" in err


def test_missing_file_exit_1(capsys):
    code, _, err = run(capsys, "classify", "/nonexistent/x.game")
    assert code == 1 and "error" in err


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classify"])
    assert exc.value.code == 2
    code, _, err = run(capsys, "synthesize", corpus("g_pennies"), "--player", "2", "--kind", "as")
    assert code == 2 and "player 1" in err


def test_classify_report(tmp_path, capsys):
    cert = tmp_path / "cert.json"
    code, out, _ = run(capsys, "classify", corpus("g_pennies_trap"), "--full-lattice",
                       "--certificate-out", str(cert))
    assert code == 0
    doc = json.loads(out)
    assert doc["universe_size"] == 15
    assert json.loads(cert.read_text()) == {"supports": [["dead"]]}


def test_synthesize_and_simulate(tmp_path, capsys):
    strat = tmp_path / "as.json"
    code, _, _ = run(capsys, "synthesize", corpus("g_pennies"), "--player", "1", "--kind", "as",
                     "-o", str(strat))
    assert code == 0
    code, out, _ = run(capsys, "simulate", corpus("g_pennies"), "--p1", str(strat),
                       "--episodes", "300", "--horizon", "100", "--seed", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["reach_count"] == 300 and doc["belief_violations"] == 0


def test_refused_synthesis_exit_1(capsys):
    code, _, err = run(capsys, "synthesize", corpus("g_coin"), "--player", "2", "--kind", "sure")
    assert code == 1 and "POS_P1" in err


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("BELIEF_ARENA_SEED", "17")
    _, a, _ = run(capsys, "gen")
    _, b, _ = run(capsys, "gen", "--seed", "17")
    _, c, _ = run(capsys, "gen", "--seed", "18")
    assert a == b != c
    parse_game(a)
    _, out, _ = run(capsys, "simulate", corpus("g_coin"), "--episodes", "50")
    assert json.loads(out)["seed"] == 17


def test_oracle_check(capsys):
    code, out, _ = run(capsys, "oracle-check", corpus("g_pennies_trap"))
    assert code == 0
    doc = json.loads(out)
    assert doc["ok"] and doc["duality_mismatches"] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "belief_arena", "validate", corpus("g_safe")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
