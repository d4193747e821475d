from __future__ import annotations

import json
import subprocess
import sys

import pytest

from cbbc.cli import main

from instances import GOLDEN, PROBLEMS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def p(name):
    return PROBLEMS / name


CLASSIC = """[system]
variables = x
x' = 0.5x + 1
state = x in [0, 2]
initial = x in [{lo}, 2]

[unsafe]
region = x in [0, 1)

[cegis]
degree = 1
"""


@pytest.fixture
def classic(tmp_path):
    def make(lo):
        path = tmp_path / f"classic_{lo}.cbbc"
        path.write_text(CLASSIC.format(lo=lo))
        return path
    return make


def test_synthesize_round_trip(capsys, tmp_path):
    out = tmp_path / "room.cert"
    code, text, _ = run(capsys, "synthesize", p("room.cbbc"), "--degree", 2, "--out", out)
    assert code == 0
    assert "status: success" in text
    code, text, _ = run(capsys, "check", p("room.cbbc"), out, "--tolerance", 0)
    assert code == 0
    assert "verdict: pass" in text


def test_synthesize_table_round_trip(capsys, tmp_path):
    out = tmp_path / "four.cert"
    assert run(capsys, "synthesize", p("four_state.cbbc"), "--table", "--out", out)[0] == 0
    assert run(capsys, "check", p("four_state.cbbc"), out)[0] == 0


def test_synthesize_classic_clash(capsys, classic):
    code, text, err = run(capsys, "synthesize", classic("0.5"))
    assert code == 2
    assert "overlap" in text + err


def test_synthesize_classic(capsys, classic, tmp_path):
    out = tmp_path / "classic.cert"
    assert run(capsys, "synthesize", classic("1"), "--out", out)[0] == 0
    assert run(capsys, "check", classic("1"), out)[0] == 0


def test_malformed_transition(capsys, tmp_path):
    bad = tmp_path / "bad.cbbc"
    bad.write_text(p("four_state.cbbc").read_text().replace("q1 -a-> q1", "q1 -a q1"))
    code, _, err = run(capsys, "synthesize", bad)
    assert code == 1
    assert "line 20" in err


def test_check_printed_room_certificate(capsys):
    code, text, _ = run(capsys, "check", p("room.cbbc"), p("room.printed.cert"),
                        "--tolerance", "1e-2")
    assert code == 0
    assert "worst by family:" in text


def test_check_decimal_four_state_fails(capsys):
    code, text, _ = run(capsys, "check", p("four_state.cbbc"), p("four_state.decimal.cert"),
                        "--tolerance", 0)
    assert code == 3
    assert "step[q0 -a-> q0, l=2]" in text
    assert "21/25000" in text


def test_check_zero_fails(capsys):
    assert run(capsys, "check", p("room.cbbc"), p("zero.cert"))[0] == 3


def test_check_signature_mismatch(capsys):
    assert run(capsys, "check", p("four_state.cbbc"), p("room.printed.cert"))[0] == 1


def test_check_certified_unknown(capsys, classic, tmp_path):
    cert = tmp_path / "b.cert"
    cert.write_text("certificate 1\nsignature = state\nvariables = x\npolynomial = 1 - x\n")
    assert run(capsys, "check", classic("1"), cert)[0] == 0
    assert run(capsys, "check", classic("1"), cert, "--mode", "certified")[0] == 4


def test_check_margins_and_json(capsys):
    code, text, _ = run(capsys, "check", p("room.cbbc"), p("room.printed.cert"),
                        "--tolerance", "0.01", "--margins", 5, "--json")
    assert code == 0
    doc = json.loads(text)
    assert doc["check"]["verdict"] == "pass"
    assert len(doc["margins"]["rows"]) == 5


def test_bad_tolerance(capsys):
    assert run(capsys, "check", p("room.cbbc"), p("zero.cert"), "--tolerance", "abc")[0] == 1


def test_simulate_room(capsys):
    code, text, _ = run(capsys, "simulate", p("room.cbbc"), "--x0", 35, "--horizon", 10)
    assert code == 0
    assert "visits: 3\n" in text


def test_simulate_three_state(capsys):
    code, text, _ = run(capsys, "simulate", p("three_state.cbbc"), "--x0", 0, "--horizon", 5)
    assert code == 0
    assert "visits: 2\n" in text


def test_simulate_fixed_point(capsys):
    code, text, _ = run(capsys, "simulate", p("three_state.cbbc"), "--x0", 5, "--horizon", 4,
                        "--anywhere", "--json")
    assert code == 0
    assert {row["x"] for row in json.loads(text)["trace"]} == {"5"}


def test_simulate_outside_initial_set(capsys):
    assert run(capsys, "simulate", p("room.cbbc"), "--x0", 17)[0] == 1
    assert run(capsys, "simulate", p("room.cbbc"), "--x0", 17, "--anywhere")[0] == 0


def test_simulate_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("CBBC_SEED", "5")
    first = run(capsys, "simulate", p("room.cbbc"), "--samples", 50)[1]
    again = run(capsys, "simulate", p("room.cbbc"), "--samples", 50, "--seed", 5)[1]
    assert "seed 5" in first and first == again


def test_lift_safety(capsys, tmp_path):
    out = tmp_path / "lifted.cert"
    code, text, _ = run(capsys, "lift", p("lift_safety.cbbc"), "--out", out)
    assert code == 0
    assert "unrolled = yes" in out.read_text()
    assert run(capsys, "check", p("lift_safety.cbbc"), out)[0] == 0


def test_lift_room_uca_inconclusive(capsys):
    code, text, err = run(capsys, "lift", p("room_uca.cbbc"))
    assert code == 2
    assert "share the label b" in text + err


def test_lift_no_accepting_state(capsys, tmp_path):
    text = p("lift_safety.cbbc").read_text().replace("accepting = q2\n", "")
    path = tmp_path / "none.cbbc"
    path.write_text(text)
    assert run(capsys, "lift", path)[0] == 0


def test_emit_sos_golden(capsys):
    code, text, _ = run(capsys, "emit-sos", p("room.cbbc"))
    assert code == 0
    assert text == (GOLDEN / "room.sosp").read_text()


def test_emit_sos_non_box_needs_descriptions(capsys, tmp_path):
    path = tmp_path / "disk.cbbc"
    path.write_text("""[system]
variables = x, y
x' = 0.5x
y' = 0.5y
state = x in [-2, 2]; y in [-2, 2]
initial = x in [1, 2]; y in [1, 2]

[visit]
region = x^2 + y^2 <= 1
k = 1
""")
    assert run(capsys, "emit-sos", path)[0] == 1


def test_emit_sos_classic_is_k0(capsys, classic):
    code, text, _ = run(capsys, "emit-sos", classic("1"))
    assert code == 0
    assert "\nk 0\n" in text
    assert "classic barrier" in text


def test_usage_error_is_input_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check"])
    assert exc.value.code == 1


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "cbbc.cli", "simulate", str(p("three_state.cbbc")),
                          "--x0", "0", "--horizon", "3"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "visits: 2" in res.stdout
