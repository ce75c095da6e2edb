import json
import subprocess
import sys

from ijtagsim.cli import main
from ijtagsim.sim import data_path


def test_check_bundled_passes(capsys):
    assert main(["check", "single_internal_fault"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3


def test_check_failing_scenario_exits_nonzero(tmp_path, capsys):
    sc = tmp_path / "quiet.scn"
    sc.write_text(f"network {data_path('paper_network.net')}\nhorizon 20\nexpect interrupt within 3\n")
    assert main(["check", str(sc)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_run_writes_json(tmp_path):
    out = tmp_path / "report.json"
    assert main(["run", "double_fault", "--trace", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["latency"]["localization_cycles"] == 30
    assert [ep["localized"] for ep in doc["episodes"]][-1] == ["0001", "0003"]


def test_run_horizon_override(capsys):
    assert main(["run", "single_internal_fault", "--horizon", "50"]) == 0
    body = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    assert len(body) == 1 + 51


def test_parse_pretty_prints(capsys):
    assert main(["parse", str(data_path("paper_network.net"))]) == 0
    assert "sib SIB-3 @ 0001 {" in capsys.readouterr().out


def test_parse_reports_errors(tmp_path, capsys):
    bad = tmp_path / "bad.net"
    bad.write_text("network n {\n  sib A @ 0001 { }\n  sib B @ 0001 { }\n}\n")
    assert main(["parse", str(bad)]) == 2
    assert "3:3: DuplicateAddress" in capsys.readouterr().err


def test_bad_scenario_exits_2(tmp_path, capsys):
    sc = tmp_path / "bad.scn"
    sc.write_text("at x reset\n")
    assert main(["check", str(sc)]) == 2
    assert "bad.scn:1" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ijtagsim", "check", "double_fault"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
