import json
import subprocess
import sys

import pydot

from safesec.cli import main
from safesec.dsl import parse

HL = "builtin:headlamp"
SAF = "dualSelfCheckingPairFS,heterogeneousDuplexFS,monitorActuator,watchdog"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_ok(capsys):
    code, _, err = run(capsys, "validate", HL)
    assert code == 0 and "0 errors" in err


def test_validate_arity_error(tmp_path, capsys):
    bad = tmp_path / "bad.facts"
    bad.write_text("hz(h1).\n")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 2 and "hz" in err


def test_validate_cycle(tmp_path, capsys):
    extra = tmp_path / "cyc.facts"
    extra.write_text("subcp(hls,cam).\n")
    code, _, err = run(capsys, "validate", HL, str(extra))
    assert code == 1 and "cycle" in err and "cam" in err


def test_missing_file(capsys):
    code, _, _ = run(capsys, "validate", "/nonexistent.facts")
    assert code == 2


def test_analyze_security(capsys):
    code, out, _ = run(capsys, "analyze", "security", HL)
    assert code == 0
    assert sum(line.startswith("threat(") for line in out.splitlines()) == 6
    code, out, _ = run(capsys, "analyze", "security", HL, "--format", "json")
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and len(doc["threats"]) == 6 and len(doc["unrealized"]) == 1


def test_analyze_safety_unsatisfied(capsys):
    code, out, _ = run(capsys, "analyze", "safety", HL)
    assert "unsatisfied(sg1)." in out and "unsatisfied(sg2)." in out


def test_analyze_codesign_after_solution(tmp_path, capsys):
    code, _, _ = run(capsys, "recommend", HL, "--explore-safety", SAF, "--require-goals",
                     "--max-solutions", "1", "--out-dir", str(tmp_path))
    assert code == 0
    sol = tmp_path / "solution1.facts"
    code, out, _ = run(capsys, "analyze", "codesign", HL, str(sol), "--format", "json")
    doc = json.loads(out)
    assert {t["target"] for t in doc["realized"]} == {"nuFd1_1", "nuFd2_1"}
    assert [t["target"] for t in doc["unrealized"]] == ["nuMon2"]


def test_recommend_facts_round_trip(capsys):
    code, out, err = run(capsys, "recommend", HL, "--explore-safety", SAF, "--require-goals")
    assert code == 0 and "watchdog" in err
    chunks = [c for c in out.split("% solution ") if c.strip()]
    assert len(chunks) == 2
    kb = parse("% solution " + chunks[0])
    assert len(kb.safety_instances) == 2


def test_recommend_max_one(capsys):
    code, out, _ = run(capsys, "recommend", HL, "--explore-security", "firewall", "--max-solutions", "1")
    assert out.count("% solution ") == 1


def test_recommend_dot_is_valid(capsys):
    code, out, _ = run(capsys, "recommend", HL, "--explore-safety", SAF, "--explore-security",
                       "firewall", "--require-goals", "--max-solutions", "2", "--format", "dot")
    assert code == 0
    graphs = pydot.graph_from_dot_data(out)
    assert len(graphs) == 2
    assert "dashed" in out and "filled" in out


def test_recommend_json_schema(capsys):
    code, out, _ = run(capsys, "recommend", HL, "--explore-security", "firewall", "--max-solutions", "2",
                       "--format", "json")
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and len(doc["solutions"]) == 2
    assert set(doc["solutions"][0]) >= {"instances", "goals", "unmitigated", "warnings", "assumptions"}


def test_recommend_cap_exit_code(capsys):
    code, _, err = run(capsys, "recommend", HL, "--explore-safety", SAF, "--explore-security",
                       "firewall,securityMonitor", "--cap", "5")
    assert code == 3 and "require all goals" in err


def test_deterministic(capsys):
    args = ("recommend", HL, "--explore-safety", SAF, "--explore-security", "firewall", "--max-solutions", "5")
    assert run(capsys, *args) == run(capsys, *args)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "safesec", "analyze", "security", HL],
                         capture_output=True, text=True, check=True)
    assert "threat(" in res.stdout
