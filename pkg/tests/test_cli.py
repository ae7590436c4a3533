import json
import subprocess
import sys

from loopbound import cli
from loopbound import symexpr as sx

from conftest import CORPUS


def run(capsys, *args):
    code = cli.main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_fig1_loop_bound(capsys):
    code, out, _ = run(capsys, CORPUS / "fig1.fg", "--loop-bounds")
    assert code == 0
    assert out.strip() == "loop@b: max{0, ceil(($x - 5)/2)}"


def test_nonzeros_edge_line(capsys):
    code, out, _ = run(capsys, CORPUS / "nonzeros.loopc", "--edge-bounds")
    assert code == 0
    assert "d -> e: max{0, $n}, 3 ; min = min{max{0, $n}, 3}" in out.splitlines()


def test_bubble_validation(capsys):
    code, out, _ = run(capsys, CORPUS / "bubble.loopc", "--loop-bounds", "--validate",
                       "--box=-0:6,6,2", "--ignore-array-writes")
    assert code == 0
    assert "loop@d: sum(K=0..max{0, $n} - 1, max{0, $n - K - 1})" in out
    assert "0 violations" in out


def test_json_schema(capsys):
    code, out, _ = run(capsys, CORPUS / "nonzeros.loopc", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert set(data) == {"edges", "loops", "asymptotic", "diagnostics"}
    de = next(e for e in data["edges"] if (e["src"], e["dst"]) == ("d", "e"))
    assert de["bounds"] == ["max{0, $n}", "3"]
    assert data["loops"] == [{"entry": "c", "bound": "max{0, $n}"}]
    assert data["asymptotic"] == "O(n)"


def test_output_is_stable(capsys):
    first = run(capsys, CORPUS / "two_paths.loopc")[1]
    second = run(capsys, CORPUS / "two_paths.loopc")[1]
    assert first == second


def test_errors_exit_with_one(capsys, tmp_path):
    bad = tmp_path / "bad.loopc"
    bad.write_text("void f() { int x = ; }")
    code, out, err = run(capsys, bad)
    assert code == 1 and out == "" and "bad.loopc" in err
    code, _, err = run(capsys, CORPUS / "bubble.loopc")
    assert code == 1 and "array" in err
    code, _, _ = run(capsys, tmp_path / "missing.fg")
    assert code == 1


def test_violations_exit_with_two(capsys, monkeypatch):
    real = cli.analyze

    def too_small(P, config=None):
        rep = real(P, config)
        rep.edge_bounds = {eid: [sx.ZERO] for eid in rep.edge_bounds}
        return rep

    monkeypatch.setattr(cli, "analyze", too_small)
    code, out, err = run(capsys, CORPUS / "count_up.loopc", "--validate", "--box=0:3,0,0")
    assert code == 2
    assert "violation" in out and "violations" in err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "loopbound.cli", str(CORPUS / "log2.loopc"),
                           "--asymptotic"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "asymptotic: O(log n)"
