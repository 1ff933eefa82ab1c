from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import additive_pm
from dsquiver.cli import main
from dsquiver.frontend import DSInstance, Verdict
from dsquiver.pencil import shift_pencil
from dsquiver.quiver import SquidShape, StarShape, build_squid
from dsquiver.solver import SolverResult
from dsquiver.symplectic import random_point


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    report = json.loads(out.out) if out.out.strip() else None
    return code, report, out.err


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def strip_time(report):
    return {k: v for k, v in report.items() if k != "elapsed_ms"}


def test_verdict(tmp_path, capsys):
    inst = write(tmp_path, "i.json", additive_pm([1] * 5).to_dict())
    code, rep, _ = run(capsys, "verdict", inst)
    assert code == 0 and rep["command"] == "verdict"
    assert rep["verdict"]["sufficient"] is True and rep["verdict"]["delta"] == 1
    assert Verdict.from_dict(rep["verdict"]).expected_dim_solution_space == 7
    assert len(rep["input_digest"]) == 64 and isinstance(rep["elapsed_ms"], int)


def test_verdict_negative_controls(tmp_path, capsys):
    for k, d in [(3, -1), (4, 0)]:
        inst = write(tmp_path, f"i{k}.json", additive_pm([1] * k).to_dict())
        code, rep, _ = run(capsys, "verdict", inst)
        assert code == 0 and rep["verdict"]["delta"] == d and rep["verdict"]["sufficient"] is False


def test_solve_additive_and_multiplicative(tmp_path, capsys):
    inst = write(tmp_path, "a.json", additive_pm([0.3, 0.5, 0.7, 0.4, 0.6]).to_dict())
    code, rep, _ = run(capsys, "solve", inst, "--starts", 8)
    assert code == 0 and rep["certified"] is True
    assert rep["solver"]["tangent_dim"] == 7 and rep["solver"]["constraint_rank"] == 3
    res = SolverResult.from_dict(rep["solver"])
    assert res.converged and res.residual <= 1e-8
    mult = DSInstance("multiplicative", [[(0, 1, 1), (0, -1, 1)]] * 5)
    inst = write(tmp_path, "m.json", mult.to_dict())
    code, rep, _ = run(capsys, "solve", inst)
    assert code == 0 and rep["solver"]["tangent_dim"] == 7


def test_solve_nonconvergence_exit_3(tmp_path, capsys):
    inst = write(tmp_path, "n.json",
                 DSInstance("additive", [[(1, 0, 1), (-1, 0, 1)], [(2, 0, 1), (-2, 0, 1)]]).to_dict())
    opts = write(tmp_path, "o.json", {"starts": 2, "max_iter": 100})
    code, rep, err = run(capsys, "solve", inst, "--opts", opts)
    assert code == 3
    assert rep["solver"]["converged"] is False and rep["certified"] is False
    assert "tolerance" in err


def test_solve_is_deterministic(tmp_path, capsys):
    inst = write(tmp_path, "a.json", additive_pm([0.3, 0.5, 0.7, 0.4, 0.6]).to_dict())
    reports = [strip_time(run(capsys, "solve", inst, "--seed", 7)[1]) for _ in range(2)]
    assert reports[0] == reports[1]


@pytest.mark.parametrize("argv", [
    ["verdict", "/nonexistent/file.json"],
    ["forms", "--w", "2,2", "--alpha", "1,1"],
    ["forms", "--w", "2,0", "--alpha", "1,1"],
    ["forms", "--alpha", "1,1"],
    ["roots", "--w", "2,2", "--alpha", "0,0,0"],
    ["decomp-check", "--w", "2,2,2", "--alpha", "6,3,3,3"],
    ["census", "--w", "2,2", "--alpha", "1,1,1", "--samples", "0"],
    ["no-such-command"],
])
def test_invalid_input_exit_2(argv, capsys):
    code, rep, _ = run(capsys, *argv)
    assert code == 2 and rep is None


def test_invalid_json_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "verdict", bad)[0] == 2
    wrong = write(tmp_path, "w.json", {"mode": "additive", "classes": [{"eigenvalues": [{"re": 1, "mult": 2}]},
                                                                        {"eigenvalues": [{"re": 1, "mult": 1}]}]})
    assert run(capsys, "verdict", wrong)[0] == 2
    pencil = write(tmp_path, "p.json", {"psi0": [["1"]], "psi1": [["0"]]})
    assert run(capsys, "splitting", pencil)[0] == 2


def test_forms_and_roots(capsys):
    code, rep, _ = run(capsys, "forms", "--w", "2,2,2,2,2", "--alpha", "2,1,1,1,1,1")
    assert code == 0
    assert rep["forms"] == {"q": -1, "p": 2, "delta": 1, "fundamental": True, "root_class": "ImaginaryRoot"}
    code, rep, _ = run(capsys, "roots", "--w", "2,2,2", "--alpha", "2,0,0,0")
    assert rep["forms"]["root_class"] == "NotRoot"


def test_roots_on_quiver(tmp_path, capsys):
    q = write(tmp_path, "q.json", {"vertices": ["inf", 0], "arrows": [[0, "inf"], [0, "inf"]]})
    code, rep, _ = run(capsys, "roots", "--quiver", q, "--alpha", "1,1")
    assert code == 0 and rep["forms"]["root_class"] == "ImaginaryRoot"


def test_decomp_check(capsys):
    code, rep, _ = run(capsys, "decomp-check", "--w", "2,2,2", "--alpha", "2,0,0,0")
    assert code == 0 and rep["decomposition"]["holds"] is False
    assert rep["decomposition"]["witness"]["parts"] == [{"0": 1, "1,1": 0, "2,1": 0, "3,1": 0}] * 2


def test_splitting(tmp_path, capsys):
    p = write(tmp_path, "p.json", shift_pencil(3).to_dict())
    code, rep, _ = run(capsys, "splitting", p)
    assert code == 0 and rep["splitting"] == {"degrees": [-3], "rank": 1, "degree": -3}


def test_census(capsys):
    code, rep, _ = run(capsys, "census", "--w", "2,2,2,2,2", "--alpha", "2,1,1,1,1,1",
                       "--samples", 40, "--seed", 1, "--shards", 2)
    assert code == 0 and rep["census"]["histogram"] == {"0": 40}
    again = run(capsys, "census", "--w", "2,2,2,2,2", "--alpha", "2,1,1,1,1,1",
                "--samples", 40, "--seed", 1, "--shards", 2)[1]
    assert strip_time(again) == strip_time(rep)


def test_moment_residual(tmp_path, capsys):
    q = build_squid(SquidShape(StarShape((2, 2)), ((1, 0), (0, 1))))
    # alpha_0 = 3 - 1 = 2, so every multiplicity is 1 and the residue sum is 1 = alpha_inf
    a = {"inf": 1, 0: 3, (1, 1): 1, (2, 1): 1}
    X = random_point(q, a, np.random.default_rng(0))
    point = write(tmp_path, "x.json", X.to_dict())
    zeta = json.dumps({"1,1": 0.5, "1,2": 0.0, "2,1": 0.5, "2,2": 0.0})
    code, rep, _ = run(capsys, "moment-residual", point, "--zeta", zeta)
    assert code == 0 and rep["moment"]["residual"] > 0
    assert rep["moment"]["target"]["dims"] == {"inf": 1, "0": 3, "1,1": 1, "2,1": 1}
    bad = json.dumps({"1,1": 0.25, "1,2": 0.0, "2,1": 0.5, "2,2": 0.0})
    assert run(capsys, "moment-residual", point, "--zeta", bad)[0] == 2


def test_json_out_and_module_entry(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "dsquiver", "forms", "--w", "2,2,2,2", "--alpha", "2,1,1,1,1",
                           "--json-out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == ""
    assert json.loads(out.read_text())["forms"]["delta"] == 0


def test_digest_tracks_inputs(capsys):
    a = run(capsys, "forms", "--w", "2,2", "--alpha", "1,1,1")[1]["input_digest"]
    b = run(capsys, "forms", "--w", "2,2", "--alpha", "1,1,0")[1]["input_digest"]
    c = run(capsys, "forms", "--w", "2,2", "--alpha", "1,1,1")[1]["input_digest"]
    assert a == c != b
