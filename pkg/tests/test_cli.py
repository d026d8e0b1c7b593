from __future__ import annotations

from pathlib import Path

import pytest

from fedbalance.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL_CFG = """\
n_samples = 300
dim = 4
model = logistic
eta = 0.05
mu = 200
t_cm = 1.0
P_cm = 1.0
E_tr = 0.02
t_tot = 60
E_tot = 12
rho = 1.0
grad_f_star = 10.0
epsilon = 0
tau_values = 1,3,10
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_CFG)
    return p


@pytest.mark.parametrize("command", ["simulate", "sweep", "bounds", "solve"])
def test_out_is_byte_identical(command, small_cfg, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"{command}{i}.csv"
        assert main([command, "--config", str(small_cfg), "--seed", "5", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] and outs[0]


def test_compare_writes_one_file_per_run(small_cfg, tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--config", str(small_cfg), "--out", str(out)]) == 0
    files = sorted(p.name for p in tmp_path.glob("cmp.*.csv"))
    assert files == ["cmp.optimized.csv", "cmp.tau1.csv", "cmp.tau20.csv"]
    assert "optimized" in capsys.readouterr().out


def test_simulate_stdout_matches_file(small_cfg, tmp_path, capsys):
    main(["simulate", "--config", str(small_cfg)])
    stdout = capsys.readouterr().out
    out = tmp_path / "s.csv"
    main(["simulate", "--config", str(small_cfg), "--out", str(out)])
    assert stdout == out.read_text()
    assert stdout.startswith("round,tau,K,loss,accuracy,cum_delay_s,cum_energy_J,seed\n")


def test_seed_flag_changes_output(small_cfg, capsys):
    main(["simulate", "--config", str(small_cfg), "--seed", "1"])
    a = capsys.readouterr().out
    main(["simulate", "--config", str(small_cfg), "--seed", "2"])
    assert a != capsys.readouterr().out


def test_enforce_budget_flag(tmp_path, capsys):
    p = tmp_path / "c.cfg"
    p.write_text(SMALL_CFG + "tau = 2\nK = 100\n")
    main(["simulate", "--config", str(p)])
    free = capsys.readouterr().out.splitlines()
    main(["simulate", "--config", str(p), "--enforce-budget"])
    capped = capsys.readouterr().out.splitlines()
    assert len(free) == 101 and len(capped) < len(free)
    assert float(capped[-1].split(",")[6]) <= 12.0


def test_solve_reference_config_prints_table_and_note(capsys):
    assert main(["solve", "--config", str(CONFIGS / "svm_iid.cfg")]) == 0
    out = capsys.readouterr().out
    for case in ("energy-binding", "both-binding", "tau-floor", "K-floor"):
        assert case in out
    assert "note:" in out and "schedule: tau=1" in out


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("nonsense = 1\n")
    assert main(["simulate", "--config", str(p)]) == 1
    assert "unknown key" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "absent.cfg")]) == 1


def test_infeasible_budgets_exit_code(tmp_path, capsys):
    p = tmp_path / "tight.cfg"
    p.write_text("t_tot = 0.01\nE_tot = 0.01\nrho = 1\ngrad_f_star = 1\nepsilon = 0\n")
    assert main(["solve", "--config", str(p)]) == 2
    assert "note: no closed-form candidate" in capsys.readouterr().out
