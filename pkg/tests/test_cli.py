import os
import subprocess
import sys

import pytest

from tempwave.cli import KEYS, build_parser, dispatch, main, parse_config
from tempwave.errors import ConfigError


def test_empty_config_defaults():
    cfg = parse_config("")
    p = cfg.params
    assert (p.T, p.kappa, p.C) == (10.0, 1.0, 1.0)
    assert cfg.samples == 400 and cfg.resonance_c == 1.0


def test_table2_row3_config():
    cfg = parse_config("h = 0.342\nl = 0.9  # spacing\n\ndelta = 1e-3\n")
    assert cfg.params.alpha == pytest.approx(0.242, abs=1e-12)


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("h = 1.5", 1, "(0, 1]"),
        ("T = 10\nbogus = 3", 2, "unknown key"),
        ("\n\ndelta = abc", 3, "cannot parse"),
        ("kappa 2", 1, "key = value"),
        ("C = -1", 1, "non-negative"),
        ("samples = 10\nt_min = 3\nt_max = 1", 3, "t_max"),
    ],
)
def test_config_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert str(info.value).startswith(f"line {line}:")
    assert fragment in str(info.value)


def test_help_lists_every_key(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    for key, (_, default, units, _, _) in KEYS.items():
        assert f"  {key} " in text
        assert f"[{units}]" in text
    assert "default: 10.0" in text


def run(tmp_path, text, *args):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(text)
    return main(["--config", str(cfg), "--out", str(tmp_path / "out"), *args])


def test_tables_exit_zero(tmp_path):
    assert run(tmp_path, "", "tables") == 0
    assert (tmp_path / "out" / "tables" / "table1.csv").exists()
    assert (tmp_path / "out" / "tables" / "table2.csv").exists()


def test_bad_config_exit_one(tmp_path, capsys):
    assert run(tmp_path, "h = 1.5\n", "tables") == 1
    assert "line 1" in capsys.readouterr().err


def test_missing_subcommand(tmp_path):
    assert run(tmp_path, "") == 1


def test_subcommand_from_config_and_flag(tmp_path):
    assert run(tmp_path, "subcommand = effective\nh = 0.717\nl = 0.9\n") == 0
    assert (tmp_path / "out" / "traces" / "run_effective.csv").exists()
    assert run(tmp_path, "name = p\ndelta = 0.05\nl = 0.5", "--subcommand", "profile") == 0
    assert (tmp_path / "out" / "traces" / "p_profile.csv").exists()


def test_compare_without_steps(tmp_path):
    assert run(tmp_path, "C = 0\ndelta = 0.01\nl = 0.5\nname = free\n", "compare") == 0
    traces = tmp_path / "out" / "traces"
    values = [(traces / f"free_{k}.csv").read_text().splitlines()[1:]
              for k in ("incident", "oracle", "foldy_lax", "effective")]
    rows = [[list(map(float, line.split(","))) for line in v] for v in values]
    for other in rows[1:]:
        assert max(abs(a - b) for r, s in zip(rows[0], other) for a, b in zip(r, s)) < 1e-12


def test_foldy_lax_over_capacity_exit_two(tmp_path):
    assert run(tmp_path, "h = 0.1\nl = 0.9\nmax_unknowns = 1000\n", "foldy-lax") == 2


def test_foldy_lax_with_nystrom(tmp_path):
    assert run(tmp_path, "delta = 0.01\nl = 0.5\nnodes_per_step = 2\nsamples = 50\n", "foldy-lax") == 0
    assert (tmp_path / "out" / "traces" / "run_nystrom.csv").exists()


def test_profile_error_exit_one(tmp_path):
    assert run(tmp_path, "T = 1\ndelta = 0.5\nl = 1\n", "profile") == 1


def test_oracle_and_sweep(tmp_path):
    assert run(tmp_path, "delta = 0.01\nl = 0.5\nsamples = 50\n", "oracle") == 0
    assert run(tmp_path, "sweep_metric = coefficient\nname = c2\n", "sweep") == 0
    fit = (tmp_path / "out" / "sweeps" / "c2_fit.csv").read_text().splitlines()
    assert fit[1].endswith("pass")


def test_same_config_same_bytes(tmp_path):
    text = "delta = 0.01\nl = 0.5\nsamples = 80\n"
    a, b = tmp_path / "a", tmp_path / "b"
    (tmp_path / "c.cfg").write_text(text)
    for d in (a, b):
        assert main(["compare", "--config", str(tmp_path / "c.cfg"), "--out", str(d)]) == 0
    for f in sorted(a.rglob("*")):
        if f.is_file():
            assert f.read_bytes() == (b / f.relative_to(a)).read_bytes()


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TEMPWAVE_OUT", str(tmp_path / "env"))
    cfg = parse_config("subcommand = tables")
    assert dispatch(cfg) == 0
    assert (tmp_path / "env" / "tables" / "table1.csv").exists()


def test_module_entry_point(tmp_path):
    env = dict(os.environ, TEMPWAVE_OUT=str(tmp_path / "m"))
    proc = subprocess.run([sys.executable, "-m", "tempwave", "tables"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert "reproduced" in proc.stdout


def test_parser_choices():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["nonsense"])
