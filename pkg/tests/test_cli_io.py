import io
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixture_ap import cli_io
from mixture_ap.__main__ import main
from mixture_ap.errors import MismatchedSeries, ParseError, ValidationError

FAST = """
mode = homogeneous
eps = 0.01
dt = 0.01
t_end = 0.02
seed = 3
[model]
kind = fpl
[kernel]
gamma = 0
[init]
perturbation = 0.05
"""


def write(tmp_path, text, name="run.cfg", csv="out.csv"):
    p = tmp_path / name
    p.write_text(text + f"\n[output]\ncsv = {tmp_path / csv}\n")
    return p


def test_defaults_and_sections():
    cfg = cli_io.parse_config("eps = 0.5\n[grid]\nn = 10  # comment\n[light]\nu = 0.1, 0, 0\n")
    assert cfg["eps"] == 0.5 and cfg["grid.n"] == 10 and cfg["light.u"] == (0.1, 0.0, 0.0)
    assert cfg["heavy.T"] == 2.0 and cfg["model.kind"] == "boltzmann"


@pytest.mark.parametrize("text, line", [("eps 0.1", 1), ("\n\nfoo = 1", 3), ("eps = 1\neps = 2", 2)])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        cli_io.parse_config(text)
    assert exc.value.line == line


@pytest.mark.parametrize("text, field", [
    ("eps = -1", "eps"), ("[grid]\nn = 7", "grid.n"), ("dt = abc", "dt"),
    ("[model]\nkind = lbm", "model.kind"), ("[kernel]\ngamma = 3", "kernel.gamma"),
    ("mode = inhomogeneous\ndt = 1", "dt"), ("[penalty]\nbeta0 = 0.5", "penalty.beta0")])
def test_validation_errors_name_field(text, field):
    with pytest.raises(ValidationError) as exc:
        cli_io.parse_config(text)
    assert exc.value.field == field


@settings(max_examples=25, deadline=None)
@given(eps=st.floats(1e-4, 10.0), n=st.sampled_from([4, 6, 8, 12]), b0=st.floats(0.01, 5.0),
       u=st.lists(st.floats(-1, 1), min_size=3, max_size=3), well=st.booleans())
def test_config_lines_roundtrip(eps, n, b0, u, well):
    cfg = cli_io.ScenarioConfig({**{k: v[1] for k, v in cli_io.SCHEMA.items()}})
    cfg = cfg.replace(eps=eps, grid__n=n, kernel__b0=b0, light__u=tuple(u), init__well_prepared=well)
    again = cli_io.parse_config("\n".join(cfg.lines()))
    assert again.values == cfg.values


def test_run_is_deterministic(tmp_path):
    cfg = cli_io.parse_config(FAST)
    a, b = io.StringIO(), io.StringIO()
    assert cli_io.run_scenario(cfg, a) == cli_io.EXIT_OK
    assert cli_io.run_scenario(cfg, b) == cli_io.EXIT_OK
    assert a.getvalue() == b.getvalue()
    cols, rows, trunc = cli_io.read_series(a)
    assert cols == cli_io.CSV_COLUMNS and rows.shape == (3, len(cols)) and not trunc
    assert "# seed = 3" in a.getvalue()
    # the tracked densities are conserved and reported
    assert np.allclose(rows[:, cols.index("mass_L")], rows[0, cols.index("mass_L")], rtol=1e-12)


def test_solver_failure_truncates(tmp_path):
    cfg = cli_io.parse_config(FAST + "\n[penalty]\ncg_maxiter = 1\ncg_rtol = 1e-14\n")
    out = io.StringIO()
    assert cli_io.run_scenario(cfg, out) == cli_io.EXIT_SOLVER
    text = out.getvalue()
    assert text.rstrip().splitlines()[-1].startswith("# TRUNCATED: NoConvergence")
    assert cli_io.read_series(out)[2]


def test_snapshot_roundtrip(tmp_path):
    a = np.random.default_rng(0).standard_normal((4, 2, 4, 4, 4))
    p = tmp_path / "s.bin"
    cli_io.write_snapshot(p, a, 0.25, 0.01, 1.0, 6.0)
    b, meta = cli_io.read_snapshot(p)
    assert np.array_equal(a, b)
    assert meta == {"t": 0.25, "eps": 0.01, "x_length": 1.0, "v_max": 6.0}
    raw = p.read_bytes()
    assert raw[:8] == b"MXAPSNP1" and len(raw) == 8 + 8 + 5 * 8 + 32 + a.size * 8
    (tmp_path / "bad.bin").write_bytes(b"nonsense")
    with pytest.raises(ParseError):
        cli_io.read_snapshot(tmp_path / "bad.bin")


def test_run_writes_snapshot(tmp_path):
    p = tmp_path / "snap.cfg"
    p.write_text(FAST + f"\n[output]\ncsv = {tmp_path / 'o.csv'}\nsnapshot = {tmp_path / 'snap'}\n")
    assert main(["run", str(p)]) == 0
    a, meta = cli_io.read_snapshot(tmp_path / "snap_000002.bin")
    assert a.shape == (4, 8, 8, 8) and meta["t"] == pytest.approx(0.02)


def test_oracle_mode(tmp_path):
    cfg = cli_io.parse_config("mode = oracle\ndt = 0.1\nt_end = 1.0\n[kernel]\nsphere_order = 2\n")
    out = io.StringIO()
    assert cli_io.run_scenario(cfg, out) == 0
    cols, rows, _ = cli_io.read_series(out)
    tl, th = rows[:, cols.index("T_L")], rows[:, cols.index("T_H")]
    assert np.all(np.diff(tl) > 0) and np.all(np.diff(th) < 0)
    e = 1.5 * (tl + th)
    assert np.max(np.abs(e - e[0])) <= 1e-12 * e[0]


def test_inhomogeneous_mode():
    cfg = cli_io.parse_config(
        "mode = inhomogeneous\ndt = 0.01\nt_end = 0.01\neps = 0.5\n[mesh]\nnx = 2\ndx = 0.5\n"
        "[model]\nkind = fpl\n[init]\nperturbation = 0.1\n")
    out = io.StringIO()
    assert cli_io.run_scenario(cfg, out) == 0
    cols, rows, _ = cli_io.read_series(out)
    assert rows.shape[0] == 2


def test_compare_runs_and_orders():
    cols = ("t", "T_L")
    a = (cols, np.array([[0.0, 1.0], [1.0, 1.1]]))
    b = (cols, np.array([[0.0, 1.0], [1.0, 1.0]]))
    rep = cli_io.compare_runs(a, b, "0.2")
    assert rep["passed"] and rep["errors"]["T_L"] == pytest.approx(0.1)
    assert not cli_io.compare_runs(a, b, "T_L=0.05")["passed"]
    c = (cols, np.array([[0.0, 1.0], [0.5, 1.0], [1.0, 1.0]]))
    with pytest.raises(MismatchedSeries):
        cli_io.compare_runs(a, c, "0.2")
    assert cli_io.compare_runs(a, c, "0.2,interp")["passed"]
    with pytest.raises(MismatchedSeries):
        cli_io.compare_runs((("t", "x"), a[1]), b, "0.1")
    assert np.allclose(cli_io.observed_orders([0.4, 0.2, 0.1]), [1.0, 1.0])
    assert cli_io.parse_tolspec("T_L=0.05, T_H=0.1, interp") == ({"T_L": 0.05, "T_H": 0.1}, True)
    with pytest.raises(ParseError):
        cli_io.parse_tolspec("interp")


def test_threads_env(monkeypatch):
    monkeypatch.delenv(cli_io.THREADS_ENV, raising=False)
    assert cli_io.set_threads_from_env() is None
    monkeypatch.setenv(cli_io.THREADS_ENV, "1")
    assert cli_io.set_threads_from_env() == 1
    monkeypatch.setenv(cli_io.THREADS_ENV, "0")
    with pytest.raises(ValidationError):
        cli_io.set_threads_from_env()


def test_exit_codes(tmp_path, capsys):
    good = write(tmp_path, FAST, "good.cfg", "good.csv")
    assert main(["run", str(good)]) == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("eps = -1\n")
    assert main(["run", str(bad)]) == 1
    assert main(["run", str(tmp_path / "missing.cfg")]) == 1
    fail = write(tmp_path, FAST + "\n[penalty]\ncg_maxiter = 1\ncg_rtol = 1e-14", "fail.cfg", "fail.csv")
    assert main(["run", str(fail)]) == 2
    g = str(tmp_path / "good.csv")
    assert main(["compare", g, g, "1e-12"]) == 0
    o = write(tmp_path, "dt = 0.01\nt_end = 0.03\n[kernel]\nsphere_order = 2", "o.cfg", "o.csv")
    assert main(["oracle", str(o)]) == 0
    oc = str(tmp_path / "o.csv")
    # different time stamps without interp, then a failed tolerance
    assert main(["compare", g, oc, "1e9"]) == 3
    assert main(["compare", g, oc, "T_L=1e-9,interp"]) == 3
    assert main(["compare", g, oc, "1e9,interp"]) == 0


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mixture_ap", "compare", "x.csv", "y.csv", "0.1"],
                       cwd=tmp_path, capture_output=True, text=True)
    assert r.returncode == 1 and "error" in r.stderr


def test_selftest_verb_passes():
    assert main(["selftest"]) == 0
