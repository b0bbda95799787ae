import io
import json

import pytest

from aqtsim.cli import CSV_HEADER, main, parse_range


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def read_csv(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def test_matrix_beam_splitter():
    code, text = run(["matrix", "--bs", "0.64"])
    assert code == 0
    d = json.loads(text)
    assert d["F_star"] == [[0.0], [pytest.approx(-0.75)]]
    assert d["S_tilde"][0][0] == pytest.approx(0.8) and d["S_tilde"][1][1] == pytest.approx(1.25)
    assert d["S_tilde_symplectic_residual"] < 1e-12


def test_matrix_matched():
    d = json.loads(run(["matrix", "--bs", "1.0"])[1])
    assert d["matching_defect"] == 0 and d["F_star"] == [[0.0], [0.0]]


def test_matrix_two_mode_squeezer_below_one_is_valid():
    code, text = run(["matrix", "--tms", "0.5"])
    assert code == 0 and json.loads(text)["transmittance"] == pytest.approx(0.5)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["matrix"], 2),
        (["matrix", "--bs", "1.5"], 2),
        (["matrix", "--bs", "0.5", "--tms", "2"], 2),
        (["matrix", "--bs", "abc"], 2),
        (["frobnicate"], 2),
        (["matrix", "--bs", "0.0"], 3),
        (["matrix", "--cavity", "1,0.3,4,1,0.2"], 3),
        (["sweep", "--bs", "0.5", "--nu-db", "1:2:1"], 2),
        (["sweep", "--bs", "0.5", "--nu-db", "0:1:2", "--out", "/nonexistent/dir/x.csv"], 4),
        (["verify", "--scenario", "unknown"], 2),
        (["matrix", "--custom", "/nonexistent/file.txt"], 4),
    ],
)
def test_error_exit_codes(argv, code, capsys):
    assert run(argv)[0] == code
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("aqt-sim: error: ")


def test_sweep_fidelity_decreasing():
    code, text = run(["sweep", "--bs", "0.8", "--mu-db", "-10", "--nu-db", "-20:0:21"])
    assert code == 0
    header, rows = read_csv(text)
    assert header == CSV_HEADER and len(rows) == 21
    fid = [float(r["fidelity"]) for r in rows]
    assert all(a > b for a, b in zip(fid, fid[1:]))


def test_sweep_dqt_low_transmittance_has_zero_capacity():
    _, rows = read_csv(run(["sweep", "--bs", "0.1", "--protocol", "dqt", "--nu-db", "-20:0:5"])[1])
    assert all(float(r["capacity_lb"]) == 0 for r in rows)


def test_sweep_tms_below_threshold_positive(tmp_path):
    out = tmp_path / "tms.csv"
    code, _ = run(["sweep", "--tms", "10", "--mu-nu", "0.001:0.03:6", "--mu-db", "-10,-20", "--out", str(out)])
    assert code == 0
    _, rows = read_csv(out.read_text())
    assert len(rows) == 12
    assert all(float(r["capacity_lb"]) > 0 for r in rows)
    assert all(float(r["threshold_mu_nu"]) == pytest.approx(0.03673, abs=1e-5) for r in rows)


def test_sweep_eta_flag():
    _, rows = read_csv(run(["sweep", "--bs", "0.8", "--eta", "0.5", "--nu-db", "-10:0:2"])[1])
    assert float(rows[0]["mu_db"]) == pytest.approx(0.0)


def test_sweep_deterministic_across_workers():
    argv = ["sweep", "--bs", "0.5", "--nu-db", "-15:0:8", "--mu-db", "-10,0"]
    a = run(argv + ["--workers", "1"])[1]
    b = run(argv + ["--workers", "8"])[1]
    assert a == b


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nbs = 0.8\nnu-db = -20:0:3\nmu_db = -10\n")
    _, rows = read_csv(run(["sweep", "--config", str(cfg)])[1])
    assert len(rows) == 3 and rows[0]["T"] == "0.8"
    _, rows = read_csv(run(["sweep", "--config", str(cfg), "--tms", "2", "--mu-db", "0"])[1])
    assert rows[0]["T"] == "2" and rows[0]["mu_db"] == "0"


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(["matrix", "--bs", "0.5", "--config", str(cfg)])[0] == 2


def test_custom_converter_file(tmp_path):
    path = tmp_path / "bs.txt"
    path.write_text("1 1\n0.8 0.6 0 0\n-0.6 0.8 0 0\n0 0 0.8 0.6\n0 0 -0.6 0.8\n")
    d = json.loads(run(["matrix", "--custom", str(path)])[1])
    assert d["transmittance"] == pytest.approx(0.64)
    assert d["F_star"][1][0] == pytest.approx(-0.75)


def test_custom_converter_bad_shape(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 1\n1 0\n0 1\n")
    assert run(["matrix", "--custom", str(path)])[0] == 2


def test_cavity_matrix():
    d = json.loads(run(["matrix", "--cavity", "1,0,4,1"])[1])
    assert d["transmittance"] == pytest.approx(1.0)


def test_capacity_command():
    code, text = run(["capacity", "--bs", "0.8", "--protocol", "dqt"])
    d = json.loads(text)
    assert code == 0 and d["capacity_lb"] == pytest.approx(2.0, abs=0.02)


def test_verify_commands():
    code, text = run(["verify", "--scenario", "teleport-n2", "--n-traj", "100000", "--seed", "3"])
    assert code == 0 and text.strip().endswith("result pass")
    assert run(["verify", "--scenario", "random-symplectic", "--draws", "50"])[0] == 0


def test_verify_deterministic_across_workers():
    argv = ["verify", "--scenario", "minimal-bs", "--n-traj", "200000", "--seed", "12"]
    assert run(argv + ["--workers", "1"])[1] == run(argv + ["--workers", "8"])[1]


def test_parse_range():
    assert parse_range("-20:0:21").size == 21
    assert parse_range("3").tolist() == [3.0]
