import json

import numpy as np
import pytest

from webster_inverse.cli import build_config, build_parser, main, resolve_settings
from webster_inverse.inverse_solver import read_area_csv
from webster_inverse.signal_core import read_impedance_csv

RHO_C = 1.1455 * 351.8


@pytest.fixture(scope="module")
def horn_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("horn")
    assert main(["gen-horn", "uniform", "--area-mm2", "70", "--length-mm", "25",
                 "--out-dir", str(out)]) == 0
    return out


def test_gen_horn_writes_three_files(horn_dir):
    assert {p.name for p in horn_dir.iterdir()} >= {"area.csv", "zec.csv", "ztrans_ref.csv"}
    assert np.allclose(read_area_csv(horn_dir / "area.csv").areas, 70e-6)


def test_gen_horn_exponential_flare(tmp_path):
    assert main(["gen-horn", "exponential", "--a0-mm2", "40", "--flare", "-30",
                 "--length-mm", "30", "--out-dir", str(tmp_path)]) == 0
    a = read_area_csv(tmp_path / "area.csv").areas
    assert a[-1] / a[0] == pytest.approx(np.exp(-30 * 0.03))


def test_gen_horn_missing_flag_is_error(tmp_path, capsys):
    assert main(["gen-horn", "conical", "--r0-mm", "3", "--out-dir", str(tmp_path)]) == 1
    assert "error [ConfigError]" in capsys.readouterr().err


def test_estimate_and_ztrans(horn_dir, tmp_path):
    out = tmp_path / "est"
    code = main(["estimate", str(horn_dir / "zec.csv"), "--f-lim", "20", "--f-cut", "auto",
                 "--out-dir", str(out)])
    assert code in (0, 2)
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["resolved"]["f_cut_hz"] == pytest.approx(27880.0)
    term = json.loads((out / "termination.json").read_text())
    assert abs(term["l_tdrmax_m"] - 25e-3) < 2e-3
    zt = tmp_path / "zt.csv"
    assert main(["ztrans", str(horn_dir / "zec.csv"), str(out / "area.csv"),
                 "--termination-json", str(out / "termination.json"),
                 "--rule", "epsilon_corrected", "--out", str(zt)]) == 0
    assert read_impedance_csv(zt).freqs.size == read_impedance_csv(horn_dir / "zec.csv").freqs.size
    assert main(["ztrans", str(horn_dir / "zec.csv"), str(out / "area.csv"),
                 "--termination-mm", "0", "--out", str(zt)]) == 0
    assert np.array_equal(read_impedance_csv(zt).values,
                          read_impedance_csv(horn_dir / "zec.csv").values)


def test_ztrans_beyond_area(horn_dir, tmp_path, capsys):
    assert main(["ztrans", str(horn_dir / "zec.csv"), str(horn_dir / "area.csv"),
                 "--termination-mm", "500", "--out", str(tmp_path / "z.csv")]) == 1
    assert "TerminationBeyondArea" in capsys.readouterr().err


def test_empty_csv_exit_code(tmp_path, capsys):
    p = tmp_path / "empty.csv"
    p.write_text("")
    assert main(["estimate", str(p), "--out-dir", str(tmp_path)]) == 1
    assert "error [EmptySpectrum]" in capsys.readouterr().err


def test_parse_error_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("frequency_hz,real,imag\n100,1,2\n200,oops,1\n")
    assert main(["estimate", str(p), "--out-dir", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "ParseError" in err and "line 3" in err


def test_config_precedence_and_env_seed(tmp_path, monkeypatch):
    cfg = tmp_path / "c.toml"
    cfg.write_text('f_lim = 12.0\nsurge = "surge2"\ninterval = [5.0, 30.0]\nseed = 4\n')
    parser = build_parser()
    args = parser.parse_args(["estimate", "z.csv", "--config", str(cfg), "--f-lim", "10"])
    s = resolve_settings(args)
    c = build_config(s)
    assert c.f_lim == 10e3 and c.surge == "surge2" and c.interval == pytest.approx((5e-3, 30e-3))
    assert s["seed"] == 4
    monkeypatch.setenv("WEBSTER_INVERSE_SEED", "17")
    assert resolve_settings(parser.parse_args(["estimate", "z.csv"]))["seed"] == 17
    assert resolve_settings(parser.parse_args(["estimate", "z.csv", "--seed", "3"]))["seed"] == 3
    cfg.write_text("bogus = 1\n")
    assert main(["estimate", "z.csv", "--config", str(cfg)]) == 1


def test_roundtrip_uniform_defaults(tmp_path):
    out = tmp_path / "rt.json"
    code = main(["roundtrip", "uniform", "--area-mm2", "70", "--length-mm", "25",
                 "--f-lim", "20", "--out", str(out)])
    assert code in (0, 2)
    rep = json.loads(out.read_text())["items"][0]
    assert rep["lme"]["L_rmse_db"] <= 0.6


def test_sweep_single_cell_and_determinism(tmp_path):
    args = ["sweep", "--f-cut-grid", "28", "--f-sup-grid", "3500", "--f-lim", "20", "--seed", "1"]
    a, b = tmp_path / "a", tmp_path / "b"
    main(args + ["--out-dir", str(a)])
    main(args + ["--out-dir", str(b)])
    text = (a / "L_mlme.csv").read_text()
    assert len(text.strip().splitlines()) == 2
    assert text == (b / "L_mlme.csv").read_text()
    assert (a / "sweep_long.csv").read_bytes() == (b / "sweep_long.csv").read_bytes()


def test_usage_error_is_exit_1_and_verbose_after_subcommand(horn_dir, tmp_path):
    assert main(["estimate"]) == 1
    assert main(["ztrans", str(horn_dir / "zec.csv"), str(horn_dir / "area.csv"),
                 "--termination-mm", "5", "--out", str(tmp_path / "z.csv"), "-v"]) == 0
