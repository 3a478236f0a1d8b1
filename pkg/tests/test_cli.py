import pathlib

from motesim.cli import main

EXAMPLE = pathlib.Path(__file__).resolve().parents[1] / "scenarios" / \
    "example.yaml"


def write_short_scenario(tmp_path):
    text = EXAMPLE.read_text().replace("horizon_s: 3601.0",
                                       "horizon_s: 31.0")
    path = tmp_path / "short.yaml"
    path.write_text(text)
    return path


def test_validate_only(tmp_path, capsys):
    path = write_short_scenario(tmp_path)
    assert main(["run", str(path), "--validate-only"]) == 0
    assert "scenario OK" in capsys.readouterr().out


def test_run_writes_reports(tmp_path, capsys):
    path = write_short_scenario(tmp_path)
    out_dir = tmp_path / "out"
    assert main(["run", str(path), "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "packets.csv").exists()
    assert (out_dir / "links.csv").exists()
    assert (out_dir / "energy.csv").exists()
    assert "sent 3 delivered 3" in capsys.readouterr().out


def test_run_text_format(tmp_path):
    path = write_short_scenario(tmp_path)
    out_dir = tmp_path / "out"
    assert main(["run", str(path), "--format", "text",
                 "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "report.txt").exists()


def test_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(EXAMPLE.read_text().replace("period_s: 10.0",
                                               "period_s: 0.1"))
    assert main(["run", str(bad)]) == 1
    assert "scenario error" in capsys.readouterr().err


def test_missing_file_exit_code(capsys):
    assert main(["run", "/no/such/file.yaml"]) == 1
    assert "scenario error" in capsys.readouterr().err


def test_unknown_key_exit_code(tmp_path, capsys):
    bad = tmp_path / "typo.yaml"
    bad.write_text(EXAMPLE.read_text().replace("seed: 42", "sede: 42"))
    assert main(["run", str(bad)]) == 1


def test_range_sweep_cli(tmp_path, capsys):
    out_dir = tmp_path / "sweep"
    assert main(["range-sweep", "--distances", "1,600", "--packets", "3",
                 "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "sweep.csv").exists()
    out = capsys.readouterr().out
    assert "pdr=1.000" in out


def test_power_profile_cli(tmp_path, capsys):
    out_dir = tmp_path / "profile"
    assert main(["power-profile", "--cycles", "2",
                 "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "energy.csv").exists()
    assert (out_dir / "exchanges.csv").exists()
    assert "exchanges completed: 2/2" in capsys.readouterr().out


def test_seed_override(tmp_path, capsys):
    path = write_short_scenario(tmp_path)
    text = path.read_text().replace("shadowing_sigma_db: 0.0",
                                    "shadowing_sigma_db: 3.0")
    path.write_text(text)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    out_c = tmp_path / "c"
    assert main(["run", str(path), "--seed", "7", "--out-dir",
                 str(out_a)]) == 0
    assert main(["run", str(path), "--seed", "7", "--out-dir",
                 str(out_b)]) == 0
    assert main(["run", str(path), "--seed", "8", "--out-dir",
                 str(out_c)]) == 0
    packets_a = (out_a / "packets.csv").read_bytes()
    assert packets_a == (out_b / "packets.csv").read_bytes()
    assert packets_a != (out_c / "packets.csv").read_bytes()
