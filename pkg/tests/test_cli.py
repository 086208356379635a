import json

import pytest

from fusionlab import cli
from fusionlab.verification import RunReport


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


# -- figure-mapped commands ---------------------------------------------------------


def test_mermin_exact_value(capsys):
    data = run_json(capsys, "mermin", "--overlap", "0.775", "--shots", "0")
    assert data["statistics"]["abs_a"] == pytest.approx(3.10, abs=1e-10)
    assert data["statistics"]["verdict"] == "genuine_tripartite"
    assert data["settings"]["seed"] == 1


def test_histogram_snr(capsys):
    data = run_json(capsys, "histogram", "--white-noise", "0.125", "--shots", "0")
    assert data["statistics"]["snr_exact"] == pytest.approx(29.0, abs=1e-9)
    assert data["probabilities"]["+H+"] == pytest.approx(0.453125, abs=1e-12)


def test_fuse_ideal(capsys):
    data = run_json(capsys, "fuse", "--overlap", "1", "--white-noise", "0")
    assert data["statistics"]["fidelity_to_cluster"] == pytest.approx(1.0, abs=1e-10)
    assert data["statistics"]["success_probability"] == pytest.approx(0.5, abs=1e-12)
    assert data["probabilities"]["failure"] == pytest.approx(0.5, abs=1e-12)


def test_fuse_minus_outcome(capsys):
    data = run_json(capsys, "fuse", "--outcome", "-")
    assert data["statistics"]["fidelity_to_cluster"] == pytest.approx(1.0, abs=1e-10)


def test_hom_scan_defaults(capsys):
    data = run_json(capsys, "hom-scan", "--overlap", "0.78")
    assert len(data["settings"]["delays_fs"]) == 21
    assert data["statistics"]["zero_delay_visibility"] == pytest.approx(0.78, abs=1e-10)


def test_correlations_command(capsys):
    data = run_json(capsys, "correlations", "--bases", "x",
                    "--fixed-angle-deg", "45", "--overlap", "1",
                    "--swept-angles-deg", "0,45,90,135")
    assert data["settings"]["kept_outcome"] == "+"
    assert data["probabilities"]["45.0"]["tt"] == pytest.approx(0.5, abs=1e-10)
    assert data["probabilities"]["135.0"]["tt"] == pytest.approx(0.0, abs=1e-10)


def test_graph_command(capsys):
    data = run_json(capsys, "graph", "--target-length", "5", "--measure-x", "3")
    assert data["statistics"]["adjacency"].splitlines() == \
        ["{1} -- {2,4}", "{2,4} -- {5}"]
    assert data["statistics"]["n_logical_vertices"] == 3


def test_resources_command(capsys):
    data = run_json(capsys, "resources", "--target-length", "3",
                    "--trials", "4000", "--seed", "7")
    assert data["statistics"]["mean_cost"] == pytest.approx(4.0, abs=0.2)
    assert sum(data["counts"].values()) == 4000


# -- config handling ---------------------------------------------------------------


def test_unknown_config_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("overlpa = 0.9\n")
    code, _, err = run(capsys, "fuse", "--config", str(cfg))
    assert code == 2
    assert "overlpa" in err


def test_out_of_range_value_exit_2(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("white_noise = 1.5\n")
    code, _, err = run(capsys, "histogram", "--config", str(cfg))
    assert code == 2
    assert "white_noise" in err


def test_bad_strategy_exit_2(capsys):
    code, _, err = run(capsys, "resources", "--target-length", "1", "--trials", "10")
    assert code == 2
    assert "target_length" in err


def test_config_file_values_used(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\noverlap = 0.775\nshots = 0\nseed = 9\n")
    data = run_json(capsys, "mermin", "--config", str(cfg))
    assert data["statistics"]["abs_a"] == pytest.approx(3.10, abs=1e-10)
    assert data["settings"]["seed"] == 9


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("overlap = 0.5\n")
    data = run_json(capsys, "fuse", "--config", str(cfg), "--overlap", "1")
    assert data["statistics"]["purity"] == pytest.approx(1.0, abs=1e-12)


def test_empty_config_is_all_defaults(tmp_path, capsys):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("")
    data = run_json(capsys, "fuse", "--config", str(cfg))
    assert data["settings"]["coherence_time_fs"] == 740.0
    assert data["statistics"]["fidelity_to_cluster"] == pytest.approx(1.0, abs=1e-10)


def test_overlap_beats_delay_with_warning(capsys):
    code, out, err = run(capsys, "fuse", "--overlap", "1", "--delay-fs", "740")
    assert code == 0
    assert "overlap wins" in err
    data = json.loads(out)
    assert data["statistics"]["effective_overlap"] == 1.0


def test_malformed_config_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("overlap 0.9\n")
    code, _, err = run(capsys, "fuse", "--config", str(cfg))
    assert code == 2


# -- outputs -------------------------------------------------------------------------


def test_byte_identical_reruns(capsys):
    argv = ["mermin", "--overlap", "0.9", "--shots", "500", "--seed", "33"]
    _, out1, _ = run(capsys, *argv)
    _, out2, _ = run(capsys, *argv)
    assert out1 == out2


def test_out_file_and_csv(tmp_path, capsys):
    out = tmp_path / "scan.json"
    delays = ",".join(str(100.0 * k) for k in range(-10, 11))
    code, _, err = run(capsys, "hom-scan", f"--delays={delays}",
                       "--out", str(out), "--csv")
    assert code == 0, err
    report = RunReport.from_json_bytes(out.read_bytes())
    assert report.experiment == "hom_scan"
    csv_lines = (tmp_path / "scan.csv").read_text().splitlines()
    assert len(csv_lines) == 22  # header + 21 scan points


def test_plot_written(tmp_path, capsys):
    out = tmp_path / "dip.json"
    code, _, err = run(capsys, "hom-scan", "--out", str(out), "--plot")
    assert code == 0, err
    png = (tmp_path / "dip.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_plot_many_commands(tmp_path, capsys):
    for argv in (["fuse"], ["histogram", "--shots", "200"],
                 ["mermin", "--shots", "100"],
                 ["correlations"], ["graph", "--target-length", "4"],
                 ["resources", "--trials", "200"]):
        out = tmp_path / f"{argv[0]}.json"
        code, _, err = run(capsys, *argv, "--out", str(out), "--plot", "--csv")
        assert code == 0, (argv, err)
        assert (tmp_path / f"{argv[0]}.png").exists()
        assert (tmp_path / f"{argv[0]}.csv").exists()


def test_csv_without_out_exit_2(capsys):
    code, _, err = run(capsys, "fuse", "--csv")
    assert code == 2
    assert "--out" in err


def test_stdout_json_round_trips(capsys):
    code, out, _ = run(capsys, "histogram", "--shots", "1000", "--seed", "5")
    assert code == 0
    report = RunReport.from_dict(json.loads(out))
    assert report.to_json_bytes().decode() == out
