"""Config parsing, experiment batches and the command-line entry point."""

import numpy as np
import pytest

from v2xsim import cli, engine

GOOD = """\
[scenario]
gap_min_m = 200
gap_max_m = 300

[engine]
num_drops = 1
ttis_per_drop = 200
min_measure_ms = 100

[experiment:a]
receiver = mrc
precoding = off

[experiment:b]
receiver = lmmse
precoding = on
"""


def write(tmp_path, text, name="sim.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


# -- parsing --------------------------------------------------------------

def test_parse_good_config(tmp_path):
    base, specs = cli.parse_config(write(tmp_path, GOOD))
    assert base.scenario.min_gap == 200.0
    assert base.num_drops == 1 and base.ttis_per_drop == 200
    assert [s.label for s in specs] == ["a", "b"]
    assert specs[0].receiver == "mrc" and not specs[0].precoding
    assert specs[1].receiver == "lmmse" and specs[1].precoding


def test_parse_missing_file(tmp_path):
    with pytest.raises(cli.ConfigError, match="not found"):
        cli.parse_config(tmp_path / "nope.ini")


@pytest.mark.parametrize("text,msg", [
    ("[bogus]\nx = 1\n" + GOOD, "unknown section"),
    (GOOD + "[scenario2]\nwheels = 4\n", "unknown section"),
    (GOOD.replace("gap_min_m = 200", "wheels = 4\ngap_min_m = 200"),
     "unknown key"),
    (GOOD + "[experiment: a]\nreceiver = mrc\n", "duplicate"),
    (GOOD + "[experiment:c]\ncolour = red\n", "unknown key"),
    (GOOD + "[experiment:c]\nengine.bogus = 1\n", "unknown override"),
    (GOOD + "[experiment:c]\ngap_min_m = 500\ngap_max_m = 100\n",
     "gap_min_m exceeds"),
    (GOOD + "[experiment:c]\nreceiver = zf\n", "unknown receiver"),
    (GOOD + "[experiment:c]\nprecoding = maybe\n", "on/off"),
    (GOOD.replace("gap_min_m = 200", "lanes = six\ngap_min_m = 200"),
     "invalid value"),
    ("[scenario]\ngap_min_m = 1\n", "no experiments"),
])
def test_parse_errors(tmp_path, text, msg):
    with pytest.raises(cli.ConfigError, match=msg):
        cli.parse_config(write(tmp_path, text))


def test_parse_reference_batch():
    base, specs = cli.parse_config("configs/paper.ini")
    assert len(specs) == 12
    assert base.num_drops == 10 and base.ttis_per_drop == 2000
    labels = [s.label for s in specs]
    for density in ("dense", "safe", "medium", "sparse"):
        for rx in ("mrc", "lmmse", "lmmse_precoded"):
            assert f"{density}_{rx}" in labels
    dense = next(s for s in specs if s.label == "dense_mrc")
    assert (dense.gap_min_m, dense.gap_max_m) == (38.0, 116.0)
    assert dense.config_label == "[38 116]"


def test_experiment_config_sets_antennas(tmp_path):
    base, specs = cli.parse_config(write(tmp_path, GOOD))
    plain = cli.experiment_config(base, specs[0])
    prec = cli.experiment_config(base, specs[1])
    assert plain.scenario.num_tx_antennas == 1 and not plain.precoding
    assert prec.scenario.num_tx_antennas == 2 and prec.precoding
    assert prec.receiver == "lmmse"


def test_experiment_overrides_apply(tmp_path):
    text = GOOD + "[experiment:c]\nreceiver = mrc\nengine.master_seed = 77\n"
    base, specs = cli.parse_config(write(tmp_path, text))
    c = next(s for s in specs if s.label == "c")
    assert cli.experiment_config(base, c).master_seed == 77
    assert cli.experiment_config(base, specs[0]).master_seed != 77


# -- entry point ----------------------------------------------------------

def test_help_lists_all_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--output-dir", "--seed", "--drops", "--ttis",
                 "--experiments", "--threads"):
        assert flag in out


def test_main_bad_config_exits_2(tmp_path, capsys):
    rc = cli.main(["--config", str(tmp_path / "nope.ini")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_main_unknown_experiment_exits_2(tmp_path, capsys):
    path = write(tmp_path, GOOD)
    rc = cli.main(["--config", str(path), "--experiments", "zzz"])
    assert rc == 2
    assert "zzz" in capsys.readouterr().err


def run_main(tmp_path, args, capsys, name="out"):
    path = write(tmp_path, GOOD)
    out = tmp_path / name
    rc = cli.main(["--config", str(path), "--output-dir", str(out)] + args)
    captured = capsys.readouterr()
    return rc, out, captured.out


def test_main_runs_batch_and_writes_outputs(tmp_path, capsys):
    rc, out, stdout = run_main(tmp_path, ["--experiments", "a"], capsys)
    assert rc == 0
    assert (out / "results_table.csv").exists()
    assert (out / "a" / "sinr_samples.csv").exists()
    assert (out / "a" / "vehicle_summary.csv").exists()
    assert not (out / "b").exists()
    # the printed summary carries the values written to the results table
    lines = (out / "results_table.csv").read_text().splitlines()
    assert len(lines) == 2
    row = lines[1].split(",")
    assert row[2] in stdout and row[3] in stdout and row[4] in stdout


def test_main_seed_override_is_deterministic(tmp_path, capsys):
    _, out1, _ = run_main(tmp_path, ["--experiments", "a", "--seed", "9"],
                          capsys, "o1")
    _, out2, _ = run_main(tmp_path, ["--experiments", "a", "--seed", "9"],
                          capsys, "o2")
    _, out3, _ = run_main(tmp_path, ["--experiments", "a", "--seed", "10"],
                          capsys, "o3")
    a = (out1 / "a" / "sinr_samples.csv").read_bytes()
    assert a == (out2 / "a" / "sinr_samples.csv").read_bytes()
    assert a != (out3 / "a" / "sinr_samples.csv").read_bytes()


def test_main_ttis_and_drops_overrides(tmp_path, capsys):
    rc, out, _ = run_main(tmp_path, ["--experiments", "a", "--drops", "2",
                                     "--ttis", "150"], capsys)
    assert rc == 0
    drops = {line.split(",")[0]
             for line in (out / "a" / "sinr_samples.csv")
             .read_text().splitlines()[1:]}
    assert drops == {"0", "1"}


def test_main_output_env_fallback(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, GOOD)
    out = tmp_path / "envout"
    monkeypatch.setenv("V2XSIM_OUTPUT", str(out))
    rc = cli.main(["--config", str(path), "--experiments", "a"])
    capsys.readouterr()
    assert rc == 0
    assert (out / "results_table.csv").exists()


def test_threaded_run_matches_serial(tmp_path, capsys):
    _, serial, _ = run_main(tmp_path, ["--drops", "2"], capsys, "serial")
    _, threaded, _ = run_main(tmp_path, ["--drops", "2", "--threads", "2"],
                              capsys, "threaded")
    for rel in ("results_table.csv", "a/sinr_samples.csv",
                "a/vehicle_summary.csv", "b/sinr_samples.csv",
                "b/vehicle_summary.csv"):
        assert (serial / rel).read_bytes() == (threaded / rel).read_bytes()
