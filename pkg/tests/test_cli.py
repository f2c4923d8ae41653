import json
import textwrap

import numpy as np

from wceks import cli
from wceks.oracles import DomainExhaustedError

RUN_FILES = (
    "snapshots.csv",
    "timeseries.csv",
    "oracle.csv",
    "errors.csv",
    "summary.json",
    "manifest.json",
)


def _run(argv):
    return cli.main(argv)


def test_run_artifacts(tmp_path):
    out = tmp_path / "runs"
    code = _run(
        ["run", "--problem", "tp1", "--seed", "7", "--I", "8", "--dt", "0.01",
         "--out", str(out)]
    )
    assert code == 0
    run_dir = out / "tp1_seed7"
    for name in RUN_FILES:
        assert (run_dir / name).exists(), name
    summary = json.loads((run_dir / "summary.json").read_text())
    assert set(summary) == {"max_rel", "slope", "flagged"}
    assert summary["max_rel"] > 0.0
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["problem"] == "tp1"
    assert manifest["seed"] == 7
    assert manifest["total_count"] == 8
    # every csv embeds the manifest echo in its header
    for name in RUN_FILES[:4]:
        lines = (run_dir / name).read_text().splitlines()
        assert lines[0].startswith("# schema: wceks-csv/")
        assert json.loads(lines[1].removeprefix("# manifest: ")) == manifest


def test_run_deterministic(tmp_path):
    out = tmp_path / "runs"
    argv = ["run", "--problem", "tp1", "--seed", "3", "--I", "6", "--dt", "0.01",
            "--out", str(out)]
    assert _run(argv) == 0
    run_dir = out / "tp1_seed3"
    first = {name: (run_dir / name).read_bytes() for name in RUN_FILES}
    assert _run(argv) == 0
    for name in RUN_FILES:
        assert (run_dir / name).read_bytes() == first[name], name


def test_linear_realizations(tmp_path):
    out = tmp_path / "runs"
    for seed in range(4):
        code = _run(
            ["run", "--problem", "linear_test", "--seed", str(seed), "--I", "8",
             "--out", str(out)]
        )
        assert code == 0
        assert (out / f"linear_test_seed{seed}" / "errors.csv").exists()
    assert len(list(out.iterdir())) == 4


def test_snapshot_and_probe_content(tmp_path):
    out = tmp_path / "runs"
    _run(["run", "--problem", "tp2", "--seed", "1", "--I", "6", "--dt", "0.01",
          "--snapshots", "1,3", "--out", str(out)])
    run_dir = out / "tp2_seed1"
    rows = [l.split(",") for l in (run_dir / "snapshots.csv").read_text().splitlines()[3:]]
    times = sorted({float(r[0]) for r in rows})
    assert times == [1.0, 3.0]
    ts = (run_dir / "timeseries.csv").read_text().splitlines()
    assert ts[2] == "t,wce_re,wce_im,oracle_re,oracle_im"
    assert len(ts) == 3 + 301  # header lines + every time level
    errs = (run_dir / "errors.csv").read_text().splitlines()
    assert errs[2] == "t,abs,rel"


def test_manifest_echoes_resolved_grid(tmp_path):
    out = tmp_path / "runs"
    assert _run(["run", "--problem", "tp1", "--seed", "0", "--I", "4",
                 "--oracle", "none", "--out", str(out)]) == 0
    manifest = json.loads((out / "tp1_seed0" / "manifest.json").read_text())
    assert manifest["dt"] == 0.005
    assert manifest["dx"] == 0.2


def test_oracle_none(tmp_path):
    out = tmp_path / "runs"
    code = _run(["run", "--problem", "tp1", "--seed", "0", "--I", "4", "--dt", "0.01",
                 "--oracle", "none", "--out", str(out)])
    assert code == 0
    run_dir = out / "tp1_seed0"
    assert (run_dir / "snapshots.csv").exists()
    assert not (run_dir / "oracle.csv").exists()
    assert not (run_dir / "errors.csv").exists()
    assert not (run_dir / "summary.json").exists()
    ts = (run_dir / "timeseries.csv").read_text().splitlines()
    assert ts[2] == "t,wce_re,wce_im"


def test_unknown_problem_exit_code(tmp_path):
    assert _run(["run", "--problem", "tp9", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_invalid_override_exit_code(tmp_path):
    # dt that does not divide the horizon is a config error
    code = _run(["run", "--problem", "tp1", "--dt", "0.7", "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG


def test_divergence_exit_code(tmp_path):
    with np.errstate(over="ignore", invalid="ignore"):
        code = _run(["run", "--problem", "tp1", "--dx", "0.05", "--I", "2",
                     "--out", str(tmp_path)])
    assert code == cli.EXIT_DIVERGENCE


def test_domain_exhausted_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise DomainExhaustedError("shift left the grid")

    monkeypatch.setattr(cli, "moving_frame_solve", boom)
    code = _run(["run", "--problem", "tp1", "--seed", "0", "--I", "4", "--dt", "0.01",
                 "--out", str(tmp_path)])
    assert code == cli.EXIT_DOMAIN


def test_config_file_run(tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text(
        textwrap.dedent(
            """
            problem = "tp1"
            dt = 0.01
            seed = 2
            total_count = 6
            gaussian_count = 6
            """
        )
    )
    out = tmp_path / "runs"
    assert _run(["run", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "tp1_seed2" / "manifest.json").read_text())
    assert manifest["seed"] == 2
    assert manifest["total_count"] == 6
    assert manifest["config"] == str(cfg)


def test_cli_flags_override_config(tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text('problem = "tp1"\nseed = 2\n')
    out = tmp_path / "runs"
    assert _run(["run", "--config", str(cfg), "--seed", "9", "--I", "4",
                 "--dt", "0.01", "--out", str(out)]) == 0
    assert (out / "tp1_seed9").exists()


def test_sweep_table(tmp_path):
    out = tmp_path / "runs"
    code = _run(["sweep", "--problem", "linear_test", "--I", "8",
                 "--axis", "dt", "--values", "0.005,0.0025", "--out", str(out)])
    assert code == 0
    table = (out / "linear_test_sweep_dt" / "sweep.csv").read_text().splitlines()
    assert table[2] == "axis,value,terminal_abs,max_rel,slope"
    rows = [r.split(",") for r in table[3:]]
    assert len(rows) == 2
    assert [r[0] for r in rows] == ["dt", "dt"]
    assert [float(r[1]) for r in rows] == [0.005, 0.0025]


def test_sweep_divergence_aborts(tmp_path):
    # dt = 0.01 on the linear grid sits outside the scheme's stability
    # interval while staying under the coarse warning threshold; the runaway
    # guard must stop the sweep rather than record garbage rows
    code = _run(["sweep", "--problem", "linear_test", "--I", "4",
                 "--axis", "dt", "--values", "0.01", "--out", str(tmp_path)])
    assert code == cli.EXIT_DIVERGENCE


def test_sweep_truncation_axis(tmp_path):
    out = tmp_path / "runs"
    code = _run(["sweep", "--problem", "linear_test", "--axis", "I",
                 "--values", "4,8", "--out", str(out)])
    assert code == 0
    rows = (out / "linear_test_sweep_I" / "sweep.csv").read_text().splitlines()[3:]
    assert len(rows) == 2


def test_sweep_empty_values(tmp_path):
    code = _run(["sweep", "--problem", "tp1", "--axis", "dt", "--values", ",",
                 "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG


def test_sweep_stability_refusal(tmp_path):
    code = _run(["sweep", "--problem", "tp1", "--I", "2", "--axis", "dx",
                 "--values", "0.1", "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG
    # --force pushes through and the march then diverges
    with np.errstate(over="ignore", invalid="ignore"):
        code = _run(["sweep", "--problem", "tp1", "--I", "2", "--axis", "dx",
                     "--values", "0.1", "--force", "--out", str(tmp_path)])
    assert code == cli.EXIT_DIVERGENCE


def test_env_var_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "from_env"))
    assert _run(["run", "--problem", "tp1", "--seed", "0", "--I", "4",
                 "--dt", "0.01"]) == 0
    assert (tmp_path / "from_env" / "tp1_seed0" / "manifest.json").exists()
