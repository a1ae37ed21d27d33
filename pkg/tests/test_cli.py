from pathlib import Path

import pytest

from limitshape.cli import build_parser, main
from limitshape.artifacts import parse_summary

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


#writes a config next to the run directory
def write_config(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.conf"
    path.write_text(text, encoding="utf-8")
    return path


#a successful run exits 0 and honours --out and --seed
def test_enumerate_exit_zero(tmp_path: Path) -> None:
    out = tmp_path / "out"
    status = main(["enumerate", "--config", str(CONFIGS / "enumerate-222.conf"), "--out", str(out), "--seed", "5"])
    assert status == 0
    summary = parse_summary((out / "summary.txt").read_text())
    assert summary["seed"] == "5"
    assert summary["tilings"] == "20"


#config errors exit 1 with the position of the problem
def test_config_error_exit_one(tmp_path: Path, capsys) -> None:
    path = write_config(tmp_path, "[run]\ncommand = solve\n[mesh]\nresolution = 1\n")
    assert main(["solve", "--config", str(path), "--out", str(tmp_path / "out")]) == 1
    assert capsys.readouterr().err.startswith("error: 4:14: mesh.resolution")
    assert main(["solve", "--config", str(tmp_path / "missing.conf")]) == 1


#inadmissible boundary data exits 2
def test_inadmissible_exit_two(tmp_path: Path, capsys) -> None:
    status = main(["solve", "--config", str(CONFIGS / "inadmissible-slope2.conf"), "--out", str(tmp_path / "out")])
    assert status == 2
    assert "violates the gradient constraint" in capsys.readouterr().err


#an iteration cap that cannot be met exits 3
def test_nonconvergence_exit_three(tmp_path: Path) -> None:
    path = write_config(
        tmp_path,
        "[run]\ncommand = solve\n[mesh]\nresolution = 4\n[boundary]\npreset = explicit\n"
        "polyline = (0, 0), (1, 0), (1, 1), (0, 1)\nvalues = 0, 0.4, -0.3, 0.2\n"
        "[penalty]\nstages = 1\n[tolerances]\nkkt = 1e-30\nmax_iterations = 1\n",
    )
    assert main(["solve", "--config", str(path), "--out", str(tmp_path / "out")]) == 3


#overrides replace keys and the command line names the pipeline
def test_override_and_command(tmp_path: Path) -> None:
    out = tmp_path / "out"
    path = write_config(tmp_path, "[run]\ncommand = solve\n")
    status = main(["enumerate", "--config", str(path), "--out", str(out), "--override", "sampler.region=hexagon 1 2 3"])
    assert status == 0
    assert parse_summary((out / "summary.txt").read_text())["tilings"] == "10"


#usage errors exit with the config-error status
def test_parser_rejects_bad_seed(capsys: pytest.CaptureFixture) -> None:
    parser = build_parser()
    with pytest.raises(SystemExit) as excinfo:
        parser.parse_args(["solve", "--config", "x.conf", "--seed", "-1"])
    assert excinfo.value.code == 1
    with pytest.raises(SystemExit) as excinfo:
        parser.parse_args(["fly", "--config", "x.conf"])
    assert excinfo.value.code == 1
    with pytest.raises(SystemExit) as excinfo:
        main(["solve"])
    assert excinfo.value.code == 1
    assert "--config" in capsys.readouterr().err
    args = parser.parse_args(["sample", "--config", "x.conf", "--override", "a.b=1", "--override", "c.d=2", "--trace"])
    assert args.override == ["a.b=1", "c.d=2"]
    assert args.trace
