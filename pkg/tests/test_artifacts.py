import json
from pathlib import Path

import numpy as np
import pytest

from limitshape.artifacts import (
    MANIFEST,
    PGM_MAX,
    RunArtifacts,
    digest,
    field_csv_text,
    format_cell,
    format_float,
    parse_field_csv,
    parse_summary,
    pgm_bytes,
    summary_text,
    verify_manifest,
)
from limitshape.diagnostics import gradient_magnitude
from limitshape.errors import LimitShapeError, MeshMismatch
from limitshape.mesh import ScalarField, rectangle_mesh


#floats print with 17 significant digits so they read back exactly
def test_format_float_round_trips() -> None:
    for value in (0.1, 1.0 / 3.0, -2.5e-17, 12345.678):
        assert float(format_float(value)) == value
    assert format_float(0.1) == "0.10000000000000001"
    assert format_cell(True) == "true"
    assert format_cell(np.int64(7)) == "7"
    assert format_cell(None) == "none"
    assert format_cell((1, 0.5)) == "1, 0.5"


#field CSV keeps node coordinates and values bit for bit
def test_field_csv() -> None:
    mesh = rectangle_mesh(1.0, 1.0, nx=3)
    field = ScalarField.from_function(mesh, lambda x: np.sin(x[:, 0]) + x[:, 1] / 3.0)
    text = field_csv_text(field)
    assert text.splitlines()[0] == "node_x,node_y,value"
    nodes, values = parse_field_csv(text)
    assert np.array_equal(nodes, mesh.nodes)
    assert np.array_equal(values, field.values)


@pytest.mark.parametrize(
    "text",
    ["", "x,y,value\n0,0,1\n", "node_x,node_y,value\n0,0,1\n1,0,oops\n0,1,2\n", "node_x,node_y,value\n0,0,1\n"],
)
def test_field_csv_errors(text: str) -> None:
    with pytest.raises(MeshMismatch):
        parse_field_csv(text)


def test_summary_text() -> None:
    text = summary_text({"command": "solve", "l2": 0.25, "certified": False})
    assert text == "command = solve\nl2 = 0.25\ncertified = false\n"
    assert parse_summary(text) == {"command": "solve", "l2": "0.25", "certified": "false"}


#16-bit graymap: header with the value range, zero outside the open domain
def test_pgm_bytes() -> None:
    mesh = rectangle_mesh(1.0, 1.0, nx=4)
    field = ScalarField.from_function(mesh, lambda x: x[:, 0] + x[:, 1])
    data = pgm_bytes(field, size=8)
    header = b"P5\n# scale min=0 max=2\n8 8\n65535\n"
    assert data.startswith(header)
    pixels = np.frombuffer(data[len(header):], dtype=">u2").reshape(8, 8)
    assert np.all(pixels[0] == 0)
    assert np.all(pixels[:, 0] == 0)
    inner = pixels[1:-1, 1:-1]
    assert np.all((inner >= 1) & (inner <= PGM_MAX))
    #top rows hold the largest y
    assert inner[0, -1] > inner[-1, 0]



#the gradient raster of an affine field is one flat grey level inside the domain
def test_gradient_raster_is_flat_for_linear_fields() -> None:
    field = ScalarField.linear(rectangle_mesh(1.0, 1.0, nx=6), (0.3, -0.4), 0.2)
    magnitude = gradient_magnitude(field)
    assert np.allclose(magnitude.values, 0.5, atol=1e-12)
    data = pgm_bytes(magnitude, size=16)
    body = data.split(b"\n", 4)[4]
    pixels = np.frombuffer(body, dtype=">u2")
    assert len(pixels) == 256
    assert set(np.unique(pixels[pixels > 0]).tolist()) == {1}

#the manifest pins every emitted file and catches later edits
def test_manifest(tmp_path: Path) -> None:
    artifacts = RunArtifacts(tmp_path / "run")
    artifacts.write_text("a.txt", "first\n")
    artifacts.write_json("meta.json", {"b": np.float64(0.5), "a": np.arange(2)})
    artifacts.write_text("a.txt", "second\n")
    manifest = artifacts.finish()
    assert manifest.name == MANIFEST
    lines = manifest.read_text(encoding="utf-8").splitlines()
    assert [line.split("  ")[1] for line in lines] == ["meta.json", "a.txt"]
    assert lines[1].split("  ")[0] == digest(b"second\n")
    assert json.loads((tmp_path / "run" / "meta.json").read_text()) == {"a": [0, 1], "b": 0.5}
    assert (tmp_path / "run" / "meta.json").read_text().startswith('{\n  "a"')
    assert verify_manifest(tmp_path / "run") == []
    (tmp_path / "run" / "a.txt").write_text("edited\n")
    assert verify_manifest(tmp_path / "run") == ["a.txt"]


#an output directory that cannot be created is reported, not raised as OSError
def test_unwritable_output(tmp_path: Path) -> None:
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(LimitShapeError):
        RunArtifacts(blocker / "sub")
