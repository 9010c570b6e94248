import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from semdot.io import (HISTORY_COLUMNS, read_design_field, read_history, write_boundary_svg,
                       write_design_field, write_history, write_json)
from semdot.mesh import Mesh
from semdot.optimize import IterationRecord, RunHistory

SVG = "{http://www.w3.org/2000/svg}"


def test_empty_history_is_header_only(tmp_path):
    path = write_history(RunHistory(), tmp_path / "h.csv")
    assert path.read_text() == ",".join(HISTORY_COLUMNS) + "\n"


def test_history_formatting(tmp_path):
    h = RunHistory()
    h.append(IterationRecord(1, 21.104912345, 0.29999999996, 0.0012345678, 0.0, 1.0, 0.4567891, 12.5))
    h.append(IterationRecord(2, 1234567.8, 0.3, 1e-7, 0.25, 5000.0, 0.5, 1000.0))
    lines = write_history(h, tmp_path / "h.csv").read_text().splitlines()
    assert lines[1] == "1,21.1049,0.300000,0.00123457,0.00000,1.00000,0.456789,12.5000"
    assert lines[2] == "2,1234570,0.300000,0.000000100000,0.250000,5000.00,0.500000,1000.00"
    back = read_history(tmp_path / "h.csv")
    assert back["iter"].tolist() == [1, 2]
    assert back["objective"][0] == pytest.approx(21.1049)


def test_two_by_two_solid_text(tmp_path):
    p = write_design_field(np.ones(4), Mesh(2, 2), tmp_path / "d.txt")
    assert p.read_text() == "1 1\n1 1\n"


@pytest.mark.parametrize("ext", ["txt", "vti"])
def test_design_field_round_trip(tmp_path, rng, ext):
    mesh = Mesh(7, 3)
    f = rng.uniform(0, 1, mesh.n_elements) ** 3
    f[[0, 5]] = [1.0, 0.001]
    back = read_design_field(write_design_field(f, mesh, tmp_path / f"d.{ext}"))
    assert np.array_equal(back, f)


def test_text_layout_puts_top_row_first(tmp_path):
    mesh = Mesh(3, 2)
    f = np.array([0, 0, 0, 1, 1, 1.0])
    text = write_design_field(f, mesh, tmp_path / "d.txt").read_text()
    assert text.splitlines() == ["1 1 1", "0 0 0"]


def test_vti_structure(tmp_path):
    mesh = Mesh(3, 2)
    root = ET.parse(write_design_field(np.arange(6.0), mesh, tmp_path / "d.vti")).getroot()
    img = root.find("ImageData")
    assert img.get("WholeExtent") == "0 3 0 2 0 0"
    assert root.find("./ImageData/Piece/CellData/DataArray").get("Name") == "density"


def test_design_field_errors(tmp_path):
    with pytest.raises(ValueError, match="format"):
        write_design_field(np.ones(4), Mesh(2, 2), tmp_path / "d.png")
    with pytest.raises(ValueError):
        write_design_field(np.ones(5), Mesh(2, 2), tmp_path / "d.txt")
    with pytest.raises(OSError):
        write_design_field(np.ones(4), Mesh(2, 2), tmp_path / "missing" / "d.txt")


def test_empty_svg(tmp_path):
    root = ET.parse(write_boundary_svg([], Mesh(4, 2), tmp_path / "b.svg")).getroot()
    assert root.get("viewBox") == "0 0 4 2"
    assert root.findall(f"{SVG}path") == []


def test_square_contour_svg(tmp_path):
    sq = np.array([[1, 1], [3, 1], [3, 2], [1, 2], [1, 1.0]])
    hole = sq[::-1] * 0.5 + 0.5
    root = ET.parse(write_boundary_svg([hole, sq, np.array([[0, 0], [1, 1.0]])], Mesh(4, 2),
                                       tmp_path / "b.svg")).getroot()
    paths = root.findall(f"{SVG}path")
    assert len(paths) == 3
    outer = paths[0]
    assert outer.get("d").startswith("M 1 1 L 3 1") and outer.get("d").endswith("Z")
    assert outer.get("fill") == "black" and outer.get("fill-rule") == "evenodd"
    assert paths[1].get("fill") == "white"
    assert paths[2].get("fill") == "none"
    assert float(outer.get("stroke-width")) == pytest.approx(0.1)


def test_writers_are_deterministic(tmp_path, rng):
    mesh = Mesh(4, 4)
    f = rng.uniform(size=16)
    a = write_design_field(f, mesh, tmp_path / "a.vti").read_bytes()
    b = write_design_field(f, mesh, tmp_path / "b.vti").read_bytes()
    assert a == b


def test_json_handles_numpy(tmp_path):
    p = write_json({"a": np.float64(1.5), "b": np.arange(3), "c": tmp_path}, tmp_path / "r.json")
    assert json.loads(p.read_text())["b"] == [0, 1, 2]
