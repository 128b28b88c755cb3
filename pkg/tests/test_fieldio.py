import json

import numpy as np
import pytest

from nlsrot.errors import FieldFormatError
from nlsrot.fieldio import field_rows, read_field, write_field
from nlsrot.spectral import Field, Grid

from conftest import random_smooth


@pytest.mark.parametrize("d,N", [(1, 64), (2, 16)])
def test_round_trip_is_exact(tmp_path, rng, d, N):
    f = random_smooth(Grid(d, 7.5, N), rng)
    path = write_field(tmp_path / "f.field", f, "random data")
    header = json.loads(path.read_text())
    assert header["description"] == "random data"
    assert header["data"] == "f.csv"
    back = read_field(path)
    assert back.grid == f.grid
    assert np.array_equal(back.values, f.values)


def test_rows_layout():
    g = Grid(2, 4.0, 8)
    f = Field(g, np.arange(64, dtype=complex).reshape(8, 8))
    rows = field_rows(f)
    assert rows.shape == (64, 4)
    assert rows[1, 0] == g.axis[0] and rows[1, 1] == g.axis[1]
    assert rows[1, 2] == 1.0


def _corrupt(tmp_path, **changes):
    f = Grid(1, 5.0, 16).zeros()
    path = write_field(tmp_path / "g.field", f)
    header = json.loads(path.read_text())
    header.update(changes)
    path.write_text(json.dumps(header))
    return path


@pytest.mark.parametrize("changes", [{"N": 12}, {"N": 32}, {"d": 3}, {"L": 6.0}, {"data": "missing.csv"}])
def test_bad_files_rejected(tmp_path, changes):
    with pytest.raises(FieldFormatError):
        read_field(_corrupt(tmp_path, **changes))


def test_unreadable_header(tmp_path):
    p = tmp_path / "bad.field"
    p.write_text("not json")
    with pytest.raises(FieldFormatError):
        read_field(p)
    p.write_text(json.dumps({"d": 1}))
    with pytest.raises(FieldFormatError):
        read_field(p)
