import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracmag import Field, Grid
from fracmag.io import FormatError, read_csv, read_field, read_json, write_csv, write_field, write_json


@given(st.integers(4, 7), st.floats(0.01, 3.0), st.integers(0, 2**32 - 1))
def test_field_round_trip(tmp_path_factory, n, h, seed):
    rng = np.random.default_rng(seed)
    g = Grid(n, h, tuple(rng.normal(size=3)))
    u = Field(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    path = tmp_path_factory.mktemp("io") / "u.fmag"
    write_field(path, u, 0.25, 2.5)
    v, s, p = read_field(path)
    assert v.grid == g and s == 0.25 and p == 2.5
    np.testing.assert_array_equal(v.values, u.values)
    assert path.stat().st_size == 61 + 16 * n ** 3


def test_bad_files(tmp_path):
    g = Grid(4, 1.0)
    path = tmp_path / "u.fmag"
    write_field(path, Field(g, np.ones(g.shape)))
    data = path.read_bytes()
    (tmp_path / "magic.fmag").write_bytes(b"XMAG1" + data[5:])
    with pytest.raises(FormatError) as e:
        read_field(tmp_path / "magic.fmag")
    assert e.value.offset == 0
    (tmp_path / "short.fmag").write_bytes(data[:-7])
    with pytest.raises(FormatError) as e:
        read_field(tmp_path / "short.fmag")
    assert e.value.offset == len(data) - 7
    (tmp_path / "tiny.fmag").write_bytes(data[:10])
    with pytest.raises(FormatError):
        read_field(tmp_path / "tiny.fmag")


def test_json_and_csv(tmp_path):
    write_json(tmp_path / "a.json", {"x": 1.5, "y": [1, 2]})
    assert read_json(tmp_path / "a.json") == {"x": 1.5, "y": [1, 2]}
    (tmp_path / "e.json").write_text("")
    with pytest.raises(FormatError):
        read_json(tmp_path / "e.json")
    (tmp_path / "b.json").write_text('{"x": ')
    with pytest.raises(FormatError):
        read_json(tmp_path / "b.json")
    write_csv(tmp_path / "t.csv", ["k", "v"], [(0, 0.1), (1, 1 / 3)])
    head, rows = read_csv(tmp_path / "t.csv", ["k", "v"])
    assert head == ["k", "v"] and rows[1][1] == 1 / 3
    with pytest.raises(FormatError):
        read_csv(tmp_path / "t.csv", ["k", "energy"])
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(FormatError):
        read_csv(tmp_path / "e.csv")
    assert not list(tmp_path.glob("*.tmp"))
