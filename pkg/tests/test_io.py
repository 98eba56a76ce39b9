"""MLN1 field dumps."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mln import FieldFormatError, Field, Grid3, read_field, write_field
from mln.io import MAGIC


class TestRoundTrip:
    @settings(max_examples=25, deadline=None)
    @given(
        n=st.just(8),
        L=st.floats(0.5, 100.0),
        data=st.data(),
    )
    def test_bit_exact(self, tmp_path_factory, n, L, data):
        vals = data.draw(arrays(np.float64, (n, n, n), elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
        path = tmp_path_factory.mktemp("io") / "f.mln1"
        write_field(path, Field(Grid3(n, L), vals))
        back, meta = read_field(path)
        np.testing.assert_array_equal(back.values, vals)
        assert back.grid.n == n and back.grid.box_len == L and meta["n"] == n

    def test_x_fastest_layout(self, tmp_path):
        g = Grid3(8, 1.0)
        vals = np.arange(512.0).reshape(8, 8, 8)
        path = write_field(tmp_path / "f.mln1", Field(g, vals))
        body = np.frombuffer(path.read_bytes()[16:], dtype="<f8")
        assert body[1] == vals[1, 0, 0] and body[8] == vals[0, 1, 0] and body[64] == vals[0, 0, 1]

    def test_sidecar(self, tmp_path, grid16):
        path = write_field(tmp_path / "phi.mln1", grid16.zeros(), "phi", {"p": 4.0}, {"eigen_index": 3})
        meta = json.loads((tmp_path / "phi.mln1.json").read_text())
        assert meta == {"n": 16, "L": 8.0, "role": "phi", "params": {"p": 4.0}, "eigen_index": 3}
        assert read_field(path)[1] == meta

    def test_missing_sidecar(self, tmp_path, grid16):
        path = write_field(tmp_path / "u.mln1", grid16.zeros())
        (tmp_path / "u.mln1.json").unlink()
        assert read_field(path)[1] == {"n": 16, "L": 8.0}


class TestRejection:
    def test_bad_magic(self, tmp_path, grid16):
        path = write_field(tmp_path / "u.mln1", grid16.zeros())
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(FieldFormatError, match="magic"):
            read_field(path)

    @pytest.mark.parametrize("keep", [3, 16, 100])
    def test_truncated(self, tmp_path, grid16, keep):
        path = write_field(tmp_path / "u.mln1", grid16.zeros())
        path.write_bytes(path.read_bytes()[:keep])
        with pytest.raises(FieldFormatError):
            read_field(path)

    def test_magic_constant(self):
        assert MAGIC == b"MLN1"
