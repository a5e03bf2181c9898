import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from posdecomp.afld import AFLDError, format_afld, parse_afld, read_afld, read_mask, write_afld

finite = st.floats(-1e300, 1e300, allow_nan=False)


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=1, max_dims=3, max_side=5), elements=finite),
       st.floats(1e-6, 10.0))
def test_roundtrip_is_bit_exact(values, h):
    fld = parse_afld(format_afld(values, h, np.zeros(values.ndim)))
    assert fld.shape == values.shape
    assert fld.spacing == h
    np.testing.assert_array_equal(fld.values, values)


def test_write_then_read(tmp_path):
    vals = np.arange(12.0).reshape(3, 4) / 7
    write_afld(tmp_path / "f.afld", vals, 0.25, (0.5, -1.0))
    fld = read_afld(tmp_path / "f.afld")
    assert fld.origin == (0.5, -1.0)
    np.testing.assert_array_equal(fld.values, vals)
    assert not list(tmp_path.glob("*.tmp"))


@pytest.mark.parametrize("text, line", [
    ("AFLD 2\n1 2\nspacing 1\norigin 0\n1 2\n", 1),
    ("AFLD 1\n2 2 2\nspacing 1\norigin 0 0\n1 2 3\n", None),
    ("AFLD 1\n1 x\nspacing 1\norigin 0\n1\n", 2),
    ("AFLD 1\n4 1 1 1 1\nspacing 1\norigin 0 0 0 0\n1\n", 2),
    ("AFLD 1\n1 2\nspacing -1\norigin 0\n1 2\n", 3),
    ("AFLD 1\n1 2\nspacing 1\norigin 0 0\n1 2\n", 4),
    ("AFLD 1\n1 2\nspacing 1\norigin 0\n1 abc\n", 5),
    ("AFLD 1\n1 2\nspacing 1\norigin 0\n1 nan\n", None),
    ("AFLD 1\n1 2\n", 3),
])
def test_malformed_inputs_name_the_line(text, line):
    with pytest.raises(AFLDError) as err:
        parse_afld(text, "f.afld")
    assert err.value.line == line
    if line is not None:
        assert f"f.afld:{line}:" in str(err.value)


def test_mask_must_be_binary(tmp_path):
    write_afld(tmp_path / "m.afld", np.array([0.0, 1.0, 0.5]), 1.0, (0.0,))
    with pytest.raises(AFLDError, match="0 or 1"):
        read_mask(tmp_path / "m.afld")
    write_afld(tmp_path / "m.afld", np.array([0.0, 1.0, 1.0]), 1.0, (0.0,))
    assert read_mask(tmp_path / "m.afld").values.dtype == bool
