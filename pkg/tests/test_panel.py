import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from factor_lasso.errors import (
    DimensionError,
    DuplicateCellError,
    InvalidDataError,
    ParseError,
    UnbalancedPanelError,
)
from factor_lasso.panel import PanelDataset, demean_panel, load_csv, within_transform

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
shapes = st.tuples(st.integers(2, 8), st.integers(1, 6))


def test_hand_example():
    out = within_transform([[1, 2], [3, 5]])
    np.testing.assert_allclose(out, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-15)


def test_constant_and_additive_effects_vanish():
    assert np.all(within_transform(np.full((4, 3), 7.5)) == 0)
    rng = np.random.default_rng(0)
    g, nu = rng.standard_normal(6), rng.standard_normal(4)
    np.testing.assert_allclose(within_transform(g[:, None] + nu[None, :]), 0, atol=1e-14)


def test_rejects_bad_input():
    with pytest.raises(InvalidDataError):
        within_transform([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(DimensionError):
        within_transform(np.ones(3))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_idempotent_and_linear(data):
    shape = data.draw(shapes)
    z1 = data.draw(arrays(np.float64, shape, elements=finite))
    z2 = data.draw(arrays(np.float64, shape, elements=finite))
    a, b = data.draw(finite), data.draw(finite)
    w1 = within_transform(z1)
    np.testing.assert_allclose(within_transform(w1), w1, atol=1e-9)
    np.testing.assert_allclose(within_transform(a * z1 + b * z2), a * w1 + b * within_transform(z2), atol=1e-6)


def test_demean_constant_panel_is_zero():
    data = PanelDataset(np.full((3, 4), 2.0), np.full((3, 4), -1.0), np.full((3, 4, 2), 5.0))
    pan = demean_panel(data)
    assert not pan.T_eq_1
    for arr in (pan.y, pan.d, pan.x):
        np.testing.assert_allclose(arr, 0, atol=1e-15)


def test_cross_section_mode():
    data = PanelDataset([[1.0], [2.0], [3.0]], np.zeros((3, 1)), np.ones((3, 1, 1)))
    pan = demean_panel(data)
    assert pan.T_eq_1
    np.testing.assert_allclose(pan.y[:, 0], [-1, 0, 1])


def test_demeaned_covariates_have_zero_margins(small_fit):
    _, data, _ = small_fit
    x = demean_panel(data).x
    np.testing.assert_allclose(x.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(x.mean(axis=1), 0, atol=1e-12)


def test_dataset_is_frozen_copy():
    y = np.zeros((2, 2))
    data = PanelDataset(y, y, np.zeros((2, 2, 1)))
    y[0, 0] = 1
    assert data.y[0, 0] == 0
    with pytest.raises(ValueError):
        data.y[0, 0] = 3
    with pytest.raises(DimensionError):
        PanelDataset(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2, 1)))


def _write(tmp_path, text, name="p.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_small(tmp_path):
    path = _write(tmp_path, "id,time,y,d,x1\na,1,1,2,3\na,2,4,5,6\nb,1,7,8,9\nb,2,10,11,12\n")
    data = load_csv(path)
    assert (data.n, data.T, data.p) == (2, 2, 1)
    np.testing.assert_array_equal(data.y, [[1, 4], [7, 10]])
    np.testing.assert_array_equal(data.x[:, :, 0], [[3, 6], [9, 12]])


def test_load_keeps_header_order(tmp_path):
    cols = ["x1", "x2", "x3", "x4", "x5"]
    rows = ["id,time,y,d," + ",".join(cols)]
    for i in range(2):
        for t in range(2):
            rows.append(f"{i},{t},0,0," + ",".join(str(10 * i + t + k / 10) for k in range(5)))
    data = load_csv(_write(tmp_path, "\n".join(rows) + "\n"))
    assert data.p == 5
    np.testing.assert_allclose(data.x[1, 1], [11.0, 11.1, 11.2, 11.3, 11.4])


def test_load_errors(tmp_path):
    with pytest.raises(UnbalancedPanelError):
        load_csv(_write(tmp_path, "id,time,y,d,x1\n1,1,0,0,0\n1,2,0,0,0\n2,1,0,0,0\n"))
    with pytest.raises(DuplicateCellError):
        load_csv(_write(tmp_path, "id,time,y,d,x1\n1,1,0,0,0\n1,1,0,0,0\n"))
    with pytest.raises(ParseError, match=r"row 3.*'x1'"):
        load_csv(_write(tmp_path, "id,time,y,d,x1\n1,1,0,0,0\n1,2,0,0,abc\n"))
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path, "id,time,y,x1\n1,1,0,0\n"))
