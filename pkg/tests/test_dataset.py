import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import window_count

from xem.dataset import (
    DataFormatError,
    MTSDataset,
    Series,
    emit_long_csv,
    generate_synthetic,
    inject_missing,
    inject_noise,
    parse_long_csv,
    parse_ts,
    read_dataset,
    train_test_split,
    transform_windows,
    znormalize,
)

BASIC_MOTIONS_CLASSES = ["Standing", "Running", "Walking", "Badminton"]


def write_basic_motions_like(path, n_series=40, n_dims=6, length=100, seed=0):
    """A ``.ts`` file with the BasicMotions layout (values are random)."""
    rng = np.random.default_rng(seed)
    lines = [
        "#Synthetic stand-in with the BasicMotions shape",
        "@problemName BasicMotions",
        "@timeStamps false",
        "@missing false",
        "@univariate false",
        f"@dimensions {n_dims}",
        "@equalLength true",
        f"@seriesLength {length}",
        "@classLabel true " + " ".join(BASIC_MOTIONS_CLASSES),
        "@data",
    ]
    for i in range(n_series):
        dims = [",".join(repr(float(v)) for v in rng.normal(size=length)) for _ in range(n_dims)]
        lines.append(":".join(dims) + ":" + BASIC_MOTIONS_CLASSES[i % 4])
    path.write_text("\n".join(lines) + "\n")
    return path


# --- .ts ---------------------------------------------------------------------


def test_parse_ts_small(tmp_path):
    path = tmp_path / "toy.ts"
    path.write_text(
        "@problemName toy\n@univariate false\n@dimensions 2\n@classLabel true b a\n@data\n"
        "1,2,3:4,5,6:a\n"
        "7,?,9:10,11,12:b\n"
    )
    data = parse_ts(path)
    assert data.class_names == ["b", "a"]
    assert data.n_dims == 2
    assert list(data.labels) == [1, 0]
    np.testing.assert_array_equal(data.series[0].values, [[1, 2, 3], [4, 5, 6]])
    assert math.isnan(data.series[1].values[0, 1])


def test_parse_ts_basic_motions_shape(tmp_path):
    data = parse_ts(write_basic_motions_like(tmp_path / "BasicMotions_TRAIN.ts"))
    assert len(data) == 40
    assert data.n_dims == 6
    assert data.max_length == 100
    assert data.class_names == BASIC_MOTIONS_CLASSES
    assert np.bincount(data.labels).tolist() == [10, 10, 10, 10]


def test_parse_ts_with_model_class_order(tmp_path):
    path = tmp_path / "toy.ts"
    path.write_text("@dimensions 1\n@classLabel true x y\n@data\n1,2:y\n")
    assert parse_ts(path, class_names=["y", "x"]).labels.tolist() == [0]


@pytest.mark.parametrize(
    "body, message",
    [
        ("@dimensions 2\n@classLabel true a\n", "missing @data"),
        ("@dimensions 2\n@classLabel true a\n@data\n1,2:a\n", "dimensions"),
        ("@dimensions 2\n@classLabel true a\n@data\n1,2:3:a\n", "unequal length"),
        ("@dimensions 1\n@classLabel true a\n@data\n1,2:c\n", "unknown class"),
        ("@dimensions 1\n@classLabel true a\n@data\n1,x:a\n", "non-numeric"),
        ("garbage\n@data\n", "header"),
    ],
)
def test_parse_ts_errors(tmp_path, body, message):
    path = tmp_path / "bad.ts"
    path.write_text(body)
    with pytest.raises(DataFormatError, match=message):
        parse_ts(path)


def test_read_dataset_dispatches_by_suffix(tmp_path):
    path = write_basic_motions_like(tmp_path / "a.ts", n_series=4, n_dims=2, length=5)
    assert len(read_dataset(path)) == 4
    with pytest.raises(ValueError):
        read_dataset(path, fmt="xlsx")


# --- long CSV ----------------------------------------------------------------


def test_long_csv_layout(tmp_path):
    # the layout of the tabular figure: one row per (series, timestamp)
    path = tmp_path / "d.csv"
    path.write_text(
        "MTS_ID,Timestamp,Attribute1,Attribute2,Class\n"
        "1,1,0.1,1.1,c1\n1,2,0.2,,c1\n1,3,0.3,1.3,c1\n"
        "2,1,5,6,c2\n2,2,7,8,c2\n"
    )
    data = parse_long_csv(path)
    assert data.ids.tolist() == [1, 2]
    assert data.class_names == ["c1", "c2"]
    assert [s.length for s in data.series] == [3, 2]
    assert math.isnan(data.series[0].values[1, 1])


def test_long_csv_round_trip(tmp_path):
    data = inject_missing(generate_synthetic(3, 12, 2, 4, 1, seed=5), 0.25, seed=1)
    path = tmp_path / "rt.csv"
    emit_long_csv(data, path)
    back = parse_long_csv(path)
    assert back.class_names == data.class_names
    assert back.labels.tolist() == data.labels.tolist()
    for a, b in zip(data.series, back.series):
        np.testing.assert_array_equal(a.values, b.values)
    assert back.digest() == data.digest()


def test_long_csv_header_only_is_empty(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("MTS_ID,Timestamp,Attribute1,Attribute2\n")
    data = parse_long_csv(path)
    assert len(data) == 0 and data.n_dims == 2


@pytest.mark.parametrize(
    "rows, message",
    [
        ("1,1,0.5,a\n1,1,0.6,a\n", "duplicate timestamp"),
        ("1,2,0.5,a\n1,1,0.6,a\n", "not increasing"),
        ("1,1,0.5,a\n1,2,0.6,b\n", "inconsistent class"),
        ("1,1,0.5\n", "expected 4 fields"),
        ("x,1,0.5,a\n", "numeric"),
    ],
)
def test_long_csv_errors(tmp_path, rows, message):
    path = tmp_path / "bad.csv"
    path.write_text("MTS_ID,Timestamp,Attribute1,Class\n" + rows)
    with pytest.raises(DataFormatError, match=message):
        parse_long_csv(path)


def test_long_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,time,x\n")
    with pytest.raises(DataFormatError, match="header"):
        parse_long_csv(path)


# --- containers ---------------------------------------------------------------


def test_dataset_validation():
    with pytest.raises(DataFormatError, match="duplicate"):
        MTSDataset([Series(0, [[1.0]], 0), Series(0, [[2.0]], 0)], ["a"], 1)
    with pytest.raises(DataFormatError, match="dimensions"):
        MTSDataset([Series(0, [[1.0], [2.0]], 0)], ["a"], 1)
    with pytest.raises(DataFormatError, match="out of range"):
        MTSDataset([Series(0, [[1.0]], 3)], ["a"], 1)


def test_series_values_are_read_only_copies():
    raw = np.zeros((1, 3))
    s = Series(0, raw)
    raw[0, 0] = 5.0
    assert s.values[0, 0] == 0.0
    with pytest.raises(ValueError):
        s.values[0, 0] = 1.0


# --- synthetic data -------------------------------------------------------------


def test_synthetic_shape_and_square():
    data = generate_synthetic(10, 100, 60, 20, 1, seed=3)
    assert len(data) == 20 and data.n_dims == 2 and data.max_length == 100
    assert data.labels.tolist() == [0] * 10 + [1] * 10
    for s in data.series:
        on_square = np.all(s.values[0, 60:80] == 1.0)
        assert on_square == (s.label == 1)
        np.testing.assert_array_equal(s.values[0, :60], s.values[1, :60])
        np.testing.assert_array_equal(s.values[0, 80:], s.values[1, 80:])
        assert np.all(np.abs(s.values[1]) <= 1.0)


def test_synthetic_two_squares():
    data = generate_synthetic(10, 100, 9, 12, 2, seed=0, second_start=72)
    for s in data.series:
        assert np.all(s.values[0, 9:21] == 1.0)
        assert np.all(s.values[0, 72:84] == 1.0) == (s.label == 1)


def test_synthetic_boundary_square():
    data = generate_synthetic(1, 4, 0, 4, 1, seed=0)
    positive = data.series[1]
    np.testing.assert_array_equal(positive.values[0], [1.0, 1.0, 1.0, 1.0])


def test_synthetic_deterministic_and_series_distinct():
    a = generate_synthetic(10, 100, 60, 20, 1, seed=11)
    b = generate_synthetic(10, 100, 60, 20, 1, seed=11)
    assert a.digest() == b.digest()
    negatives = {s.values.tobytes() for s in a.series if s.label == 0}
    assert len(negatives) > 1


@pytest.mark.parametrize("start, length", [(90, 20), (-1, 5)])
def test_synthetic_square_out_of_bounds(start, length):
    with pytest.raises(ValueError):
        generate_synthetic(2, 100, start, length, 1, seed=0)


def test_train_test_split_stratified():
    data = generate_synthetic(10, 20, 5, 5, 1, seed=0)
    train, test = train_test_split(data)
    assert np.bincount(train.labels).tolist() == [5, 5]
    assert np.bincount(test.labels).tolist() == [5, 5]
    assert set(train.ids) | set(test.ids) == set(data.ids)
    shuffled, _ = train_test_split(data, seed=4)
    assert np.bincount(shuffled.labels).tolist() == [5, 5]


# --- windows ------------------------------------------------------------------


def test_windows_match_transformation_figure():
    # MTS of length 5 with 2 dimensions and w = 2: 4 windows of 4 attributes
    values = np.array([[1.0, 2, 3, 4, 5], [10, 20, 30, 40, 50]])
    table = transform_windows(MTSDataset([Series(1, values, 0)], ["c"], 2), 2)
    assert len(table) == 4
    np.testing.assert_array_equal(table.rows[0], [1, 2, 10, 20])
    np.testing.assert_array_equal(table.rows[3], [4, 5, 40, 50])
    assert table.window_starts.tolist() == [0, 1, 2, 3]
    assert table.mts_ids.tolist() == [1, 1, 1, 1]
    assert table.labels.tolist() == [0, 0, 0, 0]


def test_windows_pad_short_series():
    values = np.array([[1.0, 2.0], [3.0, np.nan]])
    table = transform_windows(MTSDataset([Series(0, values)], [], 2), 4)
    assert len(table) == 1
    np.testing.assert_array_equal(table.rows[0], [1, 2, 0, 0, 3, np.nan, 0, 0])
    assert table.labels is None


def test_windows_reject_bad_w():
    with pytest.raises(ValueError):
        transform_windows(generate_synthetic(1, 5, 0, 1, 1), 0)


@given(st.lists(st.integers(1, 12), min_size=1, max_size=5), st.integers(1, 24),
       st.integers(1, 3))
def test_window_count_law(lengths, w, d):
    rng = np.random.default_rng(0)
    data = MTSDataset([Series(i, rng.normal(size=(d, t)), 0) for i, t in enumerate(lengths)],
                      ["c"], d)
    table = transform_windows(data, w)
    assert len(table) == window_count(lengths, w)
    assert table.rows.shape[1] == d * w
    # every row is the literal slice it claims to be
    for row, mts_id, start in zip(table.rows, table.mts_ids, table.window_starts):
        v = data.series[mts_id].values
        window = np.zeros((d, w))
        stop = min(start + w, v.shape[1])
        window[:, : stop - start] = v[:, start:stop]
        np.testing.assert_array_equal(row, window.reshape(-1))


# --- perturbations -----------------------------------------------------------------


def test_inject_missing_counts_and_seeding():
    data = generate_synthetic(2, 40, 10, 5, 1, seed=0)
    holed = inject_missing(data, 0.25, seed=[3, 0])
    for s in holed.series:
        assert np.isnan(s.values).sum(axis=1).tolist() == [10, 10]
    again = inject_missing(data, 0.25, seed=[3, 0])
    other = inject_missing(data, 0.25, seed=[4, 0])
    assert again.digest() == holed.digest()
    assert other.digest() != holed.digest()
    assert inject_missing(data, 0.0, seed=1) is data
    with pytest.raises(ValueError):
        inject_missing(data, 1.5)


def test_znormalize_then_noise_variance():
    data = generate_synthetic(3, 200, 10, 20, 1, seed=0)
    z = znormalize(data)
    for s in z.series:
        np.testing.assert_allclose(s.values.mean(axis=1), 0.0, atol=1e-12)
        np.testing.assert_allclose(s.values.std(axis=1), 1.0, atol=1e-12)
    noisy = inject_noise(z, 1.0, seed=0)
    assert np.mean([s.values.var(axis=1).mean() for s in noisy.series]) > 1.0
    assert inject_noise(z, 0.0) is z
    with pytest.raises(ValueError):
        inject_noise(z, -1.0)


def test_znormalize_constant_and_missing():
    data = MTSDataset([Series(0, [[2.0, 2.0, 2.0], [1.0, np.nan, 3.0]])], [], 2)
    z = znormalize(data).series[0].values
    np.testing.assert_array_equal(z[0], [0.0, 0.0, 0.0])
    np.testing.assert_allclose(z[1, [0, 2]], [-1.0, 1.0])
    assert np.isnan(z[1, 1])
    with pytest.raises(DataFormatError):
        znormalize(MTSDataset([Series(0, [[np.nan, np.nan]])], [], 1))
