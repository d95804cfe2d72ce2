import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aaspectra.pipeline import Dataset, apply_minmax, fit_minmax, load_dataset, split_dataset, split_indices


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_missing_target_dropped(tmp_path):
    ds = load_dataset(write(tmp_path, "sequence,target\nACD,1.5\nEFG,\nHIK,2\n"))
    assert len(ds) == 2 and ds.dropped_count == 1
    assert ds.targets.tolist() == [1.5, 2.0]


def test_nan_and_blank_sequence_dropped(tmp_path):
    ds = load_dataset(write(tmp_path, "sequence,target\nACD,NaN\n ,3\nKLM,4\n"))
    assert ds.sequences == ["KLM"] and ds.dropped_count == 2


def test_labels_in_first_appearance_order(tmp_path):
    ds = load_dataset(write(tmp_path, "sequence,target\nAA,AMP\nCC,nonAMP\nDD,AMP\n"), task="classification")
    assert ds.targets.tolist() == [0, 1, 0] and ds.class_names == ["AMP", "nonAMP"]


def test_missing_column_named(tmp_path):
    with pytest.raises(KeyError, match="activity"):
        load_dataset(write(tmp_path, "sequence,target\nAA,1\n"), target_column="activity")


def test_no_rows_left(tmp_path):
    with pytest.raises(ValueError, match="no rows"):
        load_dataset(write(tmp_path, "sequence,target\nAA,\n"))


def test_conflicting_duplicates_warn(tmp_path):
    with pytest.warns(UserWarning, match="conflicting"):
        load_dataset(write(tmp_path, "sequence,target\nAA,1\nAA,2\n"))


def test_split_arithmetic():
    ds = Dataset([f"A{i}" for i in range(10)], np.arange(10.0), "regression")
    tr, te = split_dataset(ds, 0.2, seed=3)
    assert (len(tr), len(te)) == (8, 2)


def test_stratified_largest_remainder_rule():
    # A: 8 * 0.2 = 1.6 -> floor 1, remainder 0.6; B: 2 * 0.2 = 0.4 -> floor 0, remainder 0.4.
    # Target total round(10 * 0.2) = 2, one row short, which goes to A (larger remainder).
    labels = np.array([0] * 8 + [1] * 2)
    for seed in range(5):
        tr, te = split_indices(10, 0.2, seed, labels)
        assert sorted(labels[te].tolist()) == [0, 0]
        assert len(tr) == 8


def test_singleton_class_stays_in_training():
    labels = np.array([0] * 9 + [1])
    with pytest.warns(UserWarning, match="single member"):
        tr, te = split_indices(10, 0.3, 0, labels)
    assert 9 in tr


def test_split_deterministic():
    a = split_indices(50, 0.2, 7)
    b = split_indices(50, 0.2, 7)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(ValueError):
        split_indices(10, 1.0, 0)


@pytest.mark.filterwarnings("ignore:class .* single member")
@settings(max_examples=80, deadline=None)
@given(st.integers(2, 200), st.floats(0.05, 0.95), st.integers(0, 2 ** 31), st.booleans(), st.integers(2, 5))
def test_split_partitions(n, frac, seed, stratify, k):
    labels = np.arange(n) % k if stratify else None
    tr, te = split_indices(n, frac, seed, labels)
    assert len(tr) + len(te) == n
    assert not set(tr) & set(te)
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(n))
    if stratify:
        for c in range(k):
            n_c = int((labels == c).sum())
            got = int((labels[te] == c).sum())
            # within one row of the proportional share
            assert math.floor(n_c * frac) <= got <= math.floor(n_c * frac) + 1 or n_c == 1


def test_minmax_examples():
    s = fit_minmax([[0.0], [10.0]])
    assert apply_minmax(s, [[5.0]])[0, 0] == 0.5
    assert apply_minmax(s, [[12.0]])[0, 0] == 1.0
    assert apply_minmax(s, [[-3.0]])[0, 0] == 0.0
    c = fit_minmax([[3.0], [3.0], [3.0]])
    assert apply_minmax(c, [[3.0]])[0, 0] == 0.0
    with pytest.raises(ValueError):
        apply_minmax(s, [[1.0, 2.0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 2 ** 31))
def test_minmax_invariants(n, f, seed):
    X = np.random.default_rng(seed).normal(size=(n, f)) * 100
    s = fit_minmax(X)
    Y = apply_minmax(s, X)
    assert Y.min() >= 0 and Y.max() <= 1
    np.testing.assert_allclose(Y.min(0), 0, atol=0)
    np.testing.assert_allclose(Y.max(0), 1, rtol=1e-12)
    s2 = fit_minmax(Y)
    np.testing.assert_allclose(s2.data_min, 0, atol=0)
    np.testing.assert_allclose(s2.data_max, 1, rtol=1e-12)
    np.testing.assert_allclose(apply_minmax(s2, Y), Y, atol=1e-15)
