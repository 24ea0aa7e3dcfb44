import numpy as np
import pytest

from hcinduce import DataError
from hcinduce.data import (Dataset, DatasetParseError, StratificationError,
                           load_table, shuffle, stratified_folds)
from hcinduce.seeding import permutation

from . import DATA_DIR


def make_dataset(counts, m=2, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(counts)), counts)
    features = rng.normal(size=(labels.size, m))
    names = ["c%d" % j for j in range(len(counts))]
    return Dataset(features, labels, names)


def test_load_csv():
    ds = load_table("%s/toy.csv" % DATA_DIR)
    assert (ds.n, ds.m, ds.c) == (40, 3, 4)
    # ids in order of first appearance
    assert ds.class_names == ["alpha", "beta", "gamma", "delta"]
    assert ds.labels[:4].tolist() == [0, 1, 2, 3]
    assert ds.name == "toy"
    assert not ds.is_timeseries


def test_load_csv_label_column_by_name():
    ds = load_table("%s/toy2.csv" % DATA_DIR, label_column="label")
    assert (ds.n, ds.m, ds.c) == (20, 2, 2)
    assert ds.class_names == ["a", "b"]
    assert ds.features[0].tolist() == [0.853, 0.053]


def test_load_csv_label_column_by_index():
    ds = load_table("%s/toy2.csv" % DATA_DIR, label_column=0)
    assert ds.class_names == ["a", "b"]


def test_load_ucr():
    ds = load_table("%s/toy_ucr.tsv" % DATA_DIR, format="ucr_tsv")
    assert (ds.n, ds.m, ds.c) == (24, 12, 3)
    assert ds.is_timeseries
    assert ds.class_names == ["1", "2", "3"]


@pytest.mark.parametrize("name", ["ragged.csv", "nonnumeric.csv",
                                  "onelabel.csv", "missing.csv"])
def test_load_bad_tables(name):
    with pytest.raises(DatasetParseError):
        load_table("%s/%s" % (DATA_DIR, name))


def test_nonnumeric_cell_is_located():
    with pytest.raises(DatasetParseError, match="'oops' at row 1"):
        load_table("%s/nonnumeric.csv" % DATA_DIR)


def test_unknown_format():
    with pytest.raises(DatasetParseError):
        load_table("%s/toy.csv" % DATA_DIR, format="arff")


def test_dataset_invariants():
    with pytest.raises(DataError):
        Dataset([[0.0], [np.nan]], [0, 1], ["a", "b"])
    with pytest.raises(DataError):
        Dataset([[0.0], [1.0]], [0, 0], ["a", "b"])
    with pytest.raises(DataError):
        Dataset([[0.0], [1.0]], [0, 1], ["a"])


def test_shuffle_is_seeded_permutation():
    ds = make_dataset([5, 7, 3])
    a = shuffle(ds, 3)
    b = shuffle(ds, 3)
    assert np.array_equal(a.features, b.features)
    assert sorted(a.features[:, 0]) == sorted(ds.features[:, 0])
    assert not np.array_equal(shuffle(ds, 4).labels, a.labels)


def test_stratified_folds_example():
    # 10 instances of 2 classes (6/4), k=5, seed 0
    ds = make_dataset([6, 4])
    plan = stratified_folds(ds, 5, 0)
    hist = plan.histogram(ds.labels, ds.c)
    assert hist.sum(axis=0).tolist() == [6, 4]
    assert np.bincount(plan.assignments, minlength=5).tolist() == [2] * 5
    for j in range(ds.c):
        assert hist[:, j].max() - hist[:, j].min() <= 1


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("counts", [[10, 10, 10], [7, 3, 12, 2], [5, 5]])
def test_stratified_folds_balance(counts, seed):
    ds = make_dataset(counts)
    plan = stratified_folds(ds, 5, seed)
    hist = plan.histogram(ds.labels, ds.c)
    assert (hist.max(axis=0) - hist.min(axis=0)).max() <= 1
    sizes = np.bincount(plan.assignments, minlength=5)
    assert sizes.max() - sizes.min() <= 1
    for fold in range(5):
        test = plan.test_indices(fold)
        train = plan.train_indices(fold)
        assert np.intersect1d(test, train).size == 0
        assert test.size + train.size == ds.n


def test_stratified_folds_first_fold_follows_seed():
    ds = make_dataset([5, 5])
    assert stratified_folds(ds, 5, 2).assignments[0] == 2


def test_stratified_folds_small_class_warns(caplog):
    ds = make_dataset([10, 3])
    stratified_folds(ds, 5, 0)
    assert any("has 3 members for 5 folds" in r.getMessage()
               for r in caplog.records)


def test_stratified_folds_errors():
    with pytest.raises(StratificationError):
        stratified_folds(make_dataset([5, 5]), 1, 0)
    with pytest.raises(StratificationError):
        stratified_folds(make_dataset([2, 2]), 5, 0)
    with pytest.raises(StratificationError):
        stratified_folds(load_table("%s/singleton.csv" % DATA_DIR), 2, 0)


def read_permutation(name):
    with open("%s/%s" % (DATA_DIR, name)) as fp:
        return [int(i) for i in fp.read().strip().split(",")]


def test_seed_zero_permutation_is_frozen():
    expected = read_permutation("permutation_seed0_n40.txt")
    assert permutation(40, 0).tolist() == expected
    assert sorted(expected) == list(range(40))


def test_shuffle_matches_frozen_permutation():
    order = read_permutation("permutation_seed0_n40.txt")
    ds = load_table("%s/toy.csv" % DATA_DIR)
    shuffled = shuffle(ds, 0)
    assert shuffled.labels.tolist() == ds.labels[order].tolist()
    assert np.array_equal(shuffled.features, ds.features[order])
    assert shuffled.class_names == ds.class_names


def test_loading_twice_is_identical():
    first = load_table("%s/toy.csv" % DATA_DIR)
    second = load_table("%s/toy.csv" % DATA_DIR)
    assert first.features.dtype == second.features.dtype
    assert first.features.tobytes() == second.features.tobytes()
    assert first.labels.tolist() == second.labels.tolist()
    assert first.class_names == second.class_names
