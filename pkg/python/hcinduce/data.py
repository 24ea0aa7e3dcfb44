"""
Loading, validation, shuffling and fold assignment of flat-labeled datasets.

Two on-disk formats are read:

- ``csv``: comma-separated, optional header row, decimal point, label column
  selected by header name or 0-based index (negative indexes count from the
  end).
- ``ucr_tsv``: tab-separated UCR archive layout, class label in the first
  column and one equal-length series per row.

Raw labels are kept as strings; class ids are assigned in order of first
appearance in the file.
"""

import logging
import os

import numpy as np
import pandas as pd

from . import DataError
from .seeding import permutation


log = logging.getLogger(__name__)

FORMATS = ("csv", "ucr_tsv")


class DatasetParseError(DataError):
    pass


class StratificationError(DataError):
    pass


class Dataset:
    def __init__(self, features, labels, class_names, is_timeseries=False,
                 name=None):
        self.features = np.ascontiguousarray(features, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.intp)
        self.class_names = [str(n) for n in class_names]
        self.is_timeseries = bool(is_timeseries)
        self.name = name
        self._validate()

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def m(self):
        return self.features.shape[1]

    @property
    def c(self):
        return len(self.class_names)

    def _validate(self):
        if self.features.ndim != 2:
            raise DataError("features must be a 2-D matrix, got %d dims" %
                            self.features.ndim)
        if self.labels.shape != (self.features.shape[0],):
            raise DataError("%d labels for %d rows" %
                            (self.labels.size, self.features.shape[0]))
        if self.c < 2:
            raise DataError("at least 2 classes are required, found %d" %
                            self.c)
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain missing or non-finite values")
        if self.labels.size and (self.labels.min() < 0 or
                                 self.labels.max() >= self.c):
            raise DataError("labels must lie in 0..%d" % (self.c - 1))
        counts = np.bincount(self.labels, minlength=self.c)
        absent = [self.class_names[j] for j in np.flatnonzero(counts == 0)]
        if absent:
            raise DataError("classes without instances: %s" %
                            ", ".join(absent))

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.c)

    def take(self, indices):
        """Returns the rows at ``indices`` as a new Dataset over the same
        classes. Every class must still be represented."""
        return Dataset(self.features[indices], self.labels[indices],
                       self.class_names, self.is_timeseries, self.name)

    def __repr__(self):
        return "<%s %s n=%d m=%d c=%d>" % (
            self.__class__.__name__, self.name or "", self.n, self.m, self.c)


class FoldPlan:
    def __init__(self, k, assignments, seed):
        self.k = int(k)
        self.assignments = np.asarray(assignments, dtype=np.intp)
        self.seed = int(seed)

    def test_indices(self, fold):
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold):
        return np.flatnonzero(self.assignments != fold)

    def histogram(self, labels, c):
        """k×c matrix of per-fold class counts."""
        hist = np.zeros((self.k, c), dtype=np.intp)
        np.add.at(hist, (self.assignments, labels), 1)
        return hist


def _encode_labels(raw):
    names = []
    index = {}
    ids = np.empty(len(raw), dtype=np.intp)
    for i, value in enumerate(raw):
        if value not in index:
            index[value] = len(names)
            names.append(value)
        ids[i] = index[value]
    return ids, names


def _select_label_column(frame, label_column, has_header):
    columns = list(frame.columns)
    if has_header and str(label_column) in [str(c) for c in columns]:
        return [str(c) for c in columns].index(str(label_column))
    try:
        idx = int(label_column)
    except (TypeError, ValueError):
        raise DatasetParseError("label column %r not found" % (label_column,))
    if not -len(columns) <= idx < len(columns):
        raise DatasetParseError("label column index %d out of range for %d "
                                "columns" % (idx, len(columns)))
    return idx % len(columns)


def _read_frame(path, fmt, has_header):
    if fmt == "csv":
        kwargs = dict(sep=",", header=0 if has_header else None)
    else:
        kwargs = dict(sep="\t", header=None)
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False,
                           skipinitialspace=True, **kwargs)
    except pd.errors.ParserError as err:
        raise DatasetParseError("%s: ragged rows (%s)" % (path, err))
    except pd.errors.EmptyDataError:
        raise DatasetParseError("%s: no data" % path)


def load_table(path, format="csv", label_column=-1, header=True):
    if format not in FORMATS:
        raise DatasetParseError("unsupported format %r" % (format,))
    if not os.path.isfile(path):
        raise DatasetParseError("%s does not exist" % path)

    is_ts = format == "ucr_tsv"
    frame = _read_frame(path, format, header and not is_ts)
    if frame.shape[0] == 0:
        raise DatasetParseError("%s: no data rows" % path)
    if frame.isna().to_numpy().any():
        raise DatasetParseError("%s: ragged rows (some rows have fewer "
                                "fields)" % path)

    label_idx = 0 if is_ts else _select_label_column(
        frame, label_column, header)
    raw_labels = [v.strip() for v in frame.iloc[:, label_idx]]
    feature_frame = frame.drop(columns=frame.columns[label_idx])
    if feature_frame.shape[1] == 0:
        raise DatasetParseError("%s: no feature columns" % path)

    features = np.empty(feature_frame.shape, dtype=np.float64)
    for j, column in enumerate(feature_frame.columns):
        cells = feature_frame[column]
        try:
            features[:, j] = pd.to_numeric(cells, errors="raise")
        except (ValueError, TypeError):
            bad = pd.to_numeric(cells, errors="coerce").isna().to_numpy()
            row = int(np.flatnonzero(bad)[0])
            raise DatasetParseError(
                "%s: non-numeric feature cell %r at row %d, column %r" %
                (path, cells.iloc[row], row, column))
    if not np.all(np.isfinite(features)):
        raise DatasetParseError("%s: missing or non-finite feature values" %
                                path)

    labels, names = _encode_labels(raw_labels)
    if len(names) < 2:
        raise DatasetParseError("%s: fewer than 2 distinct labels" % path)

    ds = Dataset(features, labels, names, is_timeseries=is_ts,
                 name=os.path.splitext(os.path.basename(path))[0])
    log.info("Loaded %s: n=%d m=%d c=%d.", path, ds.n, ds.m, ds.c)
    return ds


def shuffle(ds, seed):
    """Permutes the rows of ``ds`` with the PCG64 stream seeded by ``seed``."""
    order = permutation(ds.n, seed)
    return ds.take(order)


def stratified_folds(ds, k, seed):
    """
    Assigns every row to one of ``k`` folds, class by class, round-robin.

    Members of class j (in dataset order) go to consecutive folds starting
    where the previous class stopped; the very first fold is ``seed mod k``.
    Per-class counts of any two folds therefore differ by at most one, and
    fold sizes stay balanced.
    """
    k = int(k)
    if k < 2:
        raise StratificationError("fold count must be >= 2, got %d" % k)
    if ds.n < k:
        raise StratificationError("%d rows cannot fill %d folds" % (ds.n, k))

    counts = ds.class_counts()
    too_small = [ds.class_names[j] for j in np.flatnonzero(counts < 2)]
    if too_small:
        raise StratificationError(
            "classes %s have a single member; some training split would "
            "lack them" % ", ".join(too_small))
    for j in np.flatnonzero(counts < k):
        log.warning("Class %s has %d members for %d folds; spread "
                    "round-robin.", ds.class_names[j], counts[j], k)

    assignments = np.empty(ds.n, dtype=np.intp)
    offset = int(seed) % k
    for j in range(ds.c):
        members = np.flatnonzero(ds.labels == j)
        assignments[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return FoldPlan(k, assignments, seed)
