"""
Metrics, cross-validation with per-fold hierarchy induction, learning
efficiency and cost accounting, plus the report files written from them.
"""

import json
import logging
import os
import tempfile
import time

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from . import HC_SCHEME_KINDS, NumericError, __version__
from .data import shuffle, stratified_folds
from .hierarchy import (build_agglomerative, build_divisive,
                        class_conditional_means, export_newick)
from .reduce import fit_lda, projection_to_json, transform
from .schemes import predict, train_scheme


log = logging.getLogger(__name__)

REPORT_FORMAT = "hcinduce-report"
REPORT_VERSION = 1


class UndefinedLEError(NumericError):
    pass


def macro_f1(y_true, y_pred):
    """
    Unweighted mean of per-class F1 over every class that occurs in either
    ``y_true`` or ``y_pred``. A class with no true positive scores 0.
    """
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred differ in length (%d vs %d)" %
                         (y_true.size, y_pred.size))
    if y_true.size == 0:
        raise ValueError("macro-F1 of an empty label vector is undefined")
    c = int(max(y_true.max(), y_pred.max())) + 1
    tp = np.bincount(y_true[y_true == y_pred], minlength=c)
    true_count = np.bincount(y_true, minlength=c)
    pred_count = np.bincount(y_pred, minlength=c)
    present = (true_count + pred_count) > 0
    denom = true_count + pred_count
    f1 = np.zeros(c)
    np.divide(2.0 * tp, denom, out=f1, where=denom > 0)
    return float(f1[present].mean())


def learning_efficiency(f1_hc, f1_fc):
    if not f1_fc > 0:
        raise UndefinedLEError("learning efficiency is undefined for a flat "
                               "macro-F1 of %r" % (f1_fc,))
    return f1_hc / f1_fc


class CostCounters:
    """Classifier invocation counts and wall time of one scheme."""

    FIELDS = ("n_fits", "n_predict_calls", "n_rows_scored")

    def __init__(self, n_fits=0, n_predict_calls=0, n_rows_scored=0,
                 wall_seconds=0.0):
        self.n_fits = n_fits
        self.n_predict_calls = n_predict_calls
        self.n_rows_scored = n_rows_scored
        self.wall_seconds = wall_seconds

    def record_fit(self):
        self.n_fits += 1

    def record_predict(self, n_rows):
        self.n_predict_calls += 1
        self.n_rows_scored += int(n_rows)

    def __add__(self, other):
        return CostCounters(self.n_fits + other.n_fits,
                            self.n_predict_calls + other.n_predict_calls,
                            self.n_rows_scored + other.n_rows_scored,
                            self.wall_seconds + other.wall_seconds)

    def counts(self):
        return {name: getattr(self, name) for name in self.FIELDS}

    def __repr__(self):
        return "CostCounters(%s, wall_seconds=%.3f)" % (
            ", ".join("%s=%d" % item for item in self.counts().items()),
            self.wall_seconds)


class FoldResult:
    def __init__(self, fold, n_train, n_test, f1, counters, newick=None,
                 fingerprint=None, projection=None):
        self.fold = fold
        self.n_train = n_train
        self.n_test = n_test
        self.f1 = f1
        self.counters = counters
        self.newick = newick
        self.fingerprint = fingerprint
        self.projection = projection

    def le(self, scheme):
        try:
            return learning_efficiency(self.f1[scheme], self.f1["fc"])
        except UndefinedLEError:
            return None


class EvalReport:
    def __init__(self, schemes, folds, config_echo, dataset_info):
        self.schemes = tuple(schemes)
        self.folds = list(folds)
        self.config_echo = dict(config_echo)
        self.dataset_info = dict(dataset_info)
        self.mean_f1 = {s: float(np.mean([f.f1[s] for f in self.folds]))
                        for s in self.schemes}
        self.le = {}
        for s in self.schemes:
            if s == "fc":
                continue
            try:
                self.le[s] = learning_efficiency(self.mean_f1[s],
                                                 self.mean_f1["fc"])
            except UndefinedLEError as err:
                log.warning("%s: %s", s, err)
                self.le[s] = None
        self.counters = {}
        for s in self.schemes:
            total = CostCounters()
            for f in self.folds:
                total = total + f.counters[s]
            self.counters[s] = total

    @property
    def fingerprints(self):
        return [f.fingerprint for f in self.folds]

    def to_dict(self):
        """Report content; deterministic (wall times excluded)."""
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "hcinduce_version": __version__,
            "dataset": self.dataset_info,
            "config": self.config_echo,
            "schemes": {
                s: {"mean_f1": self.mean_f1[s],
                    "fold_f1": [f.f1[s] for f in self.folds],
                    "le": self.le.get(s),
                    "fold_le": (None if s == "fc" else
                                [f.le(s) for f in self.folds]),
                    "counters": self.counters[s].counts()}
                for s in self.schemes},
            "folds": [
                {"fold": f.fold, "n_train": f.n_train, "n_test": f.n_test,
                 "newick": f.newick, "tree_sha256": f.fingerprint,
                 "projection_dim": (None if f.projection is None else
                                    json.loads(f.projection)["output_dim"])}
                for f in self.folds],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_frame(self):
        """One row per scheme and fold, plus a ``mean`` row per scheme."""
        rows = []
        for s in self.schemes:
            for f in self.folds:
                row = {"scheme": s, "fold": str(f.fold), "f1": f.f1[s],
                       "le": None if s == "fc" else f.le(s)}
                row.update(f.counters[s].counts())
                rows.append(row)
            row = {"scheme": s, "fold": "mean", "f1": self.mean_f1[s],
                   "le": self.le.get(s)}
            row.update(self.counters[s].counts())
            rows.append(row)
        return pd.DataFrame(rows, columns=["scheme", "fold", "f1", "le"] +
                            list(CostCounters.FIELDS))

    def timings_frame(self):
        rows = []
        for s in self.schemes:
            for f in self.folds:
                rows.append({"scheme": s, "fold": str(f.fold),
                             "wall_seconds": f.counters[s].wall_seconds})
            rows.append({"scheme": s, "fold": "total",
                         "wall_seconds": self.counters[s].wall_seconds})
        return pd.DataFrame(rows, columns=["scheme", "fold", "wall_seconds"])

    def summary_frame(self):
        return pd.DataFrame(
            [{"scheme": s, "mean_f1": self.mean_f1[s], "le": self.le.get(s),
              "seconds": self.counters[s].wall_seconds}
             for s in self.schemes],
            columns=["scheme", "mean_f1", "le", "seconds"])


def _with_fold(err, fold):
    """Same exception class, message prefixed with the fold index."""
    try:
        return type(err)("fold %d: %s" % (fold, err))
    except Exception:
        return err


def build_hierarchy(config, X, y, c):
    """
    Induces the class tree from training data: optional LDA projection, class
    conditional means, then divisive or agglomerative clustering. Returns the
    tree and the projection (None when reduction is off).
    """
    projection = None
    space = X
    if config.reduce_enabled:
        projection = fit_lda(X, y, config.variance_threshold)
        space = transform(projection, X)
    means = class_conditional_means(space, y, c)
    if config.method == "divisive":
        tree = build_divisive(means, config.seed)
    else:
        tree = build_agglomerative(means, config.linkage)
    return tree, projection


def _run_fold(config, ds, plan, fold):
    train = plan.train_indices(fold)
    test = plan.test_indices(fold)
    X_train, y_train = ds.features[train], ds.labels[train]
    X_test, y_test = ds.features[test], ds.labels[test]

    tree = projection = None
    hierarchy_seconds = 0.0
    if any(s in HC_SCHEME_KINDS for s in config.schemes):
        start = time.perf_counter()
        tree, projection = build_hierarchy(config, X_train, y_train, ds.c)
        hierarchy_seconds = time.perf_counter() - start
        log.info("Fold %d: tree %s", fold,
                 export_newick(tree, ds.class_names))

    f1 = {}
    counters = {}
    for scheme in config.schemes:
        cost = CostCounters()
        start = time.perf_counter()
        model = train_scheme(scheme, None if scheme == "fc" else tree,
                             config.classifier, X_train, y_train, cost,
                             n_classes=ds.c)
        y_pred = predict(model, X_test, cost)
        cost.wall_seconds = time.perf_counter() - start
        if scheme != "fc":
            cost.wall_seconds += hierarchy_seconds
        f1[scheme] = macro_f1(y_test, y_pred)
        counters[scheme] = cost
        log.info("Fold %d: %s macro-F1 %.4f (%d fits, %d predict calls)",
                 fold, scheme, f1[scheme], cost.n_fits, cost.n_predict_calls)

    return FoldResult(
        fold, train.size, test.size, f1, counters,
        newick=None if tree is None else export_newick(tree, ds.class_names),
        fingerprint=None if tree is None else tree.fingerprint(ds.class_names),
        projection=None if projection is None else
        projection_to_json(projection))


def _guarded_fold(config, ds, plan, fold):
    try:
        return _run_fold(config, ds, plan, fold)
    except Exception as err:
        wrapped = _with_fold(err, fold)
        if wrapped is err:
            raise
        raise wrapped from err


def run_cv(config, ds):
    shuffled = shuffle(ds, config.seed)
    plan = stratified_folds(shuffled, config.folds, config.seed)
    log.info("Cross-validating %s: %d folds, schemes %s, %s.", ds.name,
             plan.k, ", ".join(config.schemes), config.classifier.kind)
    folds = Parallel(n_jobs=config.n_jobs)(
        delayed(_guarded_fold)(config, shuffled, plan, fold)
        for fold in range(plan.k))
    dataset_info = {"name": ds.name, "n": ds.n, "m": ds.m, "c": ds.c,
                    "class_names": list(ds.class_names),
                    "timeseries": ds.is_timeseries}
    return EvalReport(config.schemes, folds, config.echo(), dataset_info)


class LETable:
    """Learning efficiency per (method, reduction) setting and HC scheme."""

    def __init__(self, rows):
        self.rows = list(rows)

    def to_frame(self):
        return pd.DataFrame(self.rows,
                            columns=["method", "reduce"] +
                            list(HC_SCHEME_KINDS))


def run_sweep(config, ds):
    rows = []
    for method in ("divisive", "agglomerative"):
        for reduce_enabled in (True, False):
            run = config.replace(hierarchy__method=method,
                                 reduce__enabled=reduce_enabled)
            report = run_cv(run, ds)
            row = {"method": method,
                   "reduce": "lda" if reduce_enabled else "none"}
            for s in HC_SCHEME_KINDS:
                row[s] = report.le.get(s)
            rows.append(row)
            log.info("Sweep %s/%s: %s", row["method"], row["reduce"],
                     {s: row[s] for s in HC_SCHEME_KINDS})
    return LETable(rows)


# ---------------------------------------------------------------------------
# Output files

def _csv_text(frame):
    return frame.to_csv(index=False, lineterminator="\n")


def report_files(report):
    """File name -> content for everything ``bench`` writes."""
    files = {"report.json": report.to_json(),
             "report.csv": _csv_text(report.to_frame()),
             "timings.csv": _csv_text(report.timings_frame())}
    for f in report.folds:
        if f.newick is not None:
            files["fold%d.nwk" % f.fold] = f.newick + "\n"
        if f.projection is not None:
            files["fold%d_projection.json" % f.fold] = f.projection + "\n"
    return files


def write_files(files, directory):
    """
    Writes every file to a temporary sibling, then renames them all into
    place. Nothing is renamed unless every write succeeded.
    """
    os.makedirs(directory, exist_ok=True)
    pending = []
    try:
        for name in sorted(files):
            fd, tmp = tempfile.mkstemp(prefix=".%s." % name, dir=directory)
            pending.append((tmp, os.path.join(directory, name)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fp:
                fp.write(files[name])
        while pending:
            tmp, target = pending[0]
            os.replace(tmp, target)
            pending.pop(0)
            log.info("Wrote %s", target)
    except BaseException:
        for tmp, _ in pending:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise
