"""
Probabilistic base classifiers behind one fit / predict-probabilities contract.

Supported kinds and their hyperparameters (defaults in parentheses):

- ``gaussian_nb``: var_smoothing (1e-9)
- ``lda_classifier``: solver (svd), tol (1e-4)
- ``random_forest``: n_estimators (100), max_depth (none), max_features
  (sqrt), min_samples_split (2), min_samples_leaf (1), bootstrap (true),
  n_jobs (1)
- ``gradient_boost``: n_estimators (100), learning_rate (0.3), max_depth (6),
  min_child_weight (1.0), reg_lambda (1.0)
- ``ts_forest``: n_estimators (200), n_intervals (floor of sqrt of the series
  length), min_interval (3), max_depth (none), n_jobs (1)

Every kind takes a ``seed``; the randomized ones derive all their randomness
from it.
"""

import json
import logging
import math

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from . import DataError
from .forest import (GradientBoostModel, RandomForestModel,
                     TimeSeriesForestModel, Tree)
from .reduce import DegenerateScatterError


log = logging.getLogger(__name__)

MODEL_FORMAT = "hcinduce-model"
MODEL_VERSION = 1


class ClassifierError(ValueError):
    pass


class TrainingDataError(ClassifierError, DataError):
    pass


def _positive_int(value):
    value = int(value)
    if value < 1:
        raise ValueError("must be >= 1")
    return value


def _optional_int(value):
    if value is None or str(value).lower() in ("none", ""):
        return None
    return _positive_int(value)


def _non_negative_float(value):
    value = float(value)
    if not value >= 0 or math.isinf(value):
        raise ValueError("must be a finite number >= 0")
    return value


def _positive_float(value):
    value = _non_negative_float(value)
    if value == 0:
        raise ValueError("must be > 0")
    return value


def _boolean(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "1"):
        return True
    if text in ("false", "no", "0"):
        return False
    raise ValueError("not a boolean")


def _max_features(value):
    if value is None:
        return None
    text = str(value).strip().lower()
    if text in ("sqrt", "log2"):
        return text
    if text in ("none", "all"):
        return None
    if "." in text:
        value = float(text)
        if not 0 < value <= 1:
            raise ValueError("fractions must lie in (0, 1]")
        return value
    return _positive_int(text)


def _n_jobs(value):
    value = int(value)
    if value == 0:
        raise ValueError("must not be 0")
    return value


def _solver(value):
    if value != "svd":
        raise ValueError("only 'svd' is supported")
    return value


# name -> (default, converter) per kind
PARAMS = {
    "gaussian_nb": {
        "var_smoothing": (1e-9, _non_negative_float),
    },
    "lda_classifier": {
        "solver": ("svd", _solver),
        "tol": (1e-4, _positive_float),
    },
    "random_forest": {
        "n_estimators": (100, _positive_int),
        "max_depth": (None, _optional_int),
        "max_features": ("sqrt", _max_features),
        "min_samples_split": (2, _positive_int),
        "min_samples_leaf": (1, _positive_int),
        "bootstrap": (True, _boolean),
        "n_jobs": (1, _n_jobs),
    },
    "gradient_boost": {
        "n_estimators": (100, _positive_int),
        "learning_rate": (0.3, _non_negative_float),
        "max_depth": (6, _optional_int),
        "min_child_weight": (1.0, _non_negative_float),
        "reg_lambda": (1.0, _non_negative_float),
    },
    "ts_forest": {
        "n_estimators": (200, _positive_int),
        "n_intervals": (None, _optional_int),
        "min_interval": (3, _positive_int),
        "max_depth": (None, _optional_int),
        "n_jobs": (1, _n_jobs),
    },
}

KINDS = tuple(PARAMS)
RANDOMIZED_KINDS = ("random_forest", "gradient_boost", "ts_forest")

# tuned baseline settings per benchmark dataset
PRESETS = {
    "glass": ("random_forest", {"n_estimators": 300, "max_depth": 10}),
    "pptw": ("ts_forest", {"n_estimators": 50}),
    "fiftywords": ("ts_forest", {"n_estimators": 50}),
    "yeast": ("gradient_boost", {"learning_rate": 0.25, "n_estimators": 5}),
    "faces": ("lda_classifier", {"solver": "svd"}),
}

# parameters that change runtime only, never the fitted model
_EXECUTION_PARAMS = ("n_jobs",)


def coerce_params(kind, params):
    """
    Validates hyperparameter names and values for ``kind`` and returns the
    full parameter mapping with defaults filled in.
    """
    if kind not in PARAMS:
        raise ClassifierError("unsupported classifier kind %r (choose from "
                              "%s)" % (kind, ", ".join(KINDS)))
    documented = PARAMS[kind]
    unknown = sorted(set(params) - set(documented))
    if unknown:
        raise ClassifierError("unsupported hyperparameter(s) for %s: %s" %
                              (kind, ", ".join(unknown)))
    out = {}
    for name, (default, convert) in documented.items():
        if name not in params:
            out[name] = default
            continue
        try:
            out[name] = convert(params[name])
        except (TypeError, ValueError) as err:
            raise ClassifierError("%s.%s: invalid value %r (%s)" %
                                  (kind, name, params[name], err))
    return out


class ClassifierSpec:
    def __init__(self, kind, params=None, seed=0):
        self.params = coerce_params(kind, dict(params or {}))
        self.kind = kind
        if seed is None or int(seed) < 0:
            raise ClassifierError("seed must be a non-negative integer")
        self.seed = int(seed)

    @classmethod
    def from_preset(cls, name, seed=0, **overrides):
        try:
            kind, params = PRESETS[name]
        except KeyError:
            raise ClassifierError("unknown classifier preset %r" % (name,))
        merged = dict(params)
        merged.update(overrides)
        return cls(kind, merged, seed)

    def model_params(self):
        """Hyperparameters that determine the fitted model."""
        return {k: v for k, v in self.params.items()
                if k not in _EXECUTION_PARAMS}

    def echo(self):
        return {"kind": self.kind, "params": dict(self.params),
                "seed": self.seed}

    def __eq__(self, other):
        return (isinstance(other, ClassifierSpec) and
                self.echo() == other.echo())

    def __repr__(self):
        return "ClassifierSpec(%r, %r, seed=%d)" % (self.kind, self.params,
                                                   self.seed)


class GaussianNBModel:
    def __init__(self, var_smoothing=1e-9):
        self.var_smoothing = var_smoothing
        self.theta = None
        self.var = None
        self.log_prior = None

    def fit(self, X, y, n_classes):
        m = X.shape[1]
        self.theta = np.zeros((n_classes, m))
        self.var = np.zeros((n_classes, m))
        counts = np.bincount(y, minlength=n_classes).astype(np.float64)
        for k in range(n_classes):
            rows = X[y == k]
            if rows.shape[0]:
                self.theta[k] = rows.mean(axis=0)
                self.var[k] = rows.var(axis=0)
        epsilon = self.var_smoothing * max(X.var(axis=0).max(), 0.0)
        self.var += epsilon
        if not np.all(self.var > 0):
            raise DegenerateScatterError("gaussian_nb: zero variance feature "
                                         "in some class; raise var_smoothing")
        with np.errstate(divide="ignore"):
            self.log_prior = np.log(counts / counts.sum())
        return self

    def joint_log_likelihood(self, X):
        jll = np.empty((X.shape[0], self.theta.shape[0]))
        for k in range(self.theta.shape[0]):
            norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.var[k]))
            dev = -0.5 * np.sum((X - self.theta[k]) ** 2 / self.var[k],
                                axis=1)
            jll[:, k] = self.log_prior[k] + norm + dev
        return jll

    def predict_proba(self, X):
        jll = self.joint_log_likelihood(X)
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))


class LDAClassifierModel:
    """Shared-covariance Gaussian discriminant solved by SVD of the
    standardized within-class data."""

    def __init__(self, solver="svd", tol=1e-4):
        self.solver = solver
        self.tol = tol
        self.means = None
        self.scalings = None
        self.log_prior = None

    def fit(self, X, y, n_classes):
        n, m = X.shape
        counts = np.bincount(y, minlength=n_classes).astype(np.float64)
        self.means = np.zeros((n_classes, m))
        centered = np.empty_like(X)
        for k in range(n_classes):
            mask = y == k
            if mask.any():
                self.means[k] = X[mask].mean(axis=0)
                centered[mask] = X[mask] - self.means[k]
        std = centered.std(axis=0)
        if not np.any(std > 0):
            raise DegenerateScatterError("lda_classifier: zero within-class "
                                         "variance in every feature")
        std[std == 0] = 1.0
        dof = max(n - n_classes, 1)
        scaled = centered / std / math.sqrt(dof)
        _, sv, vt = linalg.svd(scaled, full_matrices=False)
        rank = int(np.sum(sv > self.tol))
        if rank == 0:
            raise DegenerateScatterError("lda_classifier: within-class "
                                         "covariance has rank 0")
        self.scalings = (vt[:rank].T / std[:, None]) / sv[:rank]
        with np.errstate(divide="ignore"):
            self.log_prior = np.log(counts / counts.sum())
        log.debug("lda_classifier: within-class rank %d of %d.", rank, m)
        return self

    def decision_function(self, X):
        projected = X @ self.scalings
        centers = self.means @ self.scalings
        dist = ((projected[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        return self.log_prior - 0.5 * dist

    def predict_proba(self, X):
        scores = self.decision_function(X)
        return np.exp(scores - logsumexp(scores, axis=1, keepdims=True))


def _make_estimator(spec):
    p = spec.params
    if spec.kind == "gaussian_nb":
        return GaussianNBModel(var_smoothing=p["var_smoothing"])
    if spec.kind == "lda_classifier":
        return LDAClassifierModel(solver=p["solver"], tol=p["tol"])
    if spec.kind == "random_forest":
        return RandomForestModel(seed=spec.seed, **p)
    if spec.kind == "gradient_boost":
        return GradientBoostModel(seed=spec.seed, **p)
    return TimeSeriesForestModel(seed=spec.seed, **p)


class TrainedClassifier:
    def __init__(self, spec, n_classes, n_features, estimator):
        self.spec = spec
        self.n_classes = n_classes
        self.n_features = n_features
        self.estimator = estimator

    def predict_proba(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ClassifierError("%s was fit on %d features, got input of "
                                  "shape %s" % (self.spec.kind,
                                                self.n_features, X.shape))
        if X.shape[0] == 0:
            return np.empty((0, self.n_classes))
        return self.estimator.predict_proba(X)

    def __repr__(self):
        return "<%s %s k=%d m=%d>" % (self.__class__.__name__,
                                      self.spec.kind, self.n_classes,
                                      self.n_features)


def fit(spec, X, y, counters=None, n_classes=None):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise TrainingDataError("X must be n×m with one label per row")
    if y.size == 0:
        raise TrainingDataError("cannot fit on zero rows")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if n_classes < 2:
        raise TrainingDataError("at least 2 classes are needed to fit")
    if y.min() < 0 or y.max() >= n_classes:
        raise TrainingDataError("labels must lie in 0..%d" % (n_classes - 1))
    if spec.kind == "ts_forest" and X.shape[1] < 3:
        raise TrainingDataError("ts_forest needs series of length >= 3")
    estimator = _make_estimator(spec).fit(X, y, n_classes)
    if counters is not None:
        counters.record_fit()
    return TrainedClassifier(spec, n_classes, X.shape[1], estimator)


def predict_proba(model, X, counters=None):
    proba = model.predict_proba(X)
    if counters is not None:
        counters.record_predict(proba.shape[0])
    return proba


# ---------------------------------------------------------------------------
# Serialization

def _tree_list(trees):
    return [t.to_dict() for t in trees]


def _trees(objs):
    return [Tree.from_dict(o) for o in objs]


def _estimator_state(kind, est):
    if kind == "gaussian_nb":
        return {"theta": est.theta.tolist(), "var": est.var.tolist(),
                "log_prior": est.log_prior.tolist()}
    if kind == "lda_classifier":
        return {"means": est.means.tolist(),
                "scalings": est.scalings.tolist(),
                "log_prior": est.log_prior.tolist()}
    if kind == "random_forest":
        return {"trees": _tree_list(est.estimators)}
    if kind == "gradient_boost":
        return {"base_score": est.base_score.tolist(),
                "rounds": [_tree_list(r) for r in est.rounds]}
    return {"intervals": [iv.tolist() for iv in est.intervals],
            "trees": _tree_list(est.estimators)}


def _restore_estimator(spec, n_classes, state):
    est = _make_estimator(spec)
    est.n_classes = n_classes
    kind = spec.kind
    if kind == "gaussian_nb":
        est.theta = np.asarray(state["theta"], dtype=np.float64)
        est.var = np.asarray(state["var"], dtype=np.float64)
        est.log_prior = np.asarray(state["log_prior"], dtype=np.float64)
    elif kind == "lda_classifier":
        est.means = np.asarray(state["means"], dtype=np.float64)
        est.scalings = np.asarray(state["scalings"], dtype=np.float64)
        est.log_prior = np.asarray(state["log_prior"], dtype=np.float64)
    elif kind == "random_forest":
        est.estimators = _trees(state["trees"])
    elif kind == "gradient_boost":
        est.base_score = np.asarray(state["base_score"], dtype=np.float64)
        est.rounds = [_trees(r) for r in state["rounds"]]
    else:
        est.intervals = [np.asarray(iv, dtype=np.intp).reshape(-1, 2)
                         for iv in state["intervals"]]
        est.estimators = _trees(state["trees"])
    return est


def dump_model(model):
    """Serializes a TrainedClassifier to the JSON model container."""
    return json.dumps({
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.spec.kind,
        "params": model.spec.params,
        "seed": model.spec.seed,
        "n_classes": model.n_classes,
        "n_features": model.n_features,
        "state": _estimator_state(model.spec.kind, model.estimator),
    }, sort_keys=True)


def load_model(text):
    obj = json.loads(text)
    if obj.get("format") != MODEL_FORMAT:
        raise ClassifierError("not a %s container" % MODEL_FORMAT)
    if obj.get("version") != MODEL_VERSION:
        raise ClassifierError("unsupported model container version %r" %
                              (obj.get("version"),))
    spec = ClassifierSpec(obj["kind"], obj["params"], obj["seed"])
    estimator = _restore_estimator(spec, obj["n_classes"], obj["state"])
    return TrainedClassifier(spec, obj["n_classes"], obj["n_features"],
                             estimator)
