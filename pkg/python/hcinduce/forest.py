"""
Tree learners: CART classification trees, random forests, multinomial
gradient-boosted trees and the time series forest with its interval features.

Trees are stored as flat arrays (feature, threshold, left, right, value) and
evaluated level by level over all rows at once. Split search is exhaustive over
midpoints of sorted unique feature values; ties go to the lower feature index,
then to the lower threshold, which makes growth fully deterministic.
"""

import logging
import math

import numpy as np
from joblib import Parallel, delayed

from .seeding import make_rng, spawn_seeds


log = logging.getLogger(__name__)

LEAF = -1


class Tree:
    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def node_count(self):
        return self.feature.size

    def apply(self, X):
        """Index of the leaf reached by every row of X."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node[rows]]
            active = feat != LEAF
            if not active.any():
                return node
            rows = rows[active]
            feat = feat[active]
            at = node[rows]
            go_left = X[rows, feat] <= self.threshold[at]
            node[rows] = np.where(go_left, self.left[at], self.right[at])

    def predict_value(self, X):
        return self.value[self.apply(X)]

    def to_dict(self):
        return {"feature": self.feature.tolist(),
                "threshold": self.threshold.tolist(),
                "left": self.left.tolist(),
                "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["feature"], obj["threshold"], obj["left"],
                   obj["right"], obj["value"])


class _TreeBuilder:
    """Grows one tree depth-first; subclasses supply the split criterion."""

    def __init__(self, max_depth=None, min_samples_split=2,
                 min_samples_leaf=1, max_features=None, rng=None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.rng = rng

    def _candidate_features(self, n_features):
        all_features = np.arange(n_features)
        if self.max_features is None or self.max_features >= n_features:
            return all_features, None
        chosen = np.sort(self.rng.choice(n_features, self.max_features,
                                         replace=False))
        return chosen, np.setdiff1d(all_features, chosen)

    def _best_split(self, X, idx, features):
        best = None
        for f in features:
            xs = X[idx, f]
            order = np.argsort(xs, kind="stable")
            xs = xs[order]
            n = xs.size
            n_left = np.arange(1, n)
            valid = ((xs[1:] > xs[:-1]) &
                     (n_left >= self.min_samples_leaf) &
                     (n - n_left >= self.min_samples_leaf))
            if not valid.any():
                continue
            score = self._split_scores(idx[order], n_left)
            score[~valid] = np.inf
            pos = int(np.argmin(score))
            if best is None or score[pos] < best[0]:
                threshold = (xs[pos] + xs[pos + 1]) / 2.0
                if threshold >= xs[pos + 1]:
                    threshold = xs[pos]
                best = (score[pos], int(f), threshold)
        return best

    def build(self, X, idx):
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(rows):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(self._leaf_value(rows))
            return len(feature) - 1

        root = new_node(idx)
        stack = [(root, idx, 0)]
        while stack:
            node, rows, depth = stack.pop()
            if ((self.max_depth is not None and depth >= self.max_depth) or
                    rows.size < self.min_samples_split or
                    not self._splittable(rows)):
                continue
            chosen, rest = self._candidate_features(X.shape[1])
            best = self._best_split(X, rows, chosen)
            if best is None and rest is not None and rest.size:
                best = self._best_split(X, rows, rest)
            if best is None or not self._accept(best[0], rows):
                continue
            _, f, thr = best
            mask = X[rows, f] <= thr
            left_node = new_node(rows[mask])
            right_node = new_node(rows[~mask])
            feature[node] = f
            threshold[node] = thr
            left[node] = left_node
            right[node] = right_node
            stack.append((right_node, rows[~mask], depth + 1))
            stack.append((left_node, rows[mask], depth + 1))
        return Tree(feature, threshold, left, right, value)


class _GiniBuilder(_TreeBuilder):
    def __init__(self, onehot, **kwargs):
        super(_GiniBuilder, self).__init__(**kwargs)
        self.onehot = onehot

    def _leaf_value(self, rows):
        return self.onehot[rows].sum(axis=0)

    def _splittable(self, rows):
        return np.count_nonzero(self.onehot[rows].sum(axis=0)) > 1

    def _split_scores(self, ordered_rows, n_left):
        counts = np.cumsum(self.onehot[ordered_rows], axis=0)
        total = counts[-1]
        left_counts = counts[:-1]
        right_counts = total - left_counts
        n = ordered_rows.size
        n_right = n - n_left
        gini_left = 1.0 - ((left_counts / n_left[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - ((right_counts / n_right[:, None]) ** 2).sum(axis=1)
        return (n_left * gini_left + n_right * gini_right) / n

    def _accept(self, score, rows):
        return True


class _NewtonBuilder(_TreeBuilder):
    """Second-order regression tree on gradient/hessian pairs."""

    def __init__(self, grad, hess, reg_lambda=1.0, min_child_weight=1.0,
                 **kwargs):
        super(_NewtonBuilder, self).__init__(**kwargs)
        self.grad = grad
        self.hess = hess
        self.reg_lambda = reg_lambda
        self.min_child_weight = min_child_weight

    def _leaf_value(self, rows):
        return [-self.grad[rows].sum() /
                (self.hess[rows].sum() + self.reg_lambda)]

    def _splittable(self, rows):
        return self.hess[rows].sum() >= 2 * self.min_child_weight

    def _split_scores(self, ordered_rows, n_left):
        g = np.cumsum(self.grad[ordered_rows])
        h = np.cumsum(self.hess[ordered_rows])
        gl, hl = g[:-1], h[:-1]
        gr, hr = g[-1] - gl, h[-1] - hl
        lam = self.reg_lambda
        gain = (gl ** 2 / (hl + lam) + gr ** 2 / (hr + lam) -
                g[-1] ** 2 / (h[-1] + lam))
        gain[(hl < self.min_child_weight) | (hr < self.min_child_weight)] = \
            -np.inf
        # builders minimize
        return -gain

    def _accept(self, score, rows):
        return -score > 0


def resolve_max_features(max_features, n_features):
    if max_features is None or max_features == "all":
        return None
    if max_features == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if max_features == "log2":
        return max(1, int(math.log2(n_features))) if n_features > 1 else 1
    if isinstance(max_features, float) and 0 < max_features <= 1:
        return max(1, int(max_features * n_features))
    return max(1, min(int(max_features), n_features))


def _onehot(y, n_classes):
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = 1.0
    return out


def _smoothed(counts):
    # Laplace-smoothed leaf class frequencies
    return (counts + 1.0) / (counts.sum(axis=1, keepdims=True) +
                             counts.shape[1])


def _fit_forest_tree(X, onehot, seed_seq, bootstrap, builder_kwargs):
    rng = make_rng(seed_seq)
    n = X.shape[0]
    if bootstrap:
        idx = np.sort(rng.integers(0, n, n))
    else:
        idx = np.arange(n)
    builder = _GiniBuilder(onehot, rng=rng, **builder_kwargs)
    return builder.build(X, idx)


class DecisionTreeModel:
    def __init__(self, max_depth=None, min_samples_split=2,
                 min_samples_leaf=1, max_features=None, seed=0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed
        self.tree = None
        self.n_classes = None

    def fit(self, X, y, n_classes):
        self.n_classes = n_classes
        builder = _GiniBuilder(
            _onehot(y, n_classes), rng=make_rng(self.seed),
            max_depth=self.max_depth,
            min_samples_split=self.min_samples_split,
            min_samples_leaf=self.min_samples_leaf,
            max_features=resolve_max_features(self.max_features, X.shape[1]))
        self.tree = builder.build(X, np.arange(X.shape[0]))
        return self

    def predict_proba(self, X):
        return _smoothed(self.tree.predict_value(X))


class RandomForestModel:
    def __init__(self, n_estimators=100, max_depth=None, min_samples_split=2,
                 min_samples_leaf=1, max_features="sqrt", bootstrap=True,
                 n_jobs=1, seed=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.n_jobs = n_jobs
        self.seed = seed
        self.estimators = []
        self.n_classes = None

    def fit(self, X, y, n_classes):
        self.n_classes = n_classes
        onehot = _onehot(y, n_classes)
        builder_kwargs = dict(
            max_depth=self.max_depth,
            min_samples_split=self.min_samples_split,
            min_samples_leaf=self.min_samples_leaf,
            max_features=resolve_max_features(self.max_features, X.shape[1]))
        seeds = spawn_seeds(self.seed, self.n_estimators)
        self.estimators = Parallel(n_jobs=self.n_jobs)(
            delayed(_fit_forest_tree)(X, onehot, seeds[i], self.bootstrap,
                                      builder_kwargs)
            for i in range(self.n_estimators))
        log.debug("Random forest: %d trees, %d nodes in total.",
                  len(self.estimators),
                  sum(t.node_count for t in self.estimators))
        return self

    def predict_proba(self, X):
        proba = np.zeros((X.shape[0], self.n_classes))
        for tree in self.estimators:
            proba += _smoothed(tree.predict_value(X))
        return proba / len(self.estimators)


def softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


class GradientBoostModel:
    """
    Multinomial gradient boosting: one Newton regression tree per class and
    round on the softmax loss, scores starting at the log class priors.
    """

    def __init__(self, n_estimators=100, learning_rate=0.3, max_depth=6,
                 min_child_weight=1.0, reg_lambda=1.0, seed=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_child_weight = min_child_weight
        self.reg_lambda = reg_lambda
        self.seed = seed
        self.base_score = None
        self.rounds = []
        self.n_classes = None

    def fit(self, X, y, n_classes):
        self.n_classes = n_classes
        onehot = _onehot(y, n_classes)
        prior = onehot.mean(axis=0)
        self.base_score = np.log(prior)
        scores = np.tile(self.base_score, (X.shape[0], 1))
        idx = np.arange(X.shape[0])
        self.rounds = []
        for _ in range(self.n_estimators):
            proba = softmax(scores)
            trees = []
            for k in range(n_classes):
                grad = proba[:, k] - onehot[:, k]
                hess = np.maximum(2.0 * proba[:, k] * (1.0 - proba[:, k]),
                                  1e-16)
                builder = _NewtonBuilder(
                    grad, hess, reg_lambda=self.reg_lambda,
                    min_child_weight=self.min_child_weight,
                    max_depth=self.max_depth)
                tree = builder.build(X, idx)
                scores[:, k] += (self.learning_rate *
                                 tree.predict_value(X)[:, 0])
                trees.append(tree)
            self.rounds.append(trees)
        return self

    def decision_function(self, X):
        scores = np.tile(self.base_score, (X.shape[0], 1))
        for trees in self.rounds:
            for k, tree in enumerate(trees):
                scores[:, k] += (self.learning_rate *
                                 tree.predict_value(X)[:, 0])
        return scores

    def predict_proba(self, X):
        return softmax(self.decision_function(X))


# ---------------------------------------------------------------------------
# Time series forest

def draw_intervals(length, n_intervals, rng, min_interval=3):
    """Random [start, end) intervals of at least ``min_interval`` samples."""
    min_interval = max(2, min(min_interval, length))
    intervals = []
    while len(intervals) < n_intervals:
        start = int(rng.integers(0, length - min_interval + 1))
        width = int(rng.integers(min_interval, length - start + 1))
        if width < 2:
            continue
        intervals.append((start, start + width))
    return np.asarray(intervals, dtype=np.intp).reshape(-1, 2)


def interval_features(X, intervals):
    """(mean, standard deviation, least-squares slope) per interval."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty((X.shape[0], 3 * len(intervals)))
    for i, (start, end) in enumerate(intervals):
        seg = X[:, start:end]
        t = np.arange(end - start, dtype=np.float64)
        t -= t.mean()
        mean = seg.mean(axis=1)
        out[:, 3 * i] = mean
        out[:, 3 * i + 1] = seg.std(axis=1)
        out[:, 3 * i + 2] = ((seg - mean[:, None]) @ t) / (t @ t)
    return out


def default_interval_count(length):
    return max(1, int(math.sqrt(length)))


def ts_interval_features(X, n_intervals, seed, min_interval=3):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] < 3:
        raise ValueError("series must have at least 3 samples")
    intervals = draw_intervals(X.shape[1], n_intervals, make_rng(seed),
                               min_interval)
    return interval_features(X, intervals)


def _fit_ts_tree(X, onehot, seed_seq, n_intervals, min_interval,
                 builder_kwargs):
    rng = make_rng(seed_seq)
    intervals = draw_intervals(X.shape[1], n_intervals, rng, min_interval)
    feats = interval_features(X, intervals)
    builder = _GiniBuilder(onehot, rng=rng, **builder_kwargs)
    return intervals, builder.build(feats, np.arange(X.shape[0]))


class TimeSeriesForestModel:
    def __init__(self, n_estimators=200, n_intervals=None, min_interval=3,
                 max_depth=None, n_jobs=1, seed=0):
        self.n_estimators = n_estimators
        self.n_intervals = n_intervals
        self.min_interval = min_interval
        self.max_depth = max_depth
        self.n_jobs = n_jobs
        self.seed = seed
        self.estimators = []
        self.intervals = []
        self.n_classes = None

    def fit(self, X, y, n_classes):
        self.n_classes = n_classes
        length = X.shape[1]
        if length < 3:
            raise ValueError("series must have at least 3 samples")
        n_intervals = self.n_intervals or default_interval_count(length)
        seeds = spawn_seeds(self.seed, self.n_estimators)
        fitted = Parallel(n_jobs=self.n_jobs)(
            delayed(_fit_ts_tree)(X, _onehot(y, n_classes), seeds[i],
                                  n_intervals, self.min_interval,
                                  dict(max_depth=self.max_depth))
            for i in range(self.n_estimators))
        self.intervals = [f[0] for f in fitted]
        self.estimators = [f[1] for f in fitted]
        return self

    def predict_proba(self, X):
        proba = np.zeros((X.shape[0], self.n_classes))
        for intervals, tree in zip(self.intervals, self.estimators):
            proba += _smoothed(tree.predict_value(
                interval_features(X, intervals)))
        return proba / len(self.estimators)
