"""
Supervised dimension reduction with linear discriminant analysis.

The discriminant directions are found without inverting the within-class
scatter: it is first whitened through its eigendecomposition (with a small
ridge on the diagonal), then the whitened between-class scatter is
eigendecomposed. The retained component count is the smallest k whose
cumulative explained-variance ratio reaches the threshold.
"""

import json
import logging

import numpy as np
from scipy import linalg

from . import DataError, NumericError


log = logging.getLogger(__name__)

SHRINKAGE = 1e-6
DEFAULT_THRESHOLD = 0.95
# absorbs summation round-off so that e.g. 0.5 + 0.45 reaches 0.95
CUMULATIVE_SLACK = 1e-12


class DegenerateScatterError(NumericError):
    pass


class ShapeError(DataError, ValueError):
    pass


class InsufficientDataError(DataError, ValueError):
    pass


class Projection:
    def __init__(self, mean, basis, explained_variance_ratio):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.basis = np.asarray(basis, dtype=np.float64)
        self.explained_variance_ratio = np.asarray(explained_variance_ratio,
                                                   dtype=np.float64)
        for arr in (self.mean, self.basis, self.explained_variance_ratio):
            arr.setflags(write=False)

    @property
    def input_dim(self):
        return self.basis.shape[0]

    @property
    def output_dim(self):
        return self.basis.shape[1]

    def __repr__(self):
        return "<%s %d -> %d>" % (self.__class__.__name__, self.input_dim,
                                  self.output_dim)


def _orient_columns(basis):
    # largest-magnitude entry of each column is made positive
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def select_components(ratios, threshold=DEFAULT_THRESHOLD):
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.size == 0:
        raise ValueError("empty explained-variance ratio vector")
    cumulative = np.cumsum(ratios)
    reached = np.flatnonzero(cumulative >= threshold - CUMULATIVE_SLACK)
    if reached.size == 0:
        return int(ratios.size)
    return int(reached[0]) + 1


def fit_lda(X, y, threshold=DEFAULT_THRESHOLD):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ShapeError("X must be n×m with one label per row")
    classes = np.unique(y)
    n, m = X.shape
    c = classes.size
    if c < 2:
        raise InsufficientDataError("LDA needs at least 2 classes, got %d" %
                                    c)
    if n <= c:
        raise InsufficientDataError("LDA needs more rows (%d) than classes "
                                    "(%d)" % (n, c))

    mean = X.mean(axis=0)
    within = np.zeros((m, m))
    between = np.zeros((m, m))
    for label in classes:
        rows = X[y == label]
        mu = rows.mean(axis=0)
        centered = rows - mu
        within += centered.T @ centered
        diff = (mu - mean)[:, None]
        between += rows.shape[0] * (diff @ diff.T)

    if not np.any(within) and not np.any(between):
        raise DegenerateScatterError("degenerate scatter: all points are "
                                     "identical")
    within[np.diag_indices(m)] += SHRINKAGE
    evals, evecs = linalg.eigh(within)
    if evals.min() <= 0:
        raise DegenerateScatterError("within-class scatter is not positive "
                                     "definite after shrinkage")
    whitening = evecs / np.sqrt(evals)

    disc_evals, disc_evecs = linalg.eigh(whitening.T @ between @ whitening)
    order = np.argsort(disc_evals, kind="stable")[::-1]
    d = min(m, c - 1)
    disc_evals = np.clip(disc_evals[order][:d], 0.0, None)
    total = disc_evals.sum()
    if not total > 0:
        raise DegenerateScatterError("between-class scatter vanishes; class "
                                     "means coincide")
    ratios = disc_evals / total

    k = select_components(ratios, threshold)
    directions = whitening @ disc_evecs[:, order[:k]]
    directions /= np.linalg.norm(directions, axis=0)
    log.debug("LDA kept %d of %d components (ratios %s).", k, d, ratios)
    return Projection(mean, _orient_columns(directions), ratios)


def transform(p, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != p.input_dim:
        raise ShapeError("expected %d columns, got shape %s" %
                         (p.input_dim, X.shape))
    return (X - p.mean) @ p.basis


def projection_to_json(p):
    return json.dumps({
        "input_dim": p.input_dim,
        "output_dim": p.output_dim,
        "mean": p.mean.tolist(),
        "basis": p.basis.tolist(),
        "explained_variance_ratio": p.explained_variance_ratio.tolist(),
    }, indent=2, sort_keys=True)


def projection_from_json(text):
    obj = json.loads(text)
    basis = np.asarray(obj["basis"], dtype=np.float64).reshape(
        obj["input_dim"], obj["output_dim"])
    return Projection(obj["mean"], basis, obj["explained_variance_ratio"])
