"""
Training and prediction for the five classification schemes run over a class
hierarchy:

- ``fc``: one flat multi-class classifier.
- ``global``: the flat classifier's leaf posteriors summed up the tree and
  re-scored by products along every root-to-leaf path.
- ``lcpn``: a binary classifier per internal node; each instance is routed
  top-down along a single path.
- ``lcpn_plus``: the same classifiers, but every leaf is scored by the product
  of node probabilities along its path and the best leaf wins.
- ``lcpn_plus_f``: parents decide only non-leaf path elements, the flat
  classifier supplies the leaf factor; parents with two leaf children are
  never trained.

Binary node classifiers return (left, right) probabilities: column 0 is the
left child subtree, column 1 the right one.
"""

import logging

import numpy as np
import pandas as pd

from . import DataError, SCHEME_KINDS
from . import classifiers


log = logging.getLogger(__name__)


class SchemeTrainingError(DataError):
    pass


class SchemeError(ValueError):
    pass


class SchemeModel:
    def __init__(self, kind, tree, flat, per_parent, active, c):
        self.kind = kind
        self.tree = tree
        self.flat = flat
        self.per_parent = dict(per_parent)
        self.active = dict(active)
        self.c = c

    @property
    def active_parents(self):
        return sorted(p for p, on in self.active.items() if on)

    def __repr__(self):
        return "<%s %s c=%d parents=%d>" % (
            self.__class__.__name__, self.kind, self.c,
            len(self.active_parents))


def deactivated_parents(tree):
    """Internal nodes whose children are both leaves."""
    return [p for p in tree.internal_nodes()
            if all(tree.is_leaf(ch) for ch in tree.children[p])]


def node_targets(tree, node, y):
    """
    Row mask of the instances in ``node``'s subtree and their binary target:
    0 when the class lies under the left child, 1 under the right.
    """
    left, right = tree.children[node]
    in_left = np.isin(y, tree.leaves_under(left))
    in_right = np.isin(y, tree.leaves_under(right))
    mask = in_left | in_right
    return mask, in_right[mask].astype(np.intp)


def _fit_parent(tree, node, spec, X, y, counters):
    mask, target = node_targets(tree, node, y)
    sides = np.bincount(target, minlength=2)
    if sides.min() == 0:
        raise SchemeTrainingError(
            "node %d: no training instance on its %s side (fold too small)" %
            (node, "left" if sides[0] == 0 else "right"))
    log.debug("Training node %d on %d rows (%d left, %d right).", node,
              mask.sum(), sides[0], sides[1])
    return classifiers.fit(spec, X[mask], target, counters, n_classes=2)


def train_scheme(kind, tree, spec, X, y, counters=None, n_classes=None):
    if kind not in SCHEME_KINDS:
        raise SchemeError("unknown scheme %r" % (kind,))
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if kind != "fc" and tree is None:
        raise SchemeError("scheme %s needs a hierarchy" % kind)
    if tree is not None:
        c = tree.c
    else:
        c = n_classes if n_classes is not None else int(y.max()) + 1

    missing = np.flatnonzero(np.bincount(y, minlength=c) == 0)
    if missing.size and kind != "fc":
        raise SchemeTrainingError("classes %s have no training instance" %
                                  missing.tolist())

    flat = None
    if kind in ("fc", "global", "lcpn_plus_f"):
        flat = classifiers.fit(spec, X, y, counters, n_classes=c)

    per_parent = {}
    active = {}
    if kind in ("lcpn", "lcpn_plus", "lcpn_plus_f"):
        skipped = set(deactivated_parents(tree)) if kind == "lcpn_plus_f" \
            else set()
        for node in tree.internal_nodes():
            active[node] = node not in skipped
            if active[node]:
                per_parent[node] = _fit_parent(tree, node, spec, X, y,
                                               counters)
        if skipped:
            log.debug("%s: deactivated parents %s.", kind, sorted(skipped))
    return SchemeModel(kind, tree, flat, per_parent, active, c)


def _check_kind(model, *kinds):
    if model.kind not in kinds:
        raise SchemeError("expected a %s model, got %s" %
                          ("/".join(kinds), model.kind))


def _parent(model, node):
    clf = model.per_parent.get(node)
    if clf is None or not model.active.get(node, False):
        raise SchemeError("%s: no active classifier at node %d" %
                          (model.kind, node))
    return clf


def _flat_proba(model, X, counters):
    if model.flat is None:
        raise SchemeError("%s: flat classifier missing" % model.kind)
    return classifiers.predict_proba(model.flat, X, counters)


def _argmax(scores):
    # np.argmax returns the first maximum: ties go to the lowest class id
    return np.argmax(scores, axis=1).astype(np.intp)


def _leaf_columns(tree, node_scores):
    leaves = [tree.leaf_of(j) for j in range(tree.c)]
    return node_scores[:, leaves]


def predict_flat(model, X, counters=None):
    _check_kind(model, "fc")
    scores = _flat_proba(model, X, counters)
    return _argmax(scores), scores


def predict_lcpn(model, X, counters=None):
    """
    Routes every instance from the root to a leaf, one classifier call per
    visited node. Returns labels and per-instance traces (the visited node
    indices, root first, leaf last).
    """
    _check_kind(model, "lcpn")
    tree = model.tree
    X = np.asarray(X, dtype=np.float64)
    labels = np.empty(X.shape[0], dtype=np.intp)
    traces = []
    for i in range(X.shape[0]):
        row = X[i:i + 1]
        node = tree.root
        trace = [node]
        while not tree.is_leaf(node):
            proba = classifiers.predict_proba(_parent(model, node), row,
                                              counters)[0]
            # tie goes left
            node = tree.children[node][1 if proba[1] > proba[0] else 0]
            trace.append(node)
        labels[i] = tree.leaf_class[node]
        traces.append(trace)
    return labels, traces


def predict_lcpn_plus(model, X, counters=None):
    _check_kind(model, "lcpn_plus")
    tree = model.tree
    X = np.asarray(X, dtype=np.float64)
    node_scores = np.zeros((X.shape[0], tree.node_count))
    node_scores[:, tree.root] = 1.0
    for node in tree.breadth_first():
        if tree.is_leaf(node):
            continue
        proba = classifiers.predict_proba(_parent(model, node), X, counters)
        for pos, child in enumerate(tree.children[node]):
            node_scores[:, child] = node_scores[:, node] * proba[:, pos]
    scores = _leaf_columns(tree, node_scores)
    return _argmax(scores), scores


def predict_lcpn_plus_f(model, X, counters=None):
    _check_kind(model, "lcpn_plus_f")
    tree = model.tree
    X = np.asarray(X, dtype=np.float64)
    flat = _flat_proba(model, X, counters)
    # product of the non-leaf path factors reaching each internal node
    reach = np.ones((X.shape[0], tree.node_count))
    for node in tree.breadth_first():
        if tree.is_leaf(node):
            continue
        internal = [(pos, ch) for pos, ch in enumerate(tree.children[node])
                    if not tree.is_leaf(ch)]
        leaf_children = [ch for ch in tree.children[node] if tree.is_leaf(ch)]
        if internal:
            proba = classifiers.predict_proba(_parent(model, node), X,
                                              counters)
            for pos, child in internal:
                reach[:, child] = reach[:, node] * proba[:, pos]
        for child in leaf_children:
            reach[:, child] = reach[:, node]
    scores = flat * _leaf_columns(tree, reach)
    return _argmax(scores), scores


def predict_global(model, X, counters=None):
    _check_kind(model, "global")
    tree = model.tree
    if tree is None:
        raise SchemeError("global: hierarchy missing")
    flat = _flat_proba(model, X, counters)
    mass = np.zeros((flat.shape[0], tree.node_count))
    order = tree.breadth_first()
    for node in reversed(order):
        if tree.is_leaf(node):
            mass[:, node] = flat[:, tree.leaf_class[node]]
        else:
            left, right = tree.children[node]
            mass[:, node] = mass[:, left] + mass[:, right]
    path_product = np.ones_like(mass)
    for node in order:
        if node != tree.root:
            path_product[:, node] = (path_product[:, tree.parent[node]] *
                                     mass[:, node])
    scores = _leaf_columns(tree, path_product)
    return _argmax(scores), scores


_PREDICTORS = {
    "fc": predict_flat,
    "global": predict_global,
    "lcpn": predict_lcpn,
    "lcpn_plus": predict_lcpn_plus,
    "lcpn_plus_f": predict_lcpn_plus_f,
}


def predict(model, X, counters=None):
    """Labels for X under any scheme."""
    labels, _ = _PREDICTORS[model.kind](model, X, counters)
    return labels


def export_scores(labels, scores, class_names):
    frame = pd.DataFrame(np.asarray(scores),
                         columns=["score_%s" % n for n in class_names])
    frame.insert(0, "instance", np.arange(len(labels)))
    frame["predicted"] = [class_names[j] for j in labels]
    return frame


def export_traces(labels, traces, class_names=None):
    names = class_names or [str(j) for j in range(int(max(labels, default=0)) + 1)]
    return pd.DataFrame({
        "instance": np.arange(len(labels)),
        "path": [">".join(str(node) for node in t) for t in traces],
        "depth": [len(t) - 1 for t in traces],
        "predicted": [names[j] for j in labels],
    })
