"""
Class hierarchies: representation, induction from class conditional means,
paths and serialization.

A hierarchy over c classes is a rooted binary tree with 2c-1 nodes. Node 0 is
the root; generated trees number their nodes breadth-first, left child before
right child, where the left child of every split is the side holding the
lowest class id. Leaves carry class ids, internal nodes carry none.
"""

import collections
import hashlib
import json
import logging

import numpy as np
from scipy.cluster import hierarchy as sch
from scipy.spatial.distance import cdist

from . import DataError


log = logging.getLogger(__name__)

LINKAGES = ("single", "complete", "average", "ward")
NO_NODE = -1


class ClusteringError(DataError, ValueError):
    pass


class TreeStructureError(ValueError):
    pass


class ClassMeans:
    def __init__(self, means, counts):
        self.means = np.asarray(means, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.intp)

    @property
    def space_dim(self):
        return self.means.shape[1]

    @property
    def c(self):
        return self.means.shape[0]


def class_conditional_means(X, y, c=None):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if c is None:
        c = int(y.max()) + 1 if y.size else 0
    counts = np.bincount(y, minlength=c)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise DataError("classes %s are absent from the training labels" %
                        missing.tolist())
    sums = np.zeros((c, X.shape[1]))
    np.add.at(sums, y, X)
    return ClassMeans(sums / counts[:, None], counts)


# ---------------------------------------------------------------------------
# Tree representation

NodeRecord = collections.namedtuple(
    "NodeRecord", "index,parent,position,children,leaf_class")


class HierarchyTree:
    """
    Immutable binary hierarchy. Per node p: ``parent[p]`` (NO_NODE for the
    root), ``position[p]`` (0 left, 1 right, NO_NODE for the root),
    ``children[p]`` ((left, right) for internal nodes, None for leaves) and
    ``leaf_class[p]`` (class id for leaves, NO_NODE for internal nodes).
    """

    def __init__(self, children, leaf_class, root=0):
        self.root = root
        size = len(leaf_class)
        self.children = [tuple(ch) if ch is not None else None
                         for ch in children]
        self.leaf_class = np.asarray(leaf_class, dtype=np.intp)
        self.parent = np.full(size, NO_NODE, dtype=np.intp)
        self.position = np.full(size, NO_NODE, dtype=np.intp)
        for p, ch in enumerate(self.children):
            if ch is None:
                continue
            for pos, child in enumerate(ch):
                if not 0 <= child < size or child == root:
                    raise TreeStructureError("node %d has invalid child %r" %
                                             (p, child))
                if self.parent[child] != NO_NODE:
                    raise TreeStructureError("node %d has two parents" % child)
                self.parent[child] = p
                self.position[child] = pos
        for arr in (self.leaf_class, self.parent, self.position):
            arr.setflags(write=False)
        self._leaf_of_class = {int(self.leaf_class[p]): p
                               for p in range(size)
                               if self.children[p] is None}
        self.validate()

    @property
    def node_count(self):
        return len(self.children)

    @property
    def c(self):
        return (self.node_count + 1) // 2

    def is_leaf(self, p):
        return self.children[p] is None

    def internal_nodes(self):
        return [p for p in range(self.node_count) if not self.is_leaf(p)]

    def leaf_of(self, class_id):
        try:
            return self._leaf_of_class[int(class_id)]
        except KeyError:
            raise TreeStructureError("unknown class id %r" % (class_id,))

    def leaves_under(self, p):
        """Class ids of the leaves in the subtree rooted at ``p``, sorted."""
        found = []
        stack = [p]
        while stack:
            node = stack.pop()
            if self.is_leaf(node):
                found.append(int(self.leaf_class[node]))
            else:
                stack.extend(self.children[node])
        return sorted(found)

    def breadth_first(self):
        order = []
        queue = collections.deque([self.root])
        while queue:
            node = queue.popleft()
            order.append(node)
            if not self.is_leaf(node):
                queue.extend(self.children[node])
        return order

    def validate(self, breadth_first=False):
        size = self.node_count
        if size % 2 != 1 or size < 3:
            raise TreeStructureError("a binary hierarchy over c >= 2 classes "
                                     "has 2c-1 nodes, got %d" % size)
        if self.parent[self.root] != NO_NODE:
            raise TreeStructureError("root %d has a parent" % self.root)
        internal = 0
        for p, ch in enumerate(self.children):
            if ch is None:
                continue
            internal += 1
            if len(ch) != 2:
                raise TreeStructureError("internal node %d has %d children" %
                                         (p, len(ch)))
            if self.leaf_class[p] != NO_NODE:
                raise TreeStructureError("internal node %d carries a class" %
                                         p)
        c = self.c
        if internal != c - 1:
            raise TreeStructureError("expected %d internal nodes, found %d" %
                                     (c - 1, internal))
        if sorted(self._leaf_of_class) != list(range(c)):
            raise TreeStructureError("leaves must carry the distinct class ids "
                                     "0..%d" % (c - 1))
        reached = self.breadth_first()
        if len(reached) != size or len(set(reached)) != size:
            raise TreeStructureError("tree is disconnected or cyclic")
        if breadth_first and reached != list(range(size)):
            raise TreeStructureError("node indices are not numbered "
                                     "breadth-first from the root")

    def fingerprint(self, names=None):
        return hashlib.sha256(
            export_newick(self, names).encode("utf-8")).hexdigest()

    def __repr__(self):
        return "<%s %s>" % (self.__class__.__name__, export_newick(self))


def _tree_from_nested(nested, c):
    """Numbers a nested (left, right)/class-id structure breadth-first."""
    children = []
    leaf_class = []
    queue = collections.deque([nested])
    next_index = 1
    while queue:
        item = queue.popleft()
        if isinstance(item, tuple):
            children.append((next_index, next_index + 1))
            leaf_class.append(NO_NODE)
            next_index += 2
            queue.extend(item)
        else:
            children.append(None)
            leaf_class.append(item)
    tree = HierarchyTree(children, leaf_class)
    if tree.c != c:
        raise TreeStructureError("built %d leaves for %d classes" %
                                 (tree.c, c))
    return tree


def _lowest_class(nested):
    while isinstance(nested, tuple):
        nested = nested[0]
    return nested


def _oriented(a, b):
    # the side holding the lowest class id goes left
    return (a, b) if _lowest_class(a) < _lowest_class(b) else (b, a)


# ---------------------------------------------------------------------------
# k-medoids

def _pam_cost(dist, medoids):
    return dist[:, medoids].min(axis=1).sum()


def pam_kmedoids(points, k, seed=0):
    """
    Partitioning around medoids with the deterministic BUILD initialization
    followed by steepest-descent SWAP.

    ``seed`` is accepted for interface stability; BUILD and SWAP draw no
    random numbers. Returns (medoids, assignment, cost) where ``medoids`` are
    ascending row indices and ``assignment[i]`` is the position in
    ``medoids`` of the medoid point i belongs to. SWAP visits medoids in
    ascending index order and candidates in row order, and keeps the first
    of equally good swaps.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if k < 1 or k > n:
        raise ClusteringError("k must be in 1..%d, got %d" % (n, k))
    dist = cdist(points, points, metric="euclidean")

    # BUILD
    medoids = [int(np.argmin(dist.sum(axis=1)))]
    nearest = dist[:, medoids[0]].copy()
    while len(medoids) < k:
        best_gain, best = -1.0, None
        for h in range(n):
            if h in medoids:
                continue
            gain = np.maximum(nearest - dist[:, h], 0.0).sum()
            if gain > best_gain:
                best_gain, best = gain, h
        medoids.append(best)
        nearest = np.minimum(nearest, dist[:, best])
    medoids.sort()

    # SWAP
    cost = _pam_cost(dist, medoids)
    while True:
        best_cost, best_swap = cost, None
        for i in range(k):
            for h in range(n):
                if h in medoids:
                    continue
                trial = medoids[:i] + [h] + medoids[i + 1:]
                trial_cost = _pam_cost(dist, trial)
                if trial_cost < best_cost:
                    best_cost, best_swap = trial_cost, (i, h)
        if best_swap is None:
            break
        i, h = best_swap
        log.debug("PAM swap medoid %d -> %d, cost %.6g -> %.6g",
                  medoids[i], h, cost, best_cost)
        medoids[i] = h
        medoids.sort()
        cost = best_cost

    assignment = np.argmin(dist[:, medoids], axis=1)
    assignment[medoids] = np.arange(k)
    return np.asarray(medoids, dtype=np.intp), assignment, float(cost)


def build_divisive(cm, seed=0):
    """Splits class sets top-down with 2-medoids until singletons remain."""
    c = cm.c
    if c < 2:
        raise ClusteringError("a hierarchy needs at least 2 classes")

    def split(class_ids):
        if len(class_ids) == 1:
            return class_ids[0]
        _, assignment, cost = pam_kmedoids(cm.means[class_ids], 2, seed)
        sides = [[cid for cid, a in zip(class_ids, assignment) if a == s]
                 for s in (0, 1)]
        log.debug("Divisive split %s -> %s | %s (cost %.6g)", class_ids,
                  sides[0], sides[1], cost)
        return _oriented(split(sides[0]), split(sides[1]))

    return _tree_from_nested(split(list(range(c))), c)


def build_agglomerative(cm, linkage="single"):
    """Merges class means bottom-up on Euclidean distances."""
    if linkage not in LINKAGES:
        raise ClusteringError("unknown linkage %r" % (linkage,))
    c = cm.c
    if c < 2:
        raise ClusteringError("a hierarchy needs at least 2 classes")
    merges = sch.linkage(cm.means, method=linkage, metric="euclidean")
    clusters = list(range(c))
    for a, b, height, _ in merges:
        log.debug("Agglomerative merge %s + %s at %.6g", clusters[int(a)],
                  clusters[int(b)], height)
        clusters.append(_oriented(clusters[int(a)], clusters[int(b)]))
    return _tree_from_nested(clusters[-1], c)


# ---------------------------------------------------------------------------
# Paths

class NodePath:
    """
    Path from a leaf up to (but excluding) the root. ``p`` lists node
    indices, ``q`` their parents, ``r`` each node's child position and ``s``
    each parent's own child position (one entry shorter: the root has none).
    """

    def __init__(self, leaf_class, p, q, r, s):
        self.leaf_class = leaf_class
        self.p = tuple(p)
        self.q = tuple(q)
        self.r = tuple(r)
        self.s = tuple(s)

    @property
    def terminal(self):
        """(t, u, v, w) of the leaf element; w is None under the root."""
        w = self.s[0] if self.s else None
        return self.p[0], self.q[0], self.r[0], w

    @property
    def remainder(self):
        return self.p[1:], self.q[1:], self.r[1:], self.s[1:]

    def __len__(self):
        return len(self.p)

    def __repr__(self):
        return "<%s C%d p=%s q=%s r=%s s=%s>" % (
            self.__class__.__name__, self.leaf_class, list(self.p),
            list(self.q), list(self.r), list(self.s))


def path_of(tree, class_id):
    node = tree.leaf_of(class_id)
    p, q, r, s = [], [], [], []
    while node != tree.root:
        parent = int(tree.parent[node])
        p.append(node)
        q.append(parent)
        r.append(int(tree.position[node]))
        if parent != tree.root:
            s.append(int(tree.position[parent]))
        node = parent
    return NodePath(int(class_id), p, q, r, s)


# ---------------------------------------------------------------------------
# Serialization

def _newick_name(name):
    if any(ch in name for ch in " ()[]':;,\t\n"):
        return "'%s'" % name.replace("'", "''")
    return name


def export_newick(tree, names=None):
    def render(p):
        if tree.is_leaf(p):
            cid = int(tree.leaf_class[p])
            return _newick_name(names[cid] if names else str(cid))
        left, right = tree.children[p]
        return "(%s,%s)" % (render(left), render(right))

    return render(tree.root) + ";"


def tree_records(tree):
    return [NodeRecord(p, int(tree.parent[p]) if p != tree.root else None,
                       int(tree.position[p]) if p != tree.root else None,
                       list(tree.children[p]) if tree.children[p] else None,
                       int(tree.leaf_class[p]) if tree.is_leaf(p) else None)
            for p in range(tree.node_count)]


def tree_to_json(tree):
    return json.dumps([rec._asdict() for rec in tree_records(tree)],
                      indent=2)


def tree_from_records(records):
    records = sorted(records, key=lambda rec: rec["index"])
    if [rec["index"] for rec in records] != list(range(len(records))):
        raise TreeStructureError("node indices must be 0..%d" %
                                 (len(records) - 1))
    roots = [rec["index"] for rec in records if rec["parent"] is None]
    if len(roots) != 1:
        raise TreeStructureError("expected one root, found %d" % len(roots))
    children = [rec["children"] for rec in records]
    leaf_class = [NO_NODE if rec["leaf_class"] is None else rec["leaf_class"]
                  for rec in records]
    tree = HierarchyTree(children, leaf_class, root=roots[0])
    for rec in records:
        if rec["parent"] is not None and (
                tree.parent[rec["index"]] != rec["parent"] or
                tree.position[rec["index"]] != rec["position"]):
            raise TreeStructureError("node %d: parent link disagrees with "
                                     "children lists" % rec["index"])
    return tree
