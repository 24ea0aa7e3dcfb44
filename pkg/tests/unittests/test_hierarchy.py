import itertools
import json

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from hcinduce import DataError
from hcinduce.hierarchy import (ClassMeans, ClusteringError, HierarchyTree,
                                NO_NODE, TreeStructureError,
                                build_agglomerative, build_divisive,
                                class_conditional_means, export_newick,
                                pam_kmedoids, path_of, tree_from_records,
                                tree_records, tree_to_json)


def means(*rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[0] == 1 and len(rows[0]) > 1:
        rows = rows.T
    return ClassMeans(rows, np.ones(rows.shape[0], dtype=int))


def six_class_tree():
    """
    Hand-numbered topology: root 0 over (2, 1); 1 over (3, 4);
    2 over (7, 8); 3 over (5, 6); 5 over (9, 10). Class 5 sits at node 6.
    """
    children = [(2, 1), (3, 4), (7, 8), (5, 6), None, (9, 10), None, None,
                None, None, None]
    leaf_class = [NO_NODE] * 11
    for node, cls in {7: 0, 8: 1, 9: 2, 10: 3, 4: 4, 6: 5}.items():
        leaf_class[node] = cls
    return HierarchyTree(children, leaf_class)


def test_class_conditional_means():
    X = np.array([[0.0, 0.0], [0.0, 2.0], [4.0, 4.0]])
    cm = class_conditional_means(X, np.array([0, 0, 1]))
    assert cm.means.tolist() == [[0.0, 1.0], [4.0, 4.0]]
    assert cm.counts.tolist() == [2, 1]


def test_class_conditional_means_single_instances():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(class_conditional_means(X, [1, 0]).means, X[::-1])


def test_class_conditional_means_absent_class():
    with pytest.raises(DataError):
        class_conditional_means(np.zeros((2, 1)), [0, 2])


def test_pam_two_points():
    medoids, assignment, cost = pam_kmedoids([[0.0], [5.0]], 2)
    assert medoids.tolist() == [0, 1]
    assert assignment.tolist() == [0, 1]
    assert cost == 0.0


def test_pam_line():
    medoids, assignment, cost = pam_kmedoids([0.0, 1.0, 10.0, 11.0], 2)
    assert cost == 2.0
    assert assignment[0] == assignment[1] != assignment[2] == assignment[3]


def test_pam_identical_points():
    medoids, assignment, cost = pam_kmedoids(np.zeros((5, 2)), 2)
    assert medoids.tolist() == [0, 1]
    assert cost == 0.0
    assert assignment[0] == 0 and assignment[1] == 1


def test_pam_equal_swaps_resolve_by_medoid_index():
    # BUILD picks 6, 3, 5, 0; replacing 3 or 6 by 4 both reach cost 3
    points = [10.0, 11.0, 10.0, 5.0, 6.0, 1.0, 9.0, 7.0]
    medoids, assignment, cost = pam_kmedoids(points, 4)
    assert medoids.tolist() == [0, 4, 5, 6]
    assert cost == 3.0
    assert assignment.tolist() == [0, 0, 0, 1, 1, 2, 3, 1]


def test_pam_invalid_k():
    with pytest.raises(ClusteringError):
        pam_kmedoids([[0.0], [1.0]], 3)


def test_pam_matches_exhaustive_search():
    rng = np.random.default_rng(0)
    for trial in range(500):
        n = int(rng.integers(2, 9))
        dim = int(rng.integers(1, 4))
        points = rng.normal(size=(n, dim))
        medoids, _, cost = pam_kmedoids(points, 2)
        dist = cdist(points, points)
        best = min(dist[:, list(pair)].min(axis=1).sum()
                   for pair in itertools.combinations(range(n), 2))
        assert cost == best, "trial %d: %r" % (trial, points)
        # no single swap improves
        for i in range(2):
            for h in set(range(n)) - set(medoids.tolist()):
                trial_set = medoids.tolist()
                trial_set[i] = h
                assert dist[:, trial_set].min(axis=1).sum() >= cost


def test_divisive_example():
    tree = build_divisive(means(0.0, 1.0, 10.0))
    assert export_newick(tree) == "((0,1),2);"
    assert tree.leaves_under(tree.children[0][0]) == [0, 1]


def test_agglomerative_single_linkage():
    tree = build_agglomerative(means(0.0, 1.0, 5.0), "single")
    assert export_newick(tree, ["a", "b", "c"]) == "((a,b),c);"


@pytest.mark.parametrize("linkage", ["single", "complete", "average", "ward"])
def test_agglomerative_tight_pairs(linkage):
    tree = build_agglomerative(means(0.0, 0.1, 9.0, 9.1), linkage)
    assert tree.node_count == 7
    assert export_newick(tree) == "((0,1),(2,3));"


def test_agglomerative_unknown_linkage():
    with pytest.raises(ClusteringError):
        build_agglomerative(means(0.0, 1.0), "centroid")


@pytest.mark.parametrize("c", [2, 3, 5, 8, 13, 21, 40])
@pytest.mark.parametrize("method", ["divisive", "agglomerative"])
def test_tree_structure(c, method):
    rng = np.random.default_rng(c)
    cm = ClassMeans(rng.normal(size=(c, 3)), np.ones(c, dtype=int))
    if method == "divisive":
        tree = build_divisive(cm)
    else:
        tree = build_agglomerative(cm, "average")
    assert tree.node_count == 2 * c - 1
    leaves = [p for p in range(tree.node_count) if tree.is_leaf(p)]
    assert sorted(tree.leaf_class[leaves].tolist()) == list(range(c))
    assert len(tree.internal_nodes()) == c - 1
    tree.validate(breadth_first=True)


def test_two_class_tree():
    tree = build_divisive(means(0.0, 3.0))
    assert tree.node_count == 3
    assert tree.children[0] == (1, 2)
    assert export_newick(tree, ["a", "b"]) == "(a,b);"


def test_path_of_deep_leaf():
    path = path_of(six_class_tree(), 5)
    assert path.p == (6, 3, 1)
    assert path.q == (3, 1, 0)
    assert path.r == (1, 0, 1)
    assert path.s == (0, 1)
    assert path.terminal == (6, 3, 1, 0)
    assert path.remainder == ((3, 1), (1, 0), (0, 1), (1,))


def test_path_of_depth_two_leaf():
    path = path_of(six_class_tree(), 4)
    assert (path.p, path.q, path.r, path.s) == ((4, 1), (1, 0), (1, 1),
                                                (1,))


def test_path_of_root_child():
    tree = build_divisive(means(0.0, 1.0, 10.0))
    path = path_of(tree, 2)
    assert (path.p, path.q, path.r, path.s) == ((2,), (0,), (1,), ())
    assert path.terminal[3] is None


def walk(tree, node, trail, found):
    if tree.is_leaf(node):
        found[int(tree.leaf_class[node])] = list(trail)
        return
    for child in tree.children[node]:
        walk(tree, child, trail + [node], found)


def test_path_chain_property():
    rng = np.random.default_rng(5)
    cm = ClassMeans(rng.normal(size=(5, 2)), np.ones(5, dtype=int))
    tree = build_divisive(cm)
    ancestors = {}
    walk(tree, tree.root, [], ancestors)
    for cls in range(5):
        path = path_of(tree, cls)
        assert list(path.q) == ancestors[cls][::-1]
        assert list(path.q[:-1]) == list(path.p[1:])
        assert path.q[-1] == tree.root
        assert len(path.s) == len(path.p) - 1


def test_six_class_tree_is_not_breadth_first():
    tree = six_class_tree()
    tree.validate()
    with pytest.raises(TreeStructureError):
        tree.validate(breadth_first=True)


@pytest.mark.parametrize("children, leaf_class", [
    # wrong node count
    ([(1, 2), None], [NO_NODE, 0]),
    # node with two parents
    ([(1, 2), None, (1, 1)], [NO_NODE, 0, NO_NODE]),
    # duplicated class
    ([(1, 2), None, None], [NO_NODE, 0, 0]),
    # internal node carrying a class
    ([(1, 2), None, None], [1, 0, 1]),
    # child index out of range
    ([(1, 5), None, None], [NO_NODE, 0, 1]),
])
def test_invalid_trees(children, leaf_class):
    with pytest.raises(TreeStructureError):
        HierarchyTree(children, leaf_class)


def test_newick_quoting():
    tree = build_divisive(means(0.0, 3.0))
    assert export_newick(tree, ["x y", "it's"]) == "('x y','it''s');"


def test_tree_records_roundtrip():
    tree = six_class_tree()
    records = json.loads(tree_to_json(tree))
    assert records[6] == {"index": 6, "parent": 3, "position": 1,
                          "children": None, "leaf_class": 5}
    assert records[0]["parent"] is None
    again = tree_from_records(records)
    assert export_newick(again) == export_newick(tree)
    assert again.fingerprint() == tree.fingerprint()
    assert len(tree_records(tree)) == 11


def test_tree_from_records_rejects_inconsistent_links():
    records = json.loads(tree_to_json(six_class_tree()))
    records[6]["position"] = 0
    with pytest.raises(TreeStructureError):
        tree_from_records(records)


def test_fingerprint_depends_on_topology():
    a = build_divisive(means(0.0, 1.0, 10.0))
    b = build_divisive(means(0.0, 9.0, 10.0))
    assert a.fingerprint() != b.fingerprint()
    assert len(a.fingerprint()) == 64
