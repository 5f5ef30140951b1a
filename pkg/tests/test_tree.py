import math

import numpy as np
import pytest

from treetrace import ParameterError, TreeParams, TreePoint, geometric_tree, perturbed_tree
from treetrace.tree import (
    ROOT,
    EdgeId,
    children,
    coordinate_map,
    coordinate_map_inverse,
    parent,
    subtree_contains,
    tree_from_json,
)


def test_geometric_grid_p2():
    tree = geometric_tree(TreeParams(2, 0.5, 0.5), 2)
    assert tree.t_grid.tolist() == [0.0, 1.0, 1.5, 1.75]  # t_{-1} = 0 leads
    assert tree.height == 2.0


def test_geometric_grid_p3_height():
    tree = geometric_tree(TreeParams(3, 0.9, 1.0), 0)
    assert tree.t_grid.tolist() == [0.0, 1.0]
    assert tree.height == pytest.approx(10.0, rel=1e-15)


@pytest.mark.parametrize("kwargs", [dict(p=2, ell=1.0, alpha=0.5), dict(p=1, ell=0.5, alpha=0.5),
                                    dict(p=2, ell=0.5, alpha=0.0), dict(p=2, ell=-0.1, alpha=1.0)])
def test_invalid_params(kwargs):
    with pytest.raises(ParameterError):
        TreeParams(**kwargs)


def test_children_and_parent():
    assert children((1, 1), 2) == [(2, 2), (2, 3)]
    assert children((1, 2), 3) == [(2, 6), (2, 7), (2, 8)]
    assert parent((2, 3), 2) == EdgeId(1, 1)
    assert parent((0, 0), 2) is ROOT


@pytest.mark.parametrize("p", [2, 3, 5])
def test_parent_child_round_trip(p):
    for n in range(4):
        for k in range(p**n):
            for j, c in enumerate(children((n, k), p)):
                assert parent(c, p) == (n, k)
                assert c.k == p * k + j


def test_subtree_contains():
    assert subtree_contains((1, 0), (3, 1), 2) == (True, 0)
    assert subtree_contains((1, 1), (3, 1), 2)[0] is False
    assert subtree_contains((0, 0), (0, 0), 2)[0] is True
    # branch index of (3,7) below (1,1) in the binary tree: (3,7)->(2,3)->(1,1), via child 3 = 2*1+1
    assert subtree_contains((1, 1), (3, 7), 2) == (True, 1)


def test_edge_enumeration_is_lazy_and_counted():
    tree = geometric_tree(TreeParams(3, 0.5, 0.5), 4)
    for n in range(5):
        assert sum(1 for _ in tree.edges(n)) == 3**n
    assert tree.n_edges() == sum(3**n for n in range(5))


def test_measure_per_generation():
    prm = TreeParams(3, 0.4, 0.6)
    tree = geometric_tree(prm, 6)
    for n in range(7):
        total = float(np.sum(tree.weights[n] * tree.lengths[n]))
        assert total == pytest.approx((prm.p * prm.alpha * prm.ell) ** n, rel=1e-13)


def test_perturbed_distortion():
    prm = TreeParams(2, 0.5, 0.5)
    geo_like = perturbed_tree({}, {}, prm, 3)
    assert geo_like.distortion == 1.0
    t = perturbed_tree({(1, 0): 1.2 * 0.5}, None, prm, 3)
    assert t.distortion == pytest.approx(1.2, rel=1e-15)
    t = perturbed_tree(None, {(2, 1): 0.25 / 1.3}, prm, 3)
    assert t.distortion == pytest.approx(1.3, rel=1e-15)


def test_perturbed_rejects_nonpositive():
    with pytest.raises(ParameterError):
        perturbed_tree({(1, 0): 0.0}, None, TreeParams(2, 0.5, 0.5), 2)


def test_perturbed_cumulative_ends():
    tree = perturbed_tree({(1, 0): 0.6}, None, TreeParams(2, 0.5, 0.5), 2)
    assert tree.edge_interval(1, 0) == pytest.approx((1.0, 1.6))
    assert tree.edge_interval(2, 1) == pytest.approx((1.6, 1.85))
    assert tree.edge_interval(2, 2) == pytest.approx((1.5, 1.75))


def test_coordinate_map_example():
    tree = perturbed_tree({(1, 0): 0.6}, None, TreeParams(2, 0.5, 0.5), 2)
    y = coordinate_map(tree, TreePoint(EdgeId(1, 0), 1.25))
    assert y.edge == (1, 0)
    assert y.t == pytest.approx(1.3, abs=1e-15)
    left = coordinate_map(tree, TreePoint(EdgeId(1, 0), 1.0))
    assert left.t == pytest.approx(1.0, abs=1e-15)


def test_coordinate_map_identity_on_geometric():
    tree = geometric_tree(TreeParams(2, 0.5, 0.5), 3)
    x = TreePoint(EdgeId(2, 3), 1.6)
    assert coordinate_map(tree, x).t == pytest.approx(1.6, abs=1e-15)


def test_coordinate_map_round_trip(rng):
    prm = TreeParams(3, 0.6, 0.4)
    lengths = {(n, k): prm.ell**n * rng.uniform(0.8, 1.25) for n in range(4) for k in range(3**n)}
    tree = perturbed_tree(lengths, None, prm, 3)
    for _ in range(200):
        n = int(rng.integers(0, 4))
        k = int(rng.integers(0, 3**n))
        t = rng.uniform(prm.t(n - 1) if n else 0.0, prm.t(n))
        back = coordinate_map_inverse(tree, coordinate_map(tree, TreePoint(EdgeId(n, k), t)))
        assert abs(back.t - t) < 1e-12


def test_coordinate_outside_edge():
    tree = geometric_tree(TreeParams(2, 0.5, 0.5), 2)
    with pytest.raises(ParameterError):
        coordinate_map(tree, TreePoint(EdgeId(1, 0), 1.9))


def test_json_round_trip():
    tree = perturbed_tree({(1, 0): 0.6}, {(1, 0): 0.55}, TreeParams(2, 0.5, 0.5), 8)
    back = tree_from_json(tree.to_json())
    assert back.same_shape(tree)
    assert back.distortion == tree.distortion
    for a, b in zip(back.ends, tree.ends):
        assert np.array_equal(a, b)


def test_json_schema_example():
    tree = tree_from_json('{"p":2,"ell":0.5,"alpha":0.5,"depth":8,'
                          '"perturbations":[{"n":1,"k":0,"length":0.6,"weight":0.55}]}')
    assert tree.kind == "perturbed"
    assert tree.edge_length(1, 0) == 0.6
    assert tree.edge_weight(1, 0) == 0.55
    assert tree.distortion == pytest.approx(1.2)
    assert math.isclose(tree.edge_interval(1, 0)[1], 1.6)
