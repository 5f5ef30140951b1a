import json
import math

import numpy as np
import pytest

from treetrace import ContinuityError, DepthError, ParameterError, TreeParams, geometric_tree, perturbed_tree
from treetrace.harmonic import RAD, basis_function, F_infty
from treetrace.treefunc import (
    CUTOFF_B,
    TreeFunction,
    constant,
    extend_by_constants,
    from_callable,
    from_radial,
    gram_l2,
    inner_l2,
    is_compactly_supported,
    norms,
    random_tree_function,
    root_cutoff,
    smoothstep_cutoff,
    transport,
    transport_report,
    tree_function_from_dict,
    vertex_values,
    vertex_values_csv,
)


def test_norms_of_constant(half):
    rep = norms(constant(geometric_tree(half, 1), 1.0))
    assert rep.l2**2 == pytest.approx(1.5, rel=1e-15)
    assert rep.h1_semi == 0.0


def test_norms_of_zero(half):
    rep = norms(constant(geometric_tree(half, 3), 0.0))
    assert (rep.l2, rep.h1_semi, rep.h1) == (0.0, 0.0, 0.0)


def test_norms_of_distance_on_single_edge(half):
    f = from_radial(geometric_tree(half, 0), lambda t: t, 2)
    rep = norms(f)
    assert rep.l2**2 == pytest.approx(1 / 3, rel=1e-14)
    assert rep.h1_semi**2 == pytest.approx(1.0, rel=1e-14)
    assert rep.poincare_ratio == pytest.approx(math.sqrt(1 / 3), rel=1e-14)


def test_h1_pythagoras(rng, half):
    f = random_tree_function(geometric_tree(half, 4), 5, rng)
    rep = norms(f)
    assert rep.h1**2 == pytest.approx(rep.l2**2 + rep.h1_semi**2, rel=1e-12)


def test_norms_are_homogeneous(rng, half):
    f = random_tree_function(geometric_tree(TreeParams(3, 0.5, 0.4), 3), 4, rng)
    c = complex(rng.standard_normal(), rng.standard_normal())
    a, b = norms(f), norms(c * f)
    assert b.l2 == pytest.approx(abs(c) * a.l2, rel=1e-12)
    assert b.h1_semi == pytest.approx(abs(c) * a.h1_semi, rel=1e-12)


def test_gram_matches_pairwise(rng, half):
    tree = geometric_tree(TreeParams(3, 0.5, 0.5), 3)
    fs = [random_tree_function(tree, 4, rng) for _ in range(4)]
    G = gram_l2(fs)
    for i in range(4):
        for j in range(4):
            assert abs(G[i, j] - inner_l2(fs[i], fs[j])) < 1e-12


def test_continuity_is_enforced(half):
    tree = geometric_tree(half, 1)
    vals = [np.array([[0.0, 1.0]]), np.array([[1.0, 2.0], [1.0 + 1e-9, 3.0]])]
    with pytest.raises(ContinuityError):
        TreeFunction(tree, tuple(vals))
    vals[1][1, 0] = 1.0 + 1e-14
    TreeFunction(tree, tuple(vals))


def test_shape_is_enforced(half):
    with pytest.raises(ParameterError):
        TreeFunction(geometric_tree(half, 1), (np.zeros((1, 2)),))


def test_vertex_values(half):
    f = constant(geometric_tree(half, 3), 1.0)
    assert vertex_values(f, 3).tolist() == [1.0] * 8
    with pytest.raises(DepthError):
        vertex_values(f, 4)


def test_vertex_values_approach_boundary_limit(half):
    tree = geometric_tree(half, 14)
    phi = basis_function(RAD, tree, 2)
    vv = vertex_values(phi, 14)
    assert np.allclose(vv, vv[0])
    # the remaining tail is (ell/alpha p)^{N+1} F_inf scaled: here 2^-15 relative
    assert abs(vv[0] - F_infty(half, RAD)) < 1e-4


def test_vertex_values_csv(half):
    f = constant(geometric_tree(half, 2), 1.0 - 2.0j)
    text = vertex_values_csv(f, 1)
    assert text == "N,K,re,im\n1,0,1.0,-2.0\n1,1,1.0,-2.0\n"


def test_extend_by_constants(rng, half):
    tree = geometric_tree(half, 5)
    c = constant(tree, 2.5, 3)
    for N in range(6):
        fN = extend_by_constants(c, N)
        assert all(np.array_equal(a, b) for a, b in zip(fN.values, c.values))
    for _ in range(5):
        f = random_tree_function(tree, 3, rng)
        semi = norms(f).h1_semi
        for N in range(6):
            assert norms(extend_by_constants(f, N)).h1_semi <= semi + 1e-12


def test_extension_error_decreases_for_decaying_tail(rng, half):
    f = random_tree_function(geometric_tree(half, 7), 3, rng, decay=0.5)
    errs = [norms(f - extend_by_constants(f, N)).h1 for N in range(8)]
    assert all(b <= a + 1e-14 for a, b in zip(errs, errs[1:]))
    assert errs[-1] == 0.0


def test_cutoff_profile():
    t = np.array([0.0, 0.5, 0.625, 0.75, 1.0])
    assert smoothstep_cutoff(t).tolist() == [0.0, 0.0, 0.5, 1.0, 1.0]
    # phi' peaks at 3/(2 * 0.25) = 6 in the middle of the ramp, so b = 36
    assert CUTOFF_B == 36.0


def test_root_cutoff_of_constant(half):
    tree = geometric_tree(half, 3)
    g = root_cutoff(constant(tree, 1.0, 9))
    assert g.root_value == 0.0
    for n in range(1, 4):
        assert np.all(g.values[n] == 1.0)


def test_root_cutoff_keeps_functions_supported_away_from_root(rng, half):
    tree = geometric_tree(half, 3)
    f = random_tree_function(tree, 3, rng)
    vals = list(f.values)
    vals[0] = np.zeros_like(vals[0])
    vals[1] = vals[1].copy()
    vals[1][:, 0] = 0.0
    f = TreeFunction(tree, tuple(vals))
    g = root_cutoff(f)
    assert all(np.array_equal(a, b) for a, b in zip(f.values, g.values))


def test_root_cutoff_h1_bound(rng, half):
    bound = math.sqrt(2 * CUTOFF_B + 1)
    tree = geometric_tree(TreeParams(3, 0.5, 0.5), 3)
    for _ in range(20):
        f = random_tree_function(tree, 9, rng)
        assert norms(root_cutoff(f)).h1 <= bound * norms(f).h1


def _exact_cos_norms(prm, depth, w):
    """Weighted norms of cos(w t) on the geometric tree, in closed form."""
    l2 = semi = 0.0
    for n in range(depth + 1):
        a, b = (prm.t(n - 1) if n else 0.0), prm.t(n)
        sq = 0.5 * (b - a) + (math.sin(2 * w * b) - math.sin(2 * w * a)) / (4 * w)
        dsq = w * w * (0.5 * (b - a) - (math.sin(2 * w * b) - math.sin(2 * w * a)) / (4 * w))
        scale = (prm.p * prm.alpha) ** n
        l2 += scale * sq
        semi += scale * dsq
    return l2, semi


def test_refinement_order(half):
    prm = TreeParams(2, 0.7, 0.6)
    tree = geometric_tree(prm, 3)
    exact_l2, exact_semi = _exact_cos_norms(prm, 3, 3.0)
    ms = [3, 5, 9, 17, 33]
    errs_l2, errs_semi = [], []
    for m in ms:
        rep = norms(from_radial(tree, lambda t: np.cos(3.0 * t), m))
        errs_l2.append(abs(rep.l2**2 - exact_l2))
        errs_semi.append(abs(rep.h1_semi**2 - exact_semi))
    h = 1.0 / (np.array(ms) - 1)
    assert np.polyfit(np.log(h), np.log(errs_l2), 1)[0] >= 1.9
    assert np.polyfit(np.log(h), np.log(errs_semi), 1)[0] >= 1.9


def test_transport_identity_when_c_is_one(rng, half):
    geo = geometric_tree(half, 4)
    same = perturbed_tree({}, {}, half, 4)
    f = random_tree_function(same, 3, rng)
    rep = transport_report(f, transport(f, geo))
    assert rep.l2_ratio == pytest.approx(1.0, rel=1e-10)
    assert rep.h1_semi_ratio == pytest.approx(1.0, rel=1e-10)


def test_transport_sandwich_and_round_trip(rng, half):
    geo = geometric_tree(half, 5)
    for _ in range(5):
        lengths = {(n, k): half.ell**n * 1.2 ** rng.uniform(-1, 1) for n in range(6) for k in range(2**n)}
        weights = {(n, k): half.alpha**n * 1.2 ** rng.uniform(-1, 1) for n in range(6) for k in range(2**n)}
        tree = perturbed_tree(lengths, weights, half, 5)
        assert tree.distortion <= 1.2
        f = random_tree_function(tree, 3, rng)
        g = transport(f, geo)
        assert transport_report(f, g).holds
        back = transport(g, tree)
        assert norms(back - f).l2 <= 1e-10 * norms(f).l2


def test_transport_rejects_other_shapes(rng, half):
    f = random_tree_function(geometric_tree(half, 3), 3, rng)
    with pytest.raises(ParameterError):
        transport(f, geometric_tree(half, 4))


def test_compact_support(half):
    tree = geometric_tree(half, 4)
    bump = from_callable(tree, lambda t, n, k: np.where((n == 1) & (k == 0), np.sin(np.pi * (t - 1) / 0.5), 0.0), 5)
    assert is_compactly_supported(bump, 1e-15) == 1
    assert is_compactly_supported(constant(tree, 1.0)) is None


def test_compact_support_of_frozen_function(rng, half):
    tree = geometric_tree(half, 5)
    g = random_tree_function(tree, 3, rng, support_depth=3)
    assert is_compactly_supported(extend_by_constants(g, 3)) == 3


def test_json_round_trip(rng, half):
    f = random_tree_function(geometric_tree(TreeParams(3, 0.5, 0.5), 2), 3, rng)
    back = tree_function_from_dict(json.loads(json.dumps(f.to_dict())))
    assert all(np.array_equal(a, b) for a, b in zip(f.values, back.values))
