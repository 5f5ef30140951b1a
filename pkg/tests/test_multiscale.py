import json
import math

import numpy as np
import pytest

from treetrace import AmbiguityError, ParameterError, diagnostics, hypercube_decomposition, interval_decomposition
from treetrace.multiscale import Cell, axis_levels, decomposition_from_dict


def test_interval_cells():
    dec = interval_decomposition(2, 1)
    assert dec.cell(1, 0) == Cell((0.0,), (0.5,))
    assert dec.cell(1, 1) == Cell((0.5,), (1.0,))
    c = interval_decomposition(3, 2).cell(2, 4)
    assert c.lo[0] == pytest.approx(4 / 9, abs=1e-16) and c.hi[0] == pytest.approx(5 / 9, abs=1e-16)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_interval_volumes(p):
    dec = interval_decomposition(p, 5)
    for n in range(6):
        assert abs(np.prod(dec.sides(n)) - p**-n) <= 1e-14 * p**-n
        assert dec.cell(n, p**n - 1).volume == pytest.approx(p**-n, rel=1e-12)
        lo, hi = dec.bounds(n)
        # box corners carry absolute rounding of order 1e-16
        assert np.allclose(hi - lo, dec.sides(n), rtol=0, atol=4e-16)


def test_square_cells_x_axis_first():
    dec = hypercube_decomposition(2, 2, 3)
    assert dec.cell(1, 0) == Cell((0.0, 0.0), (0.5, 1.0))
    assert dec.cell(1, 1) == Cell((0.5, 0.0), (1.0, 1.0))
    assert dec.cell(2, 0) == Cell((0.0, 0.0), (0.5, 0.5))
    assert dec.cell(2, 1) == Cell((0.0, 0.5), (0.5, 1.0))


def test_square_volumes_exact():
    dec = hypercube_decomposition(2, 2, 8)
    for n in range(9):
        lo, hi = dec.bounds(n)
        assert np.all((hi - lo).prod(axis=1) == 2.0**-n)


@pytest.mark.parametrize("d,p", [(1, 2), (2, 2), (2, 3), (3, 2)])
def test_nesting_and_child_volumes(d, p):
    dec = hypercube_decomposition(d, p, 5 if d < 3 else 6)
    for n in range(dec.depth):
        lo, hi = dec.bounds(n)
        clo, chi = dec.bounds(n + 1)
        plo, phi = np.repeat(lo, p, axis=0), np.repeat(hi, p, axis=0)
        assert np.all(clo >= plo) and np.all(chi <= phi)
        child_sum = p * np.prod(dec.sides(n + 1))
        assert abs(child_sum - np.prod(dec.sides(n))) <= 1e-14 * np.prod(dec.sides(n))


def test_axis_levels():
    assert axis_levels(0, 2) == (0, 0)
    assert axis_levels(1, 2) == (1, 0)
    assert axis_levels(2, 2) == (1, 1)
    assert axis_levels(5, 3) == (2, 2, 1)


def test_cell_of_point():
    assert interval_decomposition(2, 4).cell_of_point(0.3, 2) == 1
    assert hypercube_decomposition(2, 2, 4).cell_of_point((0.9, 0.1), 1) == 1
    with pytest.raises(AmbiguityError):
        interval_decomposition(2, 4).cell_of_point(0.5, 1)


def test_cell_of_point_consistent_with_nesting(rng):
    dec = hypercube_decomposition(2, 3, 6)
    for x in rng.random((100, 2)):
        ks = [dec.cell_of_point(x, n) for n in range(7)]
        assert all(ks[n] == ks[n + 1] // 3 for n in range(6))
        c = dec.cell(6, ks[6])
        assert np.all(c.lo < x) and np.all(x < c.hi)


def test_bad_construction():
    with pytest.raises(ParameterError):
        hypercube_decomposition(0, 2, 3)
    with pytest.raises(ParameterError):
        hypercube_decomposition(2, 1, 3)


def test_diagnostics_square():
    rep = diagnostics(hypercube_decomposition(2, 2, 8))
    assert rep.c1_observed <= 2 * math.sqrt(2) + 1e-12
    assert np.all(rep.volume_error == 0.0)
    assert np.all(np.isfinite(rep.c2))
    # one full axis cycle restores the cell shape, so the constants repeat
    assert np.allclose(rep.c1[2:], rep.c1[:-2], rtol=1e-12)
    assert np.allclose(rep.c2[2:], rep.c2[:-2], rtol=1e-12)


def test_diagnostics_interval():
    rep = diagnostics(interval_decomposition(2, 8))
    assert np.allclose(rep.c1, 1.0, rtol=1e-14)
    assert rep.c1_observed == pytest.approx(1.0, rel=1e-14)
    assert rep.K_observed <= 4
    assert np.all(rep.K <= 4)


def test_diagnostics_constants_settle_after_one_cycle():
    for d in (2, 3):
        rep = diagnostics(hypercube_decomposition(d, 2, 3 * d))
        for series in (rep.c1, rep.c2):
            tail_max = [series[n:].max() for n in range(d, len(series))]
            assert all(b <= a + 1e-12 for a, b in zip(tail_max, tail_max[1:]))


def test_diagnostics_csv():
    text = diagnostics(interval_decomposition(2, 2)).to_csv()
    assert text.splitlines()[0] == "n,c1,c2,K,volume_error"
    assert len(text.splitlines()) == 4 and "\r" not in text


def test_json_export():
    dec = hypercube_decomposition(2, 2, 2)
    data = json.loads(json.dumps(dec.to_dict()))
    assert len(data["cells"]) == 1 + 2 + 4
    assert data["cells"][3] == {"n": 2, "k": 0, "lo": [0.0, 0.0], "hi": [0.5, 0.5]}
    back = decomposition_from_dict(data)
    assert back.d == 2 and back.depth == 2
