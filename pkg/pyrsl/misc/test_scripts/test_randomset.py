import itertools

import numpy as np
import pytest

from pyrsl.helpers.geometry import Body, PointCloud
from pyrsl.helpers.prob import FiniteProbSpace, all_partitions, uniform_space
from pyrsl.helpers.randomset import (RandomCloud, RandomSet, Selection, constant, constant_selection, convexify,
                                     enumerate_selections, is_selection, lp_norm)
from pyrsl.helpers.utils import EnumerationTooLarge, SpaceMismatch
from pyrsl.mains.hulls import decompose


def test_enumerate_selection_counts():
    one = RandomCloud(uniform_space(1), (PointCloud([[0.0], [1.0], [2.0]]),))
    assert len(enumerate_selections(one)) == 3

    two = RandomCloud(uniform_space(2), (PointCloud([[0.0], [1.0]]), PointCloud([[0.0], [1.0], [2.0]])))
    assert len(enumerate_selections(two)) == 6


def test_enumerate_binary_strings_in_order():
    x = RandomCloud(uniform_space(3), (PointCloud([[0.0], [1.0]]),) * 3)
    got = [tuple(s.points[:, 0]) for s in enumerate_selections(x)]
    assert got == list(itertools.product([0.0, 1.0], repeat=3))
    assert all(is_selection(x, s) for s in enumerate_selections(x))


def test_enumeration_guard(monkeypatch):
    monkeypatch.setenv('RSL_GUARD_MAX', '5')
    x = RandomCloud(uniform_space(3), (PointCloud([[0.0], [1.0]]),) * 3)
    with pytest.raises(EnumerationTooLarge):
        enumerate_selections(x)


def test_is_selection_examples():
    space = uniform_space(3)
    x = RandomSet(space, (Body.interval(0, 2), Body.interval(1, 3), Body.interval(-1, 1.5)))
    assert is_selection(x, constant_selection(space, [1.0]))
    assert not is_selection(x, Selection(space, [[1.0], [1.0], [2.0]]))

    # phi + r u on ball-valued W
    phi = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
    r = np.array([1.0, 2.0, 3.0])
    u = np.array([0.6, 0.8])
    W = RandomSet(space, tuple(Body.ball(c, rad) for c, rad in zip(phi, r)))
    assert is_selection(W, Selection(space, phi + r[:, None] * u))
    assert not is_selection(W, Selection(space, phi + 1.01 * r[:, None] * u))


def test_selection_checks_its_source():
    space = uniform_space(2)
    x = RandomCloud(space, (PointCloud([[0.0]]), PointCloud([[1.0]])))
    Selection(space, [[0.0], [1.0]], source=x)
    with pytest.raises(ValueError):
        Selection(space, [[0.0], [0.5]], source=x)


def test_space_mismatch():
    x = RandomCloud(uniform_space(2), (PointCloud([[0.0]]),) * 2)
    other = FiniteProbSpace.from_weights([0.25, 0.75])
    with pytest.raises(SpaceMismatch):
        is_selection(x, Selection(other, [[0.0], [0.0]]))


def test_lp_norm_examples():
    space = uniform_space(2)
    assert lp_norm(Selection(space, [[0.0], [0.0]]), 1) == 0
    assert lp_norm(Selection(space, [[1.5], [1.5]]), 1) == 1.5
    assert lp_norm(Selection(space, [[1.0, 0.0], [0.0, 1.0]]), 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lp_norm(Selection(space, [[0.0], [0.0]]), 0.5)


def test_decompositions_of_selections_are_selections():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        x = RandomCloud(uniform_space(n), tuple(PointCloud(rng.uniform(-1, 1, size=(int(rng.integers(1, 5)), 2))) for _ in range(n)))
        selections = enumerate_selections(x)
        if len(selections) > 64:
            continue
        for a, b in itertools.combinations(selections, 2):
            for part in all_partitions(x.space, 2):
                assert is_selection(x, decompose([a, b], part.assignment))


def test_convexify_and_constant():
    space = uniform_space(2)
    cloud = PointCloud([[0.0], [1.0], [0.5]])
    x = convexify(constant(space, cloud))
    assert isinstance(x, RandomSet)
    assert x.values[0].vertices.tolist() == [[0.0], [1.0]]
    assert is_selection(x, constant_selection(space, [0.25]))
