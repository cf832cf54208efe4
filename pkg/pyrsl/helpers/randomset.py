import itertools
import logging
from dataclasses import dataclass

import numpy as np

from pyrsl.helpers import geometry
from pyrsl.helpers.geometry import Body, PointCloud, as_matrix
from pyrsl.helpers.utils import DimensionMismatch, SpaceMismatch, check_guard

logger = logging.getLogger(__name__)


def _check_values(space, values, kind):
    values = tuple(values)
    if len(values) != space.n:
        raise ValueError(f"{space.n} atoms but {len(values)} values.")
    for v in values:
        if not isinstance(v, kind):
            raise TypeError(f"Expected {kind.__name__} values, got {type(v).__name__}")
    dims = {v.dim for v in values}
    if len(dims) != 1:
        raise DimensionMismatch(f"Atom values live in different dimensions: {sorted(dims)}")
    return values


@dataclass(frozen=True, eq=False)
class RandomSet:
    space: object
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, 'values', _check_values(self.space, self.values, Body))

    @property
    def dim(self):
        return self.values[0].dim

    def to_json(self):
        return {"weights": self.space.weights.tolist(), "values": [v.to_json() for v in self.values]}


@dataclass(frozen=True, eq=False)
class RandomCloud:
    space: object
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, 'values', _check_values(self.space, self.values, PointCloud))

    @property
    def dim(self):
        return self.values[0].dim

    @property
    def sizes(self):
        return [len(v) for v in self.values]

    def to_json(self):
        return {"weights": self.space.weights.tolist(), "values": [v.to_json() for v in self.values]}


@dataclass(frozen=True, eq=False)
class Selection:
    space: object
    points: np.ndarray
    source: object = None

    def __post_init__(self):
        P = as_matrix(self.points)
        if P.shape[0] != self.space.n:
            raise ValueError(f"{self.space.n} atoms but {P.shape[0]} selected points.")
        P.setflags(write=False)
        object.__setattr__(self, 'points', P)
        if self.source is not None and not is_selection(self.source, self):
            raise ValueError("Selection points do not lie in the random set they claim to select from.")

    @property
    def dim(self):
        return self.points.shape[1]

    def vector(self):
        return self.points.reshape(-1)

    def equals(self, other, tol=None):
        tol = geometry.POINT_EQ if tol is None else tol
        return self.points.shape == other.points.shape and bool(np.max(np.abs(self.points - other.points)) <= tol)

    def to_json(self):
        return {"points": self.points.tolist()}


def _check_same(x, s):
    if not x.space.same_as(s.space):
        raise SpaceMismatch("Selection and random set live on different probability spaces.")
    if x.dim != s.dim:
        raise DimensionMismatch(f"Selection in R^{s.dim}, random set in R^{x.dim}.")


def is_selection(x, s, tol=None):
    _check_same(x, s)
    if isinstance(x, RandomCloud):
        for p, cloud in zip(s.points, x.values):
            if np.min(np.max(np.abs(cloud.points - p), axis=1)) > geometry.POINT_EQ:
                return False
        return True
    tol = geometry.TOL_MEMBERSHIP if tol is None else tol
    return all(geometry.distance_to_body(p, body, tol_membership=tol) <= tol for p, body in zip(s.points, x.values))


def selection_count(x):
    return int(np.prod([len(v) for v in x.values], dtype=object))


def index_grid(x):
    """All selection index tuples as an (count, n) array, lexicographic by atom."""
    count = check_guard(selection_count(x), "enumerate_selections")
    sizes = [len(v) for v in x.values]
    grid = np.indices(sizes).reshape(len(sizes), -1).T
    assert grid.shape[0] == count
    return grid


def iter_selections(x):
    check_guard(selection_count(x), "enumerate_selections")
    clouds = [v.points for v in x.values]
    for idx in itertools.product(*(range(len(c)) for c in clouds)):
        yield Selection(x.space, np.array([c[i] for c, i in zip(clouds, idx)]))


def enumerate_selections(x):
    out = list(iter_selections(x))
    logger.debug(f"[randomset] enumerated {len(out)} selections over {x.space.n} atoms")
    return out


def lp_norm(s, p=1.0):
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    norms = np.linalg.norm(s.points, axis=1)
    if np.isinf(p):
        return float(norms.max())
    return float(np.sum(s.space.weights * norms ** p) ** (1.0 / p))


def convexify(x):
    """Atom-wise convex hull of a RandomCloud."""
    return RandomSet(x.space, tuple(geometry.conv(v) for v in x.values))


def constant(space, value):
    if isinstance(value, PointCloud):
        return RandomCloud(space, (value,) * space.n)
    return RandomSet(space, (value,) * space.n)


def constant_selection(space, point):
    p = np.asarray(point, dtype=float).reshape(1, -1)
    return Selection(space, np.repeat(p, space.n, axis=0))
