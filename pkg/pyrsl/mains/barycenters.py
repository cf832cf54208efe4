import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from pyrsl.helpers import geometry
from pyrsl.helpers.geometry import PointCloud, as_matrix
from pyrsl.helpers.randomset import Selection
from pyrsl.helpers.utils import DimensionMismatch, InstanceError, NotAProbability, SpaceMismatch
from pyrsl.mains.hulls import chcd_hull, chd_hull, simplex_lattice, value_sets

logger = logging.getLogger(__name__)

INPUT_WEIGHT_TOL = 1e-9

POINT, SELECTION, PRODUCT = 'point', 'selection', 'product'


def _kind_of(support):
    if all(isinstance(s, Selection) for s in support):
        return SELECTION
    if all(isinstance(s, tuple) for s in support):
        return PRODUCT
    return POINT


def _merge_rows(weights, X):
    # first occurrence keeps its position, later duplicates add their weight to it
    tree = cKDTree(X)
    owner = np.full(X.shape[0], -1)
    for i in range(X.shape[0]):
        if owner[i] < 0:
            for j in tree.query_ball_point(X[i], geometry.POINT_EQ):
                if owner[j] < 0:
                    owner[j] = i
    keep = np.flatnonzero(owner == np.arange(X.shape[0]))
    merged = np.array([weights[owner == i].sum() for i in keep])
    return keep, merged


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure over points, selections or pairs of them."""
    weights: np.ndarray
    support: object
    kind: str = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        support = self.support
        kind = self.kind or (POINT if isinstance(support, np.ndarray) else _kind_of(list(support)))
        if w.size == 0:
            raise NotAProbability("A measure needs a nonempty support.")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise NotAProbability(f"Measure weights must be strictly positive, got {w.tolist()}")
        if abs(w.sum() - 1.0) > INPUT_WEIGHT_TOL:
            raise NotAProbability(f"Measure weights sum to {w.sum()!r}, not 1.")

        if kind == POINT:
            support = as_matrix(support)
            if support.shape[0] != w.size:
                raise ValueError(f"{w.size} weights for {support.shape[0]} support points.")
            keep, w = _merge_rows(w, support)
            support = support[keep]
            support.setflags(write=False)
        elif kind == SELECTION:
            support = list(support)
            if len(support) != w.size:
                raise ValueError(f"{w.size} weights for {len(support)} support selections.")
            space = support[0].space
            if any(not s.space.same_as(space) for s in support):
                raise SpaceMismatch("Measure support mixes probability spaces.")
            if len({s.dim for s in support}) != 1:
                raise DimensionMismatch("Measure support mixes dimensions.")
            keep, w = _merge_rows(w, np.stack([s.vector() for s in support]))
            support = tuple(support[i] for i in keep)
        else:
            support = tuple(support)
            if len(support) != w.size:
                raise ValueError(f"{w.size} weights for {len(support)} support elements.")
        w.setflags(write=False)
        object.__setattr__(self, 'weights', w)
        object.__setattr__(self, 'support', support)
        object.__setattr__(self, 'kind', kind)

    @classmethod
    def dirac(cls, x):
        if isinstance(x, Selection):
            return cls([1.0], [x])
        return cls([1.0], np.asarray(x, dtype=float).reshape(1, -1))

    def __len__(self):
        return self.weights.size

    @property
    def is_dirac(self):
        return self.weights.size == 1

    @property
    def dim(self):
        if self.kind == POINT:
            return self.support.shape[1]
        if self.kind == SELECTION:
            return self.support[0].dim
        raise ValueError("Product measures have no single dimension.")

    def items(self):
        return zip(self.weights, self.support)

    def to_json(self):
        if self.kind != POINT:
            raise ValueError("Only point measures have a JSON form.")
        return [{"w": float(w), "x": x.tolist()} for w, x in self.items()]


def barycenter(mu):
    if mu.kind == SELECTION:
        return selection_barycenter(mu).points
    if mu.kind != POINT:
        raise ValueError(f"No barycenter for a {mu.kind} measure.")
    return mu.weights @ mu.support


def selection_barycenter(mu):
    """Atomwise barycenter: result(atom) = sum_i w_i xi_i(atom)."""
    if mu.kind != SELECTION:
        raise ValueError("selection_barycenter needs a measure over selections.")
    stack = np.stack([s.points for s in mu.support])
    return Selection(mu.support[0].space, np.einsum('k,knd->nd', mu.weights, stack))


def pushforward(mu, g):
    images = [g(x) for x in mu.support]
    if all(isinstance(y, Selection) for y in images):
        return DiscreteMeasure(mu.weights, images, kind=SELECTION)
    return DiscreteMeasure(mu.weights, np.array([np.asarray(y, dtype=float).reshape(-1) for y in images]), kind=POINT)


def product_measure(mu, nu):
    w = np.outer(mu.weights, nu.weights).reshape(-1)
    pairs = [(a, c) for a in mu.support for c in nu.support]
    return DiscreteMeasure(w, pairs, kind=PRODUCT)


class Kernel:
    """One point measure per atom; `source` is the selection set the rows are supported in."""

    def __init__(self, space, rows, source=None):
        rows = tuple(rows)
        if len(rows) != space.n:
            raise ValueError(f"{space.n} atoms but {len(rows)} kernel rows.")
        if any(r.kind != POINT for r in rows):
            raise ValueError("Kernel rows must be measures over points.")
        if len({r.dim for r in rows}) != 1:
            raise DimensionMismatch("Kernel rows live in different dimensions.")
        self.space = space
        self.rows = rows
        self.source = source
        self.dirac_flag = all(r.is_dirac for r in rows)

        if source is not None:
            self._check_support(source)

    def _check_support(self, source):
        if not source.space.same_as(self.space):
            raise SpaceMismatch("Kernel and selection set live on different probability spaces.")
        F = value_sets(chd_hull(source))
        for atom, (row, values) in enumerate(zip(self.rows, F)):
            if isinstance(values, PointCloud):
                dist = cKDTree(values.points).query(row.support)[0]
                ok = np.all(dist <= geometry.POINT_EQ)
            else:
                ok = all(geometry.distance_to_body(x, values) <= geometry.TOL_MEMBERSHIP for x in row.support)
            if not ok:
                raise ValueError(f"Kernel row {atom} puts mass outside the value set of its source.")

    @property
    def dim(self):
        return self.rows[0].dim

    def to_json(self):
        return {"rows": [r.to_json() for r in self.rows]}


def measure_from_json(rows):
    try:
        return DiscreteMeasure([r["w"] for r in rows], np.array([r["x"] for r in rows], dtype=float))
    except (KeyError, TypeError) as e:
        raise InstanceError(f"Malformed measure rows: {e}") from e


def kernel_from_json(obj, space, source=None):
    """Inverse of Kernel.to_json on a given probability space."""
    if not isinstance(obj, dict) or "rows" not in obj:
        raise InstanceError("Kernel JSON needs a 'rows' list.")
    return Kernel(space, [measure_from_json(r) for r in obj["rows"]], source)


def dirac_kernel(a, source=None):
    return Kernel(a.space, [DiscreteMeasure.dirac(p) for p in a.points], source)


def decomposition_kernel(selections, assignment, source=None):
    space = selections[0].space
    rows = [DiscreteMeasure.dirac(selections[k].points[i]) for i, k in enumerate(assignment)]
    return Kernel(space, rows, source)


def convex_combination_kernel(selections, lambdas, source=None):
    """Row at atom i is sum_j lambdas[i, j] * delta of selection j at atom i."""
    space = selections[0].space
    lambdas = np.asarray(lambdas, dtype=float)
    rows = []
    for i in range(space.n):
        nz = np.flatnonzero(lambdas[i] > 0)
        rows.append(DiscreteMeasure(lambdas[i, nz], np.stack([selections[j].points[i] for j in nz])))
    return Kernel(space, rows, source)


def kernel_apply(K, f):
    """(Kf)(atom) = sum over the row of w * f(x)."""
    return np.array([sum(w * np.asarray(f(x), dtype=float) for w, x in row.items()) for row in K.rows])


def measure_kernel(v, K):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != K.space.n:
        raise ValueError(f"Measure over {v.size} atoms applied to a kernel over {K.space.n}.")
    weights = np.concatenate([v[i] * row.weights for i, row in enumerate(K.rows)])
    points = np.vstack([row.support for row in K.rows])
    mask = weights > 0
    return DiscreteMeasure(weights[mask], points[mask])


def kernel_barycenter(K, tol=None):
    result = Selection(K.space, np.stack([barycenter(row) for row in K.rows]))
    if K.source is not None:
        if K.dirac_flag:
            inside = chd_hull(K.source).contains(result)
        else:
            inside = chcd_hull(K.source).contains(result, tol=tol)
        if not inside:
            hull = "chd" if K.dirac_flag else "chcd"
            raise RuntimeError(f"Kernel barycenter left the {hull} hull of its source set.")
    return result


def _random_lattice_point(rng, X, grid):
    counts = rng.multinomial(grid, np.full(X.shape[0], 1.0 / X.shape[0]))
    return (counts / grid) @ X


def _entry(identity, dev, tol):
    return {"identity": identity, "pass": bool(dev <= tol), "max_dev": float(dev)}


def choquet_hull_fd(cloud, trials, rng, grid=8, max_support=6, tol=None):
    """Barycenters of lattice measures stay in conv(cloud); lattice points of conv(cloud) are barycenters."""
    tol = geometry.TOL_MEMBERSHIP if tol is None else tol
    X = cloud.points
    if cloud.dim > 6:
        raise DimensionMismatch(f"choquet_hull_fd runs in R^d with d <= 6, got {cloud.dim}")

    worst = 0.0
    for _ in range(trials):
        k = int(rng.integers(1, max_support + 1))
        support = np.stack([_random_lattice_point(rng, X, grid) for _ in range(k)])
        w = rng.dirichlet(np.ones(k))
        mu = DiscreteMeasure(w / w.sum(), support)
        worst = max(worst, geometry.distance_to_hull(barycenter(mu), cloud))

    lattice = (simplex_lattice(X.shape[0], grid) / grid) @ X
    ext = geometry.extreme_points(cloud)
    recovered, on_extremes = 0.0, 0.0
    for p in lattice:
        for target, name in ((X, 'all'), (ext.points, 'ext')):
            _, w = geometry.hull_weights(p, target)
            residual = float(np.linalg.norm(w @ target - p))
            if name == 'all':
                recovered = max(recovered, residual)
            else:
                on_extremes = max(on_extremes, residual)

    logger.debug(f"[choquet] {trials} measures, {lattice.shape[0]} lattice points, worst distance {worst:.3e}")
    return [
        _entry("barycenters lie in conv(cloud)", worst, tol),
        _entry("lattice points of conv(cloud) are barycenters", recovered, tol),
        _entry("lattice points are barycenters of extreme points", on_extremes, tol),
    ]
