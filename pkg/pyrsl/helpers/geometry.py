"""
Convex bodies in R^d stored as conv(vertices) + a finite sum of closed balls,
with support-function calculus, Minkowski operations and hull membership.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError, Voronoi, cKDTree

from pyrsl.helpers.utils import DimensionMismatch, NegativeScale

logger = logging.getLogger(__name__)

# defaults for the optional tol arguments below; callers pass RunConfig values explicitly
TOL_MEMBERSHIP = 1e-8
TOL_SET_EQ = 1e-9
TOL_FW = 1e-10
FW_MAX_ITER = 10000
POINT_EQ = 1e-12

_EXACT_PLANAR_BRUTE = 40


def as_point(x, d=None):
    p = np.array(x, dtype=float).reshape(-1)
    if p.size < 1:
        raise DimensionMismatch("A point needs at least one coordinate.")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"Point has non-finite coordinates: {p}")
    if d is not None and p.size != d:
        raise DimensionMismatch(f"Expected a point in R^{d}, got R^{p.size}.")
    return p


def as_matrix(points, d=None):
    arr = np.array(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"Expected a nonempty list of points, got shape {arr.shape}.")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Point list has non-finite coordinates.")
    if d is not None and arr.shape[1] != d:
        raise DimensionMismatch(f"Expected points in R^{d}, got R^{arr.shape[1]}.")
    return arr


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Body:
    vertices: np.ndarray
    centers: np.ndarray = None
    radii: np.ndarray = None

    def __post_init__(self):
        V = as_matrix(self.vertices)
        d = V.shape[1]
        if self.centers is None or len(self.centers) == 0:
            C = np.zeros((0, d))
            R = np.zeros(0)
        else:
            C = as_matrix(self.centers, d)
            R = np.array(self.radii, dtype=float).reshape(-1)
            if R.size != C.shape[0]:
                raise ValueError(f"{C.shape[0]} ball centers but {R.size} radii.")
            if np.any(R < 0) or not np.all(np.isfinite(R)):
                raise ValueError(f"Ball radii must be finite and nonnegative, got {R}.")
        object.__setattr__(self, 'vertices', _frozen(V))
        object.__setattr__(self, 'centers', _frozen(C))
        object.__setattr__(self, 'radii', _frozen(R))

    @classmethod
    def from_points(cls, vertices, balls=()):
        balls = list(balls)
        if not balls:
            return cls(vertices)
        centers = [np.asarray(c, dtype=float).reshape(-1) for c, _ in balls]
        radii = [float(r) for _, r in balls]
        return cls(vertices, np.array(centers), np.array(radii))

    @classmethod
    def point(cls, x):
        return cls(as_point(x).reshape(1, -1))

    @classmethod
    def ball(cls, center, radius):
        c = as_point(center)
        return cls(np.zeros((1, c.size)), c.reshape(1, -1), np.array([float(radius)]))

    @classmethod
    def interval(cls, lo, hi):
        return cls(np.array([[float(lo)], [float(hi)]]))

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def balls(self):
        return [(c, float(r)) for c, r in zip(self.centers, self.radii)]

    @property
    def shift(self):
        return self.centers.sum(axis=0) if len(self.centers) else np.zeros(self.dim)

    @property
    def radius(self):
        return float(self.radii.sum())

    def to_json(self):
        out = {"vertices": self.vertices.tolist()}
        if len(self.radii):
            out["balls"] = [{"center": c.tolist(), "radius": r} for c, r in self.balls]
        return out


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'points', _frozen(as_matrix(self.points)))

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def to_json(self):
        return {"points": self.points.tolist()}


@dataclass(frozen=True, eq=False)
class DirectionSet:
    directions: np.ndarray
    rule: str = 'custom'
    seed: int = 0

    def __post_init__(self):
        U = as_matrix(self.directions)
        norms = np.linalg.norm(U, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("Direction sets must contain unit vectors.")
        object.__setattr__(self, 'directions', _frozen(U))

    @property
    def dim(self):
        return self.directions.shape[1]

    def __len__(self):
        return self.directions.shape[0]


def _unit_rows(U):
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    # a second pass keeps the norm within a few ulps of 1
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def direction_set(d, count=None, seed=0):
    """Deterministic sampling directions.

    d=1: {+1,-1}; d=2: equal angles (256); d=3: Fibonacci sphere (512);
    d>3: the 2d axis directions plus seeded Gaussian directions (1024).
    """
    if d < 1:
        raise DimensionMismatch(f"Direction sets need d >= 1, got {d}.")
    if d == 1:
        return DirectionSet(np.array([[1.0], [-1.0]]), rule='axis', seed=seed)
    if d == 2:
        k = 256 if count is None else int(count)
        theta = 2 * np.pi * np.arange(k) / k
        return DirectionSet(np.column_stack([np.cos(theta), np.sin(theta)]), rule='angles', seed=seed)
    if d == 3:
        k = 512 if count is None else int(count)
        i = np.arange(k) + 0.5
        z = 1 - 2 * i / k
        r = np.sqrt(np.clip(1 - z * z, 0, None))
        phi = np.pi * (1 + 5 ** 0.5) * i
        U = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        return DirectionSet(_unit_rows(U), rule='fibonacci', seed=seed)
    k = 1024 if count is None else int(count)
    rng = np.random.default_rng(seed)
    axes = np.vstack([np.eye(d), -np.eye(d)])
    U = np.vstack([axes, _unit_rows(rng.standard_normal((k, d)))])
    return DirectionSet(U, rule='axes+gaussian', seed=seed)


def _check_dim(a, b):
    if a != b:
        raise DimensionMismatch(f"Dimension mismatch: R^{a} vs R^{b}.")


def support(b, u):
    """h_b(u) = max over b of <u, x>; u need not be a unit vector."""
    u = as_point(u)
    if isinstance(b, PointCloud):
        _check_dim(b.dim, u.size)
        return float(np.max(b.points @ u))
    _check_dim(b.dim, u.size)
    h = float(np.max(b.vertices @ u))
    if len(b.radii):
        h += float(np.sum(b.centers @ u)) + float(np.sum(b.radii)) * float(np.linalg.norm(u))
    return h


def support_many(b, U):
    U = as_matrix(U)
    _check_dim(b.dim, U.shape[1])
    if isinstance(b, PointCloud):
        return np.max(U @ b.points.T, axis=1)
    h = np.max(U @ b.vertices.T, axis=1)
    if len(b.radii):
        h = h + U @ b.shift + b.radius * np.linalg.norm(U, axis=1)
    return h


def merge_points(points, tol=None):
    """Drop points within tol of an earlier point, keeping first occurrences in order."""
    tol = POINT_EQ if tol is None else tol
    P = np.asarray(points, dtype=float)
    if P.shape[0] <= 1:
        return P.copy()
    pairs = cKDTree(P).query_pairs(r=tol, output_type='ndarray')
    if len(pairs) == 0:
        return P.copy()
    keep = np.ones(P.shape[0], dtype=bool)
    neighbours = {}
    for i, j in pairs:
        neighbours.setdefault(min(i, j), []).append(max(i, j))
    for i in range(P.shape[0]):
        if keep[i]:
            for j in neighbours.get(i, ()):
                keep[j] = False
    return P[keep]


def _segment_ends(P):
    # flat input: the two extreme points along the spread direction
    axis = P[np.argmax(np.linalg.norm(P - P[0], axis=1))] - P[0]
    t = (P - P[0]) @ axis
    return P[[np.argmin(t), np.argmax(t)]]


def convex_hull_2d(points):
    """Hull vertices counter-clockwise, collinear points dropped."""
    P = np.unique(np.asarray(points, dtype=float), axis=0)
    if P.shape[0] <= 2:
        return P
    try:
        return P[ConvexHull(P).vertices]
    except QhullError:
        logger.debug(f"[hull] {P.shape[0]} planar points are collinear")
        return _segment_ends(P)


def _prune_exact(V):
    V = merge_points(V)
    d = V.shape[1]
    if d == 1 and V.shape[0] > 2:
        return np.array([[V.min()], [V.max()]])
    if d == 2 and V.shape[0] > 3:
        return convex_hull_2d(V)
    if d == 3 and V.shape[0] > 4:
        try:
            return V[np.sort(ConvexHull(V).vertices)]
        except QhullError:
            # coplanar or collinear in R^3
            return V
    return V


def minkowski_sum(a, b, prune=True):
    _check_dim(a.dim, b.dim)
    V = (a.vertices[:, None, :] + b.vertices[None, :, :]).reshape(-1, a.dim)
    if prune:
        V = _prune_exact(V)
    if len(a.radii) + len(b.radii) == 0:
        return Body(V)
    C = np.vstack([a.centers, b.centers])
    R = np.concatenate([a.radii, b.radii])
    return Body(V, C, R)


def scale(b, lam):
    lam = float(lam)
    if lam < 0:
        raise NegativeScale(f"Negative scaling is unsupported (lambda={lam}); bodies form a cone.")
    if lam == 0:
        return Body(np.zeros((1, b.dim)))
    if len(b.radii) == 0:
        return Body(lam * b.vertices)
    return Body(lam * b.vertices, lam * b.centers, lam * b.radii)


def _away_step_fw(S, p, tol_fw, tol_membership, max_iter):
    # min 0.5 |S^T w - p|^2 over the simplex, with away steps
    m = S.shape[0]
    i0 = int(np.argmin(np.sum((S - p) ** 2, axis=1)))
    w = np.zeros(m)
    w[i0] = 1.0
    x = S[i0].copy()
    gap = np.inf
    for _ in range(max_iter):
        g = x - p
        dist = float(np.linalg.norm(g))
        if dist <= tol_membership:
            break
        scores = S @ g
        gx = float(g @ x)
        s = int(np.argmin(scores))
        gap = gx - float(scores[s])
        # |x - p| - dist(p, hull) <= gap / |x - p|
        if gap <= tol_fw * dist or gap <= tol_fw * 1e-10:
            break
        active = np.flatnonzero(w > 0)
        a = int(active[np.argmax(scores[active])])
        away_gap = float(scores[a]) - gx
        if gap >= away_gap or w[a] >= 1.0:
            direction = S[s] - x
            gmax = 1.0
            toward = True
        else:
            direction = x - S[a]
            gmax = w[a] / (1.0 - w[a])
            toward = False
        dd = float(direction @ direction)
        if dd <= 0.0:
            break
        gamma = min(max(-float(g @ direction) / dd, 0.0), gmax)
        if gamma <= 0.0:
            break
        if toward:
            w *= 1.0 - gamma
            w[s] += gamma
        else:
            w *= 1.0 + gamma
            w[a] -= gamma
            if gamma >= gmax:
                w[a] = 0.0
        np.clip(w, 0.0, None, out=w)
        w /= w.sum()
        x = w @ S
    else:
        logger.debug(f"[fw] hit {max_iter} iterations, gap={gap:.3e}")
    return x, w, gap


def hull_weights(p, cloud, tol_fw=None, tol_membership=None, max_iter=None):
    """Distance from p to conv(cloud) and the barycentric weights of the nearest point."""
    S = cloud.points if isinstance(cloud, PointCloud) else as_matrix(cloud)
    p = as_point(p, S.shape[1])
    tol_fw = TOL_FW if tol_fw is None else tol_fw
    tol_membership = TOL_MEMBERSHIP if tol_membership is None else tol_membership
    max_iter = FW_MAX_ITER if max_iter is None else max_iter
    x, w, _ = _away_step_fw(S, p, tol_fw, tol_membership, max_iter)
    dist = float(np.linalg.norm(x - p))
    if dist <= tol_membership:
        dist = 0.0
    return dist, w


def distance_to_hull(p, cloud, tol_fw=None, tol_membership=None):
    return hull_weights(p, cloud, tol_fw=tol_fw, tol_membership=tol_membership)[0]


def distance_to_body(p, body, tol_fw=None, tol_membership=None):
    # conv(V) + sum of balls = conv(V) + B(sum c, sum r)
    p = as_point(p, body.dim)
    tol_membership = TOL_MEMBERSHIP if tol_membership is None else tol_membership
    d = hull_weights(p - body.shift, body.vertices, tol_fw=tol_fw, tol_membership=tol_membership)[0]
    d = max(0.0, d - body.radius)
    return 0.0 if d <= tol_membership else d


def reduce(b, tol=None):
    tol = TOL_MEMBERSHIP if tol is None else tol
    V = [v for v in b.vertices]
    i = 0
    while i < len(V) and len(V) > 1:
        others = np.array(V[:i] + V[i + 1:])
        if distance_to_hull(V[i], others, tol_membership=tol) <= tol:
            del V[i]
        else:
            i += 1
    if len(b.radii) == 0:
        return Body(np.array(V))
    return Body(np.array(V), b.centers, b.radii)


def extreme_indices(points, tol=None):
    """Indices of the extreme points of a finite set, after merging duplicates."""
    tol = TOL_MEMBERSHIP if tol is None else tol
    P = points.points if isinstance(points, PointCloud) else as_matrix(points)
    distinct = []
    for i in range(P.shape[0]):
        if not any(np.max(np.abs(P[i] - P[j])) <= POINT_EQ for j in distinct):
            distinct.append(i)
    if len(distinct) == 1:
        return distinct
    keep = []
    for i in distinct:
        others = P[[j for j in distinct if j != i]]
        if distance_to_hull(P[i], others, tol_membership=tol) > tol:
            keep.append(i)
    return keep


def extreme_points(cloud, tol=None):
    return PointCloud(cloud.points[extreme_indices(cloud, tol)])


def _farthest_1d(lo, hi, S):
    s = np.sort(S[:, 0])
    candidates = [lo, hi]
    mids = 0.5 * (s[:-1] + s[1:])
    candidates.extend(mids[(mids > lo) & (mids < hi)])
    c = np.array(candidates)
    idx = np.searchsorted(s, c)
    left = s[np.clip(idx - 1, 0, s.size - 1)]
    right = s[np.clip(idx, 0, s.size - 1)]
    return float(np.max(np.minimum(np.abs(c - left), np.abs(c - right))))


def _planar_candidates(poly, S):
    # sup of dist(., S) over a convex polygon sits at a vertex of (Voronoi cell) ∩ polygon
    edges = [(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))] if len(poly) > 2 else [(poly[0], poly[-1])]
    candidates = [poly]
    m = S.shape[0]
    vor_vertices = None
    if m > _EXACT_PLANAR_BRUTE:
        try:
            vor = Voronoi(S)
            pairs = vor.ridge_points
            vor_vertices = vor.vertices
        except QhullError:
            # degenerate (collinear) clouds have no Voronoi vertices
            logger.debug("[hausdorff] Voronoi failed, falling back to brute-force bisectors")
            pairs = None
            vor_vertices = np.zeros((0, 2))
    else:
        pairs = None
    if pairs is None:
        ii, jj = np.triu_indices(m, k=1)
        pairs = np.column_stack([ii, jj])
    A, B = S[pairs[:, 0]], S[pairs[:, 1]]
    normal = B - A
    offset = 0.5 * (np.sum(B * B, axis=1) - np.sum(A * A, axis=1))
    for e0, e1 in edges:
        denom = normal @ (e1 - e0)
        ok = np.abs(denom) > 1e-15
        t = (offset[ok] - normal[ok] @ e0) / denom[ok]
        t = t[(t >= 0) & (t <= 1)]
        candidates.append(e0[None, :] + t[:, None] * (e1 - e0)[None, :])
    if len(poly) > 2:
        if vor_vertices is None and m >= 3:
            vor_vertices = _circumcenters(S)
        if vor_vertices is not None and len(vor_vertices):
            inside = _inside_polygon(vor_vertices, poly)
            candidates.append(vor_vertices[inside])
    return np.vstack(candidates)


def _circumcenters(S):
    m = S.shape[0]
    idx = np.array([(i, j, k) for i in range(m) for j in range(i + 1, m) for k in range(j + 1, m)])
    a, b, c = S[idx[:, 0]], S[idx[:, 1]], S[idx[:, 2]]
    M = np.stack([b - a, c - a], axis=1)
    rhs = 0.5 * np.stack([np.sum((b - a) ** 2, axis=1), np.sum((c - a) ** 2, axis=1)], axis=1)
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-14
    if not np.any(ok):
        return np.zeros((0, 2))
    return a[ok] + np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]


def _inside_polygon(X, poly):
    inside = np.ones(X.shape[0], dtype=bool)
    for i in range(len(poly)):
        e0, e1 = poly[i], poly[(i + 1) % len(poly)]
        cross = (e1[0] - e0[0]) * (X[:, 1] - e0[1]) - (e1[1] - e0[1]) * (X[:, 0] - e0[0])
        inside &= cross >= -1e-12
    return inside


def _farthest_from_cloud(body, cloud, dirs):
    """sup over body of the distance to cloud; exact for d=1 and for planar polytopes."""
    S = cloud.points
    tree = cKDTree(S)
    if body.dim == 1:
        lo = -support(body, [-1.0])
        hi = support(body, [1.0])
        return _farthest_1d(lo, hi, S)
    if body.dim == 2 and body.radius == 0.0:
        poly = convex_hull_2d(body.vertices + body.shift)
        return float(np.max(tree.query(_planar_candidates(poly, S))[0]))
    # sampled lower bound: support points plus vertex midpoints
    logger.debug("[hausdorff] using sampled lower bound for the body-to-cloud term")
    U = dirs.directions
    idx = np.argmax(U @ body.vertices.T, axis=1)
    boundary = body.vertices[idx] + body.shift + body.radius * U
    V = body.vertices + body.shift
    ii, jj = np.triu_indices(V.shape[0], k=1)
    samples = np.vstack([boundary, V, 0.5 * (V[ii] + V[jj])])
    return float(np.max(tree.query(samples)[0]))


def hausdorff(a, b, dirs=None):
    """Set distance used by every equality check.

    Two bodies: max support gap over dirs (a pseudo-metric that approaches the
    Hausdorff distance only as dirs gets dense). Two clouds: exact discrete
    Hausdorff distance. Cloud against body: Hausdorff distance between the
    finite set and the body, exact for d=1 and planar polytopes.
    """
    _check_dim(a.dim, b.dim)
    if isinstance(a, PointCloud) and isinstance(b, PointCloud):
        d_ab = cKDTree(b.points).query(a.points)[0].max()
        d_ba = cKDTree(a.points).query(b.points)[0].max()
        return float(max(d_ab, d_ba))
    dirs = direction_set(a.dim) if dirs is None else dirs
    if len(dirs) == 0:
        raise ValueError("Empty direction set.")
    _check_dim(a.dim, dirs.dim)
    if isinstance(a, Body) and isinstance(b, Body):
        U = dirs.directions
        return float(np.max(np.abs(support_many(a, U) - support_many(b, U))))
    cloud, body = (a, b) if isinstance(a, PointCloud) else (b, a)
    if body.dim == 1:
        lo, hi = -support(body, [-1.0]), support(body, [1.0])
        x = cloud.points[:, 0]
        to_body = float(np.max(np.maximum(np.maximum(lo - x, x - hi), 0.0)))
    else:
        to_body = max(distance_to_body(p, body) for p in cloud.points)
    return float(max(to_body, _farthest_from_cloud(body, cloud, dirs)))


def conv(x):
    """Convex hull of a cloud as a Body (exactly pruned in d <= 2)."""
    if isinstance(x, Body):
        return x
    return Body(_prune_exact(x.points))
