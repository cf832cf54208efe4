import logging
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from pyrsl.helpers import geometry
from pyrsl.helpers.geometry import Body, PointCloud
from pyrsl.helpers.instances import two_point_cloud
from pyrsl.helpers.prob import uniform_space
from pyrsl.helpers.randomset import RandomCloud, RandomSet, constant, convexify, index_grid
from pyrsl.helpers.utils import DimensionMismatch, guard_max

logger = logging.getLogger(__name__)

MINKOWSKI = 'minkowski'
SELECTION_ENUM = 'selection-enum'

# selection enumeration for the convexification series stays below this many selections
ENUM_LIMIT = 2**16
MINKOWSKI_LIMIT = 2000

CLOSURE_NOTE = "closure is the identity: finite Minkowski sums of compact sets are compact"


@dataclass(frozen=True, eq=False)
class ExpectationResult:
    aumann: object
    convexified: Body
    hausdorff_gap: float
    method: str
    dirs: int = 0
    info: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "method": self.method,
            "aumann": self.aumann.to_json(),
            "convexified": self.convexified.to_json(),
            "hausdorff_gap": self.hausdorff_gap,
            "dirs": self.dirs,
            **self.info,
        }


def _dirs_for(d, dirs):
    return geometry.direction_set(d) if dirs is None else dirs


def aumann_integral(x, dirs=None):
    """Weighted Minkowski sum of the atom values."""
    if not isinstance(x, RandomSet):
        raise TypeError("aumann_integral needs a convex-valued RandomSet.")
    total = None
    for w, body in zip(x.space.weights, x.values):
        part = geometry.scale(body, w)
        total = part if total is None else geometry.minkowski_sum(total, part)
    dirs = _dirs_for(x.dim, dirs)
    return ExpectationResult(total, total, 0.0, MINKOWSKI, len(dirs))


def _selection_means(x):
    grid = index_grid(x)
    acc = np.zeros((grid.shape[0], x.dim))
    for i, (w, cloud) in enumerate(zip(x.space.weights, x.values)):
        acc = acc + w * cloud.points[grid[:, i]]
    return geometry.merge_points(acc)


def minkowski_cloud_sum(x):
    """Sum of the scaled atom clouds, merging duplicates after every atom."""
    acc = np.zeros((1, x.dim))
    for w, cloud in zip(x.space.weights, x.values):
        acc = geometry.merge_points((acc[:, None, :] + w * cloud.points[None, :, :]).reshape(-1, x.dim))
    return acc


def aumann_integral_cloud(x, dirs=None):
    if not isinstance(x, RandomCloud):
        raise TypeError("aumann_integral_cloud needs a RandomCloud.")
    means = _selection_means(x)
    summed = minkowski_cloud_sum(x)
    if means.shape != summed.shape or geometry.hausdorff(PointCloud(means), PointCloud(summed)) > geometry.POINT_EQ:
        raise RuntimeError(f"Selection means ({means.shape[0]} points) and Minkowski sum ({summed.shape[0]} points) disagree.")
    aumann = PointCloud(means)
    convexified = geometry.conv(aumann)
    dirs = _dirs_for(x.dim, dirs)
    gap = geometry.hausdorff(aumann, convexified, dirs)
    logger.debug(f"[aumann] {means.shape[0]} distinct selection means, gap to hull {gap:.3e}")
    return ExpectationResult(aumann, convexified, gap, SELECTION_ENUM, len(dirs))


def _entry(identity, dev, tol):
    return {"identity": identity, "pass": bool(dev <= tol), "max_dev": float(dev)}


def aumann_identity_check(x, dirs=None, tol=None):
    """conv of the Aumann integral against the Aumann integral of the atomwise hulls."""
    tol = geometry.TOL_SET_EQ if tol is None else tol
    dirs = _dirs_for(x.dim, dirs)
    left = aumann_integral_cloud(x, dirs).convexified
    right = aumann_integral(convexify(x), dirs).aumann
    return [_entry("conv(∫X dP) = ∫conv X dP", geometry.hausdorff(left, right, dirs), tol)]


def _grid_cloud(n, guard):
    if 2 ** n <= min(guard, ENUM_LIMIT):
        return aumann_integral_cloud(two_point_cloud(n)).aumann.points, SELECTION_ENUM
    if n <= MINKOWSKI_LIMIT:
        return minkowski_cloud_sum(two_point_cloud(n)), MINKOWSKI
    return (np.arange(n + 1) / n).reshape(-1, 1), 'closed-form'


def convexification_experiment(n_list, timing=True, guard=None):
    """Gap between the integral of {0,1} over n equal atoms and [0,1]; it is 1/(2n)."""
    guard = guard_max() if guard is None else guard
    unit = Body.interval(0.0, 1.0)
    rows = []
    for n in n_list:
        if n < 1:
            raise ValueError(f"Atom counts must be positive, got {n}")
        start = time.perf_counter()
        points, path = _grid_cloud(int(n), guard)
        gap = geometry.hausdorff(PointCloud(points), unit)
        row = {"n": int(n), "gap": gap, "expected": 1.0 / (2 * n), "abs_err": abs(gap - 1.0 / (2 * n)), "path": path}
        if timing:
            row["runtime_ms"] = 1000 * (time.perf_counter() - start)
        rows.append(row)
        logger.info(f"[convexification] n={n} gap={gap:.6g} via {path}")
    return pd.DataFrame(rows)


def deterministic_case_check(b, n_values, dirs=None, tol=None):
    """Constant random set b over n equal atoms: E X matches conv(b), and the raw gap shrinks with n."""
    tol = geometry.TOL_SET_EQ if tol is None else tol
    hull = geometry.conv(b)
    dirs = _dirs_for(b.dim, dirs)
    rows = []
    previous = np.inf
    for n in n_values:
        x = constant(uniform_space(int(n)), b)
        if isinstance(b, PointCloud):
            aumann = PointCloud(minkowski_cloud_sum(x))
            raw_gap = geometry.hausdorff(aumann, hull, dirs)
            conv_gap = geometry.hausdorff(geometry.conv(aumann), hull, dirs)
        else:
            aumann = aumann_integral(x, dirs).aumann
            raw_gap = conv_gap = geometry.hausdorff(aumann, hull, dirs)
        rows.append({
            "n": int(n),
            "raw_gap": raw_gap,
            "conv_gap": conv_gap,
            "conv_pass": bool(conv_gap <= tol),
            "monotone": bool(raw_gap <= previous + tol),
        })
        previous = raw_gap
    return pd.DataFrame(rows)


def selection_expectation(x, dirs=None):
    """E X; on finite spaces the closure changes nothing, recorded as an annotation."""
    if isinstance(x, RandomSet):
        result = aumann_integral(x, dirs)
    else:
        result = aumann_integral_cloud(x, dirs)
    result.info["closure"] = CLOSURE_NOTE
    return result


def closed_form(x):
    """Closed form for ball-valued and interval-valued random sets, None otherwise."""
    if not isinstance(x, RandomSet):
        return None
    w = x.space.weights
    if all(v.vertices.shape[0] == 1 for v in x.values):
        centers = np.array([v.vertices[0] + v.shift for v in x.values])
        radii = np.array([v.radius for v in x.values])
        return {"law": "ball", "body": Body.ball(w @ centers, float(w @ radii))}
    if x.dim == 1 and all(v.radius == 0.0 for v in x.values):
        lo = np.array([v.vertices.min() for v in x.values])
        hi = np.array([v.vertices.max() for v in x.values])
        return {"law": "interval", "body": Body.interval(float(w @ lo), float(w @ hi))}
    return None


def closed_form_gap(result, law, dirs=None):
    if result.aumann.dim != law["body"].dim:
        raise DimensionMismatch("Closed form and computed integral live in different dimensions.")
    return geometry.hausdorff(result.aumann, law["body"], _dirs_for(law["body"].dim, dirs))


def support_table(result, dirs=None):
    dirs = _dirs_for(result.convexified.dim, dirs)
    U = dirs.directions
    table = pd.DataFrame(U, columns=[f"u{i}" for i in range(U.shape[1])])
    table["support"] = geometry.support_many(result.aumann, U)
    table["support_convexified"] = geometry.support_many(result.convexified, U)
    return table
