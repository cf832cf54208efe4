"""
Instance JSON codec (schema "rsl/1") and seeded random instance builders.
"""

import json
import logging

import numpy as np

from pyrsl.helpers.geometry import Body, PointCloud
from pyrsl.helpers.prob import FiniteProbSpace, uniform_space
from pyrsl.helpers.randomset import RandomCloud, RandomSet, Selection
from pyrsl.helpers.utils import SCHEMA, InstanceError

logger = logging.getLogger(__name__)


def _value_from_json(obj, i):
    if not isinstance(obj, dict):
        raise InstanceError(f"values[{i}] must be an object, got {type(obj).__name__}")
    if "points" in obj:
        return PointCloud(np.array(obj["points"], dtype=float))
    if "vertices" in obj:
        balls = obj.get("balls", [])
        for j, b in enumerate(balls):
            if "center" not in b or "radius" not in b:
                raise InstanceError(f"values[{i}].balls[{j}] needs 'center' and 'radius'")
        return Body.from_points(np.array(obj["vertices"], dtype=float), [(b["center"], b["radius"]) for b in balls])
    raise InstanceError(f"values[{i}] needs 'points' or 'vertices'")


def instance_from_json(obj):
    if not isinstance(obj, dict):
        raise InstanceError("Instance must be a JSON object.")
    schema = obj.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise InstanceError(f"Unsupported schema {schema!r}, expected {SCHEMA!r}")
    for key in ("weights", "values"):
        if key not in obj:
            raise InstanceError(f"Instance is missing {key!r}")
    try:
        space = FiniteProbSpace.from_weights(obj["weights"])
        values = [_value_from_json(v, i) for i, v in enumerate(obj["values"])]
        kinds = {type(v) for v in values}
        if len(kinds) != 1:
            raise InstanceError("Instance mixes point clouds and bodies.")
        if kinds == {PointCloud}:
            return RandomCloud(space, tuple(values))
        return RandomSet(space, tuple(values))
    except InstanceError:
        raise
    except (ValueError, TypeError) as e:
        raise InstanceError(f"Malformed instance: {e}") from e


def load_instance(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            obj = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise InstanceError(f"{path} is not valid JSON: {e}") from e
    except OSError as e:
        raise InstanceError(f"Cannot read instance {path}: {e}") from e
    return instance_from_json(obj)


def save_instance(x, path):
    with open(path, 'w') as f:
        json.dump({"schema": SCHEMA, **x.to_json()}, f, indent=2, sort_keys=True)


def random_weights(rng, n):
    w = rng.uniform(0.5, 1.5, size=n)
    return w / w.sum()


def random_space(rng, n, uniform=False):
    if uniform:
        return uniform_space(n)
    return FiniteProbSpace.from_weights(random_weights(rng, n))


def random_cloud(rng, d, m, scale=1.0):
    return PointCloud(np.round(rng.uniform(-scale, scale, size=(m, d)), 6))


def random_random_cloud(rng, n, m, d, uniform=False):
    space = random_space(rng, n, uniform)
    sizes = rng.integers(1, m + 1, size=n)
    return RandomCloud(space, tuple(random_cloud(rng, d, int(k)) for k in sizes))


def random_selections(rng, space, m, d):
    """m distinct random selections with coordinates on a 1/8 grid."""
    out = []
    while len(out) < m:
        P = rng.integers(-8, 9, size=(space.n, d)) / 8.0
        if not any(np.array_equal(P, s.points) for s in out):
            out.append(Selection(space, P))
    return out


def ball_instance(rng, d, n):
    space = random_space(rng, n)
    radii = rng.uniform(0.1, 2.0, size=n)
    centers = rng.uniform(-3, 3, size=(n, d))
    return RandomSet(space, tuple(Body.ball(c, r) for c, r in zip(centers, radii)))


def interval_instance(rng, n):
    # rational weights k/den so endpoint expectations are exact sums of dyadics
    counts = rng.integers(1, 5, size=n)
    den = 2 ** int(np.ceil(np.log2(counts.sum())))
    counts[-1] += den - counts.sum()
    space = FiniteProbSpace.from_weights(counts / den)
    lo = rng.integers(-8, 9, size=n).astype(float)
    hi = lo + rng.integers(0, 9, size=n)
    return RandomSet(space, tuple(Body.interval(a, b) for a, b in zip(lo, hi)))


def split_step_selections():
    """Two atoms of weight 1/2; f1, f2, f3 written as (value on atom 1, value on atom 2)."""
    space = FiniteProbSpace.from_weights([0.5, 0.5])
    f1 = Selection(space, [[0.0], [5.0]])
    f2 = Selection(space, [[1.0], [1.0]])
    f3 = Selection(space, [[-1.0], [-1.0]])
    return space, [f1, f2, f3]


def two_point_cloud(n):
    return RandomCloud(uniform_space(n), (PointCloud([[0.0], [1.0]]),) * n)


SHRINK_CLOUD = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.5, 1.2], [0.6, 0.4]]


def circle_constants(k, n):
    """k constant selections over n equal atoms, sitting at the k-th roots of unity in R^2."""
    theta = 2 * np.pi * np.arange(k) / k
    # cos/sin of multiples of pi/2 come out as 6e-17 instead of 0
    circle = np.round(np.column_stack([np.cos(theta), np.sin(theta)]), 15)
    space = uniform_space(n)
    return space, [Selection(space, np.tile(p, (n, 1))) for p in circle]
