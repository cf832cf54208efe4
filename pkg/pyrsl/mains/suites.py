"""
Verification suites and experiments behind `pyrsl verify` and `pyrsl experiment`.

Suites return a list of {"identity", "pass", "max_dev"} entries, aggregated over
their seeded instances; experiments return a pandas DataFrame.
"""

import json
import logging
import time

import numpy as np
import pandas as pd

from pyrsl.helpers import geometry
from pyrsl.helpers.geometry import Body, PointCloud
from pyrsl.helpers.instances import (SHRINK_CLOUD, ball_instance, circle_constants, interval_instance, random_cloud,
                                     random_random_cloud, random_selections, random_space, split_step_selections)
from pyrsl.helpers.prob import geometric_space, uniform_space
from pyrsl.helpers.randomset import Selection
from pyrsl.helpers.utils import make_rng
from pyrsl.mains import barycenters as bc
from pyrsl.mains import expectation, hulls
from pyrsl.mains.hulls import SelectionSet

logger = logging.getLogger(__name__)


def merge_entries(groups):
    """Fold per-instance entries into one entry per identity, keeping first-seen order."""
    merged = {}
    for entries in groups:
        for e in entries:
            slot = merged.setdefault(e["identity"], {"identity": e["identity"], "pass": True, "max_dev": 0.0, "instances": 0})
            slot["pass"] = slot["pass"] and e["pass"]
            slot["max_dev"] = max(slot["max_dev"], e["max_dev"])
            slot["instances"] += 1
    return list(merged.values())


def _entry(identity, dev, tol):
    return {"identity": identity, "pass": bool(dev <= tol), "max_dev": float(dev)}


def _flag(identity, ok):
    return {"identity": identity, "pass": bool(ok), "max_dev": 0.0 if ok else 1.0}


def _dirs(config, d):
    return geometry.direction_set(d, config.dirs, config.seed)


def verify_hulls(config):
    rng = make_rng(config.seed, 'verify', 'hulls')
    groups = []
    for _ in range(config.trials):
        n, m, d = int(rng.integers(1, 4)), int(rng.integers(1, 5)), int(rng.integers(1, 3))
        space = random_space(rng, n)
        A = SelectionSet.of(random_selections(rng, space, m, d))
        groups.append(hulls.operator_identity_suite(A, grid=config.suite_grid, dirs=_dirs(config, d), tol=config.tol_set_eq))

    check = hulls.unit_ball_check(uniform_space(2), [0])
    groups.append([_flag("L1 unit ball is not decomposable", check["members_in_ball"] and not check["decomposition_in_ball"])])
    return merge_entries(groups)


def verify_barycenter(config):
    rng = make_rng(config.seed, 'verify', 'barycenter')
    groups = []
    for _ in range(config.clouds):
        d, m = int(rng.integers(1, 4)), int(rng.integers(1, 7))
        cloud = random_cloud(rng, d, m)
        groups.append(bc.choquet_hull_fd(cloud, config.trials, rng, grid=config.grid, tol=config.tol_membership))

    worst = 0.0
    for _ in range(config.trials):
        d, k = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        X = rng.uniform(-2, 2, size=(k, d))
        w = rng.dirichlet(np.ones(k))
        mu = bc.DiscreteMeasure(w / w.sum(), X)
        u = rng.standard_normal(d)
        direct = float(u @ bc.barycenter(mu))
        functional = float(np.sum(mu.weights * (mu.support @ u)))
        scale = 1.0 + float(np.sum(mu.weights * np.abs(mu.support @ u)))
        worst = max(worst, abs(direct - functional) / scale)
    groups.append([_entry("<u, r(mu)> = sum w <u, x>", worst, 1e-12)])
    return merge_entries(groups)


def _random_kernel(rng, space, d):
    rows = []
    for _ in range(space.n):
        k = int(rng.integers(1, 4))
        w = rng.dirichlet(np.ones(k))
        rows.append(bc.DiscreteMeasure(w / w.sum(), rng.uniform(-2, 2, size=(k, d))))
    return bc.Kernel(space, rows)


def verify_kernel(config):
    rng = make_rng(config.seed, 'verify', 'kernel')
    fubini, roundtrip, serialized = 0.0, True, True
    for _ in range(config.trials):
        n, d = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        space = random_space(rng, n)
        K = _random_kernel(rng, space, d)
        v = space.weights
        maps = [lambda x: x] + [(lambda M: (lambda x: M @ x))(rng.standard_normal((2, d))) for _ in range(3)]
        for f in maps:
            left = v @ bc.kernel_apply(K, f)
            vK = bc.measure_kernel(v, K)
            right = sum(w * np.asarray(f(x)) for w, x in vK.items())
            fubini = max(fubini, float(np.max(np.abs(left - right))))

        a = Selection(space, rng.uniform(-2, 2, size=(n, d)))
        roundtrip = roundtrip and bool(np.array_equal(bc.kernel_barycenter(bc.dirac_kernel(a)).points, a.points))

        restored = bc.kernel_from_json(json.loads(json.dumps(K.to_json())), space)
        serialized = serialized and all(np.array_equal(r.weights, s.weights) and np.array_equal(r.support, s.support)
                                        for r, s in zip(K.rows, restored.rows))

    closure = True
    for _ in range(max(1, config.trials // 5)):
        n, m, d = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 3))
        space = random_space(rng, n)
        members = random_selections(rng, space, m, d)
        A = SelectionSet.of(members)
        choice = rng.integers(0, m, size=n)
        try:
            bc.kernel_barycenter(bc.decomposition_kernel(members, choice, source=A))
            lambdas = rng.dirichlet(np.ones(m), size=n)
            bc.kernel_barycenter(bc.convex_combination_kernel(members, lambdas, source=A))
        except RuntimeError as e:
            logger.warning(f"[kernel] {e}")
            closure = False

    return [
        _entry("v(Kf) = (vK)f", fubini, 1e-12),
        _flag("kernel_barycenter(dirac(a)) = a", roundtrip),
        _flag("kernel JSON round-trip is exact", serialized),
        _flag("kernel barycenters stay in chd / chcd", closure),
    ]


def _split_step_entries(config):
    space, (f1, f2, f3) = split_step_selections()
    A = SelectionSet.of([f1, f2, f3])
    dec = hulls.dec_hull(A)
    ext = hulls.extreme_selections(A)
    ext_dec = hulls.extreme_selections(dec)
    u, v = Selection(space, [[1.0], [5.0]]), Selection(space, [[-1.0], [5.0]])
    midpoint = bc.selection_barycenter(bc.DiscreteMeasure([0.5, 0.5], [u, v]))
    chcd = hulls.chcd_hull(A)
    box = (Body.interval(-1.0, 1.0), Body.interval(-1.0, 5.0))
    box_gap = max(geometry.hausdorff(got, want) for got, want in zip(chcd.atomwise, box))
    return [
        _flag("f1 is extreme in conv{f1,f2,f3}", ext.contains(f1)),
        _flag("f1 is not extreme in dec A", not ext_dec.contains(f1)),
        _flag("f1 = (u+v)/2 with u, v in dec A", dec.contains(u) and dec.contains(v) and midpoint.equals(f1)),
        _entry("chcd A = [-1,1] x [-1,5]", box_gap, config.tol_set_eq),
    ] + hulls.extreme_inclusion_check(A, tol=config.tol_set_eq)


def _circle_entries(config):
    groups = []
    for k, n in ((8, 2), (3, 3)):
        _, gens = circle_constants(k, n)
        groups.append(hulls.extreme_equality_check(SelectionSet.of(gens), tol=config.tol_set_eq))
    return merge_entries(groups)


def _krein_milman_entries(rng, config):
    d, m = int(rng.integers(1, 4)), int(rng.integers(1, 13))
    cloud = random_cloud(rng, d, m)
    ext = geometry.extreme_points(cloud)
    gap = geometry.hausdorff(geometry.Body(ext.points), geometry.Body(cloud.points), _dirs(config, d))
    # any generator subset with the same hull contains every extreme point
    subset_ok = True
    for B in (ext.points, cloud.points[rng.random(len(cloud)) < 0.7]):
        if len(B) == 0:
            continue
        generates = all(geometry.distance_to_hull(p, B) == 0.0 for p in cloud.points)
        if generates:
            subset_ok = subset_ok and all(np.min(np.max(np.abs(B - p), axis=1)) == 0.0 for p in ext.points)
    return [_entry("conv(e(A)) = conv(A)", gap, config.tol_set_eq), _flag("e(A) within any generating subset", subset_ok)]


def verify_extreme(config):
    if config.instance == 'split-step':
        return _split_step_entries(config)
    if config.instance == 'circle':
        return _circle_entries(config)
    if config.instance != 'random':
        raise ValueError(f"Unknown instance {config.instance!r}")
    rng = make_rng(config.seed, 'verify', 'extreme')
    groups = []
    for _ in range(config.trials):
        n, m, d = int(rng.integers(1, 4)), int(rng.integers(1, 5)), int(rng.integers(1, 3))
        space = random_space(rng, n)
        A = SelectionSet.of(random_selections(rng, space, m, d))
        groups.append(hulls.extreme_inclusion_check(A, tol=config.tol_set_eq))
        dec = hulls.dec_hull(A)
        if len(dec) <= 64:
            groups.append([_flag("A decomposable => e(A) decomposable", hulls.is_decomposable(hulls.extreme_selections(dec)))])
        groups.append(_krein_milman_entries(rng, config))
    return merge_entries(groups)


def verify_aumann(config):
    rng = make_rng(config.seed, 'verify', 'aumann')
    groups = []
    for _ in range(config.trials):
        n, m, d = int(rng.integers(1, 4)), int(rng.integers(1, 5)), int(rng.integers(1, 3))
        x = random_random_cloud(rng, n, m, d)
        groups.append(expectation.aumann_identity_check(x, _dirs(config, d), config.tol_set_eq))

    for _ in range(min(config.trials, 50)):
        d, n = int(rng.integers(2, 4)), int(rng.integers(1, 6))
        x = ball_instance(rng, d, n)
        result = expectation.aumann_integral(x)
        law = expectation.closed_form(x)
        groups.append([_entry("E B(r, phi) = B(E r, E phi)", expectation.closed_form_gap(result, law, _dirs(config, d)), 1e-12)])

        # midpoints of points of a convex-valued integral stay inside it
        pts = _boundary_points(result.aumann, rng, 4)
        mids = 0.5 * (pts[:2] + pts[2:])
        worst = max(geometry.distance_to_body(p, result.aumann) for p in mids)
        groups.append([_entry("midpoints of ∫X dP stay in ∫X dP", worst, config.tol_membership)])

    for _ in range(config.trials):
        x = interval_instance(rng, int(rng.integers(1, 6)))
        result = expectation.aumann_integral(x)
        law = expectation.closed_form(x)
        lo, hi = -geometry.support(result.aumann, [-1.0]), geometry.support(result.aumann, [1.0])
        want_lo, want_hi = -geometry.support(law["body"], [-1.0]), geometry.support(law["body"], [1.0])
        groups.append([_entry("E[eta, xi] = [E eta, E xi]", max(abs(lo - want_lo), abs(hi - want_hi)), 1e-12)])
    return merge_entries(groups)


def _boundary_points(body, rng, k):
    U = rng.standard_normal((k, body.dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    idx = np.argmax(U @ body.vertices.T, axis=1)
    return body.vertices[idx] + body.shift + body.radius * U


SUITES = {
    'hulls': verify_hulls,
    'barycenter': verify_barycenter,
    'kernel': verify_kernel,
    'extreme': verify_extreme,
    'aumann': verify_aumann,
}


def default_n_values():
    return [int(n) for n in np.unique(np.round(np.logspace(0, 3, 13)).astype(int))]


def experiment_convexification(config):
    n_values = config.n_values or default_n_values()
    return expectation.convexification_experiment(n_values, timing=config.timing, guard=config.guard_max)


def experiment_staircase(config):
    n_values = config.n_values or list(range(2, 13))
    rows = []
    for N in n_values:
        start = time.perf_counter()
        row = hulls.staircase_check(int(N))
        space = geometric_space(int(N))
        levels = 2.0 ** -np.arange(1, N + 1)
        generators = [Selection(space, np.full((N, 1), c)) for c in levels]
        K = bc.decomposition_kernel(generators, range(N), source=SelectionSet.of(generators))
        row["kernel_pass"] = bool(np.array_equal(bc.kernel_barycenter(K).points[:, 0], levels))
        row["pass"] = row["pass"] and row["kernel_pass"]
        if config.timing:
            row["runtime_ms"] = 1000 * (time.perf_counter() - start)
        rows.append(row)
    return pd.DataFrame(rows)


def experiment_shrink_gap(config):
    n_values = config.n_values or [1, 2, 4, 8]
    start = time.perf_counter()
    table = expectation.deterministic_case_check(PointCloud(SHRINK_CLOUD), n_values, _dirs(config, 2), config.tol_set_eq)
    if config.timing:
        table["runtime_ms"] = 1000 * (time.perf_counter() - start) / len(table)
    return table


EXPERIMENTS = {
    'convexification': experiment_convexification,
    'staircase': experiment_staircase,
    'example67': experiment_staircase,
    'shrink-gap': experiment_shrink_gap,
}
