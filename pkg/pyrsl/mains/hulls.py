"""
Hull operators on finite selection sets.

A SelectionSet is either FINITE_EXACT (an explicit stack of selections) or
ATOMWISE (one value set per atom, standing for every selection that picks from
it).  dec and chd produce product-structured sets, so they come back ATOMWISE
(chd) or as the full explicit product (dec).  conv does not preserve that
structure and is returned as a sampled simplex lattice.
"""

import itertools
import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.spatial import cKDTree

from pyrsl.helpers import geometry
from pyrsl.helpers.geometry import Body, PointCloud
from pyrsl.helpers.prob import geometric_space
from pyrsl.helpers.randomset import RandomCloud, RandomSet, Selection, is_selection, lp_norm
from pyrsl.helpers.utils import DimensionMismatch, SpaceMismatch, check_guard, guard_max

logger = logging.getLogger(__name__)

FINITE_EXACT = 'finite-exact'
ATOMWISE = 'atomwise'


@dataclass(frozen=True, eq=False)
class SelectionSet:
    space: object
    points: np.ndarray = None
    atomwise: tuple = None
    tag: str = FINITE_EXACT
    sampled: bool = False
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag == FINITE_EXACT:
            P = np.array(self.points, dtype=float)
            if P.ndim != 3 or P.shape[0] == 0:
                raise ValueError(f"Expected a nonempty (members, atoms, d) stack, got shape {P.shape}")
            if P.shape[1] != self.space.n:
                raise SpaceMismatch(f"Members have {P.shape[1]} atoms, space has {self.space.n}.")
            P.setflags(write=False)
            object.__setattr__(self, 'points', P)
        elif self.tag == ATOMWISE:
            values = tuple(self.atomwise)
            if len(values) != self.space.n:
                raise SpaceMismatch(f"{len(values)} atom values for {self.space.n} atoms.")
            if len({v.dim for v in values}) != 1:
                raise DimensionMismatch("Atom value sets live in different dimensions.")
            object.__setattr__(self, 'atomwise', values)
        else:
            raise ValueError(f"Unknown closure tag {self.tag!r}")

    @classmethod
    def of(cls, selections, **kwargs):
        selections = list(selections)
        if not selections:
            raise ValueError("A selection set needs at least one member.")
        space = selections[0].space
        for s in selections[1:]:
            if not s.space.same_as(space):
                raise SpaceMismatch("Selections live on different probability spaces.")
            if s.dim != selections[0].dim:
                raise DimensionMismatch("Selections live in different dimensions.")
        return cls(space, np.stack([s.points for s in selections]), **kwargs)

    @property
    def dim(self):
        if self.tag == FINITE_EXACT:
            return self.points.shape[2]
        return self.atomwise[0].dim

    @property
    def convex_valued(self):
        return self.tag == ATOMWISE and isinstance(self.atomwise[0], Body)

    @property
    def members(self):
        if self.tag == ATOMWISE:
            if self.convex_valued:
                raise ValueError("An atomwise set with convex values has no finite member list.")
            return [Selection(self.space, p) for p in _product_points(self.atomwise)]
        return [Selection(self.space, p) for p in self.points]

    def __len__(self):
        if self.tag == FINITE_EXACT:
            return self.points.shape[0]
        if self.convex_valued:
            raise ValueError("An atomwise set with convex values is a continuum.")
        return int(np.prod([len(v) for v in self.atomwise], dtype=object))

    def vectors(self):
        P = self.points if self.tag == FINITE_EXACT else _product_points(self.atomwise)
        return P.reshape(P.shape[0], -1)

    def as_random(self):
        if self.tag != ATOMWISE:
            raise ValueError("Only atomwise sets are random sets.")
        kind = RandomSet if self.convex_valued else RandomCloud
        return kind(self.space, self.atomwise)

    def contains(self, s, tol=None):
        if self.tag == ATOMWISE:
            return is_selection(self.as_random(), s, tol=tol)
        if not s.space.same_as(self.space):
            raise SpaceMismatch("Selection lives on a different probability space.")
        tol = geometry.POINT_EQ if tol is None else tol
        dist = cKDTree(self.vectors()).query(s.vector())[0]
        return bool(dist <= tol)


def _product_points(values):
    clouds = [v.points for v in values]
    count = check_guard(int(np.prod([len(c) for c in clouds], dtype=object)), "atomwise enumeration")
    grid = np.indices([len(c) for c in clouds]).reshape(len(clouds), -1).T
    P = np.stack([c[grid[:, i]] for i, c in enumerate(clouds)], axis=1)
    assert P.shape[0] == count
    return P


def _dedupe(P):
    m, n, d = P.shape
    return geometry.merge_points(P.reshape(m, n * d)).reshape(-1, n, d)


def _finite(a):
    if a.tag == ATOMWISE:
        if a.convex_valued:
            raise ValueError("This operator needs a finite selection set.")
        return SelectionSet(a.space, _product_points(a.atomwise))
    return a


def decompose(selections, assignment):
    """result(atom i) = selections[assignment[i]](atom i)."""
    selections = list(selections)
    space = selections[0].space
    assignment = list(assignment)
    if len(assignment) != space.n:
        raise ValueError(f"Assignment covers {len(assignment)} atoms, space has {space.n}.")
    for s in selections[1:]:
        if not s.space.same_as(space):
            raise SpaceMismatch("Selections live on different probability spaces.")
    for k in assignment:
        if not 0 <= k < len(selections):
            raise IndexError(f"Assignment index {k} out of range for {len(selections)} selections.")
    return Selection(space, np.array([selections[k].points[i] for i, k in enumerate(assignment)]))


def value_sets(a):
    """F_A(atom) = {s(atom) : s in A}, duplicates merged."""
    if a.tag == ATOMWISE:
        return a.atomwise
    return tuple(PointCloud(geometry.merge_points(a.points[:, i, :])) for i in range(a.space.n))


def _mixtures(P):
    m, n, _ = P.shape
    check_guard(m ** n, f"dec_hull({m} members over {n} atoms)")
    grid = np.indices((m,) * n).reshape(n, -1).T
    return P[grid, np.arange(n)]


def dec_hull(a):
    a = _finite(a)
    P = _dedupe(a.points)
    mixed = _dedupe(_mixtures(P))
    F = value_sets(a)
    expected = int(np.prod([len(v) for v in F], dtype=object))
    agree = mixed.shape[0] == expected
    if not agree:
        logger.error(f"[hulls] dec_hull enumerated {mixed.shape[0]} mixtures but the atomwise product has {expected}")
    return SelectionSet(a.space, mixed, info={"atomwise": F, "cross_check": agree})


def closed_under_decompose(a):
    """A finite set is decomposable iff it is the full product of its value sets."""
    a = _finite(a)
    P = _dedupe(a.points)
    expected = int(np.prod([len(v) for v in value_sets(a)], dtype=object))
    return P.shape[0] == expected


is_decomposable = closed_under_decompose


def simplex_lattice(m, g):
    """All weight vectors in the m-simplex with entries in (1/g)N, as integer counts."""
    if g < 1:
        raise ValueError(f"Lattice resolution must be positive, got {g}")
    check_guard(comb(g + m - 1, m - 1), f"simplex lattice (m={m}, grid={g})")
    rows = []
    for bars in itertools.combinations(range(g + m - 1), m - 1):
        edges = (-1,) + bars + (g + m - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(m)])
    return np.array(rows, dtype=int).reshape(-1, m)


def conv_hull_sel(a, grid=8):
    a = _finite(a)
    P = _dedupe(a.points)
    m, n, d = P.shape
    weights = simplex_lattice(m, grid) / grid
    L = np.einsum('km,mnd->knd', weights, P)
    # vertices of the lattice reproduce the members bit for bit
    corners = np.flatnonzero(weights.max(axis=1) == 1.0)
    L[corners] = P[np.argmax(weights[corners], axis=1)]
    return SelectionSet(a.space, _dedupe(L), sampled=True, info={"grid": grid, "lattice_size": int(weights.shape[0])})


def chd_hull(a):
    if a.tag == ATOMWISE:
        return a
    return SelectionSet(a.space, atomwise=value_sets(a), tag=ATOMWISE)


def _atomwise_conv(values):
    return tuple(geometry.conv(v) for v in values)


def _atomwise_gap(left, right, dirs=None):
    gaps = []
    for u, v in zip(left, right):
        dirs_u = dirs if dirs is not None else geometry.direction_set(u.dim)
        gaps.append(geometry.hausdorff(u, v, dirs_u))
    return float(max(gaps))


def chcd_hull(a, grid=None, dirs=None):
    """Atomwise conv of F_A, computed through chd then conv and through conv then chd."""
    if a.tag == ATOMWISE:
        return SelectionSet(a.space, atomwise=_atomwise_conv(a.atomwise), tag=ATOMWISE)
    through_chd = _atomwise_conv(value_sets(a))
    sampled = conv_hull_sel(a, grid=2 if grid is None else grid)
    through_conv = _atomwise_conv(value_sets(sampled))
    gap = _atomwise_gap(through_chd, through_conv, dirs)
    return SelectionSet(a.space, atomwise=through_chd, tag=ATOMWISE, info={"route_gap": gap})


def set_distance(a, b, dirs=None):
    """Distance between two selection sets.

    Two finite lists are compared exactly as point sets in R^(n*d).  Anything
    involving an atomwise set is compared atom by atom on value sets, with
    convex values compared through support gaps.
    """
    if a.tag == FINITE_EXACT and b.tag == FINITE_EXACT:
        return geometry.hausdorff(PointCloud(a.vectors()), PointCloud(b.vectors()))
    if a.convex_valued or b.convex_valued:
        return _atomwise_gap(_atomwise_conv(value_sets(a)), _atomwise_conv(value_sets(b)), dirs)
    return _atomwise_gap(value_sets(a), value_sets(b), dirs)


def _entry(identity, dev, tol):
    return {"identity": identity, "pass": bool(dev <= tol), "max_dev": float(dev)}


def _flag(identity, ok, tol):
    return _entry(identity, 0.0 if ok else 1.0, tol)


def vertex_product(a):
    """Every selection of a polytope-valued atomwise set that picks an atom vertex on each atom."""
    if not a.convex_valued:
        raise ValueError("vertex_product needs an atomwise set with convex values.")
    if any(v.radius > 0 for v in a.atomwise):
        raise ValueError("Atom values with ball summands have no finite vertex set.")
    corners = tuple(PointCloud(v.vertices + v.shift) for v in a.atomwise)
    return SelectionSet(a.space, _product_points(corners))


def operator_identity_suite(a, grid=2, dirs=None, tol=None):
    """Checks the dec/conv/chd/chcd algebra on one small finite instance."""
    tol = geometry.TOL_SET_EQ if tol is None else tol
    a = _finite(a)
    report = []

    dec = dec_hull(a)
    conv_of_dec = conv_hull_sel(dec, grid)
    dec_of_conv = dec_hull(conv_hull_sel(a, grid))
    report.append(_entry("conv(dec A) = dec(conv A)", set_distance(conv_of_dec, dec_of_conv), tol))
    report.append(_flag("conv(dec A) is decomposable", closed_under_decompose(conv_of_dec), tol))
    report.append(_flag("dec A enumeration = atomwise product", dec.info["cross_check"], tol))

    chd = chd_hull(a)
    report.append(_entry("chd(chd A) = chd A", set_distance(chd_hull(_finite(chd)), chd), tol))
    report.append(_entry("chd A = dec A", set_distance(_finite(chd), dec), tol))

    chcd = chcd_hull(a, grid=grid, dirs=dirs)
    # chcd A is a continuum; rebuild it from the finite product of its atom vertices
    corners = vertex_product(chcd)
    report.append(_entry("chcd(chcd A) = chcd A", set_distance(chcd_hull(corners, grid=grid, dirs=dirs), chcd, dirs), tol))
    report.append(_entry("chcd(chd A) = chcd A", set_distance(chcd_hull(chd), chcd, dirs), tol))
    report.append(_entry("chd(chcd A) = chcd A", set_distance(chd_hull(conv_hull_sel(corners, grid)), chcd, dirs), tol))
    report.append(_entry("chcd A = cconv(chd A)", set_distance(SelectionSet(a.space, atomwise=_atomwise_conv(chd.atomwise), tag=ATOMWISE), chcd, dirs), tol))
    report.append(_entry("chcd A = chd(conv A)", chcd.info["route_gap"], tol))

    # every selection of a finite space has finite L^p norm, so chd_p and chd_0 coincide
    finite_norms = all(np.isfinite(lp_norm(s, 2.0)) for s in dec.members)
    report.append(_flag("chd_p A = chd_0 A ∩ L^p", finite_norms, tol))
    return report


def extreme_selections(a, tol=None):
    """Extreme points of conv(A), with members read as vectors in R^(n*d)."""
    a = _finite(a)
    P = _dedupe(a.points)
    keep = geometry.extreme_indices(P.reshape(P.shape[0], -1), tol)
    return SelectionSet(a.space, P[keep])


def extreme_inclusion_check(a, dirs=None, tol=None):
    """e(dec A) within dec e(A), and both generate the same closed convex decomposable hull."""
    tol = geometry.TOL_SET_EQ if tol is None else tol
    ext_a = extreme_selections(a)
    ext_dec = extreme_selections(dec_hull(a))
    dec_ext = dec_hull(ext_a)
    missing = [s for s in ext_dec.members if not dec_ext.contains(s)]
    hull_gap = set_distance(chcd_hull(dec_ext), chcd_hull(a), dirs)
    return [
        _entry("e(dec A) ⊆ dec e(A)", 0.0 if not missing else float(len(missing)), tol),
        _entry("chcd(dec e(A)) = chcd A", hull_gap, tol),
    ]


def extreme_equality_check(a, tol=None):
    """e(dec A) against dec e(A) as finite sets; they agree when every member of A is extreme."""
    tol = geometry.TOL_SET_EQ if tol is None else tol
    ext_dec = extreme_selections(dec_hull(a))
    dec_ext = dec_hull(extreme_selections(a))
    expected = int(np.prod([len(v) for v in value_sets(a)], dtype=object))
    return [
        _entry("e(dec A) = dec e(A)", set_distance(ext_dec, dec_ext), tol),
        _flag("|e(dec A)| = product of atom value counts", len(ext_dec) == expected, tol),
    ]


def _minimal_blocks_exhaustive(values, blocks):
    # a decomposition of constants reproduces `values` iff each block is constant
    n = len(values)
    total = blocks ** n
    neq = values[:, None] != values[None, :]
    found = False
    chunk = 65536
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk))
        labels = (codes[:, None] // blocks ** np.arange(n)[None, :]) % blocks
        same = labels[:, :, None] == labels[:, None, :]
        if np.any(~np.any(same & neq, axis=(1, 2))):
            found = True
            break
    return found


def staircase_check(N):
    """The staircase 2^-k on atom k of the truncated dyadic model, against constant generators 2^-k."""
    space = geometric_space(N)
    levels = 2.0 ** -np.arange(1, N + 1)
    generators = [Selection(space, np.full((N, 1), c)) for c in levels]
    staircase = Selection(space, levels.reshape(-1, 1))
    A = SelectionSet.of(generators)
    in_chd = chd_hull(A).contains(staircase, tol=0.0)
    rebuilt = decompose(generators, range(N))
    exact = bool(np.array_equal(rebuilt.points, staircase.points))

    distinct = len(np.unique(levels))
    fewer = max(N - 1, 1)
    if N == 1:
        method, smaller_found = "trivial", False
    elif fewer ** N <= guard_max():
        method = "exhaustive"
        smaller_found = _minimal_blocks_exhaustive(levels, fewer)
    else:
        # k constant blocks take at most k values
        method = "distinct-values"
        smaller_found = distinct < N
    return {
        "N": N,
        "in_chd": bool(in_chd),
        "decomposition_exact": exact,
        "min_blocks": N if not smaller_found else None,
        "smaller_partition_found": bool(smaller_found),
        "method": method,
        "pass": bool(in_chd and exact and not smaller_found),
    }


def unit_ball_check(space, block):
    """The L1 unit ball is not decomposable: two members of norm 3/4 mix to norm 3/2."""
    mask = np.array([a in set(block) for a in space.atom_ids])
    pb = float(space.weights[mask].sum())
    if not 0 < pb < 1:
        raise ValueError("The block must be a proper nonempty subset of atoms.")
    xi = Selection(space, (mask * 3 / (4 * pb)).reshape(-1, 1))
    zeta = Selection(space, (~mask * 3 / (4 * (1 - pb))).reshape(-1, 1))
    mixed = decompose([xi, zeta], [0 if m else 1 for m in mask])
    norms = [lp_norm(xi, 1), lp_norm(zeta, 1), lp_norm(mixed, 1)]
    return {
        "norms": norms,
        "members_in_ball": bool(norms[0] <= 1 and norms[1] <= 1),
        "decomposition_in_ball": bool(norms[2] <= 1),
    }
