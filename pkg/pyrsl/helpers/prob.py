import itertools
from dataclasses import dataclass

import numpy as np

from pyrsl.helpers.utils import NotAProbability, check_guard

WEIGHT_TOL = 1e-12
PARTITION_GUARD = 10**7


@dataclass(frozen=True, eq=False)
class FiniteProbSpace:
    atom_ids: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        ids = tuple(self.atom_ids)
        if w.size == 0:
            raise ValueError("A probability space needs at least one atom.")
        if len(ids) != w.size:
            raise ValueError(f"{len(ids)} atom ids for {w.size} weights.")
        if len(set(ids)) != len(ids):
            raise ValueError(f"Atom ids must be distinct: {ids}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise NotAProbability(f"Atom weights must be strictly positive, got {w.tolist()}")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise NotAProbability(f"Atom weights sum to {w.sum()!r}, not 1.")
        w.setflags(write=False)
        object.__setattr__(self, 'atom_ids', ids)
        object.__setattr__(self, 'weights', w)

    @classmethod
    def from_weights(cls, weights):
        return cls(tuple(range(len(weights))), weights)

    @property
    def n(self):
        return len(self.atom_ids)

    def same_as(self, other):
        return self is other or (self.atom_ids == other.atom_ids and np.array_equal(self.weights, other.weights))

    def to_json(self):
        return {"weights": self.weights.tolist()}


@dataclass(frozen=True)
class Partition:
    """Blocks of atom ids, each tagged with the label it was assigned."""
    blocks: tuple
    labels: tuple
    assignment: tuple

    def unlabeled(self):
        return frozenset(frozenset(b) for b in self.blocks)

    def block_of(self, atom_id):
        for label, block in zip(self.labels, self.blocks):
            if atom_id in block:
                return label
        raise KeyError(atom_id)


def uniform_space(n):
    if n < 1:
        raise ValueError(f"uniform_space needs n >= 1, got {n}")
    return FiniteProbSpace(tuple(range(n)), np.full(n, 1.0 / n))


def geometric_space(N):
    # atoms 1..N; the tail beyond N is folded into the last atom
    if N < 1:
        raise ValueError(f"geometric_space needs N >= 1, got {N}")
    if N == 1:
        return FiniteProbSpace((1,), [1.0])
    w = [2.0 ** -k for k in range(1, N)] + [2.0 ** -(N - 1)]
    return FiniteProbSpace(tuple(range(1, N + 1)), w)


def _partition_from(space, assignment):
    labels = tuple(sorted(set(assignment)))
    blocks = tuple(tuple(a for a, lab in zip(space.atom_ids, assignment) if lab == label) for label in labels)
    return Partition(blocks, labels, tuple(assignment))


def iter_partitions(space, k):
    check_guard(k ** space.n, f"all_partitions(n={space.n}, k={k})", limit=PARTITION_GUARD)
    for assignment in itertools.product(range(k), repeat=space.n):
        yield _partition_from(space, assignment)


def all_partitions(space, k):
    """All k**n labeled assignments of atoms to blocks 0..k-1, empty blocks dropped."""
    if k < 1:
        raise ValueError(f"all_partitions needs k >= 1, got {k}")
    return list(iter_partitions(space, k))


def distinct_partitions(space, k):
    seen = set()
    out = []
    for part in all_partitions(space, k):
        key = part.unlabeled()
        if key not in seen:
            seen.add(key)
            out.append(part)
    return out
