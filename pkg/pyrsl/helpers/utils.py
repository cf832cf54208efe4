import hashlib
import json
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

DEFAULTS_PATH = os.path.join(os.path.dirname(__file__), '..', 'metadata', 'run_defaults.json')
GUARD_ENV = 'RSL_GUARD_MAX'
GUARD_MAX = 10**6
SCHEMA = 'rsl/1'


class DimensionMismatch(ValueError):
    pass


class NegativeScale(ValueError):
    pass


class NotAProbability(ValueError):
    pass


class SpaceMismatch(ValueError):
    pass


class InstanceError(ValueError):
    """Malformed instance or report JSON."""


class EnumerationTooLarge(RuntimeError):
    pass


def load_defaults(path=DEFAULTS_PATH):
    builtin = {
        "seed": 0,
        "dirs": None,
        "tol_membership": 1e-8,
        "tol_set_eq": 1e-9,
        "guard_max": None,
        "grid": 8,
        "suite_grid": 2,
        "trials": 100,
        "clouds": 50,
        "out": None,
        "timing": True,
        "instance": "random",
        "n_values": None,
    }
    try:
        with open(path, 'r') as f:
            builtin.update(json.load(f))
    except Exception as e:
        logger.warning(f"Failed to load run defaults from {path}: {e}")
    return builtin


class RunConfig:
    def __init__(self, config=None, **kwargs):
        defaults = load_defaults()
        if config:
            defaults.update(config)
        defaults.update({k: v for k, v in kwargs.items() if v is not None})
        for key, val in defaults.items():
            setattr(self, key, val)
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF

        if self.guard_max is None:
            self.guard_max = guard_max()

    def as_dict(self):
        return {k: v for k, v in sorted(vars(self).items())}


def guard_max():
    raw = os.environ.get(GUARD_ENV)
    if raw is None:
        return GUARD_MAX
    try:
        value = int(float(raw))
    except ValueError:
        logger.warning(f"Ignoring non-numeric {GUARD_ENV}={raw!r}")
        return GUARD_MAX
    return max(1, value)


def check_guard(count, what, limit=None):
    limit = guard_max() if limit is None else limit
    if count > limit:
        raise EnumerationTooLarge(f"{what}: {count} items exceeds the enumeration guard {limit} (set {GUARD_ENV} to raise it)")
    return count


def label_key(label):
    digest = hashlib.sha256(str(label).encode()).digest()
    return int.from_bytes(digest[:4], 'little')


def make_rng(seed, *labels):
    # streams keyed by (seed, command, suite, ...) so new suites never shift old ones
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(label_key(l) for l in labels))
    return np.random.default_rng(seq)
