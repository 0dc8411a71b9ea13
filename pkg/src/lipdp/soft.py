"""Exponential-mechanism selectors (softargmax / softargmin) and keyed random streams.

All randomness in the package flows through here.  A selection draws two
uniforms: one places the inverse temperature ``c`` inside its interval and
one inverts the Gibbs CDF.  The DP keys those uniforms on
``(seed, node id, state id)`` so that two runs with the same seed consume
identical randomness wherever their branch choices agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._fallback import GAMMA, MASK64


@dataclass(frozen=True)
class Selection:
    index: int
    value: float
    c_used: float | None


@dataclass
class SoftConfig:
    """Selector accuracy ``epsilon`` plus the seed of the random stream.

    ``hard=True`` swaps the soft selectors for deterministic extrema (the
    epsilon -> 0 reference mode).
    """

    epsilon: float
    seed: int = 0
    hard: bool = False
    rng: object = field(default=None, repr=False)

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """64-bit seed of replication ``index`` under global ``seed``."""
    return _mix(_mix((seed + GAMMA) & MASK64) ^ ((index + 5 * GAMMA) & MASK64))


def replication_seeds(seed: int, count: int, start: int = 0) -> np.ndarray:
    return np.array([derive_seed(seed, i) for i in range(start, start + count)], dtype=np.uint64)


class KeyedStream:
    """Counter-based uniform stream for one (seed, node, state) key."""

    __slots__ = ("seed", "node", "state", "draws")

    def __init__(self, seed: int, node: int, state: int):
        self.seed, self.node, self.state, self.draws = seed & MASK64, node, state, 0

    def random(self) -> float:
        h = _mix((self.seed + GAMMA) & MASK64)
        h = _mix(h ^ ((self.node + 2 * GAMMA) & MASK64))
        h = _mix(h ^ ((self.state + 3 * GAMMA) & MASK64))
        h = _mix(h ^ ((self.draws + 4 * GAMMA) & MASK64))
        self.draws += 1
        return (h >> 11) * (1.0 / 9007199254740992.0)


def _check(xs) -> np.ndarray:
    arr = np.asarray(xs, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("cannot select from an empty list")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    if np.any(arr < 0):
        raise ValueError("values must be non-negative")
    return arr


def log_term(p: int, eps: float) -> float:
    """``eps^-1 * log(2 p / eps)``, the scale shared by the interval and the bounds."""
    return math.log(2.0 * p / eps) / eps


def temperature(u: float | np.ndarray, p: int, eps: float, extremum: float):
    """Inverse temperature uniform on [2L/extremum, 4L/extremum] at position ``u``."""
    return log_term(p, eps) * (2.0 + 2.0 * u) / extremum


def _soft(xs, cfg: SoftConfig, sign: float) -> Selection:
    arr = _check(xs)
    ref = float(arr.max() if sign > 0 else arr.min())
    if ref == 0.0:
        i = int(np.flatnonzero(arr == 0.0)[0])
        return Selection(i, 0.0, None)
    if arr.size == 1:
        return Selection(0, float(arr[0]), None)
    rng = cfg.rng
    c = float(temperature(rng.random(), arr.size, cfg.epsilon, ref))
    u = rng.random()
    i = int(kernels.gibbs_pick(arr, np.array([c]), np.array([u]), sign, ref)[0])
    return Selection(i, float(arr[i]), c)


def softargmax(xs, cfg: SoftConfig) -> Selection:
    """Index drawn with probability proportional to ``exp(c * x_i)``.

    If every value is zero the smallest index is returned deterministically.
    """
    return _soft(xs, cfg, 1.0)


def softargmin(xs, cfg: SoftConfig) -> Selection:
    """Mirror of :func:`softargmax` with weights ``exp(-c * x_i)`` and min normalisation."""
    return _soft(xs, cfg, -1.0)


def softmax(xs, cfg: SoftConfig) -> float:
    return softargmax(xs, cfg).value


def softmin(xs, cfg: SoftConfig) -> float:
    return softargmin(xs, cfg).value


def hard_argmax(xs) -> Selection:
    arr = np.asarray(xs, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("cannot select from an empty list")
    i = int(np.argmax(arr))
    return Selection(i, float(arr[i]), None)


def hard_argmin(xs) -> Selection:
    arr = np.asarray(xs, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("cannot select from an empty list")
    i = int(np.argmin(arr))
    return Selection(i, float(arr[i]), None)


def select_many(xs, eps: float, u_temp: np.ndarray, u_pick: np.ndarray, maximize: bool) -> np.ndarray:
    """Vectorised soft selection: one index per (u_temp, u_pick) pair.

    Same distribution and same per-draw result as the scalar selectors fed
    with those uniforms.
    """
    arr = _check(xs)
    r = len(u_pick)
    ref = float(arr.max() if maximize else arr.min())
    if ref == 0.0:
        return np.full(r, int(np.flatnonzero(arr == 0.0)[0]), dtype=np.int64)
    if arr.size == 1:
        return np.zeros(r, dtype=np.int64)
    cs = temperature(np.asarray(u_temp, dtype=np.float64), arr.size, eps, ref)
    return kernels.gibbs_pick(arr, cs, u_pick, 1.0 if maximize else -1.0, ref)


def sample_indices(xs, eps: float, n: int, rng: np.random.Generator, maximize: bool = True) -> np.ndarray:
    """``n`` independent softargmax (or softargmin) indices using ``rng``."""
    u = rng.random((n, 2))
    return select_many(xs, eps, u[:, 0], u[:, 1], maximize)
