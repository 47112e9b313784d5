"""Seeded generation of DP, HDP, multi-group HDP and FDHDP weight vectors.

Streams are counter-based (numpy's Philox) and keyed by
``(root_seed, stream_index)``, so a replicate's randomness never depends on
scheduling.  Stream indices follow ``replicate * 16 + role``:

    role 0        level-one sticks (GEM) or the FDHDP level-one Dirichlet
    roles 1..14   level-two gamma layer of group 1..14 (single group uses 1)
    role 15       FDHDP level-two gamma layer
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

__all__ = [
    "ROLE_LEVEL1",
    "ROLE_FDHDP_LAYER2",
    "MAX_GROUPS",
    "DEFAULT_EPS",
    "RngStream",
    "WeightVector",
    "GroupFamily",
    "SamplingError",
    "gamma_variate",
    "gamma_variates",
    "sample_gem",
    "sample_hdp",
    "sample_hdp_groups",
    "sample_fdhdp",
]

ROLE_LEVEL1 = 0
ROLE_FDHDP_LAYER2 = 15
ROLES_PER_REPLICATE = 16
MAX_GROUPS = 14
DEFAULT_EPS = 1e-10
MAX_STICKS = 10**7

_TINY = np.finfo(np.float64).tiny
_LOG_TINY = math.log(_TINY)


class SamplingError(RuntimeError):
    """A sampler hit a pathological configuration (cap exceeded, zero mass)."""


class RngStream:
    """Reproducible random stream identified by ``(root_seed, stream_index)``.

    The generator state is created lazily and advances as variates are
    drawn; two streams built from the same pair produce identical
    sequences on every platform.
    """

    def __init__(self, root_seed: int, stream_index: int = 0):
        if stream_index < 0:
            raise ValueError("stream_index must be nonnegative")
        self.root_seed = int(root_seed) & (2**64 - 1)
        self.stream_index = int(stream_index)
        self._gen = None

    @classmethod
    def for_role(cls, root_seed: int, replicate: int, role: int) -> "RngStream":
        if not 0 <= role < ROLES_PER_REPLICATE:
            raise ValueError(f"role must be in [0, {ROLES_PER_REPLICATE})")
        return cls(root_seed, replicate * ROLES_PER_REPLICATE + role)

    @classmethod
    def for_replicate(cls, root_seed: int, replicate: int) -> "RngStream":
        """Level-one stream of a replicate; other roles derive from it."""
        return cls.for_role(root_seed, replicate, ROLE_LEVEL1)

    @property
    def replicate(self) -> int:
        return self.stream_index // ROLES_PER_REPLICATE

    def derive(self, role: int) -> "RngStream":
        """Fresh stream for another role of the same replicate."""
        return RngStream.for_role(self.root_seed, self.replicate, role)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(self.root_seed, spawn_key=(self.stream_index,))
            self._gen = np.random.Generator(np.random.Philox(seq))
        return self._gen

    def __repr__(self):
        return f"RngStream(root_seed={self.root_seed}, stream_index={self.stream_index})"


@dataclass
class WeightVector:
    """Finite truncation of a random point of the infinite simplex.

    ``tail_mass`` is the total weight not represented in ``weights``; it
    bounds the omitted contribution to any power sum of order >= 1.
    """

    weights: np.ndarray
    tail_mass: float
    model: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)

    def __len__(self):
        return self.weights.size

    @property
    def total(self) -> float:
        return math.fsum(self.weights.tolist()) + self.tail_mass


@dataclass
class GroupFamily:
    """``L`` level-two weight vectors sharing one level-one draw."""

    base: WeightVector
    groups: List[WeightVector] = field(default_factory=list)

    @property
    def L(self) -> int:
        return len(self.groups)

    def matrix(self) -> np.ndarray:
        """Weights as an ``(L, K)`` array (all groups share the index set)."""
        return np.vstack([g.weights for g in self.groups])


def gamma_variates(shapes, stream: RngStream) -> np.ndarray:
    """Independent ``Gamma(shape, 1)`` draws, one per entry of ``shapes``.

    Shapes below 1 go through ``Gamma(a) = Gamma(a + 1) * U**(1/a)`` with the
    power taken in log space; results below the smallest normal flush to 0.
    """
    shapes = np.asarray(shapes, dtype=np.float64)
    if shapes.size and not np.all(shapes > 0):
        raise ValueError("gamma shape must be positive")
    shape_in = shapes.shape
    shapes = shapes.reshape(-1)
    gen = stream.generator
    small = shapes < 1.0
    out = gen.standard_gamma(np.where(small, shapes + 1.0, shapes))
    u = gen.random(shapes.size)
    if np.any(small):
        with np.errstate(divide="ignore"):
            log_x = np.log(out[small]) + np.log(u[small]) / shapes[small]
        out[small] = np.where(log_x >= _LOG_TINY, np.exp(log_x), 0.0)
    return out.reshape(shape_in)


def gamma_variate(shape: float, stream: RngStream) -> float:
    """A single ``Gamma(shape, 1)`` draw; see :func:`gamma_variates`."""
    if not shape > 0:
        raise ValueError("gamma shape must be positive")
    return float(gamma_variates(np.array([shape]), stream)[0])


def _stick_batch(alpha: float, eps: float) -> int:
    # expected number of sticks is about alpha * log(1/eps)
    return int(min(MAX_STICKS, max(256, 1.1 * alpha * math.log(1.0 / eps) + 64)))


def sample_gem(alpha: float, eps: float = DEFAULT_EPS, stream: RngStream | None = None,
               max_sticks: int = MAX_STICKS) -> WeightVector:
    """GEM(alpha) stick-breaking weights, truncated once the stick left is below ``eps``.

    ``U_k ~ Beta(1, alpha)`` is drawn as ``1 - u**(1/alpha)``, so the log of
    the remaining stick is a running sum of ``log(u)/alpha``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if stream is None:
        stream = RngStream(0)
    gen = stream.generator
    log_eps = math.log(eps)
    batch = min(_stick_batch(alpha, eps), max_sticks)
    chunks = []
    log_rem = 0.0
    drawn = 0
    while True:
        u = gen.random(batch)
        log_keep = np.log(u) / alpha  # log(1 - U_k)
        cum = log_rem + np.cumsum(log_keep)
        hit = np.flatnonzero(cum < log_eps)
        stop = hit[0] + 1 if hit.size else batch
        prev = np.concatenate(([log_rem], cum[: stop - 1]))
        chunks.append(np.exp(prev) * -np.expm1(log_keep[:stop]))
        log_rem = float(cum[stop - 1])
        drawn += stop
        if hit.size and drawn <= max_sticks:
            break
        if drawn >= max_sticks:
            raise SamplingError(f"GEM truncation needs more than {max_sticks} sticks")
    weights = np.concatenate(chunks)
    return WeightVector(weights, math.exp(log_rem), "GEM")


def _normalize_gammas(g: np.ndarray, what: str) -> Tuple[np.ndarray, float]:
    # pairwise sum: relative error ~1e-15 only rescales every power sum by 1 + O(1e-15)
    total = float(np.sum(g))
    if not total > 0:
        raise SamplingError(f"all {what} gamma variates underflowed; eps too large or beta too small")
    return g / total, total


def _level_two(V: WeightVector, beta: float, stream: RngStream) -> WeightVector:
    shapes = beta * np.append(V.weights, V.tail_mass)
    g = gamma_variates(shapes, stream)
    z, _ = _normalize_gammas(g, "level-two")
    return WeightVector(z[:-1], float(z[-1]), "HDP")


def sample_hdp(alpha: float, beta: float, eps: float = DEFAULT_EPS,
               stream: RngStream | None = None) -> WeightVector:
    """One-group HDP weights through the gamma-ratio representation.

    Each stick ``V_k`` receives ``Gamma(beta V_k)`` mass, the truncated
    remainder one lumped ``Gamma(beta * tail)``, and the lot is normalized.
    """
    return sample_hdp_groups(alpha, beta, 1, eps, stream).groups[0]


def sample_hdp_groups(alpha: float, beta: float, L: int, eps: float = DEFAULT_EPS,
                      stream: RngStream | None = None) -> GroupFamily:
    """``L`` conditionally independent HDP groups over a shared level-one draw.

    ``stream`` identifies the replicate; group ``k`` uses role ``k``.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not 1 <= L <= MAX_GROUPS:
        raise ValueError(f"L must be in [1, {MAX_GROUPS}]")
    if stream is None:
        stream = RngStream(0)
    V = sample_gem(alpha, eps, stream.derive(ROLE_LEVEL1))
    groups = [_level_two(V, beta, stream.derive(k + 1)) for k in range(L)]
    return GroupFamily(V, groups)


def sample_fdhdp(alpha: float, beta: float, n: int,
                 stream: RngStream | None = None) -> WeightVector:
    """FDHDP weights: ``W ~ Dir(alpha/n, ...)`` then ``Z ~ Dir(beta W)``, exactly ``n`` atoms."""
    if not alpha > 0 or not beta > 0:
        raise ValueError("alpha and beta must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    if stream is None:
        stream = RngStream(0)
    y = gamma_variates(np.full(n, alpha / n), stream.derive(ROLE_LEVEL1))
    W, _ = _normalize_gammas(y, "level-one")
    shapes = beta * W
    if np.any(shapes <= 0):
        # atoms whose level-one weight flushed to zero carry no level-two mass
        g = np.zeros(n)
        pos = shapes > 0
        g[pos] = gamma_variates(shapes[pos], stream.derive(ROLE_FDHDP_LAYER2))
    else:
        g = gamma_variates(shapes, stream.derive(ROLE_FDHDP_LAYER2))
    Z, _ = _normalize_gammas(g, "level-two")
    return WeightVector(Z, 0.0, "FDHDP")
