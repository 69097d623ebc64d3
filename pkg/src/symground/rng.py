"""Counter-based random streams.

Every draw in a simulation is a pure function of
``(seed, domain, agent_id, step, counter)``. A stream key is derived by
hashing the first four components; the ``counter``-th 64-bit output of a
stream is the SplitMix64 output at state ``key + (counter + 1) * gamma``.
Nothing is shared between streams, so per-agent draws do not depend on the
order in which agents are processed.

The vectorized helpers (:func:`stream_keys`, :func:`uniforms`,
:func:`normals`) produce exactly the values a :class:`RandomStream` with the
same key would produce, which lets the population engine draw for all agents
at once.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TO_UNIT = 2.0**-53
_TWO_PI = 2.0 * np.pi


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@lru_cache(maxsize=None)
def domain_tag(domain: str) -> int:
    """Stable 64-bit tag for a domain name."""
    return int.from_bytes(hashlib.blake2b(domain.encode(), digest_size=8).digest(), "little")


def _u64(x) -> np.ndarray:
    if isinstance(x, (int, np.integer)):
        return np.array([int(x) & _MASK64], dtype=np.uint64)
    arr = np.asarray(x)
    if arr.dtype != np.uint64:
        arr = arr.astype(np.int64).astype(np.uint64)
    return arr.reshape(-1)


def stream_keys(seed: int, domain: str, agent_ids, step: int) -> np.ndarray:
    """Stream keys for a batch of agents sharing ``(seed, domain, step)``."""
    base = mix64(_u64(seed) ^ _u64(domain_tag(domain)))
    base = mix64(base + mix64(_u64(step) + _GAMMA))
    ids = _u64(agent_ids)
    return mix64(base + mix64(ids * _GAMMA + _M2))


def _bits(keys: np.ndarray, n: int, start: int) -> np.ndarray:
    counters = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    return mix64(keys[:, None] + counters[None, :] * _GAMMA)


def uniforms(keys: np.ndarray, n: int, start: int = 0) -> np.ndarray:
    """``(len(keys), n)`` uniforms on [0, 1) from counters ``start .. start+n-1``."""
    return (_bits(keys, n, start) >> _S11).astype(np.float64) * _TO_UNIT


def normals(keys: np.ndarray, n: int, start: int = 0) -> np.ndarray:
    """``(len(keys), n)`` standard normals; consumes ``2 * n`` counters (Box-Muller)."""
    u = uniforms(keys, 2 * n, start)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0::2]))
    return radius * np.cos(_TWO_PI * u[:, 1::2])


def draw_uniform(seed: int, domain: str, agent_ids, step: int, n: int = 1) -> np.ndarray:
    """First ``n`` uniforms of each agent's ``(seed, domain, id, step)`` stream."""
    return uniforms(stream_keys(seed, domain, agent_ids, step), n)


def draw_normal(seed: int, domain: str, agent_ids, step: int, n: int = 1) -> np.ndarray:
    """First ``n`` normals of each agent's ``(seed, domain, id, step)`` stream."""
    return normals(stream_keys(seed, domain, agent_ids, step), n)


class RandomStream:
    """Sequential view of one counter-based stream.

    Each call consumes counters, so successive calls return fresh values;
    two streams built from the same key always return the same sequence.
    """

    __slots__ = ("seed", "domain", "agent_id", "step", "counter", "_key")

    def __init__(self, seed: int, domain: str = "default", agent_id: int = 0, step: int = 0):
        self.seed = int(seed)
        self.domain = domain
        self.agent_id = int(agent_id)
        self.step = int(step)
        self.counter = 0
        self._key = stream_keys(self.seed, domain, self.agent_id, self.step)

    def __repr__(self) -> str:
        return (
            f"RandomStream(seed={self.seed}, domain={self.domain!r}, "
            f"agent_id={self.agent_id}, step={self.step}, counter={self.counter})"
        )

    def random(self, size: int | None = None):
        n = 1 if size is None else int(size)
        out = uniforms(self._key, n, self.counter)[0]
        self.counter += n
        return float(out[0]) if size is None else out

    def normal(self, size: int | None = None):
        n = 1 if size is None else int(size)
        out = normals(self._key, n, self.counter)[0]
        self.counter += 2 * n
        return float(out[0]) if size is None else out

    def uniform(self, low: float, high: float, size: int | None = None):
        u = self.random(size)
        return low + (high - low) * u

    def integers(self, high: int, size: int | None = None):
        """Integers in ``[0, high)``."""
        u = self.random(size)
        if size is None:
            return min(int(u * high), high - 1)
        return np.minimum((u * high).astype(np.int64), high - 1)


def rng_substream(seed: int, domain: str, agent_id: int = 0, step: int = 0) -> RandomStream:
    """Deterministic stream for ``(seed, domain, agent_id, step)``."""
    return RandomStream(seed, domain, agent_id, step)
