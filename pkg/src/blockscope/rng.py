"""Deterministic random streams built on the Philox counter-based generator.

Seed contract: every stochastic routine derives its generator as
``spawn(seed, *stream)`` where ``stream`` is a tuple of small integers naming
the consumer (replication index, restart index, ...).  Philox is counter
based, so a given ``(seed, stream)`` key reproduces the same draws bit for
bit regardless of process, thread count, or evaluation order.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def _fold(seed: int, stream: tuple[int, ...]) -> np.ndarray:
    acc = _splitmix64(seed & _MASK64)
    for s in stream:
        acc = _splitmix64(acc ^ _splitmix64(int(s) & _MASK64))
    return np.array([seed & _MASK64, acc], dtype=np.uint64)


def spawn(seed: int, *stream: int) -> np.random.Generator:
    """Generator keyed by ``(seed, *stream)``; distinct keys give independent streams."""
    return np.random.Generator(np.random.Philox(key=_fold(seed, stream)))


def spawn_seed(seed: int, *stream: int) -> int:
    """Derive a child integer seed; equal keys give equal children."""
    return int(_fold(seed, stream)[1])
