"""Deterministic seed derivation and draw sources for Monte Carlo replicas.

Two draw sources back the particle engine:

* ``StreamDraws`` wraps a per-replica ``numpy`` generator with block
  buffers, so scalar consumption in tight loops stays cheap.
* ``KeyedDraws`` is stateless: every draw is a pure function of
  (master seed, key).  Runs that share a master seed see identical
  randomness for identical keys regardless of the order in which the
  draws are requested, which is what the coupled-truncation mode needs.
"""

from __future__ import annotations

import hashlib
import math
import struct

import numpy as np

_MASK64 = (1 << 64) - 1
_INV53 = 1.0 / (1 << 53)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


_STR_TOKENS: dict[str, int] = {}


def _token(part) -> int:
    """Map a key part to a 64-bit token, independent of PYTHONHASHSEED."""
    if isinstance(part, bool):
        return 0x9D3F * (2 + int(part))
    if isinstance(part, int):
        return (part * 2 + 1) & _MASK64
    if isinstance(part, float):
        return int.from_bytes(struct.pack("<d", part), "little") ^ 0xA5A5A5A5A5A5A5A5
    if isinstance(part, str):
        tok = _STR_TOKENS.get(part)
        if tok is None:
            tok = int.from_bytes(hashlib.sha256(part.encode()).digest()[:8], "little")
            _STR_TOKENS[part] = tok
        return tok
    if isinstance(part, tuple):
        acc = _splitmix64(0x7F4A7C15 ^ (len(part) << 32))
        for p in part:
            acc = _splitmix64(acc ^ _token(p))
        return acc
    raise TypeError(f"unhashable seed token: {part!r}")


def mix(master_seed: int, *parts) -> int:
    """Derive a 64-bit seed from a master seed and a sequence of key parts."""
    state = _splitmix64(master_seed & _MASK64)
    for p in parts:
        state = _splitmix64(state ^ _token(p))
    return state


def replica_seed(master_seed: int, stream: str, index: int) -> int:
    """Seed for one replica of one estimator stream."""
    return mix(master_seed, stream, index)


def make_generator(seed64: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed64))


class StreamDraws:
    """Sequential draws from one replica's generator, with block buffers."""

    _BLOCK = 4096

    def __init__(self, seed64: int):
        self.rng = make_generator(seed64)
        self._norm: list[float] = []
        self._ni = 0
        self._uni: list[float] = []
        self._ui = 0

    # -- scalar draws (buffered Python floats) --------------------------------

    def _refill_norm(self):
        self._norm = self.rng.standard_normal(self._BLOCK).tolist()
        self._ni = 0

    def _refill_uni(self):
        self._uni = self.rng.random(self._BLOCK).tolist()
        self._ui = 0

    def normal(self) -> float:
        if self._ni >= len(self._norm):
            self._refill_norm()
        v = self._norm[self._ni]
        self._ni += 1
        return v

    def uniform_pos(self) -> float:
        """Uniform on (0, 1]."""
        if self._ui >= len(self._uni):
            self._refill_uni()
        v = self._uni[self._ui]
        self._ui += 1
        return 1.0 - v

    def exponential(self, mean: float) -> float:
        return -mean * math.log(self.uniform_pos())

    # -- engine interface ------------------------------------------------------

    def seg_normal(self, label, t0) -> float:
        return self.normal()

    def seg_normals(self, labels, t0, n: int) -> np.ndarray:
        return self.rng.standard_normal(n)

    def mid_normal(self, label, tau) -> float:
        return self.normal()

    def pair_uniform(self, pa, pb, w_start) -> float:
        return self.uniform_pos()

    def pair_uniform_matrix(self, n: int) -> np.ndarray:
        return 1.0 - self.rng.random((n, n))

    def branch_wait(self, label, mean: float) -> float:
        return self.exponential(mean)

    def offspring_uniform(self, label) -> float:
        return self.uniform_pos()

    def pair_threshold(self, pa, pb) -> float:
        # threshold on accumulated local time L; clock rate 1/2 means L ~ 2 Exp(1)
        return 2.0 * self.exponential(1.0)


class KeyedDraws:
    """Order-independent draws: pure functions of (master seed, key)."""

    def __init__(self, seed64: int):
        self._base = _splitmix64(seed64 & _MASK64)

    def _u(self, *key) -> float:
        state = self._base
        for p in key:
            state = _splitmix64(state ^ _token(p))
        return ((state >> 11) + 1) * _INV53  # (0, 1]

    def _n(self, *key) -> float:
        u1 = self._u(*key, 0)
        u2 = self._u(*key, 1)
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    # -- engine interface ------------------------------------------------------

    def seg_normal(self, label, t0) -> float:
        return self._n("seg", label, t0)

    def seg_normals(self, labels, t0, n: int) -> np.ndarray:
        return np.array([self._n("seg", lab, t0) for lab in labels])

    def mid_normal(self, label, tau) -> float:
        return self._n("mid", label, tau)

    def pair_uniform(self, pa, pb, w_start) -> float:
        return self._u("pu", pa, pb, w_start)

    def pair_uniform_matrix(self, n: int) -> np.ndarray:
        raise NotImplementedError("keyed mode uses per-pair draws")

    def branch_wait(self, label, mean: float) -> float:
        return -mean * math.log(self._u("bw", label))

    def offspring_uniform(self, label) -> float:
        return self._u("os", label)

    def pair_threshold(self, pa, pb) -> float:
        return -2.0 * math.log(self._u("ct", pa, pb))
