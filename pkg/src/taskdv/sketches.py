"""Mergeable streaming sketches for distinct counts and quantiles.

Both sketches stay exact while their contents fit in a bounded buffer and
switch to the approximate representation beyond it, so desk-scale inputs get
exact answers while the error contracts still hold at volume. All randomness
is derived from an explicit seed, so repeated runs produce identical
estimates.
"""

from __future__ import annotations

import hashlib
import math
import random
import struct
from typing import Iterable

DEFAULT_SKETCH_SEED = 0xD1CE

_ALPHA_INF = 0.5 / math.log(2)


def _encode_value(value) -> bytes:
    if isinstance(value, bool):
        return b"b1" if value else b"b0"
    if isinstance(value, int):
        return b"i" + str(value).encode("ascii")
    if isinstance(value, float):
        return b"f" + struct.pack(">d", value)
    if isinstance(value, str):
        return b"s" + value.encode("utf-8")
    raise TypeError(f"unhashable cell value {value!r}")


def _hash64(data: bytes, seed: int) -> int:
    key = seed.to_bytes(8, "big", signed=False)
    digest = hashlib.blake2b(data, digest_size=8, key=key).digest()
    return int.from_bytes(digest, "big")


class HyperLogLog:
    """Cardinality sketch with 2^p registers and an exact sparse mode.

    While fewer than 2^p distinct hashes have been seen, the sketch stores
    them verbatim and reports exact counts. Beyond that it collapses into
    registers with the usual ~1.04/sqrt(2^p) relative standard error.
    Merging is commutative and associative in the resulting estimate.
    """

    def __init__(self, p: int = 14, seed: int = DEFAULT_SKETCH_SEED):
        if not 4 <= p <= 18:
            raise ValueError("precision p must be in [4, 18]")
        self.p = p
        self.m = 1 << p
        self.seed = seed
        self._sparse: set[int] | None = set()
        self._registers: list[int] | None = None

    def add(self, value) -> None:
        self._add_hash(_hash64(_encode_value(value), self.seed))

    def add_all(self, values: Iterable) -> None:
        for v in values:
            self.add(v)

    def _add_hash(self, h: int) -> None:
        if self._sparse is not None:
            self._sparse.add(h)
            if len(self._sparse) > self.m:
                self._densify()
        else:
            self._register_hash(h)

    def _densify(self) -> None:
        assert self._sparse is not None
        self._registers = [0] * self.m
        for h in self._sparse:
            self._register_hash(h)
        self._sparse = None

    def _register_hash(self, h: int) -> None:
        assert self._registers is not None
        j = h & (self.m - 1)
        rest = (h >> self.p) | (1 << (64 - self.p))
        rank = 1
        while rest & 1 == 0:
            rank += 1
            rest >>= 1
        if rank > self._registers[j]:
            self._registers[j] = rank

    def merge(self, other: "HyperLogLog") -> "HyperLogLog":
        if self.p != other.p or self.seed != other.seed:
            raise ValueError("can only merge sketches with equal precision and seed")
        out = HyperLogLog(self.p, self.seed)
        if self._sparse is not None and other._sparse is not None:
            out._sparse = set(self._sparse) | set(other._sparse)
            if len(out._sparse) > out.m:
                out._densify()
            return out
        out._sparse = None
        out._registers = [0] * out.m
        for src in (self, other):
            if src._sparse is not None:
                for h in src._sparse:
                    out._register_hash(h)
            else:
                assert src._registers is not None
                out._registers = [
                    max(a, b) for a, b in zip(out._registers, src._registers)
                ]
        return out

    # Ertl's estimator: robust across ranges without empirical bias tables.
    @staticmethod
    def _tau(x: float) -> float:
        if x == 0.0 or x == 1.0:
            return 0.0
        y = 1.0
        z = 1.0 - x
        while True:
            x = math.sqrt(x)
            z_prev = z
            y *= 0.5
            z -= (1.0 - x) ** 2 * y
            if z == z_prev:
                return z / 3.0

    @staticmethod
    def _sigma(x: float) -> float:
        if x == 1.0:
            return math.inf
        y = 1.0
        z = x
        while True:
            x *= x
            z_prev = z
            z += x * y
            y += y
            if z == z_prev:
                return z

    def estimate(self) -> float:
        if self._sparse is not None:
            return float(len(self._sparse))
        assert self._registers is not None
        q = 64 - self.p
        histo = [0] * (q + 2)
        for r in self._registers:
            histo[r] += 1
        z = self.m * self._tau((self.m - histo[q + 1]) / self.m)
        for j in range(q, 0, -1):
            z += histo[j]
            z *= 0.5
        z += self.m * self._sigma(histo[0] / self.m)
        return _ALPHA_INF * self.m * self.m / z

    def relative_standard_error(self) -> float:
        return 1.04 / math.sqrt(self.m)


class KllSketch:
    """Quantile sketch with compactor levels and a rank-error parameter.

    Level-0 holds raw values until capacity is exceeded, so small inputs are
    answered exactly. Queries return a stored value whose rank differs from
    the requested rank by at most eps * n.
    """

    # capacity sized with ample slack over the theoretical O(1/eps) so that
    # the rank-error contract holds far beyond the 99% confidence typical
    # for the textbook constant
    _CAPACITY_FACTOR = 8.0
    _DECAY = 2.0 / 3.0

    def __init__(self, eps: float = 0.01, seed: int = DEFAULT_SKETCH_SEED):
        if not 0.0 < eps < 0.5:
            raise ValueError("eps must be in (0, 0.5)")
        self.eps = eps
        self.seed = seed
        self.k = max(8, math.ceil(self._CAPACITY_FACTOR / eps))
        self._levels: list[list[float]] = [[]]
        self._n = 0
        self._rng = random.Random(seed)

    @property
    def n(self) -> int:
        return self._n

    def _capacity(self, height: int) -> int:
        depth = len(self._levels) - height - 1
        return int(math.ceil(self._DECAY**depth * self.k)) + 1

    def _total_items(self) -> int:
        return sum(len(level) for level in self._levels)

    def _max_size(self) -> int:
        return sum(self._capacity(h) for h in range(len(self._levels)))

    def update(self, x: float) -> None:
        x = float(x)
        if math.isnan(x):
            raise ValueError("cannot ingest NaN")
        self._levels[0].append(x)
        self._n += 1
        if self._total_items() >= self._max_size():
            self._compress()

    def extend(self, xs: Iterable[float]) -> None:
        for x in xs:
            self.update(x)

    def _compress(self) -> None:
        while self._total_items() >= self._max_size():
            progressed = False
            for h in range(len(self._levels)):
                if len(self._levels[h]) >= self._capacity(h):
                    if h + 1 >= len(self._levels):
                        self._levels.append([])
                    self._compact_level(h)
                    progressed = True
                    break
            if not progressed:
                break

    def _compact_level(self, h: int) -> None:
        buf = sorted(self._levels[h])
        keep: list[float] = []
        if len(buf) % 2 == 1:
            # the odd boundary item stays at this level, weight unchanged
            if self._rng.getrandbits(1):
                keep, buf = [buf[-1]], buf[:-1]
            else:
                keep, buf = [buf[0]], buf[1:]
        offset = self._rng.getrandbits(1)
        self._levels[h] = keep
        self._levels[h + 1].extend(buf[offset::2])

    def merge(self, other: "KllSketch") -> None:
        while len(self._levels) < len(other._levels):
            self._levels.append([])
        for h, level in enumerate(other._levels):
            self._levels[h].extend(level)
        self._n += other._n
        self._compress()

    def _materialized(self) -> tuple[list[float], list[int]]:
        pairs: list[tuple[float, int]] = []
        for h, level in enumerate(self._levels):
            weight = 1 << h
            pairs.extend((v, weight) for v in level)
        pairs.sort(key=lambda p: p[0])
        return [p[0] for p in pairs], [p[1] for p in pairs]

    def query(self, q: float) -> float:
        """Approximate q-quantile; exact while the sketch never compacted."""
        if not 0.0 <= q <= 1.0:
            raise ValueError("q must be in [0, 1]")
        if self._n == 0:
            raise ValueError("empty sketch")
        values, weights = self._materialized()
        target = q * (self._n - 1)
        cum = 0
        for v, w in zip(values, weights):
            cum += w
            if cum > target:
                return v
        return values[-1]

    def rank(self, x: float) -> float:
        values, weights = self._materialized()
        r = 0
        for v, w in zip(values, weights):
            if v <= x:
                r += w
        return float(r)
