"""Splittable, counter-based random streams.

A ``SeededRng`` is a plain value: (seed, stream). Calling ``generator()``
always returns a fresh numpy ``Generator`` positioned at the start of that
stream, so the same value reproduces the same draws anywhere. ``child``
derives a new stream from any mix of ints and strings, which is how the
pipeline keys randomness by (sequence id, frame index, stage name) and
stays independent of worker count.

Example:
    >>> rng = SeededRng(seed=7)
    >>> frame_rng = rng.child("seq01", 12, "fpf")
    >>> frame_rng.generator().random()  # same value on every run
"""

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _derive_stream(stream: int, keys: tuple[int | str, ...]) -> int:
    digest = hashlib.blake2b(digest_size=8)
    digest.update(stream.to_bytes(8, "little"))
    for key in keys:
        if isinstance(key, bool) or not isinstance(key, (int, str)):
            raise TypeError(f"stream keys must be int or str, got {type(key).__name__}")
        if isinstance(key, int):
            digest.update(b"i" + (key & _MASK64).to_bytes(8, "little"))
        else:
            encoded = key.encode("utf-8")
            digest.update(b"s" + len(encoded).to_bytes(4, "little") + encoded)
    return int.from_bytes(digest.digest(), "little")


@dataclass(frozen=True)
class SeededRng:
    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream", int(self.stream) & _MASK64)

    def child(self, *keys: int | str) -> "SeededRng":
        return SeededRng(seed=self.seed, stream=_derive_stream(self.stream, keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(seq))
