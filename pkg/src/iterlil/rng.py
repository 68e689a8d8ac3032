"""Splittable random streams.

All randomness in the package flows through `Stream`, a thin wrapper around
numpy's SeedSequence/Philox pair.  A stream is identified by a master seed
plus an integer key path; child streams extend the path.  Because Philox is
counter based and SeedSequence spawn keys are collision resistant, the values
drawn by any stream depend only on (master_seed, key path) -- never on how
many other streams exist or in which order they are consumed.  That property
is what makes replicate-level parallelism bit-reproducible.

Key path conventions used elsewhere in the package:

    (rep,)            one simulated trajectory / replicate
    (rep, gen)        one generation pass of a branching run
    (purpose, rep)    harness checks that need several independent draws
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Stream"]


@dataclass(frozen=True)
class Stream:
    """A lazily instantiated, splittable source of randomness."""

    master_seed: int
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")

    def child(self, *path: int) -> "Stream":
        """Derive a sub-stream by extending the key path."""
        return Stream(self.master_seed, self.key + tuple(int(p) for p in path))

    def generator(self) -> np.random.Generator:
        """Fresh Generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))
