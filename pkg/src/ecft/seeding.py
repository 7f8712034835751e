"""Deterministic, order-independent random streams.

Every stochastic operation in the toolkit is a pure function of a
:class:`Seed`.  A seed is a 64-bit root plus a derivation path of
integers; children are derived either positionally (``child(i)`` for
replicate ``i``) or from a text tag (``child_from_string`` for named
sub-streams such as one cell of a power study).  Streams for distinct
(root, path) pairs are statistically independent, and the draws for a
given pair do not depend on execution order or on how many workers are
running, which is what makes parallel Monte Carlo reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

_U64 = 1 << 64


def _tag_to_int(tag: str) -> int:
    """Map a text tag to a 64-bit integer with the top bit forced on.

    Forcing the top bit keeps tag-derived path entries disjoint from
    positional replicate indices, which are small.
    """
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") | (1 << 63)


@dataclass(frozen=True)
class Seed:
    """A root seed plus a stream-derivation path."""

    root: int
    path: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0 <= int(self.root) < _U64:
            raise ArgumentError(f"seed root must be a 64-bit unsigned integer, got {self.root}")
        for entry in self.path:
            if not 0 <= int(entry) < _U64:
                raise ArgumentError(f"seed path entries must be 64-bit unsigned integers, got {entry}")
        object.__setattr__(self, "path", tuple(int(e) for e in self.path))

    def child(self, index: int) -> "Seed":
        """Positionally derived child stream (replicate ``index``)."""
        if index < 0:
            raise ArgumentError(f"child index must be nonnegative, got {index}")
        return Seed(self.root, self.path + (int(index),))

    def child_from_string(self, tag: str) -> "Seed":
        """Child stream named by ``tag``; stable across runs and platforms."""
        return Seed(self.root, self.path + (_tag_to_int(tag),))

    def generator(self) -> np.random.Generator:
        """A fresh PCG64 generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.root, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))

    def to_json(self) -> dict:
        return {"root": self.root, "path": list(self.path)}

    @classmethod
    def from_json(cls, obj: dict) -> "Seed":
        return cls(int(obj["root"]), tuple(int(e) for e in obj.get("path", ())))

    def __str__(self) -> str:
        if not self.path:
            return str(self.root)
        return f"{self.root}/" + "/".join(str(e) for e in self.path)
