"""Counter-based seeded randomness.

A draw is a pure function of (seed, draw index), so the whole source state is
two integers. Replay restores the position by re-counting randomized events
instead of serializing opaque generator internals.
"""

from __future__ import annotations

import hashlib


class SeededSource:
    def __init__(self, seed: int, draws: int = 0):
        self.seed = seed
        self.draws = draws

    def draw(self) -> float:
        """Uniform float in [0, 1); advances the position."""
        digest = hashlib.sha256(f"{self.seed}:{self.draws}".encode()).digest()
        self.draws += 1
        return int.from_bytes(digest[:8], "big") / 2**64

    def choice_index(self, n: int) -> int:
        """One draw mapped to an index in [0, n)."""
        if n <= 0:
            raise ValueError("empty choice")
        return min(int(self.draw() * n), n - 1)

    def to_record(self) -> dict:
        return {"seed": self.seed, "draws": self.draws}
