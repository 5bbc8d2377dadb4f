"""Bernoulli accept/reject control.

One uniform draw per sample, accepted iff draw < psi, so the draw sequence
depends only on (decision seed, step index), never on outcomes.  That makes
any run resumable and bitwise reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .rng import TAG_DECISION, derive_key, uniform_at


@dataclass(frozen=True)
class RngConfig:
    """Seeds for the two independent substreams."""

    decision_seed: int = 0
    stream_seed: int = 0


@dataclass(frozen=True)
class Decision:
    """Outcome of one control step; d_sq is None for open-loop baselines."""

    step: int
    psi: float
    d_sq: float | None
    draw: float
    accepted: bool

    def to_json_dict(self) -> dict:
        d_sq = self.d_sq
        if d_sq is not None and math.isnan(d_sq):
            d_sq = None
        return {"k": self.step, "psi": self.psi, "d_sq": d_sq,
                "draw": self.draw, "accepted": self.accepted}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


class DecisionRng:
    """Counter-backed handle over the decision substream.

    The counter advances by exactly one per draw; state after n draws is
    just (key, n) and can be reconstructed from the step index alone.
    """

    __slots__ = ("key", "counter")

    def __init__(self, seed: int, start: int = 0):
        self.key = derive_key(seed, TAG_DECISION)
        self.counter = start

    def next_uniform(self) -> float:
        u = uniform_at(self.key, self.counter)
        self.counter += 1
        return u


def decide(psi: float, rng: DecisionRng, step: int, d_sq: float | None = None) -> Decision:
    """Draw once and accept iff draw < psi.

    psi must lie in [0, 1].  The draw happens regardless of psi (even for
    psi in {0, 1}), keeping the substream position equal to the step count.
    """
    if not 0.0 <= psi <= 1.0:
        raise ValueError(f"psi must be in [0, 1], got {psi}")
    draw = rng.next_uniform()
    return Decision(step=step, psi=psi, d_sq=d_sq, draw=draw, accepted=draw < psi)
