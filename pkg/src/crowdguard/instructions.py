"""Instructions broadcast by a control agent to the pedestrians below it."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import Vec2


class InstructionKind(str, enum.Enum):
    SLOW_DOWN = "SlowDown"
    WAIT = "Wait"
    FOLLOW_SPOTLIGHT = "FollowSpotlight"


@dataclass(frozen=True)
class Spotlight:
    position: Vec2
    speed: float


@dataclass(frozen=True)
class Instruction:
    kind: InstructionKind
    addressed: frozenset[int]
    issue_tick: int
    region_id: int | None = None
    group_id: int | None = None
    spotlight: Spotlight | None = None
    factor: float | None = None
    target_speed: float | None = None  # SlowDown: speed the addressed are asked not to exceed

    def __post_init__(self) -> None:
        if self.kind is InstructionKind.FOLLOW_SPOTLIGHT and self.spotlight is None:
            raise ValueError("FollowSpotlight needs a spotlight")
        if self.kind is InstructionKind.SLOW_DOWN and not (
            self.factor is not None and 0.0 < self.factor < 1.0
        ):
            raise ValueError("SlowDown needs a factor in (0, 1)")
        object.__setattr__(self, "addressed", frozenset(self.addressed))

    def to_json(self) -> dict:
        out = {
            "kind": self.kind.value,
            "addressed": sorted(self.addressed),
            "issue_tick": self.issue_tick,
            "region": self.region_id,
            "group": self.group_id,
        }
        if self.spotlight is not None:
            out["spotlight"] = [self.spotlight.position.x, self.spotlight.position.y,
                                self.spotlight.speed]
        if self.factor is not None:
            out["factor"] = self.factor
        if self.target_speed is not None:
            out["target_speed"] = self.target_speed
        return out
