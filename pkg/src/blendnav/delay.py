"""Operator-input latency: a time-stamped FIFO with zero-order hold output."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Twist2D


@dataclass
class _Entry:
    stamp: float
    mature_at: float
    cmd: Twist2D


@dataclass
class DelayBuffer:
    """Commands pushed at time t become visible at t + delay.

    Before the first command matures the output is a zero twist (fail-safe);
    afterwards the newest matured command is held until the next one matures.
    Changing the delay affects only subsequently pushed commands.
    """

    delay: float = 0.0
    entries: list[_Entry] = field(default_factory=list)
    last_delivered: Twist2D | None = None
    _last_stamp: float = float("-inf")

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be >= 0")

    def push_command(self, cmd: Twist2D, now: float) -> None:
        if now < self._last_stamp:
            raise ValueError(
                f"non-monotonic stamp: {now} after {self._last_stamp}")
        self._last_stamp = now
        self.entries.append(_Entry(now, now + self.delay, cmd))

    def sample_delayed(self, now: float) -> Twist2D:
        matured = None
        while self.entries and self.entries[0].mature_at <= now:
            matured = self.entries.pop(0)
        if matured is not None:
            self.last_delivered = matured.cmd
        return self.last_delivered if self.last_delivered is not None \
            else Twist2D.zero()

    def set_delay(self, delay: float) -> None:
        if delay < 0:
            raise ValueError("delay must be >= 0")
        self.delay = delay

    def __len__(self) -> int:
        return len(self.entries)
