"""Spike-train container and its CSV wire format."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SpikeTrain"]


@dataclass(frozen=True)
class SpikeTrain:
    """Time-sorted spike events over a finite stimulus window.

    ``neuron_ids`` and ``times`` are parallel arrays; times are in ms,
    nondecreasing, and confined to [0, duration].
    """

    neuron_ids: np.ndarray
    times: np.ndarray
    duration: float

    def __post_init__(self) -> None:
        ids = np.asarray(self.neuron_ids, dtype=np.int64)
        times = np.asarray(self.times, dtype=np.float64)
        if ids.shape != times.shape or ids.ndim != 1:
            raise ValueError("neuron_ids and times must be parallel 1-D arrays")
        if self.duration <= 0.0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if times.size:
            if np.any(np.diff(times) < 0):
                raise ValueError("spike times must be nondecreasing")
            if times[0] < 0.0 or times[-1] > self.duration:
                raise ValueError("spike times must lie in [0, duration]")
        object.__setattr__(self, "neuron_ids", ids)
        object.__setattr__(self, "times", times)

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    def events(self) -> list[tuple[int, float]]:
        return [(int(i), float(t)) for i, t in zip(self.neuron_ids, self.times)]

    @classmethod
    def from_events(cls, events, duration: float) -> "SpikeTrain":
        """Build from (neuron_id, time) pairs, sorting by time then id."""
        if len(events) == 0:
            return cls(np.zeros(0, dtype=np.int64), np.zeros(0), duration)
        arr = sorted(events, key=lambda e: (e[1], e[0]))
        ids = np.array([e[0] for e in arr], dtype=np.int64)
        times = np.array([e[1] for e in arr], dtype=np.float64)
        return cls(ids, times, duration)

    def to_csv(self) -> str:
        """CSV lines ``neuron_id,time_ms`` with a duration header comment."""
        lines = [f"# duration_ms={self.duration!r}", "neuron_id,time_ms"]
        lines += [f"{int(i)},{float(t)!r}" for i, t in zip(self.neuron_ids, self.times)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SpikeTrain":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# duration_ms="):
            raise ValueError("missing duration header")
        duration = float(lines[0].split("=", 1)[1])
        body = lines[2:] if len(lines) > 1 and lines[1] == "neuron_id,time_ms" else lines[1:]
        ids, times = [], []
        for ln in body:
            i, t = ln.split(",")
            ids.append(int(i))
            times.append(float(t))
        return cls(np.array(ids, dtype=np.int64), np.array(times), duration)
