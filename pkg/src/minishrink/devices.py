"""Device fit, device satisfaction (DSR), user satisfaction (USR) and NDA."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

USR_ORIENTATIONS = ("as_written", "slack")


@dataclass(frozen=True)
class Device:
    name: str
    memory_kb: float
    storage_kb: float
    rank_value: int

    def __post_init__(self):
        if self.memory_kb <= 0 or self.storage_kb <= 0:
            raise ValueError(f"device {self.name}: capacities must be positive")
        if self.rank_value < 1:
            raise ValueError(f"device {self.name}: rank must be >= 1")


@dataclass(frozen=True)
class Measurement:
    """Metrics of one evaluated build.

    When ``feasible`` is False the build failed and the metric fields carry
    no information.
    """

    code_size_kb: float = math.nan
    memory_kb: float = math.nan
    time_s: float = math.nan
    feasible: bool = True

    @classmethod
    def infeasible(cls) -> "Measurement":
        return cls(feasible=False)

    def __post_init__(self):
        if self.feasible and min(self.code_size_kb, self.memory_kb, self.time_s) < 0:
            raise ValueError("measurement metrics must be non-negative")


@dataclass(frozen=True)
class ObjectiveVector:
    udr: float
    code_size_kb: float
    memory_kb: float
    time_s: float

    NAMES = ("udr", "cs", "mu", "et")

    def as_tuple(self, objectives: Sequence[str] = NAMES) -> tuple[float, ...]:
        lookup = {"udr": self.udr, "cs": self.code_size_kb, "mu": self.memory_kb, "et": self.time_s}
        return tuple(lookup[o] for o in objectives)


class InfeasibleMeasurementError(ValueError):
    """A metric was requested from a build that failed."""


def _require_feasible(m: Measurement) -> None:
    if not m.feasible:
        raise InfeasibleMeasurementError("measurement is infeasible; its metrics are undefined")


def dsr(m: Measurement, d: Device) -> float:
    """Mean relative excess of code size and memory over the device capacities.

    Negative values mean the build is under both capacities on average.
    """
    _require_feasible(m)
    storage = (m.code_size_kb - d.storage_kb) / d.storage_kb
    memory = (m.memory_kb - d.memory_kb) / d.memory_kb
    return (storage + memory) / 2


def usr(m: Measurement, devices: Sequence[Device], orientation: str = "as_written") -> float:
    """Rank-weighted mean of :func:`dsr` over ``devices``.

    ``orientation="slack"`` negates each DSR before weighting.
    """
    _require_feasible(m)
    if not devices:
        raise ValueError("usr needs at least one device")
    if orientation not in USR_ORIENTATIONS:
        raise ValueError(f"unknown usr orientation {orientation!r}")
    sign = -1.0 if orientation == "slack" else 1.0
    vmax = max(d.rank_value for d in devices)
    total = sum(sign * dsr(m, d) * d.rank_value / vmax for d in devices)
    return total / len(devices)


def udr(m: Measurement, devices: Sequence[Device], orientation: str = "as_written") -> float:
    return -usr(m, devices, orientation)


def objectives(m: Measurement, devices: Sequence[Device], orientation: str = "as_written") -> ObjectiveVector:
    _require_feasible(m)
    return ObjectiveVector(udr(m, devices, orientation), m.code_size_kb, m.memory_kb, m.time_s)


def fits(m: Measurement, d: Device) -> bool:
    if not m.feasible:
        return False
    return m.code_size_kb <= d.storage_kb and m.memory_kb <= d.memory_kb


def device_count(solutions: Iterable[Measurement], devices: Sequence[Device]) -> int:
    """Number of devices that at least one solution fits on."""
    solutions = list(solutions)
    return sum(any(fits(s, d) for s in solutions) for d in devices)


def nda(before: int, after: int) -> int:
    return after - before


def devices_from_list(data) -> list[Device]:
    if not isinstance(data, list):
        raise ValueError("device catalog must be a JSON array")
    try:
        return [
            Device(
                name=str(d["name"]),
                memory_kb=float(d["memory_kb"]),
                storage_kb=float(d["storage_kb"]),
                rank_value=int(d["rank"]),
            )
            for d in data
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed device entry: missing or invalid {exc}") from None


def load_devices(path) -> list[Device]:
    path = Path(path)
    with path.open() as fh:
        return devices_from_list(json.load(fh))


def devices_to_list(devices: Sequence[Device]) -> list[dict]:
    return [
        {"name": d.name, "memory_kb": d.memory_kb, "storage_kb": d.storage_kb, "rank": d.rank_value}
        for d in devices
    ]
