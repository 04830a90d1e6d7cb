"""Injection profiles and their cumulative-energy view.

Power profiles are signed nodal injections in MW (generation positive,
load negative) over a repeating cycle of N slots of h hours each. All of
the sizing results in this package live in the cumulative-energy domain:
the running sum of a bus's injection, in MWh, slot by slot.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    CurtailmentBoundViolation,
    NonmonotoneTimestamps,
    RaggedSeries,
    UnknownBus,
    ZeroMeanSeries,
)
from .grid import GridModel

__all__ = [
    "CycleProfile",
    "MultiCycleProfile",
    "CumulativeSeries",
    "BalanceCheck",
    "cumulative_energy",
    "net_cumulative_energy",
    "check_energy_balance",
    "balance_normalize",
    "ingest_profile",
]


@dataclass(frozen=True, eq=False)
class CycleProfile:
    """One cycle of nodal injections: a B x N matrix of MW values."""

    power: np.ndarray
    slot_hours: float

    def __post_init__(self):
        power = np.asarray(self.power, dtype=float)
        if power.ndim != 2 or power.size == 0:
            raise ValueError(f"profile power must be 2-D (buses x slots), got {power.shape}")
        if not np.all(np.isfinite(power)):
            raise ValueError("profile power contains non-finite values")
        if not (np.isfinite(self.slot_hours) and self.slot_hours > 0):
            raise ValueError(f"slot_hours must be positive, got {self.slot_hours}")
        object.__setattr__(self, "power", power)

    @property
    def n_buses(self) -> int:
        return self.power.shape[0]

    @property
    def n_slots(self) -> int:
        return self.power.shape[1]

    def available_plus(self) -> np.ndarray:
        """Generation side of the sign split, max(p, 0)."""
        return np.clip(self.power, 0.0, None)

    def available_minus(self) -> np.ndarray:
        """Load side of the sign split, max(-p, 0)."""
        return np.clip(-self.power, 0.0, None)


@dataclass(frozen=True, eq=False)
class MultiCycleProfile:
    """A sequence of cycles (days) sharing one shape and slot length."""

    cycles: tuple[CycleProfile, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.cycles:
            raise ValueError("need at least one cycle")
        if len(self.labels) != len(self.cycles):
            raise ValueError("one label per cycle required")
        first = self.cycles[0]
        for cyc in self.cycles[1:]:
            if cyc.power.shape != first.power.shape or cyc.slot_hours != first.slot_hours:
                raise RaggedSeries("all cycles must share shape and slot length")

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)

    @property
    def slot_hours(self) -> float:
        return self.cycles[0].slot_hours

    @property
    def n_buses(self) -> int:
        return self.cycles[0].n_buses

    @property
    def n_slots(self) -> int:
        return self.cycles[0].n_slots

    def __iter__(self):
        return iter(self.cycles)


@dataclass(frozen=True, eq=False)
class CumulativeSeries:
    """Running energy totals, B x N in MWh.

    ``kind`` is "local" for the raw profile's cumulative energy and "net"
    for the post-curtailment delivered version.
    """

    values: np.ndarray
    kind: str
    slot_hours: float

    def __post_init__(self):
        if self.kind not in ("local", "net"):
            raise ValueError(f"kind must be 'local' or 'net', got {self.kind!r}")


class BalanceCheck(NamedTuple):
    passed: bool
    imbalance_mwh: float


def cumulative_energy(profile: CycleProfile) -> CumulativeSeries:
    """Running sum of injected energy per bus: E[t] = h * sum_{s<=t} p[s]."""
    values = profile.slot_hours * np.cumsum(profile.power, axis=1)
    return CumulativeSeries(values=values, kind="local", slot_hours=profile.slot_hours)


def net_cumulative_energy(
    profile: CycleProfile,
    delivered_plus: np.ndarray,
    delivered_minus: np.ndarray,
) -> CumulativeSeries:
    """Cumulative energy of the delivered (post-curtailment) injections.

    ``delivered_plus`` and ``delivered_minus`` are B x N matrices bounded
    by the profile's generation/load split; anything outside those bounds
    raises :class:`CurtailmentBoundViolation`.
    """
    dp = np.asarray(delivered_plus, dtype=float)
    dm = np.asarray(delivered_minus, dtype=float)
    if dp.shape != profile.power.shape or dm.shape != profile.power.shape:
        raise CurtailmentBoundViolation(
            f"delivered power must match the profile shape {profile.power.shape}"
        )
    avail_p = profile.available_plus()
    avail_m = profile.available_minus()
    tol = 1e-9 * max(1.0, float(np.max(np.abs(profile.power)) if profile.power.size else 1.0))
    if np.any(dp < -tol) or np.any(dp > avail_p + tol):
        raise CurtailmentBoundViolation("delivered generation outside [0, available]")
    if np.any(dm < -tol) or np.any(dm > avail_m + tol):
        raise CurtailmentBoundViolation("delivered load outside [0, available]")
    values = profile.slot_hours * np.cumsum(dp - dm, axis=1)
    return CumulativeSeries(values=values, kind="net", slot_hours=profile.slot_hours)


def check_energy_balance(series, tolerance: float = 1e-6) -> BalanceCheck:
    """Whether total injected energy over the cycle sums to (near) zero.

    Accepts a :class:`CycleProfile` or a :class:`CumulativeSeries`; the
    imbalance is the system-wide terminal cumulative energy in MWh.
    """
    if isinstance(series, CycleProfile):
        series = cumulative_energy(series)
    imbalance = float(np.sum(series.values[:, -1]))
    return BalanceCheck(passed=abs(imbalance) <= tolerance, imbalance_mwh=imbalance)


def balance_normalize(supply, demand, target_mw: float, slot_hours: float = 1.0) -> CycleProfile:
    """Scale a supply/demand pair onto a common average power.

    One positive factor per side: supply rows are scaled so the summed
    supply averages ``target_mw`` over the cycle, demand rows (given as
    positive consumption) likewise. The result is a balanced profile with
    the scaled supply rows first and the scaled demand rows negated below
    them, so it passes :func:`check_energy_balance` by construction.
    """
    supply = np.atleast_2d(np.asarray(supply, dtype=float))
    demand = np.atleast_2d(np.asarray(demand, dtype=float))
    if supply.shape[1] != demand.shape[1]:
        raise ValueError("supply and demand must cover the same number of slots")
    if not (np.isfinite(target_mw) and target_mw > 0):
        raise ValueError(f"target average must be positive, got {target_mw}")

    factors = []
    for side, label in ((supply, "supply"), (demand, "demand")):
        mean = float(np.mean(np.sum(side, axis=0)))
        if mean <= 1e-12 * max(1.0, target_mw):
            raise ZeroMeanSeries(
                f"{label} mean {mean:.3e} MW cannot be scaled to {target_mw} MW; "
                "pass positive consumption magnitudes for demand"
            )
        factors.append(target_mw / mean)

    power = np.vstack([factors[0] * supply, -factors[1] * demand])
    return CycleProfile(power=power, slot_hours=slot_hours)


# -- file ingestion ----------------------------------------------------------

def ingest_profile(path, grid: GridModel, n_slots: int, slot_hours: float) -> MultiCycleProfile:
    """Read an injection profile file and split it into cycles.

    Two layouts are auto-detected from the header row:

    * long: ``bus_id,slot,power_mw`` with one row per bus and slot;
      missing (bus, slot) pairs default to zero,
    * wide: ``slot,<bus name or id>,...`` with one row per slot.

    Timestamps must be strictly increasing (per bus for the long layout)
    and their count must divide into whole cycles of ``n_slots``.
    """
    if n_slots <= 0:
        raise ValueError("n_slots must be positive")
    with open(path, newline="") as fh:
        rows = [
            [c.strip() for c in raw]
            for raw in csv.reader(fh)
            if raw and any(c.strip() for c in raw) and not raw[0].lstrip().startswith("#")
        ]
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")

    header = [c.lower() for c in rows[0]]
    if header[:3] == ["bus_id", "slot", "power_mw"]:
        per_bus = _parse_long(path, rows[1:], grid)
    elif header and header[0] == "slot":
        per_bus = _parse_wide(path, rows, grid)
    else:
        raise ValueError(
            f"{path}: unrecognized header {rows[0]!r}; expected 'bus_id,slot,power_mw' "
            "or 'slot,<bus>,...'"
        )

    slots = sorted({s for series in per_bus.values() for s in series})
    if not slots:
        raise ValueError(f"{path}: profile holds no samples")
    if len(slots) % n_slots != 0:
        raise RaggedSeries(
            f"{path}: {len(slots)} timestamps do not divide into cycles of {n_slots} slots"
        )

    slot_pos = {s: i for i, s in enumerate(slots)}
    power = np.zeros((grid.n_buses, len(slots)))
    for bus_pos, series in per_bus.items():
        for slot, value in series.items():
            power[bus_pos, slot_pos[slot]] = value

    n_cycles = len(slots) // n_slots
    cycles = tuple(
        CycleProfile(power=power[:, k * n_slots:(k + 1) * n_slots], slot_hours=slot_hours)
        for k in range(n_cycles)
    )
    labels = tuple(f"cycle{k}" for k in range(n_cycles))
    return MultiCycleProfile(cycles=cycles, labels=labels)


def _parse_long(path, rows, grid):
    per_bus: dict[int, dict[int, float]] = {}
    last_slot: dict[int, int] = {}
    for cells in rows:
        if len(cells) < 3:
            raise ValueError(f"{path}: short row {cells}")
        try:
            bus_ref = int(cells[0])
        except ValueError:
            bus_ref = cells[0]
        try:
            pos = grid.bus_index(bus_ref)
        except Exception as exc:
            raise UnknownBus(f"{path}: {exc}") from None
        try:
            slot = int(cells[1])
            value = float(cells[2])
        except ValueError as exc:
            raise ValueError(f"{path}: bad row {cells}: {exc}") from None
        if pos in last_slot and slot <= last_slot[pos]:
            raise NonmonotoneTimestamps(
                f"{path}: slot {slot} for bus {cells[0]} does not increase past {last_slot[pos]}"
            )
        last_slot[pos] = slot
        per_bus.setdefault(pos, {})[slot] = value
    return per_bus


def _parse_wide(path, rows, grid):
    labels = rows[0][1:]
    positions = []
    for label in labels:
        try:
            positions.append(grid.bus_index(label))
        except Exception as exc:
            raise UnknownBus(f"{path}: column {label!r}: {exc}") from None
    per_bus: dict[int, dict[int, float]] = {pos: {} for pos in positions}
    last_slot = None
    for cells in rows[1:]:
        if len(cells) != len(labels) + 1:
            raise RaggedSeries(f"{path}: row width {len(cells)} != header width {len(labels) + 1}")
        try:
            slot = int(cells[0])
            values = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise ValueError(f"{path}: bad row {cells}: {exc}") from None
        if last_slot is not None and slot <= last_slot:
            raise NonmonotoneTimestamps(f"{path}: slot {slot} does not increase past {last_slot}")
        last_slot = slot
        for pos, value in zip(positions, values):
            per_bus[pos][slot] = value
    return per_bus
