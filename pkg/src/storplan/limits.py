"""Closed-form sizing limits in the cumulative-energy domain.

Storage lets a line carry the cycle's energy at a steady rate instead of
at the instantaneous peak, so the smallest workable rating of a line is
the mean absolute no-storage flow over the cycle. Given any feasible flow
schedule, the smallest storage at a bus is the peak-to-valley span of the
bus's cumulative imbalance (delivered energy minus energy exported over
its lines). Both quantities come straight from running sums; no
optimization is involved.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .grid import GridModel, PtdfMatrix, compute_ptdf, flows_from_injections
from .profiles import CumulativeSeries, CycleProfile, cumulative_energy

__all__ = [
    "FlowSeries",
    "StorageSizing",
    "SocBalanceReport",
    "LimitsReport",
    "original_flows",
    "min_line_capacity",
    "min_storage_given_flows",
    "total_min_storage",
    "closedform_storage_at_min_line",
    "verify_soc_balance",
    "limits_report",
]


@dataclass(frozen=True, eq=False)
class FlowSeries:
    """Per-line flows (MW) and their running energy transfer (MWh).

    ``tag`` records which schedule this is: "original" for the
    no-storage flows implied directly by the profile, "with-storage" for
    a smoothed schedule.
    """

    flows: np.ndarray
    cumulative: np.ndarray
    slot_hours: float
    tag: str = "original"

    @classmethod
    def from_flows(cls, flows: np.ndarray, slot_hours: float, tag: str = "original"):
        flows = np.atleast_2d(np.asarray(flows, dtype=float))
        return cls(flows=flows, cumulative=slot_hours * np.cumsum(flows, axis=1),
                   slot_hours=slot_hours, tag=tag)

    @property
    def n_lines(self) -> int:
        return self.flows.shape[0]

    @property
    def n_slots(self) -> int:
        return self.flows.shape[1]


@dataclass(frozen=True, eq=False)
class StorageSizing:
    """Per-bus storage requirement: capacity, initial charge, trajectory."""

    capacity_mwh: np.ndarray
    initial_soc_mwh: np.ndarray
    soc_trajectory: np.ndarray

    @property
    def total_mwh(self) -> float:
        return float(np.sum(self.capacity_mwh))


@dataclass(frozen=True, eq=False)
class SocBalanceReport:
    """Terminal-balance residuals between a flow schedule and the profile."""

    line_transfer_residual_mwh: np.ndarray
    bus_balance_residual_mwh: np.ndarray
    max_abs_residual_mwh: float
    passed: bool


@dataclass(frozen=True, eq=False)
class LimitsReport:
    """The closed-form planning floor for one cycle.

    ``min_storage_mwh`` sizes each bus at the operating point where every
    line is pinned to its minimum capacity; ``total_min_storage_mwh`` is
    the system-wide floor with unconstrained lines, so the per-bus sum is
    always at least the total.
    """

    line_ids: tuple
    bus_ids: tuple
    min_line_capacity_mw: np.ndarray
    min_storage_mwh: np.ndarray
    initial_soc_mwh: np.ndarray
    soc_trajectory_mwh: np.ndarray
    total_min_storage_mwh: float
    reference_bus: int

    def as_dict(self) -> dict:
        return {
            "reference_bus": self.reference_bus,
            "lines": [
                {"line_id": lid, "min_capacity_mw": float(v)}
                for lid, v in zip(self.line_ids, self.min_line_capacity_mw)
            ],
            "buses": [
                {
                    "bus_id": bid,
                    "min_storage_mwh": float(s),
                    "initial_soc_mwh": float(x0),
                }
                for bid, s, x0 in zip(self.bus_ids, self.min_storage_mwh, self.initial_soc_mwh)
            ],
            "soc_trajectory_mwh": [[float(v) for v in row] for row in self.soc_trajectory_mwh],
            "total_min_storage_mwh": float(self.total_min_storage_mwh),
        }


def original_flows(ptdf: PtdfMatrix, profile: CycleProfile) -> FlowSeries:
    """No-storage line flows: the PTDF image of the raw profile, per slot."""
    flows = flows_from_injections(ptdf, profile.power)
    return FlowSeries.from_flows(flows, profile.slot_hours, tag="original")


def min_line_capacity(original: FlowSeries) -> np.ndarray:
    """Smallest per-line rating that can still move the cycle's energy.

    Equals the mean absolute original flow: with enough storage at the
    ends a line can run flat all cycle, but it must still complete the
    same cumulative transfer, which caps out at rating times duration.
    """
    return np.mean(np.abs(original.flows), axis=1)


def _span_with_rest_state(deviation: np.ndarray):
    """Peak-to-valley span of each row, anchored so the pre-cycle state (0)
    counts as one of the extremes."""
    high = np.maximum(deviation.max(axis=1), 0.0)
    low = np.minimum(deviation.min(axis=1), 0.0)
    return high, low


def _sizing_from_deviation(deviation: np.ndarray) -> StorageSizing:
    high, low = _span_with_rest_state(deviation)
    initial = -low + 0.0  # drop IEEE negative zeros
    return StorageSizing(
        capacity_mwh=high - low,
        initial_soc_mwh=initial,
        soc_trajectory=deviation + initial[:, None],
    )


def _bus_cumulative_transfer(grid: GridModel, line_cumulative: np.ndarray) -> np.ndarray:
    """Per-bus running energy export: signed sum of incident line transfers."""
    if line_cumulative.shape[0] != grid.n_lines:
        raise DimensionMismatch(
            f"flow series covers {line_cumulative.shape[0]} lines, grid has {grid.n_lines}"
        )
    return grid.incidence().T @ line_cumulative


def min_storage_given_flows(
    net: CumulativeSeries, flows: FlowSeries, grid: GridModel
) -> StorageSizing:
    """Smallest per-bus storage that supports a given flow schedule.

    The bus's cumulative imbalance (delivered energy minus exported
    energy) must ride inside [0, capacity] after shifting by the initial
    charge; the tight capacity is that curve's span, with the pre-cycle
    rest state included as an extreme point.
    """
    if net.values.shape[1] != flows.n_slots:
        raise DimensionMismatch("energy series and flow series cover different horizons")
    deviation = net.values - _bus_cumulative_transfer(grid, flows.cumulative)
    return _sizing_from_deviation(deviation)


def total_min_storage(local: CumulativeSeries) -> float:
    """System-wide storage floor when line capacity is not binding.

    Span of the summed cumulative energy over all buses. Assumes the
    cycle is balanced overall; an imbalanced profile gets a warning and
    the span is still returned.
    """
    totals = np.sum(local.values, axis=0)
    terminal = float(totals[-1])
    scale = max(1.0, float(np.max(np.abs(local.values))) if local.values.size else 1.0)
    if abs(terminal) > 1e-6 * scale:
        warnings.warn(
            f"cycle energy does not balance (residual {terminal:.6g} MWh); "
            "the storage floor assumes a balanced cycle",
            stacklevel=2,
        )
    high = max(float(totals.max()), 0.0)
    low = min(float(totals.min()), 0.0)
    return high - low


def closedform_storage_at_min_line(
    local: CumulativeSeries, original: FlowSeries, grid: GridModel
) -> StorageSizing:
    """Per-bus storage when every line runs flat at its mean original flow.

    At the minimum line capacity the only schedule that completes the
    cycle's transfer is the constant one, so each line's cumulative
    transfer grows linearly at the mean original flow; the bus sizing
    then follows from the same span rule as :func:`min_storage_given_flows`.
    Assumes the full profile is delivered (no curtailment or shedding).
    """
    if local.values.shape[1] != original.n_slots:
        raise DimensionMismatch("energy series and flow series cover different horizons")
    mean_flow = np.mean(original.flows, axis=1)
    export_rate = grid.incidence().T @ mean_flow           # MW per bus
    steps = original.slot_hours * np.arange(1, original.n_slots + 1)
    deviation = local.values - np.outer(export_rate, steps)
    return _sizing_from_deviation(deviation)


def verify_soc_balance(
    flows: FlowSeries,
    original: FlowSeries,
    net: CumulativeSeries,
    grid: GridModel,
    tolerance: float = 1e-6,
) -> SocBalanceReport:
    """Check that a flow schedule finishes the cycle consistently.

    Two terminal conditions must hold for any schedule a cyclic storage
    fleet can support: each line's total transfer matches the original
    schedule's, and each bus's total export matches its delivered energy.
    """
    if flows.n_slots != original.n_slots or flows.n_lines != original.n_lines:
        raise DimensionMismatch("flow series shapes differ")
    line_res = flows.cumulative[:, -1] - original.cumulative[:, -1]
    bus_res = _bus_cumulative_transfer(grid, flows.cumulative)[:, -1] - net.values[:, -1]
    worst = float(max(np.max(np.abs(line_res), initial=0.0),
                      np.max(np.abs(bus_res), initial=0.0)))
    return SocBalanceReport(
        line_transfer_residual_mwh=line_res,
        bus_balance_residual_mwh=bus_res,
        max_abs_residual_mwh=worst,
        passed=worst <= tolerance,
    )


def limits_report(
    grid: GridModel, profile: CycleProfile, ptdf: PtdfMatrix | None = None
) -> LimitsReport:
    """Assemble the full closed-form report for one cycle."""
    if profile.n_buses != grid.n_buses:
        raise DimensionMismatch(
            f"profile covers {profile.n_buses} buses, grid has {grid.n_buses}"
        )
    if ptdf is None:
        ptdf = compute_ptdf(grid)
    local = cumulative_energy(profile)
    flows = original_flows(ptdf, profile)
    sizing = closedform_storage_at_min_line(local, flows, grid)
    return LimitsReport(
        line_ids=grid.line_ids,
        bus_ids=grid.bus_ids,
        min_line_capacity_mw=min_line_capacity(flows),
        min_storage_mwh=sizing.capacity_mwh,
        initial_soc_mwh=sizing.initial_soc_mwh,
        soc_trajectory_mwh=sizing.soc_trajectory,
        total_min_storage_mwh=total_min_storage(local),
        reference_bus=grid.reference_bus,
    )
