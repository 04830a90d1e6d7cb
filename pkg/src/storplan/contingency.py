"""Serious-day screening and N-1 capacity requirements.

With enough storage behind it, a line can run flat at the day's mean
flow, so the day that stresses a line is the one with the largest mean
absolute no-storage flow. Screening keeps, per line, that worst day; the
union over lines is the small set of "serious" days on which the
contingency studies run, using each day's mean injections as the
operating point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    BaselineDimensionMismatch,
    DegenerateRebalance,
    DimensionMismatch,
    IslandingOutage,
)
from .grid import GridModel, PtdfMatrix, compute_ptdf, compute_lodf
from .profiles import MultiCycleProfile

logger = logging.getLogger(__name__)

__all__ = [
    "ScreeningResult",
    "LineTripResult",
    "ElementTripResult",
    "ContingencyReport",
    "screen_serious_days",
    "line_trip_requirements",
    "element_trip_requirements",
    "contingency_report",
]

CONTINGENCY_TYPES = ("line-trip", "element-trip", "both")


@dataclass(frozen=True, eq=False)
class ScreeningResult:
    """Worst day per line and the union of those days.

    ``daily_mean_abs_flow_mw`` holds the full line-by-day screening
    matrix; ``per_line_value_mw`` is each line's capacity floor (its worst
    day's mean absolute flow). Ties go to the earliest day.
    """

    serious_days: tuple[int, ...]
    per_line_day: np.ndarray
    per_line_value_mw: np.ndarray
    day_frequency: dict
    daily_mean_abs_flow_mw: np.ndarray
    day_labels: tuple[str, ...]

    def as_dict(self, grid: GridModel | None = None) -> dict:
        out = {
            "serious_days": [int(d) for d in self.serious_days],
            "day_frequency": {str(k): int(v) for k, v in sorted(self.day_frequency.items())},
            "per_line": [
                {"serious_day": int(d), "mean_abs_flow_mw": float(v)}
                for d, v in zip(self.per_line_day, self.per_line_value_mw)
            ],
        }
        if grid is not None:
            for rec, lid in zip(out["per_line"], grid.line_ids):
                rec["line_id"] = lid
        return out


def screen_serious_days(ptdf: PtdfMatrix, profiles: MultiCycleProfile) -> ScreeningResult:
    """Pick, per line, the day with the largest mean absolute flow."""
    if profiles.n_buses != ptdf.n_buses:
        raise DimensionMismatch(
            f"profiles cover {profiles.n_buses} buses, grid has {ptdf.n_buses}"
        )
    daily = np.empty((ptdf.n_lines, profiles.n_cycles))
    for day, cycle in enumerate(profiles):
        daily[:, day] = np.mean(np.abs(ptdf.values @ cycle.power), axis=1)
    per_line_day = np.argmax(daily, axis=1)          # first index wins ties
    per_line_value = daily[np.arange(daily.shape[0]), per_line_day]
    serious = tuple(sorted(set(int(d) for d in per_line_day)))
    freq = {int(d): int(np.sum(per_line_day == d)) for d in serious}
    return ScreeningResult(
        serious_days=serious,
        per_line_day=per_line_day,
        per_line_value_mw=per_line_value,
        day_frequency=freq,
        daily_mean_abs_flow_mw=daily,
        day_labels=profiles.labels,
    )


@dataclass(frozen=True, eq=False)
class LineTripResult:
    """Per-line capacity needed to survive any single line outage."""

    requirement_mw: np.ndarray
    worst_day: np.ndarray                    # serious-day index per line
    worst_outage: tuple                      # line id per line, None = no outage
    islanding_line_ids: tuple
    base_requirement_mw: np.ndarray


@dataclass(frozen=True, eq=False)
class ElementTripResult:
    """Per-line capacity needed to survive any single bus (element) trip."""

    requirement_mw: np.ndarray
    worst_day: np.ndarray
    worst_bus: tuple                         # bus id per line, None = never binding
    excluded: tuple                          # (day, bus id, reason) degenerate cases


def _mean_injections(profiles: MultiCycleProfile, days) -> np.ndarray:
    cols = [np.mean(profiles.cycles[d].power, axis=1) for d in days]
    return np.column_stack(cols) if cols else np.empty((profiles.n_buses, 0))


def line_trip_requirements(grid: GridModel, mean_injections: np.ndarray,
                           ptdf: PtdfMatrix | None = None) -> LineTripResult:
    """Worst post-outage flow per line over single line outages.

    ``mean_injections`` is a B x K matrix, one column per operating
    scenario (typically the mean injections of each serious day). The
    no-outage flows are included in the maximum. Outages that would
    island the grid are reported and excluded, never silently dropped.
    """
    if ptdf is None:
        ptdf = compute_ptdf(grid)
    inj = np.asarray(mean_injections, dtype=float)
    if inj.ndim == 1:
        inj = inj[:, None]
    if inj.shape[0] != grid.n_buses:
        raise DimensionMismatch(
            f"injection matrix has {inj.shape[0]} rows, grid has {grid.n_buses} buses"
        )
    n_l, n_k = grid.n_lines, inj.shape[1]
    base = ptdf.values @ inj                            # L x K

    requirement = np.max(np.abs(base), axis=1, initial=0.0)
    worst_day = np.argmax(np.abs(base), axis=1) if n_k else np.zeros(n_l, dtype=int)
    worst_outage: list = [None] * n_l
    islanding = []

    for pos, line in enumerate(grid.lines):
        try:
            factors = compute_lodf(grid, line.id, ptdf)
        except IslandingOutage:
            islanding.append(line.id)
            logger.info("outage of line %s would island the grid; excluded", line.id)
            continue
        post = base + np.outer(factors, base[pos])      # L x K
        for k in range(n_k):
            better = np.abs(post[:, k]) > requirement
            requirement = np.where(better, np.abs(post[:, k]), requirement)
            worst_day = np.where(better, k, worst_day)
            for target in np.nonzero(better)[0]:
                worst_outage[target] = line.id

    return LineTripResult(
        requirement_mw=requirement,
        worst_day=worst_day,
        worst_outage=tuple(worst_outage),
        islanding_line_ids=tuple(islanding),
        base_requirement_mw=np.max(np.abs(base), axis=1, initial=0.0),
    )


def rebalanced_injections(injections: np.ndarray, bus_pos: int) -> np.ndarray:
    """Drop one bus's injection and cover it within the same sign class.

    Tripping a generating bus leaves a supply deficit, so the remaining
    positive injections are scaled up pro rata (and symmetrically for a
    consuming bus). The result sums to the same system total as the
    input. Raises :class:`DegenerateRebalance` when no same-sign
    injection remains to absorb the loss.
    """
    inj = np.asarray(injections, dtype=float).copy()
    lost = inj[bus_pos]
    scale = max(1.0, float(np.max(np.abs(inj))))
    if abs(lost) <= 1e-12 * scale:
        inj[bus_pos] = 0.0
        return inj
    inj[bus_pos] = 0.0
    same_sign = inj > 0 if lost > 0 else inj < 0
    pool = float(np.sum(inj[same_sign]))
    if abs(pool) <= 1e-12 * scale:
        raise DegenerateRebalance(
            f"tripping bus position {bus_pos} loses {lost:.6g} MW with no remaining "
            f"{'generation' if lost > 0 else 'load'} to make it up"
        )
    inj[same_sign] *= (pool + lost) / pool
    return inj


def element_trip_requirements(grid: GridModel, mean_injections: np.ndarray,
                              ptdf: PtdfMatrix | None = None,
                              skip_degenerate: bool = False) -> ElementTripResult:
    """Worst flow per line over single bus trips with pro-rata rebalancing.

    Tripping a bus zeroes its injection (all elements at the bus go out
    together) and rescales the remaining same-sign injections to keep the
    system total unchanged. Degenerate cases raise
    :class:`DegenerateRebalance` unless ``skip_degenerate`` is set, in
    which case they are recorded in ``excluded``.
    """
    if ptdf is None:
        ptdf = compute_ptdf(grid)
    inj = np.asarray(mean_injections, dtype=float)
    if inj.ndim == 1:
        inj = inj[:, None]
    if inj.shape[0] != grid.n_buses:
        raise DimensionMismatch(
            f"injection matrix has {inj.shape[0]} rows, grid has {grid.n_buses} buses"
        )
    n_l, n_k = grid.n_lines, inj.shape[1]
    requirement = np.zeros(n_l)
    worst_day = np.zeros(n_l, dtype=int)
    worst_bus: list = [None] * n_l
    excluded = []

    for k in range(n_k):
        for pos, bus in enumerate(grid.buses):
            try:
                tripped = rebalanced_injections(inj[:, k], pos)
            except DegenerateRebalance as exc:
                if not skip_degenerate:
                    raise
                excluded.append((k, bus.id, str(exc)))
                continue
            flows = np.abs(ptdf.values @ tripped)
            better = flows > requirement
            requirement = np.where(better, flows, requirement)
            worst_day = np.where(better, k, worst_day)
            for target in np.nonzero(better)[0]:
                worst_bus[target] = bus.id

    return ElementTripResult(
        requirement_mw=requirement,
        worst_day=worst_day,
        worst_bus=tuple(worst_bus),
        excluded=tuple(excluded),
    )


@dataclass(frozen=True, eq=False)
class ContingencyReport:
    """Merged capacity requirements over the screened serious days.

    Per-type columns hold the final per-line requirement for that
    contingency class, never below the no-outage (mean-flow) need.
    ``reduction_vs_baseline`` is the fractional saving in total line
    capacity relative to a given baseline rating vector.
    """

    contingency_type: str
    line_ids: tuple
    serious_days: tuple
    day_labels: tuple
    base_requirement_mw: np.ndarray
    requirement_mw: np.ndarray
    line_trip_mw: np.ndarray | None
    element_trip_mw: np.ndarray | None
    worst_case: tuple                       # per line: (kind, day, id) or ("base", day, None)
    islanding_line_ids: tuple
    degenerate_cases: tuple
    reference_bus: int
    baseline_mw: np.ndarray | None = None
    reduction_vs_baseline: float | None = None

    @property
    def total_requirement_mw(self) -> float:
        return float(np.sum(self.requirement_mw))

    def as_dict(self) -> dict:
        rows = []
        for pos, lid in enumerate(self.line_ids):
            kind, day, ident = self.worst_case[pos]
            rows.append({
                "line_id": lid,
                "requirement_mw": float(self.requirement_mw[pos]),
                "base_mw": float(self.base_requirement_mw[pos]),
                "line_trip_mw": None if self.line_trip_mw is None
                else float(self.line_trip_mw[pos]),
                "element_trip_mw": None if self.element_trip_mw is None
                else float(self.element_trip_mw[pos]),
                "worst_case_kind": kind,
                "worst_case_day": int(day),
                "worst_case_id": ident,
            })
        out = {
            "contingency_type": self.contingency_type,
            "reference_bus": self.reference_bus,
            "serious_days": [int(d) for d in self.serious_days],
            "lines": rows,
            "islanding_line_ids": list(self.islanding_line_ids),
            "degenerate_cases": [
                {"day": int(d), "bus_id": b, "reason": r} for d, b, r in self.degenerate_cases
            ],
            "total_requirement_mw": self.total_requirement_mw,
        }
        if self.baseline_mw is not None:
            out["total_baseline_mw"] = float(np.sum(self.baseline_mw))
            out["reduction_vs_baseline"] = float(self.reduction_vs_baseline)
        return out


def contingency_report(grid: GridModel, profiles: MultiCycleProfile,
                       contingency_type: str = "both",
                       baseline: np.ndarray | None = None,
                       screening: ScreeningResult | None = None) -> ContingencyReport:
    """Screen the profile and size every line for the requested contingencies.

    The serious days are taken from ``screening`` (or computed here), the
    operating point on each is that day's mean injection vector, and the
    per-line requirement is the worst absolute flow over the selected
    contingency class, floored at the no-outage need. ``baseline`` is an
    optional per-line capacity vector to compare totals against.
    """
    if contingency_type not in CONTINGENCY_TYPES:
        raise ValueError(
            f"contingency type must be one of {CONTINGENCY_TYPES}, got {contingency_type!r}"
        )
    ptdf = compute_ptdf(grid)
    if screening is None:
        screening = screen_serious_days(ptdf, profiles)
    days = screening.serious_days
    inj = _mean_injections(profiles, days)
    base = np.max(np.abs(ptdf.values @ inj), axis=1, initial=0.0) \
        if inj.size else np.zeros(grid.n_lines)
    base_day = np.argmax(np.abs(ptdf.values @ inj), axis=1) \
        if inj.size else np.zeros(grid.n_lines, dtype=int)

    line_res = element_res = None
    if contingency_type in ("line-trip", "both"):
        line_res = line_trip_requirements(grid, inj, ptdf)
    if contingency_type in ("element-trip", "both"):
        element_res = element_trip_requirements(grid, inj, ptdf, skip_degenerate=True)

    line_col = None if line_res is None else np.maximum(line_res.requirement_mw, base)
    elem_col = None if element_res is None else np.maximum(element_res.requirement_mw, base)

    requirement = np.array(base)
    worst = [("base", int(days[base_day[pos]]) if days else 0, None)
             for pos in range(grid.n_lines)]
    for pos in range(grid.n_lines):
        if line_col is not None and line_col[pos] > requirement[pos]:
            requirement[pos] = line_col[pos]
            worst[pos] = ("line-trip", int(days[line_res.worst_day[pos]]),
                          line_res.worst_outage[pos])
        if elem_col is not None and elem_col[pos] > requirement[pos]:
            requirement[pos] = elem_col[pos]
            worst[pos] = ("element-trip", int(days[element_res.worst_day[pos]]),
                          element_res.worst_bus[pos])

    reduction = None
    if baseline is not None:
        baseline = np.asarray(baseline, dtype=float)
        if baseline.shape != (grid.n_lines,):
            raise BaselineDimensionMismatch(
                f"baseline has shape {baseline.shape}, grid has {grid.n_lines} lines"
            )
        total_base = float(np.sum(baseline))
        if total_base > 0:
            reduction = 1.0 - float(np.sum(requirement)) / total_base

    return ContingencyReport(
        contingency_type=contingency_type,
        line_ids=grid.line_ids,
        serious_days=days,
        day_labels=tuple(screening.day_labels[d] for d in days),
        base_requirement_mw=base,
        requirement_mw=requirement,
        line_trip_mw=line_col,
        element_trip_mw=elem_col,
        worst_case=tuple(worst),
        islanding_line_ids=() if line_res is None else line_res.islanding_line_ids,
        degenerate_cases=() if element_res is None else element_res.excluded,
        reference_bus=grid.reference_bus,
        baseline_mw=baseline,
        reduction_vs_baseline=reduction,
    )
