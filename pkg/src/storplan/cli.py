"""Command line front end.

Subcommands: limits, plan, sweep, screen, contingency. Table outputs use
fixed 6-decimal formatting; ``--json`` adds a structured file with the
same content at full precision. Output is deterministic: rerunning a
command on the same inputs reproduces the files byte for byte.

Exit codes: 0 success, 2 bad input, 3 infeasible model, 4 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import contingency as contingency_mod
from . import limits as limits_mod
from .errors import (
    BaselineDimensionMismatch,
    InfeasibleModel,
    InputDataError,
    NumericalBreakdown,
    StorplanError,
)
from .grid import compute_ptdf, load_grid
from .plan import PlanConfig, min_storage_for_peak_reduction, plan, sweep_tradeoff
from .profiles import ingest_profile

logger = logging.getLogger(__name__)

_FORMULATION_ALIASES = {
    "conventional": "conventional",
    "reformulated": "reformulated",
    "simplified": "simplified",
    "peakmin": "min-storage-peak-reduction",
}


@dataclass
class RunConfig:
    """Everything one subcommand run needs, resolved from flags."""

    grid_path: str
    profiles_path: str
    n_slots: int
    slot_hours: float
    ref_bus: object
    out_dir: Path
    write_json: bool
    jobs: int
    cycle: int = 0
    formulation: str = "conventional"
    plan_config: PlanConfig | None = None
    peak_reduction: float | None = None
    duration: float | None = None
    baseline_path: str | None = None
    contingency_type: str = "both"
    alpha_range: tuple | None = None
    beta_range: tuple | None = None
    samples: int = 10


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{value:.6f}"
    return str(value)


def _write_table(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_inputs(cfg: RunConfig):
    grid = load_grid(cfg.grid_path, reference_bus=cfg.ref_bus)
    profiles = ingest_profile(cfg.profiles_path, grid, cfg.n_slots, cfg.slot_hours)
    return grid, profiles


def _pick_cycle(profiles, cycle: int):
    if not (0 <= cycle < profiles.n_cycles):
        raise InputDataError(
            f"cycle {cycle} out of range; profile holds {profiles.n_cycles} cycles"
        )
    return profiles.cycles[cycle]


def _build_plan_config(cfg: RunConfig) -> PlanConfig:
    base = cfg.plan_config
    formulation = _FORMULATION_ALIASES[cfg.formulation]
    kwargs = {}
    if base is not None:
        kwargs = {f: getattr(base, f) for f in (
            "storage_power_duration", "peak_reduction_fraction", "relaxed_line_limits",
            "transport_model", "expansion_cost", "storage_cost", "curtail_cost", "shed_cost",
        )}
        if cfg.formulation == "conventional" and base.formulation != "conventional":
            formulation = base.formulation
    if cfg.duration is not None:
        kwargs["storage_power_duration"] = cfg.duration
    if formulation == "min-storage-peak-reduction":
        if cfg.peak_reduction is not None:
            kwargs["peak_reduction_fraction"] = cfg.peak_reduction
        if kwargs.get("peak_reduction_fraction") is None:
            raise InputDataError("--formulation peakmin requires --peak-reduction")
    else:
        kwargs.pop("peak_reduction_fraction", None)
    return PlanConfig(formulation=formulation, **kwargs)


def cmd_limits(cfg: RunConfig) -> int:
    grid, profiles = _load_inputs(cfg)
    cycle = _pick_cycle(profiles, cfg.cycle)
    report = limits_mod.limits_report(grid, cycle)

    _write_table(
        cfg.out_dir / "limits_lines.csv",
        ["line_id", "from_bus", "to_bus", "min_capacity_mw"],
        [(ln.id, ln.from_bus, ln.to_bus, report.min_line_capacity_mw[pos])
         for pos, ln in enumerate(grid.lines)],
    )
    _write_table(
        cfg.out_dir / "limits_storage.csv",
        ["bus_id", "name", "min_storage_mwh", "initial_soc_mwh"],
        [(bus.id, bus.name, report.min_storage_mwh[pos], report.initial_soc_mwh[pos])
         for pos, bus in enumerate(grid.buses)],
    )
    _write_table(
        cfg.out_dir / "limits_soc.csv",
        ["bus_id", "slot", "soc_mwh"],
        [(bus.id, t + 1, report.soc_trajectory_mwh[pos, t])
         for pos, bus in enumerate(grid.buses) for t in range(cycle.n_slots)],
    )
    _write_table(
        cfg.out_dir / "limits_summary.csv",
        ["quantity", "value"],
        [
            ("reference_bus", report.reference_bus),
            ("total_min_storage_mwh", report.total_min_storage_mwh),
            ("sum_per_bus_storage_mwh", float(np.sum(report.min_storage_mwh))),
            ("total_min_line_capacity_mw", float(np.sum(report.min_line_capacity_mw))),
        ],
    )
    if cfg.write_json:
        _write_json(cfg.out_dir / "limits.json", report.as_dict())
    print(f"limits: {grid.n_buses} buses, {grid.n_lines} lines, cycle {cfg.cycle}")
    print(f"  total minimum storage: {report.total_min_storage_mwh:.6f} MWh")
    print(f"  total minimum line capacity: {float(np.sum(report.min_line_capacity_mw)):.6f} MW")
    return 0


def cmd_plan(cfg: RunConfig) -> int:
    grid, profiles = _load_inputs(cfg)
    cycle = _pick_cycle(profiles, cfg.cycle)
    plan_cfg = _build_plan_config(cfg)
    if plan_cfg.formulation == "min-storage-peak-reduction":
        solution = min_storage_for_peak_reduction(
            grid, cycle, plan_cfg.peak_reduction_fraction, plan_cfg)
    else:
        solution = plan(grid, cycle, plan_cfg)

    ratings = grid.existing_capacities()
    _write_table(
        cfg.out_dir / "plan_lines.csv",
        ["line_id", "existing_mw", "expansion_mw", "final_rating_mw"],
        [(ln.id, ratings[pos], solution.line_expansion_mw[pos],
          ratings[pos] + solution.line_expansion_mw[pos])
         for pos, ln in enumerate(grid.lines)],
    )
    _write_table(
        cfg.out_dir / "plan_storage.csv",
        ["bus_id", "name", "capacity_mwh", "initial_soc_mwh"],
        [(bus.id, bus.name, solution.storage_capacity_mwh[pos],
          solution.initial_soc_mwh[pos])
         for pos, bus in enumerate(grid.buses)],
    )
    _write_table(
        cfg.out_dir / "plan_flows.csv",
        ["line_id", "slot", "flow_mw"],
        [(ln.id, t + 1, solution.flows_mw[pos, t])
         for pos, ln in enumerate(grid.lines) for t in range(cycle.n_slots)],
    )
    _write_table(
        cfg.out_dir / "plan_soc.csv",
        ["bus_id", "slot", "soc_mwh"],
        [(bus.id, t + 1, solution.soc_trajectory_mwh[pos, t])
         for pos, bus in enumerate(grid.buses) for t in range(cycle.n_slots)],
    )
    _write_table(
        cfg.out_dir / "plan_summary.csv",
        ["quantity", "value"],
        [
            ("formulation", solution.formulation),
            ("objective", solution.objective),
            ("total_expansion_mw", solution.total_expansion_mw),
            ("total_storage_mwh", solution.total_storage_mwh),
            ("curtailment_mwh", solution.curtailment_mwh),
            ("shed_mwh", solution.shed_mwh),
            ("reference_bus", solution.reference_bus),
        ],
    )
    if cfg.write_json:
        _write_json(cfg.out_dir / "plan.json", solution.as_dict(grid))
    print(f"plan ({solution.formulation}): objective {solution.objective:.6f}")
    print(f"  line expansion {solution.total_expansion_mw:.6f} MW, "
          f"storage {solution.total_storage_mwh:.6f} MWh")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    grid, profiles = _load_inputs(cfg)
    cycle = _pick_cycle(profiles, cfg.cycle)
    alphas = cfg.alpha_range if cfg.alpha_range else (1.0, 100.0)
    betas = cfg.beta_range if cfg.beta_range else (1.0, 100.0)
    rows = sweep_tradeoff(grid, cycle, alphas, betas,
                          samples=cfg.samples, jobs=cfg.jobs)
    _write_table(
        cfg.out_dir / "sweep.csv",
        ["expansion_cost", "storage_cost", "cost_ratio",
         "total_expansion_mw", "total_storage_mwh", "objective", "status"],
        rows,
    )
    if cfg.write_json:
        _write_json(cfg.out_dir / "sweep.json", {
            "rows": [
                {
                    "expansion_cost": r.expansion_cost,
                    "storage_cost": r.storage_cost,
                    "cost_ratio": r.cost_ratio,
                    "total_expansion_mw": None if np.isnan(r.total_expansion_mw)
                    else r.total_expansion_mw,
                    "total_storage_mwh": None if np.isnan(r.total_storage_mwh)
                    else r.total_storage_mwh,
                    "objective": None if np.isnan(r.objective) else r.objective,
                    "status": r.status,
                }
                for r in rows
            ],
        })
    good = sum(1 for r in rows if r.status == "optimal")
    print(f"sweep: {good}/{len(rows)} samples solved")
    return 0


def cmd_screen(cfg: RunConfig) -> int:
    grid, profiles = _load_inputs(cfg)
    screening = contingency_mod.screen_serious_days(compute_ptdf(grid), profiles)
    _write_table(
        cfg.out_dir / "screen_lines.csv",
        ["line_id", "serious_day", "mean_abs_flow_mw"],
        [(lid, int(screening.per_line_day[pos]), screening.per_line_value_mw[pos])
         for pos, lid in enumerate(grid.line_ids)],
    )
    _write_table(
        cfg.out_dir / "screen_days.csv",
        ["day", "label", "line_count"],
        [(day, profiles.labels[day], screening.day_frequency[day])
         for day in screening.serious_days],
    )
    if cfg.write_json:
        _write_json(cfg.out_dir / "screen.json", screening.as_dict(grid))
    days = ", ".join(str(d) for d in screening.serious_days)
    print(f"screen: {profiles.n_cycles} days -> {len(screening.serious_days)} serious ({days})")
    return 0


def cmd_contingency(cfg: RunConfig) -> int:
    grid, profiles = _load_inputs(cfg)
    baseline = None
    if cfg.baseline_path:
        baseline = _read_baseline(cfg.baseline_path, grid)
    report = contingency_mod.contingency_report(
        grid, profiles, contingency_type=cfg.contingency_type, baseline=baseline)

    _write_table(
        cfg.out_dir / "contingency_lines.csv",
        ["line_id", "requirement_mw", "base_mw", "line_trip_mw", "element_trip_mw",
         "worst_case_kind", "worst_case_day", "worst_case_id"],
        [(lid,
          report.requirement_mw[pos],
          report.base_requirement_mw[pos],
          None if report.line_trip_mw is None else report.line_trip_mw[pos],
          None if report.element_trip_mw is None else report.element_trip_mw[pos],
          report.worst_case[pos][0], report.worst_case[pos][1], report.worst_case[pos][2])
         for pos, lid in enumerate(report.line_ids)],
    )
    summary = [
        ("contingency_type", report.contingency_type),
        ("serious_days", " ".join(str(d) for d in report.serious_days)),
        ("total_requirement_mw", report.total_requirement_mw),
        ("islanding_line_ids", " ".join(str(i) for i in report.islanding_line_ids)),
        ("degenerate_cases", len(report.degenerate_cases)),
    ]
    if baseline is not None:
        summary.append(("total_baseline_mw", float(np.sum(baseline))))
        summary.append(("reduction_vs_baseline", report.reduction_vs_baseline))
    _write_table(cfg.out_dir / "contingency_summary.csv", ["quantity", "value"], summary)
    if report.degenerate_cases:
        _write_table(
            cfg.out_dir / "contingency_exclusions.csv",
            ["day", "bus_id", "reason"],
            list(report.degenerate_cases),
        )
    if cfg.write_json:
        _write_json(cfg.out_dir / "contingency.json", report.as_dict())
    print(f"contingency ({report.contingency_type}): "
          f"total requirement {report.total_requirement_mw:.6f} MW")
    if report.reduction_vs_baseline is not None:
        print(f"  reduction vs baseline: {100 * report.reduction_vs_baseline:.6f}%")
    return 0


def _read_baseline(path, grid) -> np.ndarray:
    """Baseline capacities: line_id,capacity_mw rows (header optional)."""
    values = {}
    with open(path, newline="") as fh:
        for cells in csv.reader(fh):
            cells = [c.strip() for c in cells]
            if not cells or not any(cells) or cells[0].startswith("#"):
                continue
            if cells[0].lower() in ("line_id", "line"):
                continue
            if len(cells) < 2:
                raise InputDataError(f"{path}: short baseline row {cells}")
            try:
                values[int(cells[0])] = float(cells[1])
            except ValueError as exc:
                raise InputDataError(f"{path}: bad baseline row {cells}: {exc}") from None
    missing = [lid for lid in grid.line_ids if lid not in values]
    if missing:
        raise BaselineDimensionMismatch(f"{path}: baseline misses lines {missing}")
    return np.array([values[lid] for lid in grid.line_ids])


def _parse_range(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return float(parts[0]), float(parts[1])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storplan",
        description="Storage-transmission co-planning toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--grid", required=True, help="grid description file")
        p.add_argument("--profiles", required=True, help="injection profile file")
        p.add_argument("--slots", type=int, required=True, metavar="N",
                       help="slots per cycle")
        p.add_argument("--slot-hours", type=float, default=1.0, metavar="H",
                       help="hours per slot (default 1)")
        p.add_argument("--ref-bus", default=None, help="reference bus id or name")
        p.add_argument("--out", default=".", metavar="DIR", help="output directory")
        p.add_argument("--json", action="store_true", help="also write structured output")
        p.add_argument("--jobs", type=int, default=1, metavar="K", help="worker cap")

    p = sub.add_parser("limits", help="closed-form sizing floors for one cycle")
    common(p)
    p.add_argument("--cycle", type=int, default=0, help="cycle index (default 0)")

    p = sub.add_parser("plan", help="solve a co-planning formulation")
    common(p)
    p.add_argument("--cycle", type=int, default=0)
    p.add_argument("--formulation", choices=sorted(_FORMULATION_ALIASES),
                   default="conventional")
    p.add_argument("--peak-reduction", type=float, default=None, metavar="R",
                   help="peak flow reduction fraction for peakmin")
    p.add_argument("--duration", type=float, default=None, metavar="HOURS",
                   help="storage power rating as capacity/duration")
    p.add_argument("--config", default=None, help="key=value planning options file")

    p = sub.add_parser("sweep", help="cost trade-off sweep of the investment LP")
    common(p)
    p.add_argument("--cycle", type=int, default=0)
    p.add_argument("--alpha-range", type=_parse_range, default=None, metavar="LO:HI",
                   help="line expansion cost range (log-spaced)")
    p.add_argument("--beta-range", type=_parse_range, default=None, metavar="LO:HI",
                   help="storage cost range (log-spaced)")
    p.add_argument("--samples", type=int, default=10, help="points per range")

    p = sub.add_parser("screen", help="serious-day screening over all cycles")
    common(p)

    p = sub.add_parser("contingency", help="N-1 requirements on serious days")
    common(p)
    p.add_argument("--type", choices=contingency_mod.CONTINGENCY_TYPES, default="both",
                   dest="contingency_type")
    p.add_argument("--baseline", default=None, help="line_id,capacity_mw comparison file")

    return parser


def _run_config(args) -> RunConfig:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan_config = None
    if getattr(args, "config", None):
        plan_config = PlanConfig.from_file(args.config)
    return RunConfig(
        grid_path=args.grid,
        profiles_path=args.profiles,
        n_slots=args.slots,
        slot_hours=args.slot_hours,
        ref_bus=args.ref_bus,
        out_dir=out_dir,
        write_json=args.json,
        jobs=args.jobs,
        cycle=getattr(args, "cycle", 0),
        formulation=getattr(args, "formulation", "conventional"),
        plan_config=plan_config,
        peak_reduction=getattr(args, "peak_reduction", None),
        duration=getattr(args, "duration", None),
        baseline_path=getattr(args, "baseline", None),
        contingency_type=getattr(args, "contingency_type", "both"),
        alpha_range=getattr(args, "alpha_range", None),
        beta_range=getattr(args, "beta_range", None),
        samples=getattr(args, "samples", 10),
    )


_COMMANDS = {
    "limits": cmd_limits,
    "plan": cmd_plan,
    "sweep": cmd_sweep,
    "screen": cmd_screen,
    "contingency": cmd_contingency,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        cfg = _run_config(args)
        return _COMMANDS[args.command](cfg)
    except InfeasibleModel as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return 3
    except NumericalBreakdown as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return 4
    except (InputDataError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StorplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
