"""Month-long planning study on the bundled six-bus dataset.

data/sixbus_grid.csv wires hydro, wind and solar to a city, a steel
mill and a suburb through a seven-line ring; data/sixbus_profile.csv
holds thirty days of hourly injections. The study below is the whole
toolkit end to end:

  1. screen the month down to the days that actually size each line,
  2. size every line for N-1 line trips and generator/load trips,
  3. ask how much storage buys a 5 / 20 / 40 % cut in every line's peak.

The same study is scriptable from the shell::

    python -m storplan.cli screen --grid data/sixbus_grid.csv \
        --profiles data/sixbus_profile.csv --slots 24 --out out/
"""

import numpy as np

from storplan import (
    InfeasibleModel,
    compute_ptdf,
    contingency_report,
    ingest_profile,
    load_grid,
    min_storage_for_peak_reduction,
    screen_serious_days,
)

# ----------------------------------------------------------------- load
grid = load_grid("data/sixbus_grid.csv")
profiles = ingest_profile("data/sixbus_profile.csv", grid, n_slots=24, slot_hours=1.0)
n_days = len(profiles.cycles)
print(f"{grid.n_buses} buses, {grid.n_lines} lines, "
      f"{n_days} days of {profiles.cycles[0].n_slots} hours")

# --------------------------------------------------------------- screen
ptdf = compute_ptdf(grid)
screening = screen_serious_days(ptdf, profiles)
print(f"\nserious days: {screening.serious_days} ({n_days} days screened)")
for pos, line in enumerate(grid.lines):
    print(f"  line {line.id} ({line.from_bus}-{line.to_bus}): worst day "
          f"{screening.per_line_day[pos]:3d}, "
          f"mean |flow| {screening.per_line_value_mw[pos]:7.3f} MW")

# ---------------------------------------------------------- contingency
report = contingency_report(grid, profiles, "both", screening=screening)
print("\nN-1 requirement per line (MW):")
for pos, line in enumerate(grid.lines):
    kind, day, cause = report.worst_case[pos]
    worst = {"base": "no outage",
             "line-trip": f"trip of line {cause}",
             "element-trip": f"trip of bus {cause}"}[kind]
    print(f"  line {line.id}: {report.requirement_mw[pos]:8.3f} "
          f"(base {report.base_requirement_mw[pos]:7.3f}, "
          f"worst: {worst} on day {day})")
print(f"total requirement: {report.total_requirement_mw:.3f} MW")
if report.degenerate_cases:
    skipped = sorted({bus for _, bus, _ in report.degenerate_cases})
    print(f"skipped degenerate bus trips at buses {skipped}")

# ---------------------------------------------------- peak-cut study
# One storage fleet must clear every day, so size it on each serious
# day separately and keep the most demanding answer.
print("\nstorage needed to cut every line peak on every serious day:")
for fraction in (0.05, 0.20, 0.40):
    need, verdicts = 0.0, []
    for day in screening.serious_days:
        try:
            sol = min_storage_for_peak_reduction(grid, profiles.cycles[day], fraction)
            need = max(need, sol.total_storage_mwh)
        except InfeasibleModel as err:
            verdicts.append(f"day {day}: {err}")
    if verdicts:
        print(f"  {fraction:4.0%}: impossible - {verdicts[0]}")
    else:
        print(f"  {fraction:4.0%}: {need:8.3f} MWh")
