"""Sweep the cost ratio between line expansion and storage.

Two mirror-image sawtooth buses: the generator pulses 200 MW exactly
when the load draws 200 MW. Wire-only planning needs a 200 MW line;
storage-heavy planning gets away with the 100 MW average. Sweeping the
expansion price shows the switch happens where one MW of line costs the
same as the two MWh of storage that replace it.

Also shown: why the *asymmetric* sawtooth (flat 100 MW load) has no
trade-off at all. Its slot-by-slot imbalance forces 100 MWh of storage
somewhere in the system no matter how big the line is, and that same
100 MWh already suffices at the 100 MW floor - so the planner never has
a reason to buy wire.
"""

import numpy as np

from storplan import Bus, CycleProfile, Line, build_grid, sweep_tradeoff

GRID = build_grid(
    [Bus(1, "gen"), Bus(2, "load")],
    [Line(1, 1, 2, reactance=0.1, capacity=0.0)],
    reference_bus=1,
)

SYNCED = CycleProfile(power=np.array([[200.0, 0.0, 200.0, 0.0],
                                      [-200.0, 0.0, -200.0, 0.0]]),
                      slot_hours=1.0)
ASYMMETRIC = CycleProfile(power=np.array([[200.0, 0.0, 200.0, 0.0],
                                          [-100.0, -100.0, -100.0, -100.0]]),
                          slot_hours=1.0)

rows = sweep_tradeoff(GRID, SYNCED, expansion_costs=(0.25, 16.0),
                      storage_costs=1.0, samples=13)

print("synced sawtooth: storage cost 1.0 /MWh, expansion cost swept")
print(f"{'alpha':>8} {'line MW':>9} {'storage MWh':>12} {'objective':>10}")
for r in rows:
    print(f"{r.expansion_cost:8.3f} {r.total_expansion_mw:9.1f} "
          f"{r.total_storage_mwh:12.1f} {r.objective:10.2f}")
print()
print("knee at alpha = 2: one MW of extra line replaces two MWh of storage")
print()

rows = sweep_tradeoff(GRID, ASYMMETRIC, expansion_costs=(0.25, 16.0),
                      storage_costs=1.0, samples=5)
print("asymmetric sawtooth: same sweep, no trade-off to find")
for r in rows:
    print(f"{r.expansion_cost:8.3f} {r.total_expansion_mw:9.1f} "
          f"{r.total_storage_mwh:12.1f}")
