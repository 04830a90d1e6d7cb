"""Race the three co-planning formulations on a random meshed grid.

All three price line expansion against storage capacity on a DC grid:

* ``conventional``  - hourly power variables, the direct transcription
* ``reformulated``  - cumulative-energy variables, fewer rows
* ``simplified``    - cumulative energies with delivery pinned to the
  profile (no curtailment/shedding recourse), the cheapest of the three

The first two are equivalent by construction and should agree to solver
precision. The simplified one agrees whenever recourse is not worth
buying. It also refuses cycles whose energy does not balance - shown at
the end, where the conventional model curtails the surplus instead.
"""

import time

import numpy as np

from storplan import Bus, CycleProfile, InfeasibleModel, Line, PlanConfig, build_grid, plan


def random_case(seed, n_buses=12, n_slots=48):
    rng = np.random.default_rng(seed)
    buses = [Bus(i + 1, f"bus{i+1}") for i in range(n_buses)]
    lines = []
    for i in range(1, n_buses):
        j = int(rng.integers(0, i))
        lines.append(Line(len(lines) + 1, j + 1, i + 1,
                          reactance=float(rng.uniform(0.05, 0.6))))
    for _ in range(4):
        a, b = rng.choice(n_buses, size=2, replace=False)
        lines.append(Line(len(lines) + 1, int(a) + 1, int(b) + 1,
                          reactance=float(rng.uniform(0.05, 0.6))))
    grid = build_grid(buses, lines, reference_bus=1)
    power = rng.normal(scale=35.0, size=(n_buses, n_slots))
    power -= power.mean()          # balance the whole cycle
    power -= power.mean(axis=0)    # ...and every slot
    return grid, CycleProfile(power=power, slot_hours=1.0)


def main():
    grid, profile = random_case(seed=3)
    print(f"case: {grid.n_buses} buses, {grid.n_lines} lines, "
          f"{profile.n_slots} slots\n")

    results = {}
    for name in ("conventional", "reformulated", "simplified"):
        cfg = PlanConfig(formulation=name, expansion_cost=3.0, storage_cost=1.0,
                         curtail_cost=2000.0, shed_cost=4000.0)
        t0 = time.perf_counter()
        sol = plan(grid, profile, cfg)
        dt = time.perf_counter() - t0
        results[name] = sol
        print(f"{name:14s} objective {sol.objective:14.6f}   "
              f"expansion {sol.total_expansion_mw:9.3f} MW   "
              f"storage {sol.total_storage_mwh:9.3f} MWh   ({dt*1e3:6.1f} ms)")

    gap = abs(results["conventional"].objective - results["reformulated"].objective)
    print(f"\nconventional vs reformulated gap: {gap:.2e}")

    # an unbalanced cycle: 20 MWh of surplus that no cyclic battery can hold
    surplus = CycleProfile(power=np.array([[110.0, 110.0], [-100.0, -100.0]]),
                           slot_hours=1.0)
    small = build_grid([Bus(1, "g"), Bus(2, "d")],
                       [Line(1, 1, 2, reactance=0.1)], reference_bus=1)
    try:
        plan(small, surplus, PlanConfig(formulation="simplified",
                                        expansion_cost=1.0, storage_cost=1.0))
    except InfeasibleModel as err:
        print(f"\nsimplified on a 20 MWh surplus cycle: {err}")
    sol = plan(small, surplus, PlanConfig(formulation="conventional",
                                          expansion_cost=1.0, storage_cost=1.0,
                                          curtail_cost=10.0, shed_cost=10.0))
    print(f"conventional curtails {sol.curtailment_mwh:.1f} MWh and carries on")


if __name__ == "__main__":
    main()
