"""Storage-transmission co-planning toolkit on lossless DC grids.

What storage buys a transmission planner, quantified three ways:

* closed-form floors: the smallest line rating that can still move a
  cycle's energy, and the smallest storage fleet that makes it work
  (:mod:`storplan.limits`),
* co-planning LPs trading line expansion against storage siting, with
  curtailment and shedding recourse (:mod:`storplan.plan`),
* serious-day screening and N-1 contingency requirements for multi-day
  datasets (:mod:`storplan.contingency`).
"""

from .errors import (
    BaselineDimensionMismatch,
    CurtailmentBoundViolation,
    DegenerateRebalance,
    DimensionMismatch,
    DisconnectedGraph,
    DuplicateId,
    InfeasibleModel,
    InputDataError,
    IslandingOutage,
    NonmonotoneTimestamps,
    NonpositiveReactance,
    NumericalBreakdown,
    RaggedSeries,
    SingularSusceptanceMatrix,
    SolutionInconsistency,
    StorplanError,
    UnknownBus,
    UnknownBusReference,
    ZeroMeanSeries,
)
from .grid import (
    Bus,
    GridModel,
    Line,
    PtdfMatrix,
    apply_line_outage,
    build_grid,
    compute_lodf,
    compute_ptdf,
    flows_from_injections,
    load_grid,
)
from .profiles import (
    BalanceCheck,
    CumulativeSeries,
    CycleProfile,
    MultiCycleProfile,
    balance_normalize,
    check_energy_balance,
    cumulative_energy,
    ingest_profile,
    net_cumulative_energy,
)
from .limits import (
    FlowSeries,
    LimitsReport,
    SocBalanceReport,
    StorageSizing,
    closedform_storage_at_min_line,
    limits_report,
    min_line_capacity,
    min_storage_given_flows,
    original_flows,
    total_min_storage,
    verify_soc_balance,
)
from .plan import (
    LpModel,
    PlanConfig,
    PlanSolution,
    RawSolution,
    SweepRow,
    build_conventional,
    build_reformulated,
    build_simplified,
    extract_plan,
    min_storage_for_peak_reduction,
    plan,
    solve,
    sweep_tradeoff,
    verify_plan,
)
from .contingency import (
    ContingencyReport,
    ElementTripResult,
    LineTripResult,
    ScreeningResult,
    contingency_report,
    element_trip_requirements,
    line_trip_requirements,
    rebalanced_injections,
    screen_serious_days,
)

__version__ = "0.1.0"
