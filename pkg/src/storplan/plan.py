"""Co-planning LPs: line expansion and storage siting on a DC grid.

Three equivalent formulations are provided. The "conventional" one keeps
the storage state of charge as an explicit variable and derives line
flows from nodal injections through the PTDF map. The "reformulated" one
works in the cumulative-energy domain with flows as decision variables;
per-slot loop-consistency rows keep those flows physically realizable, so
the two share an optimum by construction. The "simplified" variant drops
the curtailment/shedding recourse (delivery is pinned to the profile) and
minimizes investment cost alone.

All models are plain sparse LPs solved through scipy's HiGHS interface.
Solver output is never trusted blindly: every extracted plan is re-checked
against the physical constraint set independently of the solver.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .errors import (
    DimensionMismatch,
    InfeasibleModel,
    NumericalBreakdown,
    SolutionInconsistency,
)
from .grid import GridModel, compute_ptdf
from .limits import FlowSeries, min_line_capacity, min_storage_given_flows, original_flows
from .profiles import CycleProfile, net_cumulative_energy

logger = logging.getLogger(__name__)

__all__ = [
    "PlanConfig",
    "LpModel",
    "RawSolution",
    "PlanSolution",
    "SweepRow",
    "build_conventional",
    "build_reformulated",
    "build_simplified",
    "solve",
    "extract_plan",
    "verify_plan",
    "plan",
    "sweep_tradeoff",
    "min_storage_for_peak_reduction",
]

FORMULATIONS = ("conventional", "reformulated", "simplified", "min-storage-peak-reduction")

_COEF_CUT = 1e-12            # drop matrix entries below this when assembling rows


@dataclass(frozen=True)
class PlanConfig:
    """Options shared by the planning formulations.

    Cost overrides replace the per-bus/per-line objective weights from the
    grid file; scalars broadcast, sequences must match the grid. A
    ``storage_power_duration`` of d hours limits each battery's charge and
    discharge rate to capacity/d. ``relaxed_line_limits`` drops the line
    rating constraints entirely (useful for computing storage floors);
    ``transport_model`` drops the loop-consistency rows so flows are bound
    only by ratings, which is not physical on meshed grids.
    """

    formulation: str = "conventional"
    storage_power_duration: float | None = None
    peak_reduction_fraction: float | None = None
    relaxed_line_limits: bool = False
    transport_model: bool = False
    expansion_cost: object = None
    storage_cost: object = None
    curtail_cost: object = None
    shed_cost: object = None

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(
                f"unknown formulation {self.formulation!r}; expected one of {FORMULATIONS}"
            )
        if self.peak_reduction_fraction is not None:
            if self.formulation != "min-storage-peak-reduction":
                raise ValueError(
                    "peak_reduction_fraction only applies to the "
                    "min-storage-peak-reduction formulation"
                )
            if not (0.0 <= self.peak_reduction_fraction < 1.0):
                raise ValueError("peak_reduction_fraction must lie in [0, 1)")
        elif self.formulation == "min-storage-peak-reduction":
            raise ValueError("min-storage-peak-reduction needs peak_reduction_fraction")
        if self.storage_power_duration is not None and not self.storage_power_duration > 0:
            raise ValueError("storage_power_duration must be positive")
        if self.transport_model and self.formulation == "conventional":
            raise ValueError(
                "transport_model does not apply to the conventional formulation; "
                "its flows are always PTDF-consistent"
            )

    @classmethod
    def from_file(cls, path) -> "PlanConfig":
        """Read options from a plain key=value text file ('#' comments)."""
        known = {f.name: f for f in fields(cls)}
        values: dict = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                text = raw.split("#", 1)[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    raise ValueError(f"{path}:{lineno}: expected key=value, got {text!r}")
                key, _, val = text.partition("=")
                key, val = key.strip(), val.strip()
                if key not in known:
                    raise ValueError(f"{path}:{lineno}: unknown option {key!r}")
                values[key] = _parse_config_value(key, val)
        return cls(**values)


def _parse_config_value(key, val):
    low = val.lower()
    if low in ("none", "null", ""):
        return None
    if key == "formulation":
        return val
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    return float(val)


# ---------------------------------------------------------------------------
# generic LP container
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class LpModel:
    """A sparse LP assembled block by block.

    Variables are declared in named blocks (optionally shaped); each block
    returns an index array so constraint rows can be written directly in
    terms of model coordinates. Rows carry a relation in {'<=', '>=', '=='}
    and a label used in diagnostics.
    """

    name: str
    meta: dict = field(default_factory=dict)
    objective_offset: float = 0.0

    def __post_init__(self):
        self.blocks: dict[str, tuple[int, tuple]] = {}
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._cost: list[np.ndarray] = []
        self._n = 0
        self.rows: list[tuple[np.ndarray, np.ndarray, str, float, str]] = []

    @property
    def n_variables(self) -> int:
        return self._n

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def add_block(self, name: str, shape, lb=0.0, ub=np.inf, cost=0.0) -> np.ndarray:
        """Declare a variable block; returns its index array (shaped)."""
        if name in self.blocks:
            raise ValueError(f"variable block {name!r} already declared")
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        size = int(np.prod(shape))
        self.blocks[name] = (self._n, shape)
        for store, val in ((self._lb, lb), (self._ub, ub), (self._cost, cost)):
            arr = np.broadcast_to(np.asarray(val, dtype=float), shape).reshape(size)
            store.append(np.array(arr))
        idx = np.arange(self._n, self._n + size).reshape(shape)
        self._n += size
        return idx

    def indices(self, name: str) -> np.ndarray:
        start, shape = self.blocks[name]
        return np.arange(start, start + int(np.prod(shape))).reshape(shape)

    def add_row(self, idx, coef, sense: str, rhs: float, label: str = "") -> None:
        idx = np.asarray(idx, dtype=int).ravel()
        coef = np.asarray(coef, dtype=float).ravel()
        if idx.shape != coef.shape:
            raise ValueError(f"row {label!r}: index/coefficient length mismatch")
        if idx.size and (idx.min() < 0 or idx.max() >= self._n):
            raise ValueError(f"row {label!r} references undeclared variables")
        if sense not in ("<=", ">=", "=="):
            raise ValueError(f"row {label!r}: bad sense {sense!r}")
        keep = np.abs(coef) > _COEF_CUT
        self.rows.append((idx[keep], coef[keep], sense, float(rhs), label))

    def bounds(self):
        lb = np.concatenate(self._lb) if self._lb else np.empty(0)
        ub = np.concatenate(self._ub) if self._ub else np.empty(0)
        return lb, ub

    def cost_vector(self) -> np.ndarray:
        return np.concatenate(self._cost) if self._cost else np.empty(0)

    def to_arrays(self):
        """Return (c, A_ub, b_ub, A_eq, b_eq, bounds) in scipy form."""
        ub_i, ub_j, ub_v, ub_rhs = [], [], [], []
        eq_i, eq_j, eq_v, eq_rhs = [], [], [], []
        for idx, coef, sense, rhs, _ in self.rows:
            if sense == "==":
                eq_i.append(np.full(idx.size, len(eq_rhs)))
                eq_j.append(idx)
                eq_v.append(coef)
                eq_rhs.append(rhs)
            else:
                sign = 1.0 if sense == "<=" else -1.0
                ub_i.append(np.full(idx.size, len(ub_rhs)))
                ub_j.append(idx)
                ub_v.append(sign * coef)
                ub_rhs.append(sign * rhs)

        def build(ii, jj, vv, rhs):
            if not rhs:
                return None, None
            mat = coo_matrix(
                (np.concatenate(vv), (np.concatenate(ii), np.concatenate(jj))),
                shape=(len(rhs), self._n),
            ).tocsr()
            return mat, np.asarray(rhs)

        a_ub, b_ub = build(ub_i, ub_j, ub_v, ub_rhs)
        a_eq, b_eq = build(eq_i, eq_j, eq_v, eq_rhs)
        lb, ub = self.bounds()
        return self.cost_vector(), a_ub, b_ub, a_eq, b_eq, np.column_stack([lb, ub])


@dataclass(eq=False)
class RawSolution:
    """Solver output before any interpretation."""

    status: str
    x: np.ndarray | None
    objective: float | None
    message: str
    model: LpModel
    inequality_marginals: np.ndarray | None = None
    equality_marginals: np.ndarray | None = None
    max_residual: float = 0.0


def solve(model: LpModel, tolerances: dict | None = None) -> RawSolution:
    """Solve an :class:`LpModel` with HiGHS and report a clean status.

    The returned status is one of 'optimal', 'infeasible' or 'unbounded';
    solver failures (iteration limits, numerical trouble, sloppy primal
    residuals) raise :class:`NumericalBreakdown` instead of being passed
    off as results.
    """
    c, a_ub, b_ub, a_eq, b_eq, bounds = model.to_arrays()
    options = {"presolve": True}
    for key, val in (tolerances or {}).items():
        name = {
            "primal": "primal_feasibility_tolerance",
            "dual": "dual_feasibility_tolerance",
        }.get(key, key)
        options[name] = val

    res = linprog(
        c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
        bounds=bounds, method="highs", options=options,
    )

    if res.status == 2:
        return RawSolution("infeasible", None, None, res.message, model)
    if res.status == 3:
        return RawSolution("unbounded", None, None, res.message, model)
    if res.status != 0:
        raise NumericalBreakdown(f"{model.name}: solver failed: {res.message}")

    x = np.asarray(res.x, dtype=float)
    worst = _primal_residual(x, a_ub, b_ub, a_eq, b_eq, bounds)
    if worst > 1e-7:
        raise NumericalBreakdown(
            f"{model.name}: solution violates constraints by {worst:.3e} (scaled)"
        )
    ineq_marg = getattr(getattr(res, "ineqlin", None), "marginals", None)
    eq_marg = getattr(getattr(res, "eqlin", None), "marginals", None)
    return RawSolution(
        status="optimal",
        x=x,
        objective=float(res.fun) + model.objective_offset,
        message=res.message,
        model=model,
        inequality_marginals=None if ineq_marg is None else np.asarray(ineq_marg),
        equality_marginals=None if eq_marg is None else np.asarray(eq_marg),
        max_residual=worst,
    )


def _primal_residual(x, a_ub, b_ub, a_eq, b_eq, bounds) -> float:
    """Largest scaled constraint violation of x."""
    worst = 0.0
    if a_ub is not None:
        gap = a_ub @ x - b_ub
        worst = max(worst, float(np.max(gap / (1.0 + np.abs(b_ub)), initial=0.0)))
    if a_eq is not None:
        gap = np.abs(a_eq @ x - b_eq)
        worst = max(worst, float(np.max(gap / (1.0 + np.abs(b_eq)), initial=0.0)))
    lb, ub = bounds[:, 0], bounds[:, 1]
    lo = np.isfinite(lb)
    if np.any(lo):
        worst = max(worst, float(np.max((lb[lo] - x[lo]) / (1.0 + np.abs(lb[lo])), initial=0.0)))
    hi = np.isfinite(ub)
    if np.any(hi):
        worst = max(worst, float(np.max((x[hi] - ub[hi]) / (1.0 + np.abs(ub[hi])), initial=0.0)))
    return worst


# ---------------------------------------------------------------------------
# formulation builders
# ---------------------------------------------------------------------------

def _resolve_costs(grid: GridModel, config: PlanConfig):
    def expand(override, default, count, what):
        if override is None:
            return np.asarray(default, dtype=float)
        arr = np.asarray(override, dtype=float)
        if arr.ndim == 0:
            return np.full(count, float(arr))
        if arr.shape != (count,):
            raise DimensionMismatch(f"{what} override has shape {arr.shape}, expected ({count},)")
        return arr

    alpha = expand(config.expansion_cost, [ln.expansion_cost for ln in grid.lines],
                   grid.n_lines, "expansion cost")
    beta = expand(config.storage_cost, [b.storage_cost for b in grid.buses],
                  grid.n_buses, "storage cost")
    gplus = expand(config.curtail_cost, [b.curtail_cost for b in grid.buses],
                   grid.n_buses, "curtailment cost")
    gminus = expand(config.shed_cost, [b.shed_cost for b in grid.buses],
                    grid.n_buses, "shed cost")
    return alpha, beta, gplus, gminus


def _check_profile(grid: GridModel, profile: CycleProfile):
    if profile.n_buses != grid.n_buses:
        raise DimensionMismatch(
            f"profile covers {profile.n_buses} buses, grid has {grid.n_buses}"
        )


def _loop_basis(ptdf_values: np.ndarray, incidence: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the flow-consistency constraints.

    A flow vector is realizable as the PTDF image of some injection iff it
    is a fixed point of H A^T; the rows returned here span the row space
    of (I - H A^T), so V f = 0 is exactly that condition. Radial grids
    yield an empty basis.
    """
    n_lines = ptdf_values.shape[0]
    k = np.eye(n_lines) - ptdf_values @ incidence.T
    if n_lines == 0:
        return np.empty((0, 0))
    _, sing, vh = np.linalg.svd(k)
    rank = int(np.sum(sing > 1e-9 * max(1.0, sing[0] if sing.size else 1.0)))
    return vh[:rank]


def build_conventional(grid: GridModel, profile: CycleProfile,
                       config: PlanConfig | None = None) -> LpModel:
    """Planning LP with explicit state-of-charge variables.

    Flows are the PTDF image of the net delivered injection plus the
    storage exchange (x[t-1] - x[t]) / h, and every slot carries a
    system-wide balance row: without it the reference bus would act as an
    unpriced infinite source and the storage accounting would not close
    there.
    """
    config = config or PlanConfig(formulation="conventional")
    _check_profile(grid, profile)
    n_b, n_t, n_l = grid.n_buses, profile.n_slots, grid.n_lines
    h = profile.slot_hours
    alpha, beta, gplus, gminus = _resolve_costs(grid, config)
    avail_p, avail_m = profile.available_plus(), profile.available_minus()
    ptdf = compute_ptdf(grid)
    hmat = ptdf.values
    ratings = grid.existing_capacities()

    m = LpModel("conventional", meta={
        "formulation": "conventional", "grid": grid, "profile": profile,
        "config": config, "ptdf": ptdf,
        "costs": (alpha, beta, gplus, gminus),
    })
    i_c = m.add_block("line_expansion", n_l, 0.0, np.inf, alpha)
    i_s = m.add_block("storage_capacity", n_b, 0.0, np.inf, beta)
    i_x0 = m.add_block("initial_soc", n_b, 0.0, np.inf, 0.0)
    i_x = m.add_block("soc", (n_b, n_t), 0.0, np.inf, 0.0)
    i_pp = m.add_block("delivered_plus", (n_b, n_t), 0.0, avail_p,
                       np.broadcast_to((-h * gplus)[:, None], (n_b, n_t)))
    i_pm = m.add_block("delivered_minus", (n_b, n_t), 0.0, avail_m,
                       np.broadcast_to((-h * gminus)[:, None], (n_b, n_t)))
    m.objective_offset = float(h * np.sum(gplus[:, None] * avail_p + gminus[:, None] * avail_m))

    ones = np.ones(n_b)
    for i in range(n_b):
        for t in range(n_t):
            m.add_row([i_x[i, t], i_s[i]], [1.0, -1.0], "<=", 0.0, f"soc_cap[{i},{t}]")
        m.add_row([i_x0[i], i_s[i]], [1.0, -1.0], "<=", 0.0, f"soc_cap0[{i}]")
        m.add_row([i_x[i, n_t - 1], i_x0[i]], [1.0, -1.0], "==", 0.0, f"cyclic[{i}]")

    for t in range(n_t):
        prev = i_x0 if t == 0 else i_x[:, t - 1]
        # one balance row per slot: delivered net injection plus storage swing
        idx = np.concatenate([i_pp[:, t], i_pm[:, t], prev, i_x[:, t]])
        coef = np.concatenate([ones, -ones, ones / h, -ones / h])
        m.add_row(idx, coef, "==", 0.0, f"system_balance[{t}]")

        if not config.relaxed_line_limits:
            for line in range(n_l):
                hrow = hmat[line]
                nz = np.nonzero(np.abs(hrow) > _COEF_CUT)[0]
                if nz.size == 0:
                    continue
                hv = hrow[nz]
                idx = np.concatenate([i_pp[nz, t], i_pm[nz, t], prev[nz], i_x[nz, t], [i_c[line]]])
                coef = np.concatenate([hv, -hv, hv / h, -hv / h, [-1.0]])
                m.add_row(idx, coef, "<=", ratings[line], f"flow_hi[{line},{t}]")
                coef = np.concatenate([-hv, hv, -hv / h, hv / h, [-1.0]])
                m.add_row(idx, coef, "<=", ratings[line], f"flow_lo[{line},{t}]")

        if config.storage_power_duration is not None:
            rate = h / config.storage_power_duration
            for i in range(n_b):
                idx = [i_x[i, t], prev[i], i_s[i]]
                m.add_row(idx, [1.0, -1.0, -rate], "<=", 0.0, f"charge_rate[{i},{t}]")
                m.add_row(idx, [-1.0, 1.0, -rate], "<=", 0.0, f"discharge_rate[{i},{t}]")

    return m


def _incident_lines(grid: GridModel):
    """Per bus: (line positions, orientation signs) of incident lines."""
    inc = grid.incidence()
    out = []
    for i in range(grid.n_buses):
        nz = np.nonzero(np.abs(inc[:, i]) > 0.5)[0]
        out.append((nz, inc[nz, i]))
    return out


def build_reformulated(grid: GridModel, profile: CycleProfile,
                       config: PlanConfig | None = None) -> LpModel:
    """Planning LP in the cumulative-energy domain.

    State of charge is eliminated: the bus's running imbalance
    (delivered energy minus exported energy) plus the initial charge must
    stay in [0, capacity], and the cycle closes through a terminal
    equality per bus. Flows are decision variables tied to physics by
    loop-consistency rows.
    """
    config = config or PlanConfig(formulation="reformulated")
    _check_profile(grid, profile)
    n_b, n_t, n_l = grid.n_buses, profile.n_slots, grid.n_lines
    h = profile.slot_hours
    alpha, beta, gplus, gminus = _resolve_costs(grid, config)
    avail_p, avail_m = profile.available_plus(), profile.available_minus()
    ptdf = compute_ptdf(grid)
    ratings = grid.existing_capacities()
    incident = _incident_lines(grid)

    m = LpModel("reformulated", meta={
        "formulation": "reformulated", "grid": grid, "profile": profile,
        "config": config, "ptdf": ptdf,
        "costs": (alpha, beta, gplus, gminus),
    })
    i_c = m.add_block("line_expansion", n_l, 0.0, np.inf, alpha)
    i_s = m.add_block("storage_capacity", n_b, 0.0, np.inf, beta)
    i_x0 = m.add_block("initial_soc", n_b, 0.0, np.inf, 0.0)
    i_f = m.add_block("flow", (n_l, n_t), -np.inf, np.inf, 0.0)
    i_pp = m.add_block("delivered_plus", (n_b, n_t), 0.0, avail_p,
                       np.broadcast_to((-h * gplus)[:, None], (n_b, n_t)))
    i_pm = m.add_block("delivered_minus", (n_b, n_t), 0.0, avail_m,
                       np.broadcast_to((-h * gminus)[:, None], (n_b, n_t)))
    i_e = m.add_block("delivered_energy", (n_b, n_t), -np.inf, np.inf, 0.0)
    i_cf = m.add_block("transfer", (n_l, n_t), -np.inf, np.inf, 0.0)
    m.objective_offset = float(h * np.sum(gplus[:, None] * avail_p + gminus[:, None] * avail_m))

    for i in range(n_b):
        for t in range(n_t):
            if t == 0:
                m.add_row([i_e[i, 0], i_pp[i, 0], i_pm[i, 0]], [1.0, -h, h],
                          "==", 0.0, f"energy_def[{i},0]")
            else:
                m.add_row([i_e[i, t], i_e[i, t - 1], i_pp[i, t], i_pm[i, t]],
                          [1.0, -1.0, -h, h], "==", 0.0, f"energy_def[{i},{t}]")

    for line in range(n_l):
        for t in range(n_t):
            if t == 0:
                m.add_row([i_cf[line, 0], i_f[line, 0]], [1.0, -h],
                          "==", 0.0, f"transfer_def[{line},0]")
            else:
                m.add_row([i_cf[line, t], i_cf[line, t - 1], i_f[line, t]],
                          [1.0, -1.0, -h], "==", 0.0, f"transfer_def[{line},{t}]")

    for i in range(n_b):
        lines_i, signs_i = incident[i]
        for t in range(n_t):
            idx = np.concatenate([[i_x0[i], i_e[i, t]], i_cf[lines_i, t]])
            coef = np.concatenate([[1.0, 1.0], -signs_i])
            m.add_row(idx, coef, ">=", 0.0, f"soc_floor[{i},{t}]")
            idx = np.concatenate([[i_s[i], i_x0[i], i_e[i, t]], i_cf[lines_i, t]])
            coef = np.concatenate([[1.0, -1.0, -1.0], signs_i])
            m.add_row(idx, coef, ">=", 0.0, f"soc_cap[{i},{t}]")
        idx = np.concatenate([[i_e[i, n_t - 1]], i_cf[lines_i, n_t - 1]])
        coef = np.concatenate([[1.0], -signs_i])
        m.add_row(idx, coef, "==", 0.0, f"terminal[{i}]")

    if not config.relaxed_line_limits:
        for line in range(n_l):
            for t in range(n_t):
                m.add_row([i_f[line, t], i_c[line]], [1.0, -1.0], "<=",
                          ratings[line], f"flow_hi[{line},{t}]")
                m.add_row([i_f[line, t], i_c[line]], [-1.0, -1.0], "<=",
                          ratings[line], f"flow_lo[{line},{t}]")

    if not config.transport_model:
        basis = _loop_basis(ptdf.values, grid.incidence())
        for r, row in enumerate(basis):
            nz = np.nonzero(np.abs(row) > _COEF_CUT)[0]
            for t in range(n_t):
                m.add_row(i_f[nz, t], row[nz], "==", 0.0, f"loop[{r},{t}]")

    if config.storage_power_duration is not None:
        rate = h / config.storage_power_duration
        for i in range(n_b):
            lines_i, signs_i = incident[i]
            for t in range(n_t):
                # SoC swing this slot: h (delivered net - exported flow)
                idx = np.concatenate([[i_pp[i, t], i_pm[i, t]], i_f[lines_i, t], [i_s[i]]])
                coef = np.concatenate([[h, -h], -h * signs_i, [-rate]])
                m.add_row(idx, coef, "<=", 0.0, f"charge_rate[{i},{t}]")
                coef = np.concatenate([[-h, h], h * signs_i, [-rate]])
                m.add_row(idx, coef, "<=", 0.0, f"discharge_rate[{i},{t}]")

    return m


def build_simplified(grid: GridModel, profile: CycleProfile,
                     config: PlanConfig | None = None,
                     capacity_override: np.ndarray | None = None,
                     fix_expansion: bool = False) -> LpModel:
    """Investment-only LP with delivery pinned to the profile.

    The curtailment/shedding recourse is removed, so the model is feasible
    only for cycles whose total energy balances. ``capacity_override``
    replaces the existing line ratings and ``fix_expansion`` pins the
    expansion variables at zero (both used by the peak-reduction study).
    """
    config = config or PlanConfig(formulation="simplified")
    _check_profile(grid, profile)
    n_b, n_t, n_l = grid.n_buses, profile.n_slots, grid.n_lines
    h = profile.slot_hours
    alpha, beta, _, _ = _resolve_costs(grid, config)
    ptdf = compute_ptdf(grid)
    ratings = grid.existing_capacities() if capacity_override is None \
        else np.asarray(capacity_override, dtype=float)
    if ratings.shape != (n_l,):
        raise DimensionMismatch(f"capacity override must have shape ({n_l},)")
    incident = _incident_lines(grid)
    energy = h * np.cumsum(profile.power, axis=1)    # fixed delivered energy

    m = LpModel("simplified", meta={
        "formulation": config.formulation, "grid": grid, "profile": profile,
        "config": config, "ptdf": ptdf, "ratings": ratings,
        "costs": (alpha, beta, np.zeros(n_b), np.zeros(n_b)),
    })
    i_c = m.add_block("line_expansion", n_l, 0.0, 0.0 if fix_expansion else np.inf, alpha)
    i_s = m.add_block("storage_capacity", n_b, 0.0, np.inf, beta)
    i_x0 = m.add_block("initial_soc", n_b, 0.0, np.inf, 0.0)
    i_f = m.add_block("flow", (n_l, n_t), -np.inf, np.inf, 0.0)
    i_cf = m.add_block("transfer", (n_l, n_t), -np.inf, np.inf, 0.0)

    for line in range(n_l):
        for t in range(n_t):
            if t == 0:
                m.add_row([i_cf[line, 0], i_f[line, 0]], [1.0, -h],
                          "==", 0.0, f"transfer_def[{line},0]")
            else:
                m.add_row([i_cf[line, t], i_cf[line, t - 1], i_f[line, t]],
                          [1.0, -1.0, -h], "==", 0.0, f"transfer_def[{line},{t}]")

    for i in range(n_b):
        lines_i, signs_i = incident[i]
        for t in range(n_t):
            idx = np.concatenate([[i_x0[i]], i_cf[lines_i, t]])
            m.add_row(idx, np.concatenate([[1.0], -signs_i]), ">=",
                      -energy[i, t], f"soc_floor[{i},{t}]")
            idx = np.concatenate([[i_s[i], i_x0[i]], i_cf[lines_i, t]])
            m.add_row(idx, np.concatenate([[1.0, -1.0], signs_i]), ">=",
                      energy[i, t], f"soc_cap[{i},{t}]")
        m.add_row(i_cf[lines_i, n_t - 1], signs_i, "==",
                  energy[i, n_t - 1], f"terminal[{i}]")

    if not config.relaxed_line_limits:
        for line in range(n_l):
            for t in range(n_t):
                m.add_row([i_f[line, t], i_c[line]], [1.0, -1.0], "<=",
                          ratings[line], f"flow_hi[{line},{t}]")
                m.add_row([i_f[line, t], i_c[line]], [-1.0, -1.0], "<=",
                          ratings[line], f"flow_lo[{line},{t}]")

    if not config.transport_model:
        basis = _loop_basis(ptdf.values, grid.incidence())
        for r, row in enumerate(basis):
            nz = np.nonzero(np.abs(row) > _COEF_CUT)[0]
            for t in range(n_t):
                m.add_row(i_f[nz, t], row[nz], "==", 0.0, f"loop[{r},{t}]")

    if config.storage_power_duration is not None:
        rate = h / config.storage_power_duration
        for i in range(n_b):
            lines_i, signs_i = incident[i]
            for t in range(n_t):
                idx = np.concatenate([i_f[lines_i, t], [i_s[i]]])
                m.add_row(idx, np.concatenate([-h * signs_i, [-rate]]), "<=",
                          -h * profile.power[i, t], f"charge_rate[{i},{t}]")
                m.add_row(idx, np.concatenate([h * signs_i, [-rate]]), "<=",
                          h * profile.power[i, t], f"discharge_rate[{i},{t}]")

    return m


# ---------------------------------------------------------------------------
# solution extraction and independent verification
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PlanSolution:
    """A verified planning solution in physical quantities."""

    formulation: str
    objective: float
    line_expansion_mw: np.ndarray
    storage_capacity_mwh: np.ndarray
    initial_soc_mwh: np.ndarray
    soc_trajectory_mwh: np.ndarray
    flows_mw: np.ndarray
    delivered_plus_mw: np.ndarray
    delivered_minus_mw: np.ndarray
    curtailment_mwh: float
    shed_mwh: float
    reference_bus: int
    duals: dict | None = None
    solver_message: str = ""

    @property
    def total_expansion_mw(self) -> float:
        return float(np.sum(self.line_expansion_mw))

    @property
    def total_storage_mwh(self) -> float:
        return float(np.sum(self.storage_capacity_mwh))

    def as_dict(self, grid: GridModel | None = None) -> dict:
        out = {
            "formulation": self.formulation,
            "objective": float(self.objective),
            "reference_bus": self.reference_bus,
            "total_expansion_mw": self.total_expansion_mw,
            "total_storage_mwh": self.total_storage_mwh,
            "curtailment_mwh": float(self.curtailment_mwh),
            "shed_mwh": float(self.shed_mwh),
            "line_expansion_mw": [float(v) for v in self.line_expansion_mw],
            "storage_capacity_mwh": [float(v) for v in self.storage_capacity_mwh],
            "initial_soc_mwh": [float(v) for v in self.initial_soc_mwh],
            "soc_trajectory_mwh": [[float(v) for v in row] for row in self.soc_trajectory_mwh],
            "flows_mw": [[float(v) for v in row] for row in self.flows_mw],
        }
        if grid is not None:
            out["line_ids"] = list(grid.line_ids)
            out["bus_ids"] = list(grid.bus_ids)
        return out


def extract_plan(raw: RawSolution, grid: GridModel | None = None,
                 profile: CycleProfile | None = None) -> PlanSolution:
    """Turn a raw solver vector into a verified :class:`PlanSolution`.

    Infeasible solves raise :class:`InfeasibleModel`. Buses planned with a
    zero storage-cost weight get their reported capacity tightened to the
    exact requirement implied by the solved flows, since the solver has no
    incentive to shrink a free variable. Every extracted plan must pass
    :func:`verify_plan`.
    """
    model = raw.model
    grid = grid or model.meta["grid"]
    profile = profile or model.meta["profile"]
    config: PlanConfig = model.meta["config"]
    formulation = model.meta["formulation"]
    if raw.status == "infeasible":
        raise InfeasibleModel(f"{model.name}: {raw.message}")
    if raw.status != "optimal":
        raise ValueError(f"cannot extract a plan from a {raw.status} solve")

    x = raw.x
    h = profile.slot_hours
    # these variables are bounded below by zero; the solver may return
    # values a hair under it (or IEEE negative zero), so clamp for output
    expansion = np.maximum(x[model.indices("line_expansion")], 0.0)
    capacity = np.maximum(x[model.indices("storage_capacity")], 0.0)
    initial = np.maximum(x[model.indices("initial_soc")], 0.0)

    if formulation == "conventional":
        soc = x[model.indices("soc")]
        dp = x[model.indices("delivered_plus")]
        dm = x[model.indices("delivered_minus")]
        prev = np.concatenate([initial[:, None], soc[:, :-1]], axis=1)
        injections = dp - dm + (prev - soc) / h
        flows = model.meta["ptdf"].values @ injections
    else:
        flows = x[model.indices("flow")]
        if "delivered_plus" in model.blocks:
            dp = x[model.indices("delivered_plus")]
            dm = x[model.indices("delivered_minus")]
        else:
            dp, dm = profile.available_plus(), profile.available_minus()
        transfer = grid.incidence().T @ (h * np.cumsum(flows, axis=1))
        delivered_energy = h * np.cumsum(dp - dm, axis=1)
        soc = initial[:, None] + delivered_energy - transfer

    beta = model.meta["costs"][1]
    free = beta == 0.0
    if np.any(free):
        net = net_cumulative_energy(profile, np.clip(dp, 0.0, profile.available_plus()),
                                    np.clip(dm, 0.0, profile.available_minus()))
        tight = min_storage_given_flows(
            net, FlowSeries.from_flows(flows, h, tag="with-storage"), grid)
        capacity = np.where(free, tight.capacity_mwh, capacity)
        initial = np.where(free, tight.initial_soc_mwh, initial)
        soc = np.where(free[:, None], tight.soc_trajectory, soc)

    solution = PlanSolution(
        formulation=formulation,
        objective=raw.objective,
        line_expansion_mw=expansion,
        storage_capacity_mwh=capacity,
        initial_soc_mwh=initial,
        soc_trajectory_mwh=soc,
        flows_mw=flows,
        delivered_plus_mw=dp,
        delivered_minus_mw=dm,
        curtailment_mwh=float(h * np.sum(profile.available_plus() - dp)),
        shed_mwh=float(h * np.sum(profile.available_minus() - dm)),
        reference_bus=grid.reference_bus,
        duals={
            "inequality_marginals": raw.inequality_marginals,
            "equality_marginals": raw.equality_marginals,
        },
        solver_message=raw.message,
    )
    violations = verify_plan(solution, grid, profile, config,
                             ratings=model.meta.get("ratings"),
                             costs=model.meta["costs"])
    if violations:
        raise SolutionInconsistency(violations)
    return solution


def verify_plan(solution: PlanSolution, grid: GridModel, profile: CycleProfile,
                config: PlanConfig, tol: float = 1e-6,
                ratings: np.ndarray | None = None,
                costs: tuple | None = None) -> list[str]:
    """Re-check a plan against the physical constraint set, without the solver.

    Returns a list of violation descriptions (empty when the plan is
    clean). Checked: delivery bounds, state-of-charge evolution and
    bounds, cyclic closure, line ratings, flow realizability, optional
    charge-rate limits and the objective value.
    """
    bad: list[str] = []
    h = profile.slot_hours
    n_t = profile.n_slots
    soc = solution.soc_trajectory_mwh
    cap = solution.storage_capacity_mwh
    x0 = solution.initial_soc_mwh
    dp, dm = solution.delivered_plus_mw, solution.delivered_minus_mw
    flows = solution.flows_mw
    scale = max(1.0, float(np.max(np.abs(profile.power)) if profile.power.size else 1.0))
    atol = tol * scale

    def report(mask_or_val, text):
        if np.any(mask_or_val):
            bad.append(text)

    report(dp < -atol, "delivered generation below zero")
    report(dp > profile.available_plus() + atol, "delivered generation above available")
    report(dm < -atol, "delivered load below zero")
    report(dm > profile.available_minus() + atol, "delivered load above available")
    report(cap < -atol, "negative storage capacity")
    report(x0 < -atol, "negative initial state of charge")
    report(x0 > cap + atol, "initial state of charge above capacity")
    report(soc < -atol, "state of charge below zero")
    report(soc > cap[:, None] + atol, "state of charge above capacity")
    report(np.abs(soc[:, -1] - x0) > atol, "cycle does not return to its initial charge")

    # energy conservation at every bus: SoC swing = delivered - exported
    prev = np.concatenate([x0[:, None], soc[:, :-1]], axis=1)
    exported = grid.incidence().T @ flows
    residual = soc - prev - h * (dp - dm - exported)
    report(np.abs(residual) > atol, "state of charge violates the bus energy balance")

    if not config.transport_model:
        # flows must be their own PTDF image: f = H (A^T f)
        ptdf = compute_ptdf(grid)
        mismatch = flows - ptdf.values @ exported
        report(np.abs(mismatch) > atol, "flows are not realizable by any injection pattern")

    if not config.relaxed_line_limits:
        base = grid.existing_capacities() if ratings is None else ratings
        limit = base + solution.line_expansion_mw
        report(np.abs(flows) > limit[:, None] + atol, "flow exceeds line rating")
    report(solution.line_expansion_mw < -atol, "negative line expansion")

    if config.storage_power_duration is not None:
        rate = cap[:, None] * (h / config.storage_power_duration)
        report(np.abs(soc - prev) > rate + atol, "storage charge rate above its power rating")

    if costs is not None:
        alpha, beta, gplus, gminus = costs
        value = float(alpha @ solution.line_expansion_mw + beta @ cap
                      + h * np.sum(gplus[:, None] * (profile.available_plus() - dp))
                      + h * np.sum(gminus[:, None] * (profile.available_minus() - dm)))
        if abs(value - solution.objective) > tol * max(1.0, abs(value)) * n_t:
            bad.append(
                f"objective mismatch: reported {solution.objective:.9g}, recomputed {value:.9g}"
            )
    return bad


# ---------------------------------------------------------------------------
# high-level drivers
# ---------------------------------------------------------------------------

_BUILDERS = {
    "conventional": build_conventional,
    "reformulated": build_reformulated,
    "simplified": build_simplified,
}


def plan(grid: GridModel, profile: CycleProfile,
         config: PlanConfig | None = None) -> PlanSolution:
    """Build, solve and verify the configured planning formulation."""
    config = config or PlanConfig(formulation="conventional")
    if config.formulation == "min-storage-peak-reduction":
        return min_storage_for_peak_reduction(
            grid, profile, config.peak_reduction_fraction, config)
    model = _BUILDERS[config.formulation](grid, profile, config)
    return extract_plan(solve(model), grid, profile)


class SweepRow(NamedTuple):
    expansion_cost: float
    storage_cost: float
    cost_ratio: float
    total_expansion_mw: float
    total_storage_mwh: float
    objective: float
    status: str


def sweep_tradeoff(grid: GridModel, profile: CycleProfile,
                   expansion_costs, storage_costs,
                   samples: int | None = None, jobs: int = 1) -> list[SweepRow]:
    """Solve the investment-only LP over a grid of cost weights.

    ``expansion_costs`` and ``storage_costs`` are explicit value arrays,
    or (low, high) pairs expanded into ``samples`` log-spaced points.
    Failed samples are marked in the row's status and do not stop the
    sweep. Rows are ordered by (expansion cost, storage cost) regardless
    of ``jobs``.
    """
    def expand(spec):
        arr = np.asarray(spec, dtype=float)
        if arr.shape == (2,) and samples is not None:
            if np.any(arr <= 0):
                raise ValueError("log-spaced sweep ranges must be positive")
            return np.geomspace(arr[0], arr[1], samples)
        return np.atleast_1d(arr)

    alphas, betas = expand(expansion_costs), expand(storage_costs)
    pairs = [(float(a), float(b)) for a in alphas for b in betas]

    def run(pair):
        a, b = pair
        cfg = PlanConfig(formulation="simplified", expansion_cost=a, storage_cost=b)
        try:
            sol = plan(grid, profile, cfg)
            return SweepRow(a, b, b / a if a else np.inf,
                            sol.total_expansion_mw, sol.total_storage_mwh,
                            sol.objective, "optimal")
        except InfeasibleModel:
            return SweepRow(a, b, b / a if a else np.inf,
                            np.nan, np.nan, np.nan, "infeasible")
        except NumericalBreakdown as exc:
            logger.warning("sweep sample (%g, %g) failed: %s", a, b, exc)
            return SweepRow(a, b, b / a if a else np.inf,
                            np.nan, np.nan, np.nan, "solver-failure")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, pairs))
    return [run(pair) for pair in pairs]


def min_storage_for_peak_reduction(grid: GridModel, profile: CycleProfile,
                                   fraction: float,
                                   config: PlanConfig | None = None) -> PlanSolution:
    """Least total storage that lowers every line's peak flow by ``fraction``.

    Line ratings are frozen at (1 - fraction) times each line's original
    peak flow, expansion is pinned to zero and total storage capacity is
    minimized. Pushing a rating below the line's mean absolute original
    flow makes the transfer impossible at any storage size, and the raised
    :class:`InfeasibleModel` names the offending lines.
    """
    if not (0.0 <= fraction < 1.0):
        raise ValueError(f"peak reduction fraction must lie in [0, 1), got {fraction}")
    base_cfg = config or PlanConfig(formulation="min-storage-peak-reduction",
                                    peak_reduction_fraction=fraction)
    original = original_flows(compute_ptdf(grid), profile)
    peaks = np.max(np.abs(original.flows), axis=1)
    capped = (1.0 - fraction) * peaks
    cfg = replace(base_cfg, formulation="min-storage-peak-reduction",
                  peak_reduction_fraction=fraction,
                  expansion_cost=0.0, storage_cost=1.0)
    model = build_simplified(grid, profile, cfg,
                             capacity_override=capped, fix_expansion=True)
    raw = solve(model)
    if raw.status == "infeasible":
        floor = min_line_capacity(original)
        tight = [
            f"line {grid.lines[pos].id} needs {floor[pos]:.6g} MW but is capped at "
            f"{capped[pos]:.6g} MW"
            for pos in np.nonzero(capped < floor - 1e-9)[0]
        ]
        detail = "; ".join(tight) if tight else raw.message
        raise InfeasibleModel(
            f"peak reduction of {fraction:.3%} is not achievable with storage alone: {detail}"
        )
    return extract_plan(raw, grid, profile)
