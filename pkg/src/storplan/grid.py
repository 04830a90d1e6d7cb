"""DC network model: grid construction, PTDF, line outages and LODF.

The grid is a standard lossless DC power-flow model. Line flows are linear
in nodal injections through the power transfer distribution factor (PTDF)
matrix, built once from the branch reactances and reused everywhere else in
the toolkit. Injections that do not sum to zero are absorbed by the
reference bus, which is why every result that depends on flows is reported
together with the reference bus id.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    DisconnectedGraph,
    DuplicateId,
    IslandingOutage,
    NonpositiveReactance,
    SingularSusceptanceMatrix,
    UnknownBusReference,
)

logger = logging.getLogger(__name__)

__all__ = [
    "Bus",
    "Line",
    "GridModel",
    "PtdfMatrix",
    "build_grid",
    "load_grid",
    "compute_ptdf",
    "flows_from_injections",
    "apply_line_outage",
    "compute_lodf",
]


@dataclass(frozen=True)
class Bus:
    """A network node.

    Costs are objective weights used by the planning formulations:
    ``storage_cost`` per MWh of installed storage capacity,
    ``curtail_cost`` per MWh of undelivered generation and ``shed_cost``
    per MWh of unserved load.
    """

    id: int
    name: str
    storage_cost: float = 0.0
    curtail_cost: float = 0.0
    shed_cost: float = 0.0


@dataclass(frozen=True)
class Line:
    """A transmission branch with a fixed orientation.

    Flow is positive from ``from_bus`` to ``to_bus``. ``capacity`` is the
    existing rating in MW and ``expansion_cost`` the objective weight per
    MW of added rating.
    """

    id: int
    from_bus: int
    to_bus: int
    reactance: float
    capacity: float = 0.0
    expansion_cost: float = 0.0


@dataclass(frozen=True, eq=False)
class GridModel:
    """Validated, immutable network description.

    Buses are stored sorted by id; positional indices (0..B-1) derived
    from that ordering are the canonical coordinates for every vector and
    matrix in the toolkit. Use :meth:`bus_index` to resolve external bus
    ids or names to positions.
    """

    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    reference_bus: int

    # -- lookups -------------------------------------------------------

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)

    @property
    def line_ids(self) -> tuple[int, ...]:
        return tuple(ln.id for ln in self.lines)

    def bus_index(self, ref) -> int:
        """Resolve a bus id (or name) to its positional index."""
        for pos, bus in enumerate(self.buses):
            if bus.id == ref or bus.name == ref:
                return pos
        # a numeric string should match an integer id as well
        if isinstance(ref, str):
            try:
                return self.bus_index(int(ref))
            except (ValueError, UnknownBusReference):
                pass
        raise UnknownBusReference(f"no bus with id or name {ref!r}")

    def line_index(self, line_id) -> int:
        for pos, ln in enumerate(self.lines):
            if ln.id == line_id:
                return pos
        raise UnknownBusReference(f"no line with id {line_id!r}")

    @property
    def reference_index(self) -> int:
        return self.bus_index(self.reference_bus)

    # -- derived matrices ----------------------------------------------

    def incidence(self) -> np.ndarray:
        """Oriented line-bus incidence matrix, +1 at from-bus, -1 at to-bus."""
        a = np.zeros((self.n_lines, self.n_buses))
        for row, ln in enumerate(self.lines):
            a[row, self.bus_index(ln.from_bus)] = 1.0
            a[row, self.bus_index(ln.to_bus)] = -1.0
        return a

    def susceptances(self) -> np.ndarray:
        return np.array([1.0 / ln.reactance for ln in self.lines])

    def existing_capacities(self) -> np.ndarray:
        return np.array([ln.capacity for ln in self.lines])


@dataclass(frozen=True, eq=False)
class PtdfMatrix:
    """Linear injection-to-flow map for a fixed reference bus.

    ``values`` has one row per line and one column per bus position; the
    reference column is identically zero, so the reference bus silently
    absorbs any injection imbalance.
    """

    values: np.ndarray
    reference_bus: int
    reference_index: int

    @property
    def n_lines(self) -> int:
        return self.values.shape[0]

    @property
    def n_buses(self) -> int:
        return self.values.shape[1]


def _connected_components(n_buses: int, edges, bus_ids):
    """Return the connected components of the bus graph as id lists."""
    if not edges:
        rows, cols = [], []
    else:
        rows, cols = zip(*edges)
    data = np.ones(len(rows))
    adj = coo_matrix((data, (rows, cols)), shape=(n_buses, n_buses))
    n_comp, labels = connected_components(adj, directed=False)
    comps = [[] for _ in range(n_comp)]
    for pos, lab in enumerate(labels):
        comps[lab].append(bus_ids[pos])
    return comps


def build_grid(buses, lines, reference_bus) -> GridModel:
    """Validate raw bus/line records and assemble a :class:`GridModel`.

    Parameters
    ----------
    buses, lines :
        Iterables of :class:`Bus` and :class:`Line`. Bus order in the
        model is ascending by id; line order is preserved.
    reference_bus :
        Id or name of the angle reference (slack) bus.

    Raises
    ------
    DuplicateId, UnknownBusReference, NonpositiveReactance, DisconnectedGraph
    """
    buses = sorted(buses, key=lambda b: b.id)
    if not buses:
        raise UnknownBusReference("grid has no buses")

    seen_ids: set = set()
    seen_names: set = set()
    for bus in buses:
        if bus.id in seen_ids:
            raise DuplicateId(f"duplicate bus id {bus.id}")
        if bus.name in seen_names:
            raise DuplicateId(f"duplicate bus name {bus.name!r}")
        seen_ids.add(bus.id)
        seen_names.add(bus.name)
        for val, what in ((bus.storage_cost, "storage cost"),
                          (bus.curtail_cost, "curtailment cost"),
                          (bus.shed_cost, "shed cost")):
            if not np.isfinite(val):
                raise ValueError(f"bus {bus.id}: {what} must be finite")
        if bus.shed_cost < bus.curtail_cost:
            warnings.warn(
                f"bus {bus.id}: shed cost {bus.shed_cost} below curtailment cost "
                f"{bus.curtail_cost}; the planner will prefer dropping load",
                stacklevel=2,
            )

    id_to_pos = {b.id: i for i, b in enumerate(buses)}
    lines = tuple(lines)
    seen_line_ids: set = set()
    edges = []
    for ln in lines:
        if ln.id in seen_line_ids:
            raise DuplicateId(f"duplicate line id {ln.id}")
        seen_line_ids.add(ln.id)
        for end in (ln.from_bus, ln.to_bus):
            if end not in id_to_pos:
                raise UnknownBusReference(f"line {ln.id} references unknown bus {end}")
        if ln.from_bus == ln.to_bus:
            raise ValueError(f"line {ln.id} connects bus {ln.from_bus} to itself")
        if not (np.isfinite(ln.reactance) and ln.reactance > 0.0):
            raise NonpositiveReactance(
                f"line {ln.id}: reactance must be positive and finite, got {ln.reactance}"
            )
        if not np.isfinite(ln.capacity) or ln.capacity < 0.0:
            raise ValueError(f"line {ln.id}: capacity must be finite and nonnegative")
        if not np.isfinite(ln.expansion_cost):
            raise ValueError(f"line {ln.id}: expansion cost must be finite")
        edges.append((id_to_pos[ln.from_bus], id_to_pos[ln.to_bus]))

    comps = _connected_components(len(buses), edges, [b.id for b in buses])
    if len(comps) > 1:
        raise DisconnectedGraph(comps)

    grid = GridModel(buses=tuple(buses), lines=lines, reference_bus=reference_bus)
    ref_pos = grid.bus_index(reference_bus)  # raises UnknownBusReference if bad
    # store the canonical external id, not whatever alias the caller used
    object.__setattr__(grid, "reference_bus", buses[ref_pos].id)
    return grid


def compute_ptdf(grid: GridModel) -> PtdfMatrix:
    """Build the PTDF matrix by factorizing the reduced susceptance matrix.

    The nodal susceptance matrix with the reference row/column deleted is
    symmetric positive definite for a connected grid, so a dense solve is
    used and its residual checked; an unreliable factorization raises
    :class:`SingularSusceptanceMatrix`.
    """
    a = grid.incidence()
    b = grid.susceptances()
    line_susc = b[:, None] * a                      # L x B
    nodal = a.T @ line_susc                         # B x B
    ref = grid.reference_index
    keep = [i for i in range(grid.n_buses) if i != ref]

    if not keep:
        # single-bus grid: no flows to map
        return PtdfMatrix(values=np.zeros((grid.n_lines, 1)),
                          reference_bus=grid.reference_bus, reference_index=ref)

    reduced = nodal[np.ix_(keep, keep)]
    rhs = line_susc[:, keep].T                      # (B-1) x L
    try:
        sol = np.linalg.solve(reduced, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSusceptanceMatrix(str(exc)) from exc

    residual = reduced @ sol - rhs
    scale = max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 1.0)
    if not np.all(np.isfinite(sol)) or float(np.max(np.abs(residual))) > 1e-8 * scale:
        raise SingularSusceptanceMatrix(
            "reduced susceptance matrix is numerically singular "
            f"(residual {float(np.max(np.abs(residual))):.3e})"
        )

    values = np.zeros((grid.n_lines, grid.n_buses))
    values[:, keep] = sol.T
    return PtdfMatrix(values=values, reference_bus=grid.reference_bus, reference_index=ref)


def flows_from_injections(ptdf: PtdfMatrix, injections: np.ndarray) -> np.ndarray:
    """Map nodal injections (MW) to line flows (MW).

    ``injections`` is a length-B vector or a B x N matrix of one column
    per slot, ordered by bus position. Injections need not balance; the
    residual lands on the reference bus.
    """
    injections = np.asarray(injections, dtype=float)
    if injections.shape[0] != ptdf.n_buses:
        raise DimensionMismatch(
            f"injection vector has {injections.shape[0]} rows, grid has {ptdf.n_buses} buses"
        )
    return ptdf.values @ injections


def apply_line_outage(grid: GridModel, line_id) -> GridModel:
    """Return the grid with one line removed.

    Raises :class:`IslandingOutage` (reporting the resulting components)
    when the removal disconnects the grid; such outages must be listed,
    not silently dropped.
    """
    pos = grid.line_index(line_id)
    remaining = tuple(ln for i, ln in enumerate(grid.lines) if i != pos)
    try:
        return build_grid(grid.buses, remaining, grid.reference_bus)
    except DisconnectedGraph as exc:
        raise IslandingOutage(line_id, exc.components) from exc


def compute_lodf(grid: GridModel, line_id, ptdf: PtdfMatrix | None = None) -> np.ndarray:
    """Line outage distribution factors for the outage of ``line_id``.

    Returns one factor per line: the change in that line's flow per MW of
    pre-outage flow on the outaged line. The outaged line's own factor is
    -1 (its flow goes to zero). Bridge outages raise
    :class:`IslandingOutage`.
    """
    if ptdf is None:
        ptdf = compute_ptdf(grid)
    pos = grid.line_index(line_id)

    # exact topological check, in line with apply_line_outage semantics
    edges = [(grid.bus_index(ln.from_bus), grid.bus_index(ln.to_bus))
             for i, ln in enumerate(grid.lines) if i != pos]
    comps = _connected_components(grid.n_buses, edges, list(grid.bus_ids))
    if len(comps) > 1:
        raise IslandingOutage(line_id, comps)

    pair = np.zeros(grid.n_buses)
    pair[grid.bus_index(grid.lines[pos].from_bus)] = 1.0
    pair[grid.bus_index(grid.lines[pos].to_bus)] = -1.0
    shift = ptdf.values @ pair
    denom = 1.0 - shift[pos]
    if abs(denom) < 1e-10:
        raise SingularSusceptanceMatrix(
            f"LODF denominator vanished for non-bridging line {line_id}"
        )
    factors = shift / denom
    factors[pos] = -1.0
    return factors


# -- grid file parsing -------------------------------------------------------

_BUS_HEADER = ["id", "name", "beta", "gamma_plus", "gamma_minus"]
_LINE_HEADER = ["id", "from", "to", "reactance", "capacity", "alpha"]


def load_grid(path, reference_bus=None) -> GridModel:
    """Read a grid description from a delimited text file.

    The file holds two sections introduced by lines reading ``buses`` and
    ``lines``. Each section starts with a header row::

        buses
        id,name,beta,gamma_plus,gamma_minus
        ...
        lines
        id,from,to,reactance,capacity,alpha
        ...

    Blank lines and ``#`` comments are ignored. When ``reference_bus`` is
    None the lowest bus id is used.
    """
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        for raw in csv.reader(fh):
            cells = [c.strip() for c in raw]
            if not cells or not any(cells) or cells[0].startswith("#"):
                continue
            rows.append(cells)

    sections: dict[str, list[list[str]]] = {}
    current: str | None = None
    for cells in rows:
        word = cells[0].lower()
        if word in ("buses", "lines") and not any(cells[1:]):
            current = word
            sections[current] = []
            continue
        if current is None:
            raise ValueError(f"{path}: data before any section header")
        sections[current].append(cells)

    for name in ("buses", "lines"):
        if name not in sections or not sections[name]:
            raise ValueError(f"{path}: missing or empty section {name!r}")

    def parse_section(name, expected, rows):
        header = [c.lower() for c in rows[0]]
        if header[: len(expected)] != expected:
            raise ValueError(
                f"{path}: section {name!r} must start with header {','.join(expected)}"
            )
        out = []
        for cells in rows[1:]:
            if len(cells) < len(expected):
                raise ValueError(f"{path}: short row in section {name!r}: {cells}")
            out.append(dict(zip(expected, cells)))
        return out

    buses = []
    for rec in parse_section("buses", _BUS_HEADER, sections["buses"]):
        try:
            buses.append(Bus(
                id=int(rec["id"]),
                name=rec["name"],
                storage_cost=float(rec["beta"]),
                curtail_cost=float(rec["gamma_plus"]),
                shed_cost=float(rec["gamma_minus"]),
            ))
        except ValueError as exc:
            raise ValueError(f"{path}: bad bus row {rec}: {exc}") from None

    lines = []
    for rec in parse_section("lines", _LINE_HEADER, sections["lines"]):
        try:
            lines.append(Line(
                id=int(rec["id"]),
                from_bus=int(rec["from"]),
                to_bus=int(rec["to"]),
                reactance=float(rec["reactance"]),
                capacity=float(rec["capacity"]),
                expansion_cost=float(rec["alpha"]),
            ))
        except ValueError as exc:
            raise ValueError(f"{path}: bad line row {rec}: {exc}") from None

    if reference_bus is None:
        reference_bus = min(b.id for b in buses)
        logger.info("no reference bus given, defaulting to bus %s", reference_bus)
    return build_grid(buses, lines, reference_bus)
