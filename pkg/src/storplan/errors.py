"""Exception types shared across the toolkit.

Every error raised on bad user input derives from :class:`InputDataError`
so callers (and the command line layer) can distinguish "your files are
wrong" from "the optimization failed".
"""

from __future__ import annotations


class StorplanError(Exception):
    """Base class for all toolkit errors."""


class InputDataError(StorplanError):
    """Invalid or inconsistent input data (grid files, profiles, configs)."""


# -- grid construction ------------------------------------------------------

class DuplicateId(InputDataError):
    """A bus or line id appears more than once."""


class UnknownBusReference(InputDataError):
    """A line endpoint or lookup names a bus that does not exist."""


class NonpositiveReactance(InputDataError):
    """Line reactance must be a positive, finite number."""


class DisconnectedGraph(InputDataError):
    """The grid graph is not connected.

    The ``components`` attribute lists the bus ids of each island.
    """

    def __init__(self, components):
        self.components = [sorted(c) for c in components]
        parts = "; ".join(str(c) for c in self.components)
        super().__init__(f"grid is not connected: {len(self.components)} components: {parts}")


class SingularSusceptanceMatrix(StorplanError):
    """The reduced nodal susceptance matrix could not be factorized reliably."""


class IslandingOutage(StorplanError):
    """Removing a line would split the grid.

    Carries the offending ``line_id`` and the resulting ``components``
    (lists of bus ids) so callers can report the outage instead of
    silently skipping it.
    """

    def __init__(self, line_id, components):
        self.line_id = line_id
        self.components = [sorted(c) for c in components]
        super().__init__(
            f"outage of line {line_id} islands the grid into {len(self.components)} components"
        )


class DimensionMismatch(InputDataError):
    """An array argument has the wrong shape for the grid or horizon."""


# -- profile ingestion ------------------------------------------------------

class RaggedSeries(InputDataError):
    """Profile timestamps do not partition into whole cycles."""


class UnknownBus(InputDataError):
    """A profile references a bus id or name absent from the grid."""


class NonmonotoneTimestamps(InputDataError):
    """Profile timestamps are not strictly increasing."""


class CurtailmentBoundViolation(InputDataError):
    """Delivered power falls outside [0, available power] for some bus/slot."""


class ZeroMeanSeries(InputDataError):
    """A series with (near) zero mean cannot be normalized to a target mean."""


# -- planning / optimization ------------------------------------------------

class InfeasibleModel(StorplanError):
    """The planning LP has no feasible point under the given data."""


class NumericalBreakdown(StorplanError):
    """The LP solver failed for numerical reasons (not infeasibility)."""


class SolutionInconsistency(StorplanError):
    """A solver-returned plan violates the model constraints on recheck.

    The ``violations`` attribute lists human-readable descriptions.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "plan failed independent feasibility recheck: " + "; ".join(self.violations)
        )


# -- contingency analysis ----------------------------------------------------

class DegenerateRebalance(StorplanError):
    """No remaining same-sign injection can absorb a tripped element's power."""


class BaselineDimensionMismatch(InputDataError):
    """A baseline capacity vector does not match the grid's line count."""
