"""Road network model: diagrams, topology, boundary data and controls."""

from src.network.builders import DIAMOND_DOMAIN, closed_loop, diamond, single_road
from src.network.model import (
    BoundaryInflow,
    BoundaryOutflow,
    ControlSet,
    FundamentalDiagram,
    Junction,
    Network,
    Road,
    TimeSeries,
    demand,
    flux,
    supply,
)
from src.network.validation import (
    ValidationReport,
    Violation,
    check_beta_bounds,
    check_controls,
    validate_network,
)

__all__ = [
    # model
    "FundamentalDiagram",
    "TimeSeries",
    "Road",
    "Junction",
    "BoundaryInflow",
    "BoundaryOutflow",
    "Network",
    "ControlSet",
    "flux",
    "demand",
    "supply",
    # validation
    "Violation",
    "ValidationReport",
    "validate_network",
    "check_controls",
    "check_beta_bounds",
    # builders
    "single_road",
    "closed_loop",
    "diamond",
    "DIAMOND_DOMAIN",
]
