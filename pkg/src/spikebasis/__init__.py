"""Best-basis theory for spike processes: costs, marginal laws and basis search."""

__version__ = "0.1.0"
