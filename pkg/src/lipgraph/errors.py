"""Exception types shared across the library."""


class LipgraphError(Exception):
    """Base class for all library errors."""


class BadParams(LipgraphError):
    """Invalid parameters for an operation or generator."""


class DisconnectedGraph(LipgraphError):
    """The graph is not connected where connectivity is required."""


class Unreachable(LipgraphError):
    """Target vertex cannot be reached from the source."""


class SelfLoop(LipgraphError):
    """Operation does not accept a self-loop edge."""


class NotContractible(LipgraphError):
    """Arc does not satisfy the degree conditions for directed contraction."""


class TooLarge(LipgraphError):
    """Instance exceeds the size limit of an exact (brute-force) oracle."""


class SupportTooLarge(LipgraphError):
    """Distribution support exceeds the transportation-solver limit."""


class ZeroOptimum(LipgraphError):
    """Optimal value is zero, so a scale parameter would degenerate."""


class DegenerateShape(LipgraphError):
    """Bipartite instance shape too small for the sampling formulas."""


class NoConvergence(LipgraphError):
    """Iterative solver failed to reach the requested tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class MalformedWalk(LipgraphError):
    """Walk does not satisfy the required structural invariants."""


class InvalidEdge(LipgraphError):
    """Edge argument is invalid for the requested operation."""
