"""Exception hierarchy shared by all modules."""


class AgentOpsError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(AgentOpsError, ValueError):
    """Operands live in spaces of different dimension."""


class InvalidStateError(AgentOpsError, ValueError):
    """A state vector is empty, not one-dimensional, or holds NaN/Inf."""


class InvalidParameterError(AgentOpsError, ValueError):
    """A set, penalty, schedule or stop-rule parameter violates its invariant."""


class NondifferentiableError(AgentOpsError, ValueError):
    """Gradient requested where the function is not differentiable."""


class UnsupportedObjectiveError(AgentOpsError, ValueError):
    """A closed-form baseline was asked for a term it cannot handle."""


class SingularSystemError(AgentOpsError, ArithmeticError):
    """The normal equations are singular.

    ``direction`` is a unit vector spanning (part of) the null space, i.e. a
    direction along which the objective is flat.
    """

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class OracleScaleError(AgentOpsError, ValueError):
    """Brute-force oracle asked for a problem beyond its budget."""


class RejectedReferenceError(AgentOpsError, ValueError):
    """A reference point claimed to be feasible is not in every set."""


class DivergenceError(AgentOpsError, RuntimeError):
    """The iteration produced a non-finite state.

    The trajectory recorded up to (and excluding) the bad round is kept on
    ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ScenarioError(AgentOpsError, ValueError):
    """Scenario document failed to parse or validate.

    ``path`` is the dotted field path of the offending entry (empty for
    syntax errors); ``kind`` is one of "syntax", "schema", "dimension".
    """

    def __init__(self, message, path="", kind="schema"):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.reason = message
        self.kind = kind
