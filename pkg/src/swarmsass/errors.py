"""Exception hierarchy."""


class SassError(Exception):
    """Base class for every error raised by swarmsass."""


class ConfigError(SassError, ValueError):
    """A configuration constant is out of range."""


class AddressingError(SassError, KeyError):
    """A message or query names an unknown agent."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown agent"


class WiringError(SassError, LookupError):
    """A behaviour-tree leaf id has no registered predicate or action."""


class UnreachableError(SassError):
    """No path exists within the planning horizon."""


class InfeasibleFormationError(SassError):
    """Not enough free cells near the formation centre."""


class GameError(SassError, ValueError):
    """A payoff matrix is malformed (empty or non-finite)."""


class ScenarioError(SassError, ValueError):
    """Scenario parsing or validation failure; carries the offending line."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class TraceIntegrityError(SassError):
    """Trace file failed its hash check or is truncated."""
