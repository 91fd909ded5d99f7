"""Shared exception types and the CLI exit codes they map to."""


class DeskZeroError(Exception):
    """Base class for all package errors."""


class ConfigError(DeskZeroError):
    """Invalid configuration file, key, or value."""


class InfeasibleScheduleError(DeskZeroError):
    """Simulation budget cannot satisfy the requested bounds."""


class ProtocolError(DeskZeroError):
    """Malformed, oversized, or wrong-version worker message."""


class ContractViolation(DeskZeroError):
    """An operation was called outside its stated preconditions."""


class IllegalMove(DeskZeroError):
    """An action was applied to a state where it is not legal."""

    def __init__(self, env_id, action, state_key):
        super().__init__(f"illegal action {action} in {env_id} state {state_key!r}")
        self.env_id = env_id
        self.action = action
        self.state_key = state_key


# Process exit codes for the command-line interface.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SCHEDULE = 3
EXIT_PROTOCOL = 4

EXIT_CODES = {
    ConfigError: EXIT_CONFIG,
    InfeasibleScheduleError: EXIT_SCHEDULE,
    ProtocolError: EXIT_PROTOCOL,
}
