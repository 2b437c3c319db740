"""Exception hierarchy.

Each error class carries the process exit code the CLI maps it to.
"""


class CavsfwmError(Exception):
    exit_code = 3


class DomainError(CavsfwmError, ValueError):
    """An argument lies outside the domain where the model is defined."""

    exit_code = 2


class ModeCutoffError(DomainError):
    """No resolvable guided fundamental mode at the requested frequency."""

    exit_code = 3


class NumericalError(CavsfwmError, ArithmeticError):
    """A root bracket, quadrature or transform failed to converge."""

    exit_code = 3

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ContractError(CavsfwmError, ValueError):
    """Input data violates a structural precondition (grid shape, spacing...)."""

    exit_code = 3


class ConfigError(CavsfwmError, ValueError):
    exit_code = 2

    def __init__(self, message, line=None, column=None, key=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        if key is not None:
            loc.append(f"key '{key}'")
        full = f"{message} ({', '.join(loc)})" if loc else message
        super().__init__(full)
        self.line = line
        self.column = column
        self.key = key


class InfeasibleDesignError(CavsfwmError):
    exit_code = 4
