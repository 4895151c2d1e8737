"""Exception types shared across the toolkit (CLI maps them to exit codes)."""


class ConfigError(ValueError):
    """Malformed scenario configuration (exit code 2)."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to reach its target (exit code 3)."""


class GuardViolation(RuntimeError):
    """Wrap-around guard rejected a propagation horizon (exit code 4)."""
