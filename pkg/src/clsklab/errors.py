"""Exception hierarchy shared by all modules."""


class ClskError(Exception):
    """Base class for every error raised by clsklab."""


class DomainError(ClskError, ValueError):
    """Input outside the domain of a model function (e.g. non-finite state)."""


class DivergenceError(ClskError, FloatingPointError):
    """A trajectory left the configured bound."""

    def __init__(self, step, bound=None, where=""):
        self.step = int(step)
        self.bound = bound
        msg = f"trajectory diverged at step {self.step}"
        if bound is not None:
            msg += f" (|x| > {bound:g})"
        if where:
            msg += f" in {where}"
        super().__init__(msg)


class ThresholdNotFoundError(ClskError):
    """The MSF grid contains no stable-to-unstable sign change."""


class SymmetryError(ClskError, ValueError):
    """A permutation is not a symmetry of the coupling matrix, or not involutory."""


class NoRangeError(ClskError):
    """The eigenvalue condition fails, so no admissible coupling range exists."""


class RequirementError(ClskError):
    """A CLSK network design requirement is violated."""

    def __init__(self, report):
        self.report = report
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        super().__init__(f"design requirements failed: {failed}")


class UnmappedSymbolError(ClskError, ValueError):
    """A bit/symbol has no entry in the symbol map."""


class SeedReuseError(ClskError):
    """A Wiener stream was asked to replay a time interval it already produced."""


class ConfigError(ClskError, ValueError):
    """Malformed or missing configuration."""
