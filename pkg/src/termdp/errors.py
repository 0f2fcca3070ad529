"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (input 2, numerical 3,
resource 4), so raisers should pick the class by failure kind, not by
call site.
"""


class TermdpError(Exception):
    """Base class for all package-specific errors."""


class InstanceError(TermdpError):
    """A problem instance, policy, or option set violates its invariants."""


class NumericalError(TermdpError):
    """A computation produced non-finite or otherwise unusable values."""


class ResourceError(TermdpError):
    """A guarded computation would exceed its configured size budget."""
