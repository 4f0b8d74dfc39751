"""Exception types shared across the package.

Error discipline: configuration problems (bad channel spec, invalid
distributions, out-of-regime requests) raise :class:`ConfigError`;
resource-guard violations raise :class:`CapExceeded`; an empty typical
set is its own condition because small-n / small-epsilon setups hit it
routinely and must fail loudly rather than produce silent zeros.
"""


class ConfigError(ValueError):
    """Invalid channel, distribution, or experiment configuration."""


class CapExceeded(RuntimeError):
    """A desk-scale resource cap (enumeration size, rejection budget) was hit."""


class EmptyTypicalSet(RuntimeError):
    """No sequence satisfies the typicality window for the given (p, n, epsilon)."""
