"""Exception types shared across the package.

Parameter domain problems raise :class:`ParameterError`; inconsistent or
physically impossible configurations raise :class:`ConfigurationError`.
Both derive from ``ValueError`` so callers may catch broadly. The CLI maps
them to distinct exit codes (usage=1, configuration=2, I/O=3).
"""

from __future__ import annotations


class ParameterError(ValueError):
    """A single argument is outside its mathematical domain."""


class ConfigurationError(ValueError):
    """A combination of parameters describes an impossible device."""


class UsageError(Exception):
    """Malformed command line (unknown subcommand, bad flag value)."""
