"""Shared exception bases.

Two families matter to callers: bad input values (ValidationError, CLI
exit 1) and broken environment or configuration (ConfigError, CLI
exit 2). Modules subclass these where a more specific name helps.
"""
from __future__ import annotations


class ValidationError(ValueError):
    """Input violates a documented precondition or format."""


class ConfigError(RuntimeError):
    """Environment, configuration, or I/O problem outside the input data."""
