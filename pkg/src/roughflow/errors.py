"""Exception types shared across the package."""

from __future__ import annotations


class InputError(ValueError):
    """Malformed or inconsistent input data (maps to CLI exit code 1)."""


class VerificationError(RuntimeError):
    """A numerical invariant or guarantee failed to hold (CLI exit code 2)."""


class FlowError(VerificationError):
    """The flow solver could not certify its output (ball escape, non-Cauchy runs, Lipschitz breach)."""
