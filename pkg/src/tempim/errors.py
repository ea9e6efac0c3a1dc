"""Exception types with the CLI exit codes they map to."""

from __future__ import annotations


class TempimError(Exception):
    exit_code = 1


class ConfigError(TempimError, ValueError):
    exit_code = 2


class SizeCapError(TempimError, ValueError):
    """An exact (dense) computation was asked for beyond its memory cap."""

    exit_code = 3


class NumericalError(TempimError, RuntimeError):
    exit_code = 4
