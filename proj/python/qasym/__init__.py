"""Asymptotic quantum estimation: SLDs, D-extensions, the representation bound and risk experiments."""

from ._qasym import *  # noqa: F401,F403
from ._qasym import ConvergenceError, ValidationError

__all__ = [name for name in dir() if not name.startswith("_")]
