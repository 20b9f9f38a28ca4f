"""The three repair engines and their shared plumbing."""

from .common import Deadline, EngineBudgetExceeded, NoFixFound

__all__ = ["Deadline", "EngineBudgetExceeded", "NoFixFound"]
