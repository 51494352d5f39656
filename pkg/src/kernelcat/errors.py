"""Exception types shared across modules."""

from __future__ import annotations

from dataclasses import dataclass


class KernelcatError(Exception):
    """Base class for every error raised by the library."""


class LimitExceeded(KernelcatError):
    """An enumeration hit its element or step budget.

    ``partial`` holds whatever had been built (a partial monoid, arrow store,
    ...) and ``frontier`` the amount of unexplored work left at abort.
    """

    def __init__(self, message: str, partial=None, frontier: int = 0):
        super().__init__(message)
        self.partial = partial
        self.frontier = frontier


class SoundnessError(KernelcatError):
    """An internal cross-check failed; the result must not be trusted."""


@dataclass(frozen=True)
class Limits:
    max_elements: int = 200_000
    max_steps: int = 10_000_000
    cap_powers: int = 1_000_000

    def replace(self, **changes) -> "Limits":
        vals = {k: v for k, v in changes.items() if v is not None}
        return Limits(**{**self.__dict__, **vals})


DEFAULT_LIMITS = Limits()
