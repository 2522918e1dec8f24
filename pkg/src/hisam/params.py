"""Access-point constants and per-device state."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable

from .errors import DomainError


@dataclass(frozen=True)
class SystemParams:
    """Constants the access point publishes to its population.

    Frequencies are authentications per ``time_unit``. Negotiation runs on
    the unitized clock (``time_unit=1``); physical seconds only enter when
    the simulator schedules authentications.
    """

    n_devices: int
    f_pop_max: float = 2000.0
    f_ind_max: float = 20.0
    time_unit: float = 1.0
    tolerance: float = 1e-10
    max_rounds: int = 50

    def __post_init__(self):
        if self.n_devices < 2:
            raise DomainError(f"n_devices must be >= 2, got {self.n_devices}")
        if not self.f_pop_max > 0 or not self.f_ind_max > 0:
            raise DomainError("frequency caps must be positive")
        if not self.time_unit > 0:
            raise DomainError("time_unit must be positive")
        if not self.tolerance > 0 or self.max_rounds < 1:
            raise DomainError("tolerance and max_rounds must be positive")

    @property
    def f_m(self) -> float:
        """Admissible per-device frequency, min(F_I, F_P / N)."""
        return min(self.f_ind_max, self.f_pop_max / self.n_devices)

    @property
    def capacity(self) -> float:
        """Population workload ceiling F_P * T."""
        return self.f_pop_max * self.time_unit


@dataclass
class DeviceProfile:
    id: Hashable
    demand: float
    alpha: float = 0.0
    workload: float = 0.0

    def __post_init__(self):
        if not self.demand > 0:
            raise DomainError(f"demand must be positive, got {self.demand}")
        if self.alpha < 0 or self.workload < 0:
            raise DomainError("alpha and workload must be nonnegative")


@dataclass
class PopulationState:
    total_resource: float
    workload_expectation: float
    round: int = 0
