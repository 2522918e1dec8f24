"""Translating triangular mean field and the population workload it implies."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..params import SystemParams


@dataclass(frozen=True)
class MeanFieldTriangle:
    """Triangular workload density for one device.

    The vertex sits at ``vertex_rate * t``; ``weight`` is the probability
    mass left of the vertex and ``base`` the support width.
    """

    vertex_rate: float
    base: float
    weight: float
    focus_time: float = 1.0

    def __post_init__(self):
        if not self.vertex_rate > 0 or not self.base > 0:
            raise DomainError("vertex_rate and base must be positive")
        if not 0 <= self.weight <= 1:
            raise DomainError(f"weight must lie in [0, 1], got {self.weight}")
        if not self.focus_time > 0:
            raise DomainError("focus_time must be positive")

    @classmethod
    def unitized(cls, alpha, f_m):
        """Unit time, support [0, F_m] at t = 1, vertex at alpha."""
        return cls(vertex_rate=alpha, base=f_m, weight=alpha / f_m, focus_time=1.0)

    def support(self, t):
        v = self.vertex_rate * t
        return v - self.weight * self.base, v + (1.0 - self.weight) * self.base

    @property
    def peak(self):
        return 2.0 / self.base


def triangle_density(tri: MeanFieldTriangle, t, x, params: SystemParams | None = None):
    """Density of ``tri`` at time ``t`` and workload ``x`` (``x`` may be an array)."""
    if params is not None and not 0 <= t <= params.time_unit:
        raise DomainError(f"t={t} outside [0, {params.time_unit}]")
    x = np.asarray(x, dtype=float)
    b, g = tri.base, tri.weight
    # shift back to the focus-time frame; the vertex there is vertex_rate*focus_time
    s = x - tri.vertex_rate * (t - tri.focus_time)
    vertex = tri.vertex_rate * tri.focus_time
    left_w, right_w = g * b, (1.0 - g) * b
    out = np.zeros_like(s)
    left = s < vertex
    if left_w > 0:
        out[left] = np.maximum(0.0, 2.0 * (s[left] - (vertex - left_w)) / (b * left_w))
    right = ~left
    if right_w > 0:
        out[right] = np.maximum(0.0, -2.0 * (s[right] - (vertex + right_w)) / (b * right_w))
    else:
        # one-sided triangle: all mass left of the vertex, peak on the right edge
        out[right] = np.where(s[right] == vertex, 2.0 / b, 0.0)
    out += 0.0  # turn -0.0 at the right edge into 0.0
    return out[()] if out.ndim == 0 else out


def expected_population_workload(alphas, params: SystemParams):
    """Sum of the unitized triangle means, (alpha_i + F_m)/3, scaled by T."""
    alphas = np.asarray(alphas, dtype=float)
    f_m = params.f_m
    if np.any(alphas <= 0) or np.any(alphas > f_m):
        raise DomainError("every alpha must lie in (0, F_m]")
    return float(np.sum((alphas + f_m) / 3.0)) * params.time_unit
