"""Individual optimal control: loss, Hamiltonian and closed-form value function.

Every device solves the same first-order control problem against the
broadcast population workload X.  With

    mu1 = 1 / (F_P - X/T),    mu2 = R*T / (X*r),

the running loss is ``mu1*alpha + 1/(mu2*alpha)`` and the terminal cost is
linear in the terminal workload, so the costate is constant and the value
function is affine in x and t.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DomainError
from ..params import SystemParams


class GameCoefficients(NamedTuple):
    mu1: float
    mu2: float | np.ndarray


@dataclass(frozen=True)
class ControlPoint:
    t: float
    x: float
    costate: float
    value: float
    hamiltonian_inf: float


def _check_population(x_pop, params: SystemParams):
    if not x_pop > 0:
        raise DomainError(f"population workload must be positive, got {x_pop}")
    if not x_pop / params.time_unit < params.f_pop_max:
        raise DomainError(
            f"population rate {x_pop / params.time_unit} saturates F_P={params.f_pop_max}"
        )


def loss_individual(demand, alpha, x_pop, params: SystemParams, total_resource):
    """Per-device loss: competitive pressure plus inverse reward.

    Works elementwise on arrays of ``demand``/``alpha``.
    """
    _check_population(x_pop, params)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise DomainError("alpha must be positive")
    if not total_resource > 0:
        raise DomainError("total_resource must be positive")
    T = params.time_unit
    out = alpha / (params.f_pop_max - x_pop / T) + (x_pop * np.asarray(demand)) / (total_resource * T) / alpha
    return out[()] if out.ndim == 0 else out


def game_coefficients(x_pop, demand, params: SystemParams, total_resource) -> GameCoefficients:
    _check_population(x_pop, params)
    demand = np.asarray(demand, dtype=float)
    if np.any(demand <= 0):
        raise DomainError("demand must be positive")
    T = params.time_unit
    mu1 = 1.0 / (params.f_pop_max - x_pop / T)
    mu2 = total_resource * T / (x_pop * demand)
    return GameCoefficients(mu1, mu2[()] if mu2.ndim == 0 else mu2)


def _shifted(coeffs: GameCoefficients, costate):
    s = np.asarray(costate + coeffs.mu1, dtype=float)
    if np.any(s <= 0):
        raise DomainError("costate + mu1 must be positive for an interior minimizer")
    return s


def optimal_alpha_feedback(coeffs: GameCoefficients, costate):
    """Minimizer of (p + mu1)*alpha + 1/(mu2*alpha) over alpha > 0."""
    s = _shifted(coeffs, costate)
    out = np.sqrt(1.0 / (coeffs.mu2 * s))
    return out[()] if np.ndim(out) == 0 else out


def hamiltonian_infimum(coeffs: GameCoefficients, costate):
    s = _shifted(coeffs, costate)
    out = 2.0 * np.sqrt(s / coeffs.mu2)
    return out[()] if np.ndim(out) == 0 else out


def terminal_cost(x_terminal, params: SystemParams):
    return x_terminal / (params.f_m * params.time_unit) - 1.0


def value_function(t, x, coeffs: GameCoefficients, params: SystemParams) -> ControlPoint:
    T = params.time_unit
    if not 0 <= t <= T:
        raise DomainError(f"t={t} outside [0, {T}]")
    p = 1.0 / (params.f_m * T)
    h = hamiltonian_infimum(coeffs, p)
    value = terminal_cost(x, params) + h * (T - t)
    return ControlPoint(t=t, x=x, costate=p, value=value, hamiltonian_inf=h)


def optimal_alpha(demand, x_pop, params: SystemParams, total_resource, clamp=True, f_m=None):
    """Equilibrium response of a device to the broadcast workload ``x_pop``.

    ``demand`` may be a scalar or an array; the result has the same shape.
    With ``clamp`` the raw optimum is capped at F_m so the population stays
    feasible.  A device that only knows the broadcast F_m (not N) passes it
    as ``f_m``.
    """
    f_m = params.f_m if f_m is None else f_m
    coeffs = game_coefficients(x_pop, demand, params, total_resource)
    raw = optimal_alpha_feedback(coeffs, 1.0 / (f_m * params.time_unit))
    if not clamp:
        return raw
    out = np.minimum(f_m, raw)
    return out[()] if np.ndim(out) == 0 else out
