"""Population negotiation: fixed-point loop, aggregated contraction, allocation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, NegotiationError
from ..params import SystemParams
from .control import optimal_alpha
from .density import expected_population_workload

#: fraction of F_P*T kept clear of both ends when projecting iterates
POLE_MARGIN = 1e-9
#: starting frequency as a fraction of F_m ("curious" devices)
INITIAL_FRACTION = 0.8


@dataclass
class NegotiationTrace:
    per_round_errors: list = field(default_factory=list)
    per_round_alphas: list = field(default_factory=list)
    per_round_x: list = field(default_factory=list)
    converged: bool = False
    final_x: float = float("nan")

    @property
    def rounds(self):
        return len(self.per_round_errors)


@dataclass
class EquilibriumResult:
    alphas: np.ndarray
    x_pop: float
    trace: NegotiationTrace


@dataclass
class Allocation:
    per_device_share: np.ndarray


def _demands(demands):
    r = np.asarray(demands, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise DomainError("need a vector of at least two demands")
    if np.any(r <= 0):
        raise DomainError("demands must be positive")
    return r


def contraction_coefficient(demands):
    """R / (sum sqrt(r_i))^2, which lies in [1/N, 1) by Cauchy-Schwarz."""
    r = _demands(demands)
    return float(r.sum() / np.sum(np.sqrt(r)) ** 2)


def aggregated_map(x_pop, c, params: SystemParams):
    """Affine approximation X -> F_P*T - c*X of one negotiation round."""
    return params.capacity - c * x_pop


def closed_form_equilibrium(demands, params: SystemParams):
    """Fixed point of :func:`aggregated_map`, F_P*T / (1 + c).

    This drops the terminal-cost term of the optimal frequency and treats the
    workload as T*sum(alpha), so it only approximates the fixed point that
    :func:`negotiate_equilibrium` finds.
    """
    c = contraction_coefficient(demands)
    return params.capacity / (1.0 + c)


def project_workload(x_pop, params: SystemParams):
    eps = POLE_MARGIN * params.capacity
    return min(max(x_pop, eps), params.capacity - eps)


def initial_alphas(n, params: SystemParams):
    return np.full(n, INITIAL_FRACTION * params.f_m)


class Negotiator:
    """AP-side bookkeeping for one negotiation, independent of transport.

    Call :meth:`update` with each round's reported frequencies (in device
    order); it returns the round error and records the trace.  Both the
    in-process solver and the network service drive this class, so they
    produce bit-identical results.
    """

    def __init__(self, demands, params: SystemParams):
        r = _demands(demands)
        if r.size != params.n_devices:
            raise DomainError(f"got {r.size} demands for n_devices={params.n_devices}")
        self.demands = r
        self.params = params
        self.total_resource = float(r.sum())
        self.alphas = initial_alphas(r.size, params)
        self.x_pop = project_workload(expected_population_workload(self.alphas, params), params)
        self.trace = NegotiationTrace()

    @property
    def done(self):
        return self.trace.converged or self.trace.rounds >= self.params.max_rounds

    def update(self, new_alphas):
        new_alphas = np.asarray(new_alphas, dtype=float)
        err = float(np.mean(np.abs(new_alphas - self.alphas))) * self.params.time_unit
        self.alphas = new_alphas
        self.x_pop = project_workload(expected_population_workload(new_alphas, self.params), self.params)
        t = self.trace
        t.per_round_errors.append(err)
        t.per_round_alphas.append(new_alphas)
        t.per_round_x.append(self.x_pop)
        t.final_x = self.x_pop
        if err < self.params.tolerance:
            t.converged = True
        return err

    def result(self) -> EquilibriumResult:
        if not self.trace.converged:
            last = self.trace.per_round_errors[-1] if self.trace.rounds else float("nan")
            raise NegotiationError(
                f"no equilibrium within {self.params.max_rounds} rounds (last error {last:.3e})",
                self.trace,
            )
        return EquilibriumResult(alphas=self.alphas, x_pop=self.x_pop, trace=self.trace)


def negotiate_equilibrium(demands, params: SystemParams) -> EquilibriumResult:
    """Iterate broadcast -> best response -> mean-field workload to a fixed point.

    The error of round t is ``mean(|x_i^t - x_i^(t-1)|)`` with per-device
    iterate ``x_i = alpha_i * T``.  Raises :class:`NegotiationError` (with the
    trace attached) if the tolerance is not met within ``max_rounds``.
    """
    neg = Negotiator(demands, params)
    while not neg.done:
        neg.update(optimal_alpha(neg.demands, neg.x_pop, params, neg.total_resource))
    return neg.result()


def allocate_resources(alphas, x_pop, params: SystemParams, total_resource) -> Allocation:
    """Proof-of-work share R * alpha_i / (X/T)."""
    if not x_pop > 0:
        raise DomainError("population workload must be positive")
    a = np.asarray(alphas, dtype=float)
    return Allocation(per_device_share=total_resource * a / (x_pop / params.time_unit))
