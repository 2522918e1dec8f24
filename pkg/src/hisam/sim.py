"""Seeded simulation of authentication policies.

Each device authenticates at uniform spacing ``T/alpha`` starting at t=0.
Every authentication runs a full DTR-MAC handshake and updates the device's
penalty ledger; a device whose ledger workload goes negative is evicted and
stops authenticating.  One anomaly per device starts at a uniform random
time and is detected by the device's next scheduled authentication.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from statistics import NormalDist

import numpy as np

from . import dtr_mac
from .errors import DomainError
from .mfg import loss_individual, negotiate_equilibrium
from .params import SystemParams

POLICIES = ("hisam", "fixed_high", "fixed_low", "demand_driven")
SWEEPS = {
    "mean": (4.0, 8.0, 10.0, 12.0, 16.0),
    "variance": (1.0, 2.0, 3.0, 4.0, 5.0),
    "size": (20, 60, 100, 140, 180),
}
MIN_ACCEPTANCE = 1e-3


@dataclass(frozen=True)
class Scenario:
    params: SystemParams = field(default_factory=lambda: SystemParams(100))
    demand_mean: float = 10.0
    demand_stddev: float = math.sqrt(3.0)
    demand_bounds: tuple = (0.0, 20.0)
    policy: str = "hisam"
    seeds: tuple = tuple(range(10))
    time_unit_s: float = 10.0
    horizon: float | None = None
    anomalies_per_device: int = 1
    oversleep_limit: int = 2
    r_max_mode: str = "realized"
    run_mac: bool = True

    def __post_init__(self):
        lo, hi = self.demand_bounds
        if not lo < self.demand_mean < hi:
            raise DomainError("demand bounds must contain the mean")
        if not self.demand_stddev > 0:
            raise DomainError("demand_stddev must be positive")
        if not self.seeds:
            raise DomainError("at least one seed is required")
        if self.policy not in POLICIES:
            raise DomainError(f"unknown policy {self.policy!r}")
        if self.r_max_mode not in ("realized", "bound"):
            raise DomainError(f"unknown r_max_mode {self.r_max_mode!r}")

    @property
    def horizon_s(self):
        return self.time_unit_s if self.horizon is None else self.horizon

    @property
    def sleep_unit(self):
        """T / F_m, so the oversleep limit n*T_s is 2T/F_m for n = 2."""
        return self.time_unit_s / self.params.f_m


@dataclass
class AnomalyEvent:
    device: int
    onset: float
    detected_at: float | None = None


@dataclass
class MetricsRecord:
    policy: str
    population_loss: float
    total_workload: float
    mean_detection_time: float
    evicted: float = 0.0
    handshake_failures: float = 0.0
    r_max: float = float("nan")
    seed: int | None = None
    sweep_name: str | None = None
    sweep_value: float | None = None
    per_seed: list = field(default_factory=list)


def sample_demands(mean, stddev, n, seed, bounds=(0.0, 20.0)):
    """Gaussian draws truncated to the open interval ``bounds`` by rejection."""
    lo, hi = bounds
    if not lo < mean < hi:
        raise DomainError(f"mean {mean} outside {bounds}")
    dist = NormalDist(mean, stddev)
    accept = dist.cdf(hi) - dist.cdf(lo)
    if accept < MIN_ACCEPTANCE:
        raise DomainError(f"truncation keeps only {accept:.2e} of the mass")
    rng = np.random.default_rng(seed)
    out = np.empty(0)
    while out.size < n:
        d = rng.normal(mean, stddev, n)
        out = np.concatenate([out, d[(d > lo) & (d < hi)]])
    return out[:n]


def policy_frequencies(policy, demands, params: SystemParams, r_max=None):
    """Frequencies (authentications per time unit) under ``policy``."""
    r = np.asarray(demands, dtype=float)
    if r.size != params.n_devices:
        raise DomainError(f"{r.size} demands for n_devices={params.n_devices}")
    f_m = params.f_m
    if policy == "hisam":
        return negotiate_equilibrium(r, params).alphas
    if policy == "fixed_high":
        return np.full(r.size, f_m)
    if policy == "fixed_low":
        return np.full(r.size, f_m / 2.0)
    if policy == "demand_driven":
        r_max = r.max() if r_max is None else r_max
        return f_m * r / r_max
    raise DomainError(f"unknown policy {policy!r}")


def population_loss(demands, alphas, params: SystemParams):
    """Summed loss with X taken as the realized rate T*sum(alpha).

    Infinite when the policy saturates F_P (the loss has a pole there).
    """
    x_pop = float(np.sum(alphas)) * params.time_unit
    try:
        return float(np.sum(loss_individual(demands, alphas, x_pop, params, float(np.sum(demands)))))
    except DomainError:
        return math.inf


def _device_run(alpha, onsets, scenario: Scenario, mac_rng):
    """Authenticate one device over the horizon.

    Returns (authentications, detection delays or None if evicted, failures).
    """
    T, horizon, ts = scenario.time_unit_s, scenario.horizon_s, scenario.sleep_unit
    spacing = T / alpha
    ledger = dtr_mac.PenaltyLedger(scenario.oversleep_limit)
    if scenario.run_mac:
        ap, ue = dtr_mac.session_pair(*dtr_mac.random_registration(mac_rng), 0.0, ts)
    count = failures = 0
    prev = 0.0
    k = 0
    while (t := k * spacing) < horizon:
        k += 1
        if scenario.run_mac and not dtr_mac.handshake(ap, ue, t):
            failures += 1
            continue
        ledger = dtr_mac.record_authentication(ledger, t - prev, ts)
        prev = t
        count += 1
        if ledger.evicted:
            return count, None, failures
    delays = [math.ceil(u / spacing) * spacing - u for u in onsets]
    return count, delays, failures


def run_seed(scenario: Scenario, seed, policy=None) -> MetricsRecord:
    policy = policy or scenario.policy
    params = scenario.params
    # demands come straight from the seed; anomalies and MAC state use child streams
    anomaly_seq, mac_seq = np.random.SeedSequence(seed).spawn(2)
    demands = sample_demands(scenario.demand_mean, scenario.demand_stddev,
                             params.n_devices, seed, scenario.demand_bounds)
    r_max = demands.max() if scenario.r_max_mode == "realized" else scenario.demand_bounds[1]
    alphas = policy_frequencies(policy, demands, params, r_max=r_max)
    onsets = np.random.default_rng(anomaly_seq).uniform(
        0.0, scenario.horizon_s, (params.n_devices, scenario.anomalies_per_device))
    mac_rng = np.random.default_rng(mac_seq)

    workload = failures = evicted = 0
    delays = []
    for i, a in enumerate(alphas):
        n, d, f = _device_run(float(a), onsets[i], scenario, mac_rng)
        workload += n
        failures += f
        if d is None:
            evicted += 1
        else:
            delays.extend(d)
    return MetricsRecord(
        policy=policy,
        population_loss=population_loss(demands, alphas, params),
        total_workload=float(workload),
        mean_detection_time=float(np.mean(delays)) if delays else math.nan,
        evicted=float(evicted),
        handshake_failures=float(failures),
        r_max=float(r_max),
        seed=seed,
    )


def _aggregate(records, policy, **extra) -> MetricsRecord:
    def mean(name):
        return float(np.mean([getattr(r, name) for r in records]))

    return MetricsRecord(
        policy=policy,
        population_loss=mean("population_loss"),
        total_workload=mean("total_workload"),
        mean_detection_time=mean("mean_detection_time"),
        evicted=mean("evicted"),
        handshake_failures=mean("handshake_failures"),
        r_max=mean("r_max"),
        per_seed=list(records),
        **extra,
    )


def run_simulation(scenario: Scenario) -> MetricsRecord:
    """Run ``scenario.policy`` for every seed and average the metrics."""
    records = [run_seed(scenario, s) for s in scenario.seeds]
    return _aggregate(records, scenario.policy)


def sweep_scenario(base: Scenario, sweep, value) -> Scenario:
    if sweep == "mean":
        return replace(base, demand_mean=float(value))
    if sweep == "variance":
        return replace(base, demand_stddev=math.sqrt(value))
    if sweep == "size":
        return replace(base, params=replace(base.params, n_devices=int(value)))
    raise DomainError(f"unknown sweep {sweep!r}")


def experiment_grid(base: Scenario, sweep, values=None, policies=POLICIES):
    """Aggregated records for every (sweep point, policy), in that order."""
    values = SWEEPS[sweep] if values is None else values
    out = []
    for v in values:
        sc = sweep_scenario(base, sweep, v)
        for policy in policies:
            records = [run_seed(sc, s, policy) for s in sc.seeds]
            for r in records:
                r.sweep_name, r.sweep_value = sweep, v
            out.append(_aggregate(records, policy, sweep_name=sweep, sweep_value=v))
    return out
