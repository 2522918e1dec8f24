"""Command-line experiment runner.

Settings come from an optional flat ``key = value`` file (``--config``) and
from flags; flags win.  Keys use the flag names without dashes, with ``-``
replaced by ``_`` (``time_unit = 10``).
"""
from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import dtr_mac
from .errors import DomainError, HiSamError, NegotiationError, ProtocolError
from .mfg import Negotiator, optimal_alpha
from .params import DeviceProfile, SystemParams
from .sim import POLICIES, SWEEPS, Scenario, experiment_grid, run_seed, sample_demands

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_PROTOCOL = 0, 2, 3, 4

DEFAULTS = {
    "n": 100, "fp": 2000.0, "fi": 20.0, "time_unit": 10.0,
    "mean": 10.0, "variance": 3.0, "policy": "all", "sweep": "size",
    "seeds": "0,1,2,3,4,5,6,7,8,9", "out": "-",
    "listen": "127.0.0.1:7700", "connect": "127.0.0.1:7700",
    "secret": "hisam-demo", "device_id": 0, "demand": 10.0,
    "auths": 5, "interval": None, "steps": 16, "oversleep_limit": 2,
}
CONVERTERS = {
    "n": int, "fp": float, "fi": float, "time_unit": float, "mean": float,
    "variance": float, "device_id": int, "demand": float, "auths": int,
    "interval": float, "steps": int, "oversleep_limit": int,
}

GRID_COLUMNS = ("sweep_name", "sweep_value", "policy", "seed", "loss", "detection_time", "workload")
MEAN_COLUMNS = ("sweep_name", "sweep_value", "policy", "loss", "detection_time", "workload")


class ConfigError(HiSamError):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def read_config(path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def resolve(args) -> dict:
    """Merge defaults, config file and flags, then convert types."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            cfg.update(read_config(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for key, conv in CONVERTERS.items():
        if cfg[key] is None:
            continue
        try:
            cfg[key] = conv(cfg[key])
        except (TypeError, ValueError):
            raise ConfigError(f"field {key!r}: cannot parse {cfg[key]!r}") from None
    try:
        cfg["seeds"] = tuple(int(s) for s in str(cfg["seeds"]).split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"field 'seeds': cannot parse {cfg['seeds']!r}") from None
    if not cfg["seeds"]:
        raise ConfigError("field 'seeds': at least one seed is required")
    if cfg["variance"] <= 0:
        raise ConfigError("field 'variance': must be positive")
    return cfg


def _params(cfg) -> SystemParams:
    try:
        return SystemParams(cfg["n"], cfg["fp"], cfg["fi"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _scenario(cfg) -> Scenario:
    try:
        return Scenario(params=_params(cfg), demand_mean=cfg["mean"],
                        demand_stddev=math.sqrt(cfg["variance"]), seeds=cfg["seeds"],
                        time_unit_s=cfg["time_unit"], oversleep_limit=cfg["oversleep_limit"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _policies(cfg):
    if cfg["policy"] == "all":
        return POLICIES
    pols = tuple(p.strip() for p in cfg["policy"].split(","))
    bad = [p for p in pols if p not in POLICIES]
    if bad:
        raise ConfigError(f"field 'policy': unknown {bad}")
    return pols


def _hostport(value):
    host, _, port = value.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise ConfigError(f"bad endpoint {value!r}, expected host:port") from None


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows([fmt(v) for v in row] for row in rows)
    if path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


def _sidecar(out, suffix):
    p = Path(out)
    return str(p.with_name(p.stem + suffix))


def cmd_negotiate(cfg):
    params = _params(cfg)
    demands = sample_demands(cfg["mean"], math.sqrt(cfg["variance"]), params.n_devices, cfg["seeds"][0])
    neg = Negotiator(demands, params)
    while not neg.done:
        neg.update(optimal_alpha(neg.demands, neg.x_pop, params, neg.total_resource))
    t = neg.trace
    rows = [(i + 1, e, x) for i, (e, x) in enumerate(zip(t.per_round_errors, t.per_round_x))]
    _write_csv(cfg["out"], ("round", "error", "X"), rows)
    if not t.converged:
        print(f"negotiation did not converge in {params.max_rounds} rounds", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _metadata(cfg, scenario):
    return {
        "variance_interpretation": "variance; stddev = sqrt(variance)",
        "demand_stddev": scenario.demand_stddev,
        "r_max_mode": scenario.r_max_mode,
        "sleep_unit_s": scenario.sleep_unit,
        "oversleep_limit": scenario.oversleep_limit,
        "time_unit_s": scenario.time_unit_s,
        "seeds": list(scenario.seeds),
    }


def cmd_simulate(cfg):
    sc = _scenario(cfg)
    rows = []
    for policy in _policies(cfg):
        for seed in sc.seeds:
            r = run_seed(sc, seed, policy)
            rows.append(("default", "", policy, seed, r.population_loss,
                         r.mean_detection_time, r.total_workload))
    rows.sort(key=lambda r: (r[2], r[3]))
    _write_csv(cfg["out"], GRID_COLUMNS, rows)
    if cfg["out"] != "-":
        Path(_sidecar(cfg["out"], ".meta.json")).write_text(
            json.dumps(_metadata(cfg, sc), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_grid(cfg):
    sweep = cfg["sweep"]
    if sweep not in SWEEPS:
        raise ConfigError(f"field 'sweep': expected one of {sorted(SWEEPS)}")
    sc = _scenario(cfg)
    records = experiment_grid(sc, sweep, policies=_policies(cfg))
    rows, means = [], []
    for agg in records:
        means.append((sweep, agg.sweep_value, agg.policy, agg.population_loss,
                       agg.mean_detection_time, agg.total_workload))
        for r in agg.per_seed:
            rows.append((sweep, r.sweep_value, r.policy, r.seed, r.population_loss,
                         r.mean_detection_time, r.total_workload))
    rows.sort(key=lambda r: (r[1], r[2], r[3]))
    means.sort(key=lambda r: (r[1], r[2]))
    _write_csv(cfg["out"], GRID_COLUMNS, rows)
    if cfg["out"] != "-":
        _write_csv(_sidecar(cfg["out"], "_mean.csv"), MEAN_COLUMNS, means)
        Path(_sidecar(cfg["out"], ".meta.json")).write_text(
            json.dumps(_metadata(cfg, sc), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_gen_vectors(cfg):
    header, records = dtr_mac.conformance_vectors(seed=cfg["seeds"][0], steps=cfg["steps"])
    lines = [f"# {k}={header[k]}" for k in sorted(header)]
    lines.append("# step, shift, M_ue_hex, M_ap_hex, tag1_hex, tag2_hex, tag3_hex")
    lines += [", ".join(str(v) for v in rec) for rec in records]
    text = "\n".join(lines) + "\n"
    if cfg["out"] == "-":
        sys.stdout.write(text)
    else:
        Path(cfg["out"]).write_text(text)
    return EXIT_OK


def _wire_setup(cfg):
    from .wire import provision_credentials

    params = _params(cfg)
    sleep_unit = cfg["time_unit"] / params.f_m
    master = cfg["secret"].encode()
    return params, sleep_unit, master, provision_credentials


async def _serve(cfg):
    from .wire import APService, ap_service_loop

    params, sleep_unit, master, provision = _wire_setup(cfg)
    creds = {i: provision(master, i) for i in range(params.n_devices)}
    host, port = _hostport(cfg["listen"])
    service = APService(params, creds, sleep_unit, cfg["oversleep_limit"])
    print(f"AP listening on {host}:{port} for {params.n_devices} devices", file=sys.stderr)
    await ap_service_loop(service, host, port)


def cmd_serve_ap(cfg):
    try:
        asyncio.run(_serve(cfg))
    except KeyboardInterrupt:
        pass
    except OSError as exc:
        print(f"serve-ap: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    return EXIT_OK


async def _run_ue(cfg):
    from .wire import ue_client_loop

    params, sleep_unit, master, provision = _wire_setup(cfg)
    host, port = _hostport(cfg["connect"])
    reader, writer = await asyncio.open_connection(host, port)
    profile = DeviceProfile(cfg["device_id"], cfg["demand"])
    interval = cfg["interval"] if cfg["interval"] is not None else sleep_unit
    return await ue_client_loop(reader, writer, profile, provision(master, profile.id),
                                params, sleep_unit, [interval] * cfg["auths"])


def cmd_run_ue(cfg):
    try:
        out = asyncio.run(_run_ue(cfg))
    except OSError as exc:
        print(f"run-ue: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    print(json.dumps({"device_id": out.device_id, "status": out.status, "alpha": out.alpha,
                      "accepted": out.accepted, "rejected": out.rejected,
                      "evicted": out.evicted, "detail": out.detail}))
    if out.status == "negotiation_failed":
        return EXIT_CONVERGENCE
    return EXIT_OK if out.status == "ok" else EXIT_PROTOCOL


COMMANDS = {
    "negotiate": cmd_negotiate,
    "simulate": cmd_simulate,
    "grid": cmd_grid,
    "serve-ap": cmd_serve_ap,
    "run-ue": cmd_run_ue,
    "gen-vectors": cmd_gen_vectors,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    for flag, kind in [("--n", int), ("--fp", float), ("--fi", float), ("--time-unit", float),
                       ("--mean", float), ("--variance", float), ("--policy", str),
                       ("--sweep", str), ("--seeds", str), ("--out", str),
                       ("--listen", str), ("--connect", str), ("--secret", str),
                       ("--device-id", int), ("--demand", float), ("--auths", int),
                       ("--interval", float), ("--steps", int), ("--oversleep-limit", int)]:
        common.add_argument(flag, type=str, default=None, metavar=kind.__name__.upper())
    parser = argparse.ArgumentParser(prog="hisam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NegotiationError as exc:
        print(f"negotiation failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
