"""Command-line front end: ``ppdn run | paths | validate``.

Every failure prints one line ``ERROR:<code>: <message>`` on stderr and
exits nonzero (2 for unusable input, 3 for a slot that could not be
served). Output goes to ``--out``, else ``$PPDN_OUT``, else ``./ppdn-out``.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .engine import CapPolicy, FailurePolicy, simulate, slot_weights
from .errors import PPDNError, ScenarioError
from .report import write_path_table, write_trace
from .routing import CostMetric, enumerate_paths, normalized_costs
from .scenario import PRESETS, ScenarioConfig, preset, read_scenario, resolve, validate_scenario

EXIT_INPUT = 2
EXIT_SLOT = 3


def _error(code, message, status):
    print(f"ERROR:{code}: {message}", file=sys.stderr)
    return status


def _out_dir(arg) -> Path:
    return Path(arg or os.environ.get("PPDN_OUT") or "ppdn-out")


def _timestamp(args):
    if args.no_timestamp:
        return None
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def _load(args) -> ScenarioConfig:
    cfg = resolve(args.scenario)
    if getattr(args, "seed", None) is not None:
        cfg.run = dataclasses.replace(cfg.run, seed=args.seed)
    if getattr(args, "perturb", None) is not None:
        cfg.run = dataclasses.replace(cfg.run, perturbation=args.perturb)
    if getattr(args, "metric", None):
        cfg.parameters = dataclasses.replace(cfg.parameters, metric=CostMetric(args.metric))
    if getattr(args, "cap_policy", None):
        cfg.parameters = dataclasses.replace(cfg.parameters, cap_policy=CapPolicy(args.cap_policy))
    if getattr(args, "slots", None) is not None:
        cfg.run = dataclasses.replace(cfg.run, slots=args.slots)
    if getattr(args, "failure_policy", None):
        cfg.run = dataclasses.replace(cfg.run, failure_policy=FailurePolicy(args.failure_policy))
    issues = [i for i in validate_scenario(cfg) if i.level == "error"]
    if issues:
        raise ScenarioError("; ".join(map(str, issues)), issues)
    return cfg


def _lattice_cols(cfg):
    lat = cfg.topology.get("lattice")
    return int(lat["cols"]) if lat else None


def cmd_run(args) -> int:
    cfg = _load(args)
    net = cfg.build_network()
    state = cfg.initial_state(net)
    tlog, final = simulate(net, state, cfg.demand_list(), cfg.slot_params(), cfg.run.slots,
                           cfg.run.failure_policy)
    out = _out_dir(args.out)
    files = write_trace(tlog, out, initial=state, scenario=cfg.name, timestamp=_timestamp(args))
    for rec in tlog.records:
        print(f"slot {rec.slot}: source {rec.source} path {rec.path.label()} cost {rec.path.cost:.9g}")
    print(f"delivered {tlog.delivered:.9g} J, transfer loss {tlog.transfer_loss:.9g} J, "
          f"equalization loss {tlog.equalization_loss:.9g} J")
    if args.figures:
        from . import plotting

        cols = _lattice_cols(cfg)
        if tlog.records:
            first = tlog.records[0]
            files.append(plotting.plot_network(net, state, first.path, out / "network_slot1.png",
                                               cols, title=f"{cfg.name}: slot 1 path"))
            paths = enumerate_paths(first.weights, first.source, first.demand.load, limit=10**5)
            files.append(plotting.plot_path_costs(
                paths, out / "path_costs_slot1.png",
                title=f"{cfg.name}: paths {first.source} -> {first.demand.load}"))
        files.append(plotting.plot_router_voltages(tlog.records, out / "router_voltages.png",
                                                   title=f"{cfg.name}: router voltages"))
        files.append(plotting.plot_network(net, final, None, out / "network_final.png", cols,
                                           title=f"{cfg.name}: final state"))
    print(f"wrote {out}")
    if tlog.failures:
        f = tlog.failures[0]
        return _error(f.code, f"slot {f.slot}: {f.message}", EXIT_SLOT)
    return 0


def cmd_paths(args) -> int:
    cfg = _load(args)
    net = cfg.build_network()
    demand = cfg.demand_list()[0]
    target = args.to if args.to is not None else demand.load
    if args.source is not None:
        origins = [args.source]
    elif demand.source is not None:
        origins = [demand.source]
    else:
        origins = [s.id for s in net.sources]
    for nid in origins + [target]:
        if nid not in net:
            raise ScenarioError(f"node {nid} is not in the network")
    _, _, _, W = slot_weights(net, cfg.initial_state(net), cfg.slot_params())
    paths = []
    for s in origins:
        paths.extend(enumerate_paths(W, s, target, limit=args.limit))
    paths.sort(key=lambda p: (p.cost, p.nodes))
    out = _out_dir(args.out)
    table = write_path_table(paths, out / "paths.csv", timestamp=_timestamp(args))
    if not paths:
        print(f"WARNING: no finite-cost path from {','.join(map(str, origins))} to {target}",
              file=sys.stderr)
    for rank, (p, norm) in enumerate(zip(paths, normalized_costs(paths)), start=1):
        if rank > args.top:
            break
        print(f"{rank:4d}  {p.label():<28s} cost {p.cost:.9g}  normalized {norm:.6f}")
    if args.figures and paths:
        from . import plotting

        plotting.plot_path_costs(paths, out / "paths.png",
                                 title=f"{cfg.name}: paths to {target}")
    print(f"wrote {table}")
    return 0


def cmd_validate(args) -> int:
    cfg = preset(args.scenario) if args.scenario in PRESETS else read_scenario(args.scenario)
    issues = validate_scenario(cfg)
    for i in issues:
        print(str(i), file=sys.stderr if i.level == "error" else sys.stdout)
    errors = [i for i in issues if i.level == "error"]
    if errors:
        return _error(ScenarioError.code, f"{len(errors)} error(s) in {args.scenario}", EXIT_INPUT)
    print(f"ok: {args.scenario} ({len(issues)} warning(s))")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ppdn", description="Power packet dispatching simulator.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help=f"scenario file or preset ({', '.join(PRESETS)})")
        p.add_argument("--out", help="output directory (default $PPDN_OUT or ./ppdn-out)")
        p.add_argument("--metric", choices=[m.value for m in CostMetric])
        p.add_argument("--cap-policy", dest="cap_policy", choices=[c.value for c in CapPolicy])
        p.add_argument("--seed", type=int)
        p.add_argument("--perturb", type=float, metavar="SIGMA",
                       help="seeded Gaussian noise (volts) on initial router voltages")
        p.add_argument("--no-timestamp", action="store_true", help="omit the generated-at header")
        p.add_argument("--figures", action="store_true", help="also render PNG figures")

    p = sub.add_parser("run", help="simulate slots and write traces")
    common(p)
    p.add_argument("--slots", type=int)
    p.add_argument("--failure-policy", dest="failure_policy",
                   choices=[f.value for f in FailurePolicy if f is not FailurePolicy.RAISE])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("paths", help="rank every loop-free path at the slot-start state")
    common(p)
    p.add_argument("--from", dest="source", type=int)
    p.add_argument("--to", type=int)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--limit", type=int, default=10**6)
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("validate", help="check a scenario without running it")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _error("FILE_NOT_FOUND", f"{exc.filename or exc}: no such file", EXIT_INPUT)
    except PPDNError as exc:
        return _error(exc.code, str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
