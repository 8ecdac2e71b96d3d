"""Command-line interface: ``dlcsim <command> ...``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import analytic
from .engine import NonConvergence, SolverOptions, transient
from .metrics import (BENCH_OPTIONS, METRIC_FIELDS, ComparatorMetrics, MeasurementError, TestbenchSpec,
                      characterize_netlists, evaluate_metric, metrics_document)
from .netlist import NetlistError, parse, to_text
from .report import BenchmarkReport, render_table
from .topologies import TopologyError, TopologyId, generate_topology
from .units import parse_value
from .variation import DEFAULT_A_BETA, DEFAULT_A_VT, DEFAULT_CORNERS, MismatchSpec, UnknownParameter
from .variation import corners as run_corners
from .variation import monte_carlo, sweep

log = logging.getLogger("dlcsim")


class UsageError(Exception):
    """Bad arguments discovered after parsing (exit code 2)."""


def _topology(text: str) -> TopologyId:
    try:
        return TopologyId.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _value(text: str) -> float:
    try:
        return parse_value(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


# -- output helpers -------------------------------------------------------------

def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def load_schema(name: str) -> dict:
    """JSON schema shipped for the ``name`` output (metrics, report, distribution, ...)."""
    return json.loads(resources.files("dlcsim").joinpath("schemas", f"{name}.schema.json").read_text())


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _format(args, default: str = "table") -> str:
    return args.format or default


def _bench_options(args) -> SolverOptions:
    opts = BENCH_OPTIONS
    if args.dt_max is not None:
        opts = replace(opts, dt_max=args.dt_max)
    if args.integration is not None:
        opts = replace(opts, integration=args.integration)
    return opts


def _metric_rows(items: list[tuple[str, ComparatorMetrics | Exception]], key: str) -> list[list]:
    rows = [[key, *METRIC_FIELDS, "error"]]
    for label, m in items:
        if isinstance(m, ComparatorMetrics):
            rows.append([label, *(format(getattr(m, f), ".17g") for f in METRIC_FIELDS), ""])
        else:
            rows.append([label, *([""] * len(METRIC_FIELDS)), str(m)])
    return rows


def _metric_table(rows: list[list]) -> str:
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(f"{c:<{w}}" for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


# -- commands ------------------------------------------------------------------------

def cmd_gen(args) -> int:
    sizing = {}
    for item in args.size or []:
        try:
            target, value = item.split("=", 1)
            dev, dim = target.split(".", 1)
            sizing.setdefault(dev, {})[dim.upper()] = parse_value(value)
        except ValueError:
            raise UsageError(f"--size expects DEVICE.W=value or DEVICE.L=value, got {item!r}") from None
    try:
        net = generate_topology(args.topology, sizing or None, with_testbench=args.with_testbench)
    except TopologyError as exc:
        raise UsageError(str(exc)) from None
    _emit(args, to_text(net))
    return 0


def cmd_tran(args) -> int:
    net = parse(Path(args.netlist).read_text())
    if net.tran is None and args.tstop is None:
        raise UsageError(f"{args.netlist}: no .tran directive and no --tstop given")
    opts = SolverOptions(dt_max=args.dt_max, integration=args.integration or "trap")
    start = time.perf_counter()
    result = transient(net, opts, tstop=args.tstop)
    wall = time.perf_counter() - start
    buf = io.StringIO()
    result.to_csv(buf)
    _emit(args, buf.getvalue())
    print(f"steps: {len(result.times) - 1}  wall: {wall:.3f} s", file=sys.stderr)
    return 0


def _bench(args) -> TestbenchSpec:
    return TestbenchSpec(vdd=args.vdd, vref=args.vref, f_clk=args.f_clk)


def cmd_measure(args) -> int:
    core = generate_topology(args.topology)
    opts = _bench_options(args)
    if args.metric:
        value = evaluate_metric([core], args.metric, _bench(args), opts)[0]
        if isinstance(value, Exception):
            raise value
        doc = {"topology": args.topology.value, args.metric: value}
        text = _json(doc) if _format(args) == "json" else _csv([["topology", args.metric],
                                                              [args.topology.value, format(value, ".17g")]])
        _emit(args, text)
        return 0
    m = characterize_netlists([core], _bench(args), opts)[0]
    if isinstance(m, Exception):
        raise m
    if _format(args) == "json":
        _emit(args, _json(metrics_document(args.topology, m)))
    else:
        rows = _metric_rows([(args.topology.value, m)], "topology")
        _emit(args, _csv(rows) if _format(args) == "csv" else _metric_table(rows))
    return 0


def cmd_report(args) -> int:
    topologies = args.topologies or list(TopologyId)
    opts = _bench_options(args)
    report = BenchmarkReport()
    for topo in topologies:
        log.info("characterizing %s", topo.value)
        try:
            report.rows[topo] = characterize_netlists([generate_topology(topo)], _bench(args), opts)[0]
        except (NonConvergence, MeasurementError) as exc:
            report.rows[topo] = exc
    _emit(args, _json(report.to_document()) if _format(args) == "json" else render_table(report))
    return 0


_DELAY_FLAGS = ("c_load", "v_thp", "i_tail", "gm_eff", "vdd", "beta", "dv_in")


def cmd_analytic(args) -> int:
    try:
        p = analytic.DelayModelInputs(**{k: getattr(args, k) for k in _DELAY_FLAGS})
    except ValueError as exc:
        flag = next((k for k in _DELAY_FLAGS if str(exc).startswith(k)), None)
        raise UsageError(f"--{flag.replace('_', '-')}: {exc}" if flag else str(exc)) from None
    t0 = analytic.discharge_delay(p)
    dv0 = analytic.initial_imbalance(p)
    try:
        t_latch = analytic.latch_delay(p, dv0)
    except analytic.DegenerateImbalance as exc:
        raise UsageError(f"--dv-in: {exc}") from None
    try:
        off = analytic.OffsetModelInputs(args.d_vt, args.overdrive, args.d_rl, args.d_beta)
    except ValueError as exc:
        raise UsageError(f"--overdrive: {exc}") from None
    doc = {
        "t0_s": t0,
        "dv0_v": dv0,
        "t_latch_s": t_latch,
        "t_total_s": t0 + t_latch,
        "p_avg_w": analytic.average_power(args.charge, p.vdd, args.f_clk),
        "v_os_v": analytic.offset_voltage(off),
    }
    if _format(args) == "json":
        _emit(args, _json(doc))
    elif _format(args) == "csv":
        _emit(args, _csv([list(doc), [format(v, ".17g") for v in doc.values()]]))
    else:
        _emit(args, "".join([
            f"t0       {t0 * 1e12:.4f} ps\n",
            f"dV0      {dv0 * 1e3:.4f} mV\n",
            f"t_latch  {t_latch * 1e12:.4f} ps\n",
            f"t_total  {(t0 + t_latch) * 1e12:.4f} ps\n",
            f"P_avg    {doc['p_avg_w'] * 1e6:.4f} uW\n",
            f"V_os     {doc['v_os_v'] * 1e3:.4f} mV\n",
        ]))
    return 0


def cmd_mc(args) -> int:
    devices = tuple(d.strip() for d in args.devices.split(",")) if args.devices else None
    spec = MismatchSpec(a_vt=args.a_vt, a_beta=args.a_beta, seed=args.seed, n_samples=args.n, devices=devices)
    dist = monte_carlo(args.topology, _bench(args), spec, args.metric, _bench_options(args))
    if _format(args, "csv") == "json":
        doc = {"topology": args.topology.value, "seed": args.seed, **dist.summary()}
        if args.bins:
            doc["histogram"] = dist.histogram(args.bins)
        _emit(args, _json(doc))
    else:
        _emit(args, dist.to_csv())
    if args.summary:
        Path(args.summary).write_text(_json({"topology": args.topology.value, "seed": args.seed, **dist.summary()}))
    if dist.n_failed:
        print(f"{dist.n_failed} of {spec.n_samples} samples failed", file=sys.stderr)
    return 0


def cmd_corners(args) -> int:
    result = run_corners(args.topology, _bench(args), DEFAULT_CORNERS, _bench_options(args))
    items = list(result.items())
    if _format(args) == "json":
        doc = {"topology": args.topology.value,
               "corners": {k: (v.to_dict() if isinstance(v, ComparatorMetrics) else {"error": str(v)})
                           for k, v in items}}
        _emit(args, _json(doc))
    else:
        rows = _metric_rows(items, "corner")
        _emit(args, _csv(rows) if _format(args) == "csv" else _metric_table(rows))
    return 0


def cmd_sweep(args) -> int:
    values = [v for v in args.values.split(",") if v.strip()]
    try:
        points = sweep(args.topology, _bench(args), args.param, values, _bench_options(args), metric=args.metric)
    except UnknownParameter as exc:
        raise UsageError(str(exc)) from None
    if _format(args, "csv") == "json":
        doc = {"topology": args.topology.value, "param": args.param, "metric": args.metric,
               "points": [{"value": v, "result": (r if isinstance(r, float) else
                                                  r.to_dict() if isinstance(r, ComparatorMetrics) else
                                                  {"error": str(r)})} for v, r in points]}
        _emit(args, _json(doc))
        return 0
    if args.metric:
        rows = [[args.param, args.metric]]
        rows += [[format(v, ".17g"), format(r, ".17g") if isinstance(r, float) else f"error: {r}"]
                 for v, r in points]
    else:
        rows = _metric_rows([(format(v, ".17g"), r) for v, r in points], args.param)
    _emit(args, _csv(rows))
    return 0


# -- parser -----------------------------------------------------------------------------

def _common(top: bool) -> argparse.ArgumentParser:
    """Flags accepted before or after the command name.

    The copy attached to each command uses suppressed defaults so that a
    flag given before the command name is not reset by the command parser.
    """
    def d(value):
        return value if top else argparse.SUPPRESS

    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=_seed, default=d(0), help="master random seed (default 0)")
    g.add_argument("--dt-max", type=_value, default=d(None), help="largest time step, e.g. 50p")
    g.add_argument("--integration", choices=("trap", "be"), default=d(None), help="integration method")
    g.add_argument("-o", "--output", default=d(None), help="write the result here instead of stdout")
    g.add_argument("--format", choices=("table", "json", "csv"), default=d(None),
                   help="output format (default: table, or csv for mc and sweep)")
    g.add_argument("--config", default=d(None), help="TOML file with defaults named like the flags")
    g.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def _bench_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vdd", type=_value, default=1.8)
    p.add_argument("--vref", type=_value, default=0.8)
    p.add_argument("--f-clk", type=_value, default=100e6)


def build_parser() -> argparse.ArgumentParser:
    common = _common(top=False)
    parser = argparse.ArgumentParser(prog="dlcsim", description="Dynamic latch comparator simulator.",
                                     parents=[_common(top=True)])
    sub = parser.add_subparsers(dest="command", required=True)
    metric_help = f"one of {', '.join(METRIC_FIELDS)}"

    p = sub.add_parser("gen", parents=[common], help="write a comparator netlist")
    p.add_argument("topology", type=_topology)
    p.add_argument("--with-testbench", action="store_true", help="add supply, clock, inputs and loads")
    p.add_argument("--size", action="append", metavar="DEV.W=VAL", help="override a device size")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("tran", parents=[common], help="transient analysis to CSV")
    p.add_argument("netlist")
    p.add_argument("--tstop", type=_value, default=None, help="override the .tran stop time")
    p.set_defaults(func=cmd_tran)

    p = sub.add_parser("measure", parents=[common], help="characterize one topology")
    p.add_argument("topology", type=_topology)
    p.add_argument("--metric", choices=METRIC_FIELDS, default=None, help="only this metric")
    _bench_flags(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("report", parents=[common], help="comparison table against reference values")
    p.add_argument("topologies", type=_topology, nargs="*")
    _bench_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("analytic", parents=[common], help="evaluate the closed-form models")
    p.add_argument("--c-load", type=_value, default=10e-15, help="load capacitance C_L (F)")
    p.add_argument("--v-thp", type=_value, default=0.45, help="PMOS threshold magnitude (V)")
    p.add_argument("--i-tail", type=_value, default=100e-6, help="tail current (A)")
    p.add_argument("--gm-eff", type=_value, default=200e-6, help="latch transconductance (S)")
    p.add_argument("--vdd", type=_value, default=1.8, help="supply (V)")
    p.add_argument("--beta", type=_value, default=680e-6, help="input pair current factor (A/V^2)")
    p.add_argument("--dv-in", type=_value, default=10e-3, help="input difference (V)")
    p.add_argument("--charge", type=_value, default=0.0, help="supply charge per period (C)")
    p.add_argument("--f-clk", type=_value, default=100e6, help="clock frequency (Hz)")
    p.add_argument("--d-vt", type=_value, default=0.0, help="threshold mismatch (V)")
    p.add_argument("--overdrive", type=_value, default=0.2, help="Vgs - VT of the input pair (V)")
    p.add_argument("--d-rl", type=_value, default=0.0, help="relative load mismatch")
    p.add_argument("--d-beta", type=_value, default=0.0, help="relative current factor mismatch")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("mc", parents=[common], help="Monte-Carlo mismatch analysis")
    p.add_argument("topology", type=_topology)
    p.add_argument("--metric", choices=METRIC_FIELDS, default="offset_v", help=metric_help)
    p.add_argument("--n", type=int, default=100, help="number of samples")
    p.add_argument("--a-vt", type=_value, default=DEFAULT_A_VT, help="threshold mismatch coefficient (V*m)")
    p.add_argument("--a-beta", type=_value, default=DEFAULT_A_BETA, help="current factor mismatch coefficient (m)")
    p.add_argument("--devices", default=None, help="comma-separated devices to perturb (default all)")
    p.add_argument("--bins", type=int, default=0, help="include histogram data with this many bins (json)")
    p.add_argument("--summary", default=None, help="also write the summary JSON here")
    _bench_flags(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("corners", parents=[common], help="process corner analysis")
    p.add_argument("topology", type=_topology)
    _bench_flags(p)
    p.set_defaults(func=cmd_corners)

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    p.add_argument("topology", type=_topology)
    p.add_argument("--param", required=True, help="Mx.W, Mx.L, model.<name>.<field> or bench.<field>")
    p.add_argument("--values", required=True, help="comma-separated values, suffixes allowed")
    p.add_argument("--metric", choices=METRIC_FIELDS, default=None, help=metric_help)
    _bench_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def _load_config(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib

    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _apply_config(parser: argparse.ArgumentParser, config: dict) -> None:
    """Top-level keys apply to every command; a table named after a command applies to it only."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    shared = {k.replace("-", "_"): v for k, v in config.items() if not isinstance(v, dict)}
    global_keys = {a.dest for a in parser._actions}
    _set_defaults(parser, {k: v for k, v in shared.items() if k in global_keys})
    for name, p in sub.choices.items():
        section = {k.replace("-", "_"): v for k, v in config.get(name, {}).items()}
        own = {k: v for k, v in shared.items() if k not in global_keys}
        _set_defaults(p, {**own, **section})


def _set_defaults(p: argparse.ArgumentParser, values: dict) -> None:
    actions = {a.dest: a for a in p._actions}
    values = {k: v for k, v in values.items() if k in actions}
    for key, value in values.items():
        action = actions[key]
        if action.type is not None and isinstance(value, str):
            values[key] = action.type(value)
    p.set_defaults(**values)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            _apply_config(parser, _load_config(known.config))
        except (OSError, ValueError) as exc:
            print(f"dlcsim: cannot read config {known.config}: {exc}", file=sys.stderr)
            return 2
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dlcsim {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, NetlistError, NonConvergence, MeasurementError, ValueError) as exc:
        print(f"dlcsim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
