"""Comparator measurement procedures and the benches that drive them.

Each procedure is a pure function of a :class:`TransientResult`. The bench
builders wrap a bare comparator netlist (as returned by
``generate_topology`` without a testbench) with the stimulus a procedure
needs, and :func:`characterize_netlists` runs them for a batch of
structurally identical comparators, e.g. Monte-Carlo samples.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import analytic
from .engine import NonConvergence, SolverOptions, TransientResult, supply_current_integral, transient_batch
from .netlist import Capacitor, Dc, Netlist, Pwl, Resistor, Tran, VSource
from .topologies import OUTPUT_NODES, TopologyId, clock_source, generate_topology

METRIC_FIELDS = ("avg_delay_s", "avg_power_w", "pdp_j", "offset_v", "clock_feedthrough_v", "kickback_v")
PROCEDURES = ("delay", "power", "offset", "feedthrough", "kickback")

# Grid used by every bench unless the caller passes its own options: 1 ps
# steps for 300 ps after each stimulus corner, growing to 50 ps.
BENCH_OPTIONS = SolverOptions(dt_max=50e-12, edge_step=1e-12, edge_window=300e-12, step_growth=1.2)


class MeasurementError(RuntimeError):
    procedure = "measurement"


class MissingTransition(MeasurementError):
    procedure = "delay"


class NoDecisionFlip(MeasurementError):
    procedure = "offset"


class MissingSourceResistor(MeasurementError):
    procedure = "kickback"


class ProcedureFailed(MeasurementError):
    """A solver or measurement failure, labeled with the procedure it hit."""

    def __init__(self, procedure: str, cause: Exception):
        super().__init__(f"{procedure}: {cause}")
        self.procedure = procedure
        self.cause = cause


@dataclass(frozen=True)
class TestbenchSpec:
    __test__ = False  # not a pytest class

    vdd: float = 1.8
    vref: float = 0.8
    f_clk: float = 100e6
    kickback_rsource: float = 1000.0
    # input for the delay bench
    vin: float = 1.0
    c_load: float = 5e-15
    clk_edge_s: float = 50e-12
    # power: input ramps 0 -> vdd -> 0, each ramp lasting power_ramp_s
    # (None = half a clock period)
    power_ramp_s: float | None = None
    # kickback: each input steps kickback_low -> kickback_high after half a period
    kickback_low: float = 0.6
    kickback_high: float = 1.0
    # feedthrough: slow ramp 0 -> vdd -> 0, each way over this many periods
    feedthrough_periods: int = 2
    # offset: successive staircases of offset_levels steps, one decision per
    # clock period, until the bracket is below offset_resolution
    offset_levels: int = 6
    offset_resolution: float = 0.2e-3
    offset_max_stages: int = 12

    def __post_init__(self):
        if min(self.vdd, self.f_clk, self.kickback_rsource, self.c_load, self.clk_edge_s) <= 0:
            raise ValueError("vdd, f_clk, kickback_rsource, c_load and clk_edge_s must be > 0")
        if not 0 < self.vref < self.vdd:
            raise ValueError("vref must lie strictly between 0 and vdd")
        if self.offset_levels < 3:
            raise ValueError("offset_levels must be >= 3")
        if self.offset_resolution <= 0:
            raise ValueError("offset_resolution must be > 0")

    @property
    def period(self) -> float:
        return 1.0 / self.f_clk

    @property
    def power_ramp(self) -> float:
        return self.power_ramp_s if self.power_ramp_s is not None else self.period / 2


@dataclass(frozen=True)
class DelayMeasurement:
    tphl: float
    tplh: float

    @property
    def avg(self) -> float:
        return 0.5 * (self.tphl + self.tplh)


@dataclass(frozen=True)
class ComparatorMetrics:
    avg_delay_s: float
    avg_power_w: float
    offset_v: float
    clock_feedthrough_v: float
    kickback_v: float
    pdp_j: float = dataclasses.field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "pdp_j", self.avg_delay_s * self.avg_power_w)

    def to_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_FIELDS}


# -- waveform helpers ---------------------------------------------------------

def crossings(times: np.ndarray, values: np.ndarray, level: float, direction: str) -> np.ndarray:
    """Linearly interpolated times where ``values`` crosses ``level``.

    ``direction`` is ``"rise"`` or ``"fall"``.
    """
    a, b = values[:-1], values[1:]
    if direction == "rise":
        hit = (a < level) & (b >= level)
    elif direction == "fall":
        hit = (a > level) & (b <= level)
    else:
        raise ValueError("direction must be 'rise' or 'fall'")
    k = np.flatnonzero(hit)
    frac = (level - a[k]) / (b[k] - a[k])
    return times[k] + frac * (times[k + 1] - times[k])


def _first_after(ts: np.ndarray, t0: float) -> float | None:
    later = ts[ts > t0]
    return float(later[0]) if later.size else None


# -- measurement procedures ----------------------------------------------------

def measure_delay(result: TransientResult, clk_node: str = "clk", vout_node: str = "voutn",
                  vdd: float = 1.8) -> DelayMeasurement:
    """Clock-to-output delays at vdd/2 for the first evaluate/reset pair."""
    t = result.times
    half = vdd / 2
    clk, vout = result.v(clk_node), result.v(vout_node)
    clk_rise = crossings(t, clk, half, "rise")
    if clk_rise.size == 0:
        raise MissingTransition(f"{clk_node} never rises through {half:g} V")
    t_rise = float(clk_rise[0])
    t_out_fall = _first_after(crossings(t, vout, half, "fall"), t_rise)
    if t_out_fall is None:
        raise MissingTransition(f"{vout_node} never falls through {half:g} V after the clock edge")
    t_fall = _first_after(crossings(t, clk, half, "fall"), t_rise)
    if t_fall is None:
        raise MissingTransition(f"{clk_node} never falls through {half:g} V after rising")
    t_out_rise = _first_after(crossings(t, vout, half, "rise"), t_fall)
    if t_out_rise is None:
        raise MissingTransition(f"{vout_node} never rises through {half:g} V after the reset edge")
    return DelayMeasurement(tphl=t_out_fall - t_rise, tplh=t_out_rise - t_fall)


def measure_average_power(result: TransientResult, vdd_source: str = "VDD", vdd: float = 1.8,
                          f_clk: float = 100e6, window: tuple[float, float] | None = None) -> float:
    """Mean supply power over ``window`` (default: the last clock period simulated)."""
    if window is None:
        t1 = float(result.times[-1])
        window = (t1 - 1.0 / f_clk, t1)
    t0, t1 = window
    if t0 < result.times[0] or t1 > result.times[-1] or t1 <= t0:
        raise ValueError(f"power window {window} outside the simulated span")
    charge = supply_current_integral(result, vdd_source, t0, t1)
    return analytic.average_power(charge, vdd, 1.0 / (t1 - t0))


def measure_kickback(result: TransientResult, node: str, settled_level: float | str,
                     window: tuple[float, float] | None = None) -> float:
    """Peak |v(node) - ideal source value| inside ``window``.

    ``settled_level`` is either a constant or the name of the node driven
    directly by the ideal source.
    """
    t = result.times
    mask = np.ones_like(t, dtype=bool) if window is None else (t >= window[0]) & (t <= window[1])
    v = result.v(node)[mask]
    ref = result.v(settled_level)[mask] if isinstance(settled_level, str) else settled_level
    if v.size == 0:
        return 0.0
    return float(np.max(np.abs(v - ref)))


def decision_samples(result: TransientResult, vin_node: str = "vinp", vout_node: str = "voutn",
                     clk_node: str = "clk") -> tuple[np.ndarray, np.ndarray]:
    """Per evaluation phase: input at the rising clock edge and the latched decision.

    The decision is True when ``vout_node`` is low at the end of the
    evaluation phase (for ``voutn`` this means "vin above vref").
    """
    t = result.times
    clk = result.v(clk_node)
    vdd = float(clk.max())
    half = vdd / 2
    rises = crossings(t, clk, half, "rise")
    falls = crossings(t, clk, half, "fall")
    vin, vout = result.v(vin_node), result.v(vout_node)
    levels, decisions = [], []
    for tr in rises:
        tf = _first_after(falls, tr)
        if tf is None:
            break
        # sample a little before the reset edge starts pulling the output up
        ts = tr + 0.9 * (tf - tr)
        levels.append(float(np.interp(tr, t, vin)))
        decisions.append(bool(np.interp(ts, t, vout) < half))
    return np.array(levels), np.array(decisions, dtype=bool)


def measure_offset(result: TransientResult, vin_node: str = "vinp", vref: float = 0.8,
                   vout_node: str = "voutn", clk_node: str = "clk") -> float:
    """Input at which the sampled decision first flips, minus ``vref``.

    The flip point is the midpoint between the last input sampled before
    the flip and the first one after it, so it is exact to half a ramp step.
    """
    levels, decisions = decision_samples(result, vin_node, vout_node, clk_node)
    if decisions.size < 2:
        raise NoDecisionFlip("fewer than two evaluation phases in the record")
    changed = np.flatnonzero(decisions != decisions[0])
    if changed.size == 0:
        raise NoDecisionFlip("the sampled decision never toggles across the ramp")
    k = int(changed[0])
    return 0.5 * (levels[k - 1] + levels[k]) - vref


def measure_clock_feedthrough(result: TransientResult, vout_nodes: Iterable[str] = OUTPUT_NODES,
                              vdd: float = 1.8) -> float:
    peak = max(float(result.v(n).max()) for n in vout_nodes)
    return max(peak - vdd, 0.0)


# -- benches --------------------------------------------------------------------

def _with_bench(core: Netlist, bench: TestbenchSpec, sources: list, tstop: float,
                clk_delay: float | None = None) -> Netlist:
    net = replace(core, devices=list(core.devices), models=dict(core.models), directives=[])
    net.devices += [
        VSource("VDD", "vdd", "0", Dc(bench.vdd)),
        clock_source(bench.vdd, bench.f_clk, bench.clk_edge_s, clk_delay),
        *sources,
        Capacitor("CLP", "voutp", "0", bench.c_load),
        Capacitor("CLN", "voutn", "0", bench.c_load),
    ]
    net.directives.append(Tran(bench.period / 1000, tstop))
    return net


def delay_bench(core: Netlist, bench: TestbenchSpec) -> Netlist:
    """Fixed inputs; one evaluation phase followed by a reset edge."""
    return _with_bench(core, bench, [VSource("VREF", "vref", "0", Dc(bench.vref)),
                                     VSource("VIN", "vinp", "0", Dc(bench.vin))], 1.5 * bench.period)


def power_window(bench: TestbenchSpec) -> tuple[float, float]:
    start = bench.period / 4
    return start, start + 2 * bench.power_ramp


def power_bench(core: Netlist, bench: TestbenchSpec) -> Netlist:
    """Input ramps 0 -> vdd -> 0 while the clock runs."""
    t0, t1 = power_window(bench)
    ramp = Pwl(((0.0, 0.0), (t0, 0.0), (t0 + bench.power_ramp, bench.vdd), (t1, 0.0)))
    return _with_bench(core, bench, [VSource("VREF", "vref", "0", Dc(bench.vref)),
                                     VSource("VIN", "vinp", "0", ramp)], t1)


def kickback_benches(core: Netlist, bench: TestbenchSpec) -> tuple[Netlist, Netlist]:
    """Both inputs driven through ``kickback_rsource``; one bench steps each input.

    The step happens half a period in and the first clock edge comes half a
    period later, so the input has settled before the latch fires.
    """
    T = bench.period
    knots = (0.0, T / 2, T / 2 + bench.clk_edge_s)
    step = Pwl(tuple(zip(knots, (bench.kickback_low, bench.kickback_low, bench.kickback_high))))
    # the held input shares the step's knots so both benches batch together
    hold = Pwl(tuple((t, bench.vref) for t in knots))
    nets = []
    for pos_wave, neg_wave in ((step, hold), (hold, step)):
        nets.append(_with_bench(core, bench, [
            VSource("VINS", "vin_src", "0", pos_wave),
            Resistor("RINP", "vin_src", "vinp", bench.kickback_rsource),
            VSource("VREFS", "vref_src", "0", neg_wave),
            Resistor("RREF", "vref_src", "vref", bench.kickback_rsource),
        ], 2 * T, clk_delay=T))
    return nets[0], nets[1]


def kickback_window(bench: TestbenchSpec) -> tuple[float, float]:
    T = bench.period
    return 0.75 * T, 2 * T


def source_resistor(net: Netlist, node: str) -> Resistor:
    """The resistor joining ``node`` to a voltage-source-driven node."""
    driven = {d.npos for d in net.of_kind(VSource)} | {d.nneg for d in net.of_kind(VSource)}
    for r in net.of_kind(Resistor):
        if (r.n1 == node and r.n2 in driven) or (r.n2 == node and r.n1 in driven):
            return r
    raise MissingSourceResistor(f"no source resistor drives node {node!r}")


def feedthrough_bench(core: Netlist, bench: TestbenchSpec) -> Netlist:
    """Slow input ramp 0 -> vdd -> 0 with the clock running."""
    T = bench.period
    start, span = T / 4, bench.feedthrough_periods * T
    ramp = Pwl(((0.0, 0.0), (start, 0.0), (start + span, bench.vdd), (start + 2 * span, 0.0)))
    return _with_bench(core, bench, [VSource("VREF", "vref", "0", Dc(bench.vref)),
                                     VSource("VIN", "vinp", "0", ramp)], start + 2 * span)


def staircase(levels: Sequence[float], bench: TestbenchSpec) -> Pwl:
    """One input level per clock period, changing on the falling clock edge."""
    T, edge = bench.period, bench.clk_edge_s
    pts = [(0.0, float(levels[0]))]
    for k in range(1, len(levels)):
        pts += [(k * T, float(levels[k - 1])), (k * T + edge, float(levels[k]))]
    return Pwl(tuple(pts))


def offset_bench(core: Netlist, bench: TestbenchSpec, levels: Sequence[float]) -> Netlist:
    return _with_bench(core, bench, [VSource("VREF", "vref", "0", Dc(bench.vref)),
                                     VSource("VIN", "vinp", "0", staircase(levels, bench))],
                       (len(levels) + 0.25) * bench.period)


# -- batched procedures ---------------------------------------------------------

def _slim(options: SolverOptions, nodes: tuple[str, ...], sources: tuple[str, ...]) -> SolverOptions:
    return replace(options, save=nodes, save_sources=sources)


def _run(nets: list[Netlist], options: SolverOptions, procedure: str) -> list:
    try:
        out = transient_batch(nets, options, raise_errors=False)
    except NonConvergence as exc:  # failures outside the per-member machinery
        return [ProcedureFailed(procedure, exc)] * len(nets)
    return [ProcedureFailed(procedure, r) if isinstance(r, Exception) else r for r in out]


def _each(results: list, procedure: str, fn) -> list:
    out = []
    for r in results:
        if isinstance(r, Exception):
            out.append(r)
            continue
        try:
            out.append(fn(r))
        except MeasurementError as exc:
            out.append(exc if isinstance(exc, ProcedureFailed) else ProcedureFailed(procedure, exc))
    return out


def run_delay(cores: list[Netlist], bench: TestbenchSpec, options: SolverOptions) -> list:
    nets = [delay_bench(c, bench) for c in cores]
    res = _run(nets, _slim(options, ("clk", "voutn", "voutp"), ()), "delay")
    return _each(res, "delay", lambda r: measure_delay(r, "clk", "voutn", bench.vdd))


def run_power(cores: list[Netlist], bench: TestbenchSpec, options: SolverOptions) -> list:
    nets = [power_bench(c, bench) for c in cores]
    res = _run(nets, _slim(options, ("clk",), ("VDD",)), "power")
    win = power_window(bench)
    return _each(res, "power", lambda r: measure_average_power(r, "VDD", bench.vdd, bench.f_clk, win))


def run_kickback(cores: list[Netlist], bench: TestbenchSpec, options: SolverOptions) -> list:
    pos, neg = zip(*(kickback_benches(c, bench) for c in cores))
    for net in (pos[0], neg[0]):
        source_resistor(net, "vinp")
        source_resistor(net, "vref")
    opts = _slim(options, ("vinp", "vin_src", "vref", "vref_src"), ())
    res = _run(list(pos) + list(neg), opts, "kickback")
    win = kickback_window(bench)
    n = len(cores)
    kp = _each(res[:n], "kickback", lambda r: measure_kickback(r, "vinp", "vin_src", win))
    kn = _each(res[n:], "kickback", lambda r: measure_kickback(r, "vref", "vref_src", win))
    return [a if isinstance(a, Exception) else b if isinstance(b, Exception) else 0.5 * (a + b)
            for a, b in zip(kp, kn)]


def run_feedthrough(cores: list[Netlist], bench: TestbenchSpec, options: SolverOptions) -> list:
    nets = [feedthrough_bench(c, bench) for c in cores]
    res = _run(nets, _slim(options, OUTPUT_NODES, ()), "feedthrough")
    return _each(res, "feedthrough", lambda r: measure_clock_feedthrough(r, OUTPUT_NODES, bench.vdd))


def run_offset(cores: list[Netlist], bench: TestbenchSpec, options: SolverOptions) -> list:
    """Signed offset by successive staircases narrowing a bracket around the flip.

    The first staircase spans 0..vdd inclusive. Every later one places
    ``offset_levels`` points strictly inside the current bracket, whose
    ends are already known to decide low/high, so each stage shrinks the
    bracket by ``offset_levels + 1``.
    """
    n, K = len(cores), bench.offset_levels
    lo, hi = np.zeros(n), np.full(n, bench.vdd)
    out: list = [None] * n
    alive = np.arange(n)
    opts = _slim(options, ("clk", "vinp", "voutn"), ())
    for stage in range(bench.offset_max_stages):
        if alive.size == 0:
            break
        if stage == 0:
            levels = np.linspace(lo[alive], hi[alive], K, axis=1)
        else:
            frac = np.arange(1, K + 1) / (K + 1)
            levels = lo[alive, None] + (hi - lo)[alive, None] * frac[None, :]
        nets = [offset_bench(cores[b], bench, levels[j]) for j, b in enumerate(alive)]
        res = _run(nets, opts, "offset")
        still = []
        for j, b in enumerate(alive):
            r = res[j]
            if isinstance(r, Exception):
                out[b] = r
                continue
            _, dec = decision_samples(r)
            if dec.size != K:
                out[b] = ProcedureFailed("offset", NoDecisionFlip("missing evaluation phases in the staircase"))
                continue
            if stage == 0:
                pts, dd = levels[j], dec
                if dd[0] or not dd.any():
                    out[b] = ProcedureFailed("offset", NoDecisionFlip(
                        "the decision does not flip between 0 V and vdd"))
                    continue
            else:
                pts = np.concatenate([[lo[b]], levels[j], [hi[b]]])
                dd = np.concatenate([[False], dec, [True]])
            k = int(np.argmax(dd))
            lo[b], hi[b] = pts[k - 1], pts[k]
            if hi[b] - lo[b] <= bench.offset_resolution:
                out[b] = 0.5 * (lo[b] + hi[b]) - bench.vref
            else:
                still.append(b)
        alive = np.array(still, dtype=np.intp)
    for b in alive:
        out[b] = ProcedureFailed("offset", NoDecisionFlip("bracket did not reach the requested resolution"))
    return out


_RUNNERS = {
    "delay": run_delay,
    "power": run_power,
    "offset": run_offset,
    "feedthrough": run_feedthrough,
    "kickback": run_kickback,
}

# which procedures each metric needs
METRIC_PROCEDURES = {
    "avg_delay_s": ("delay",),
    "avg_power_w": ("power",),
    "pdp_j": ("delay", "power"),
    "offset_v": ("offset",),
    "clock_feedthrough_v": ("feedthrough",),
    "kickback_v": ("kickback",),
}


def evaluate_metric(cores: list[Netlist], metric: str, bench: TestbenchSpec | None = None,
                    options: SolverOptions | None = None) -> list:
    """One metric for every comparator in ``cores``; failures come back as exceptions.

    ``offset_v`` is returned signed here so its spread is meaningful; the
    Table-style :class:`ComparatorMetrics` stores its magnitude.
    """
    if metric not in METRIC_PROCEDURES:
        raise ValueError(f"unknown metric {metric!r}; choose from {list(METRIC_FIELDS)}")
    bench = bench or TestbenchSpec()
    options = options or BENCH_OPTIONS
    got = {p: _RUNNERS[p](cores, bench, options) for p in METRIC_PROCEDURES[metric]}
    out = []
    for b in range(len(cores)):
        vals = {p: got[p][b] for p in got}
        err = next((v for v in vals.values() if isinstance(v, Exception)), None)
        if err is not None:
            out.append(err)
        elif metric == "avg_delay_s":
            out.append(vals["delay"].avg)
        elif metric == "pdp_j":
            out.append(vals["delay"].avg * vals["power"])
        else:
            out.append(float(next(iter(vals.values()))))
    return out


def characterize_netlists(cores: list[Netlist], bench: TestbenchSpec | None = None,
                          options: SolverOptions | None = None) -> list:
    """Full metric set for each bare comparator netlist (exceptions for failures)."""
    bench = bench or TestbenchSpec()
    options = options or BENCH_OPTIONS
    got = {p: _RUNNERS[p](cores, bench, options) for p in PROCEDURES}
    out = []
    for b in range(len(cores)):
        vals = {p: got[p][b] for p in PROCEDURES}
        err = next((v for v in vals.values() if isinstance(v, Exception)), None)
        if err is not None:
            out.append(err)
            continue
        out.append(ComparatorMetrics(
            avg_delay_s=vals["delay"].avg,
            avg_power_w=vals["power"],
            offset_v=abs(vals["offset"]),
            clock_feedthrough_v=vals["feedthrough"],
            kickback_v=vals["kickback"],
        ))
    return out


def characterize(topology: TopologyId | str, bench: TestbenchSpec | None = None,
                 options: SolverOptions | None = None, *, sizing=None, models=None) -> ComparatorMetrics:
    """Run all five procedures on one topology; raises the first failure."""
    core = generate_topology(topology, sizing, models=models)
    result = characterize_netlists([core], bench, options)[0]
    if isinstance(result, Exception):
        raise result
    return result


def offset_bisection(core: Netlist, bench: TestbenchSpec | None = None, options: SolverOptions | None = None,
                     lo: float | None = None, hi: float | None = None, tol: float = 0.1e-3) -> float:
    """Signed offset by bisection on single-decision transients with a DC input.

    Slow but independent of the staircase procedure; used to cross-check it.
    """
    bench = bench or TestbenchSpec()
    options = _slim(options or BENCH_OPTIONS, ("clk", "vinp", "voutn"), ())
    lo = 0.0 if lo is None else lo
    hi = bench.vdd if hi is None else hi

    def decide(v: float) -> bool:
        net = offset_bench(core, bench, [v])
        r = transient_batch([net], options)[0]
        return bool(decision_samples(r)[1][0])

    if decide(lo) or not decide(hi):
        raise NoDecisionFlip("decision does not flip inside the bisection interval")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if decide(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi) - bench.vref


def offset_hysteresis(core: Netlist, bench: TestbenchSpec | None = None, options: SolverOptions | None = None,
                      center: float | None = None, span: float = 5e-3, levels: int = 11) -> float:
    """Rising-ramp flip point minus falling-ramp flip point around ``center``."""
    bench = bench or TestbenchSpec()
    options = _slim(options or BENCH_OPTIONS, ("clk", "vinp", "voutn"), ())
    center = bench.vref if center is None else center
    up = np.linspace(center - span, center + span, levels)
    nets = [offset_bench(core, bench, up), offset_bench(core, bench, up[::-1])]
    rising, falling = transient_batch(nets, options)
    return measure_offset(rising, vref=0.0) - measure_offset(falling, vref=0.0)


# -- reporting --------------------------------------------------------------------

HUMAN_UNITS = {
    "avg_delay_s": ("avg_delay_ps", 1e12),
    "avg_power_w": ("avg_power_uw", 1e6),
    "pdp_j": ("pdp_fj", 1e15),
    "offset_v": ("offset_mv", 1e3),
    "clock_feedthrough_v": ("clock_feedthrough_v", 1.0),
    "kickback_v": ("kickback_v", 1.0),
}


def metrics_document(topology: TopologyId | str, metrics: ComparatorMetrics) -> dict:
    """JSON-ready record: SI fields plus a ``human`` block in ps/uW/fJ/mV/V."""
    name = topology.value if isinstance(topology, TopologyId) else str(topology)
    doc: dict = {"topology": name}
    doc.update(metrics.to_dict())
    doc["human"] = {label: getattr(metrics, key) * scale for key, (label, scale) in HUMAN_UNITS.items()}
    if not all(math.isfinite(v) for v in metrics.to_dict().values()):
        raise ValueError("metrics contain non-finite values")
    return doc
