"""Netlist generators for the five dynamic-latch comparator topologies.

Every topology shares the same port names: ``vdd``, ``clk``, ``vinp`` (Vin+),
``vref`` (Vref+), and outputs ``voutp``/``voutn``. Internal nodes are
``tail`` (drain of the clocked tail device), ``x1``/``x2`` (sources of the
latch NMOS) and, where cascodes are present, ``p1``/``p2`` (drains of the
input pair). Connectivity is documented in docs/topologies.md.
"""
from __future__ import annotations

import enum
from dataclasses import replace
from typing import Mapping

from .devmodel import DEFAULT_NMOS, DEFAULT_PMOS, ModelCard
from .netlist import Capacitor, Dc, Mosfet, Netlist, Pulse, Tran, VSource

W_MIN = 720e-9
W_WIDE = 1.13e-6
L_MIN = 180e-9

OUTPUT_NODES = ("voutp", "voutn")


class TopologyId(str, enum.Enum):
    CSDLC = "csdlc"
    MSADLC = "msadlc"
    DESIGN1_CASCODE = "design1"
    DESIGN2_PSEUDO_NMOS = "design2"
    DESIGN3_CASCODE_PSEUDO_NMOS = "design3"

    @classmethod
    def parse(cls, name: str) -> "TopologyId":
        key = name.strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if key in (member.value, member.name.lower().replace("_", "")):
                return member
        raise ValueError(f"unknown topology {name!r}; choose from {[m.value for m in cls]}")


TITLES = {
    TopologyId.CSDLC: "Charge-sharing dynamic latch comparator (reconstruction)",
    TopologyId.MSADLC: "Modified StrongARM dynamic latch comparator (reconstruction)",
    TopologyId.DESIGN1_CASCODE: "Design-1: MSADLC with cascode",
    TopologyId.DESIGN2_PSEUDO_NMOS: "Design-2: MSADLC with pseudo-NMOS latch",
    TopologyId.DESIGN3_CASCODE_PSEUDO_NMOS: "Design-3: MSADLC with cascode and pseudo-NMOS",
}

# (name, drain, gate, source, bulk, model, width)
_N, _P = "nmos", "pmos"
_TABLES: dict[TopologyId, list[tuple]] = {
    TopologyId.CSDLC: [
        ("M1", "x1", "vinp", "tail", "0", _N, W_MIN),
        ("M2", "x2", "vref", "tail", "0", _N, W_MIN),
        ("M3", "voutn", "voutp", "x1", "0", _N, W_MIN),
        ("M4", "voutp", "voutn", "x2", "0", _N, W_MIN),
        ("M5", "tail", "clk", "0", "0", _N, W_MIN),
        ("M6", "voutn", "voutp", "vdd", "vdd", _P, W_WIDE),
        ("M7", "voutp", "voutn", "vdd", "vdd", _P, W_WIDE),
        # charge-sharing switch between the outputs, closed in the reset phase
        ("M8", "voutn", "clk", "voutp", "vdd", _P, W_WIDE),
    ],
    TopologyId.MSADLC: [
        ("M1", "x1", "vinp", "tail", "0", _N, W_MIN),
        ("M2", "x2", "vref", "tail", "0", _N, W_MIN),
        ("M3", "x1", "clk", "vdd", "vdd", _P, W_MIN),
        ("M4", "x2", "clk", "vdd", "vdd", _P, W_MIN),
        ("M5", "tail", "clk", "0", "0", _N, W_MIN),
        ("M6", "voutn", "clk", "vdd", "vdd", _P, W_WIDE),
        ("M7", "voutp", "clk", "vdd", "vdd", _P, W_WIDE),
        ("M8", "voutn", "voutp", "vdd", "vdd", _P, W_WIDE),
        ("M9", "voutn", "voutp", "x1", "0", _N, W_MIN),
        ("M10", "voutp", "voutn", "x2", "0", _N, W_MIN),
        ("M11", "voutp", "voutn", "vdd", "vdd", _P, W_WIDE),
    ],
    TopologyId.DESIGN1_CASCODE: [
        ("M1", "p1", "vinp", "tail", "0", _N, W_MIN),
        ("M2", "p2", "vref", "tail", "0", _N, W_MIN),
        ("M3", "p1", "vinp", "tail", "0", _N, W_MIN),
        ("M4", "p2", "vref", "tail", "0", _N, W_MIN),
        ("M5", "tail", "clk", "0", "0", _N, W_MIN),
        ("M6", "voutn", "clk", "vdd", "vdd", _P, W_WIDE),
        ("M7", "voutp", "clk", "vdd", "vdd", _P, W_WIDE),
        ("M8", "voutn", "voutp", "vdd", "vdd", _P, W_WIDE),
        ("M9", "voutn", "voutp", "x1", "0", _N, W_MIN),
        ("M10", "voutp", "voutn", "x2", "0", _N, W_MIN),
        ("M11", "voutp", "voutn", "vdd", "vdd", _P, W_WIDE),
        ("M12", "x1", "clk", "p1", "0", _N, W_MIN),
        ("M13", "x2", "clk", "p2", "0", _N, W_MIN),
    ],
    TopologyId.DESIGN2_PSEUDO_NMOS: [
        ("M1", "x1", "vinp", "tail", "0", _N, W_MIN),
        ("M2", "x2", "vref", "tail", "0", _N, W_MIN),
        # supply-biased cascode joining the input pair to the outputs; the
        # reset devices precharge x1/x2 through it
        ("M3", "voutn", "vdd", "x1", "0", _N, W_MIN),
        ("M4", "voutp", "vdd", "x2", "0", _N, W_MIN),
        ("M5", "tail", "clk", "0", "0", _N, W_MIN),
        ("M6", "voutn", "clk", "vdd", "vdd", _P, W_WIDE),
        ("M7", "voutp", "clk", "vdd", "vdd", _P, W_WIDE),
        # pseudo-NMOS latch: cross-coupled pull-downs on the clocked tail ...
        ("M8", "voutn", "voutp", "tail", "0", _N, W_WIDE),
        # ... with grounded-gate PMOS loads
        ("M9", "voutn", "0", "vdd", "vdd", _P, 240e-9),
        ("M10", "voutp", "0", "vdd", "vdd", _P, 240e-9),
        ("M11", "voutp", "voutn", "tail", "0", _N, W_WIDE),
    ],
    TopologyId.DESIGN3_CASCODE_PSEUDO_NMOS: [
        ("M1", "p1", "vinp", "tail", "0", _N, W_MIN),
        ("M2", "p2", "vref", "tail", "0", _N, W_MIN),
        # upper cascode pair; with M13/M14 below it the reset devices
        # precharge every node of the stack
        ("M3", "voutn", "vdd", "x1", "0", _N, W_MIN),
        ("M4", "voutp", "vdd", "x2", "0", _N, W_MIN),
        ("M5", "tail", "clk", "0", "0", _N, W_MIN),
        ("M6", "voutn", "clk", "vdd", "vdd", _P, W_WIDE),
        ("M7", "voutp", "clk", "vdd", "vdd", _P, W_WIDE),
        # pseudo-NMOS latch on the clocked tail
        ("M8", "voutn", "voutp", "tail", "0", _N, W_WIDE),
        ("M9", "voutp", "voutn", "tail", "0", _N, W_WIDE),
        ("M10", "voutn", "0", "vdd", "vdd", _P, 360e-9),
        ("M11", "voutp", "0", "vdd", "vdd", _P, 360e-9),
        # supply-biased cascodes above the input pair
        ("M13", "x1", "vdd", "p1", "0", _N, W_MIN),
        ("M14", "x2", "vdd", "p2", "0", _N, W_MIN),
    ],
}

# Device roles used by measurement and variation code.
INPUT_DEVICES = {
    TopologyId.CSDLC: ("M1", "M2"),
    TopologyId.MSADLC: ("M1", "M2"),
    TopologyId.DESIGN1_CASCODE: ("M1", "M2", "M3", "M4"),
    TopologyId.DESIGN2_PSEUDO_NMOS: ("M1", "M2"),
    TopologyId.DESIGN3_CASCODE_PSEUDO_NMOS: ("M1", "M2"),
}
TAIL_DEVICE = "M5"


class TopologyError(ValueError):
    pass


def _apply_sizing(rows: list[tuple], sizing: Mapping | None) -> dict[str, tuple[float, float]]:
    sizes = {r[0]: (r[6], L_MIN) for r in rows}
    for name, value in (sizing or {}).items():
        key = name.upper()
        if key not in sizes:
            raise TopologyError(f"sizing override references nonexistent device {name!r}")
        w, l = sizes[key]
        if isinstance(value, Mapping):
            extra = {k.upper() for k in value} - {"W", "L"}
            if extra:
                raise TopologyError(f"{name}: only W and L can be overridden, got {sorted(extra)}")
            upper = {k.upper(): v for k, v in value.items()}
            w, l = upper.get("W", w), upper.get("L", l)
        else:
            w, l = value
        sizes[key] = (float(w), float(l))
    return sizes


def clock_source(vdd: float = 1.8, f_clk: float = 100e6, edge_s: float = 50e-12,
                 delay_s: float | None = None, name: str = "VCLK") -> VSource:
    """Clock starting low (reset), first rising edge at half a period by default."""
    period = 1.0 / f_clk
    if delay_s is None:
        delay_s = period / 2
    return VSource(name, "clk", "0", Pulse(0.0, vdd, delay_s, edge_s, edge_s, period / 2 - edge_s, period))


def generate_topology(topology: TopologyId | str, sizing: Mapping | None = None, *,
                      with_testbench: bool = False,
                      models: Mapping[str, ModelCard] | None = None,
                      vdd: float = 1.8, vref: float = 0.8, vin: float = 1.0,
                      f_clk: float = 100e6, c_load: float = 5e-15) -> Netlist:
    """Build a comparator netlist with the default sizes, optionally overridden.

    ``sizing`` maps device names to ``{"W": .., "L": ..}`` or ``(W, L)``.
    With ``with_testbench`` the netlist also gets supply, clock, reference
    and input sources, output load capacitors and a ``.tran`` card.
    """
    if isinstance(topology, str) and not isinstance(topology, TopologyId):
        try:
            topology = TopologyId.parse(topology)
        except ValueError as exc:
            raise TopologyError(str(exc)) from None
    rows = _TABLES[topology]
    sizes = _apply_sizing(rows, sizing)

    net = Netlist(title=TITLES[topology])
    net.models = {"nmos": DEFAULT_NMOS, "pmos": DEFAULT_PMOS}
    if models:
        net.models.update(models)
    for name, d, g, s, b, model, _ in rows:
        w, l = sizes[name]
        net.devices.append(Mosfet(name, d, g, s, b, model, w, l))

    if with_testbench:
        period = 1.0 / f_clk
        net.devices += [
            VSource("VDD", "vdd", "0", Dc(vdd)),
            clock_source(vdd, f_clk),
            VSource("VREF", "vref", "0", Dc(vref)),
            VSource("VIN", "vinp", "0", Dc(vin)),
            Capacitor("CLP", "voutp", "0", c_load),
            Capacitor("CLN", "voutn", "0", c_load),
        ]
        net.directives.append(Tran(period / 1000, 2 * period))
    net.validate()
    return net


def with_models(net: Netlist, models: Mapping[str, ModelCard]) -> Netlist:
    out = replace(net, devices=list(net.devices), models=dict(net.models), directives=list(net.directives))
    out.models.update(models)
    return out
