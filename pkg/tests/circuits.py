"""Small test circuits shared by the engine tests and the acceptance suite."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from dlcsim.devmodel import DEFAULT_NMOS, DEFAULT_PMOS, evaluate_mosfet, gm_eff
from dlcsim.engine import SolverOptions, transient, transient_batch
from dlcsim.metrics import BENCH_OPTIONS
from dlcsim.netlist import parse
from dlcsim.topologies import generate_topology

import oracles

RC_R, RC_C = 1e3, 1e-12
RC_TAU = RC_R * RC_C


def rc_netlist(step_rise: float | None = 1e-15, tstop: float = 5 * RC_TAU):
    """RC low-pass; ``step_rise=None`` drives it with a constant 1 V instead of a step."""
    src = "DC 1" if step_rise is None else f"PWL(0 0 {step_rise!r} 1)"
    return parse(f"rc\nV1 in 0 {src}\nR1 in out {RC_R!r}\nC1 out 0 {RC_C!r}\n.tran {tstop / 100!r} {tstop!r}\n.end\n")


def rc_max_error(dt: float, integration: str) -> float:
    """Max |v(out) - analytic| for the capacitor charging from 0 V at a constant 1 V drive."""
    r = transient(rc_netlist(None), SolverOptions(dt_max=dt, integration=integration), initial={"out": 0.0})
    exact = np.array([oracles.rc_step(t, RC_TAU) for t in r.times])
    return float(np.max(np.abs(r.v("out") - exact)))


def convergence_order(integration: str, dts=None) -> float:
    dts = dts if dts is not None else RC_TAU / np.array([10, 20, 40, 100])
    errs = [rc_max_error(dt, integration) for dt in dts]
    return float(np.polyfit(np.log(dts), np.log(errs), 1)[0])


# -- regeneration ------------------------------------------------------------------------

LATCH_WN, LATCH_WP, LATCH_L, LATCH_C = 720e-9, 2.04e-6, 180e-9, 10e-15


def latch_netlist(tstop: float = 300e-12):
    w = {k: repr(v) for k, v in dict(wn=LATCH_WN, wp=LATCH_WP, l=LATCH_L, c=LATCH_C).items()}
    return parse(f"""cross-coupled inverters
VDD vdd 0 DC 1.8
MN1 a b 0 0 nmos W={w['wn']} L={w['l']}
MP1 a b vdd vdd pmos W={w['wp']} L={w['l']}
MN2 b a 0 0 nmos W={w['wn']} L={w['l']}
MP2 b a vdd vdd pmos W={w['wp']} L={w['l']}
C1 a 0 {w['c']}
C2 b 0 {w['c']}
.model nmos nmos (VT0=450m KP=170u LAMBDA=60m CGSO=300p CGDO=300p COX=8.5m)
.model pmos pmos (VT0=450m KP=60u LAMBDA=80m CGSO=300p CGDO=300p COX=8.5m)
.tran 100f {tstop!r}
.end
""")


def latch_small_signal(vdd: float = 1.8):
    """(v_trip, gm_eff, C_node) of the symmetric pair at its metastable point.

    C_node is the differential-mode capacitance of one node: everything to
    a fixed potential, plus twice every capacitance bridging the two nodes
    (they swing in antiphase, so the bridging caps see twice the voltage).
    """
    def mismatch(v):
        n = evaluate_mosfet(DEFAULT_NMOS, LATCH_WN, LATCH_L, v, v).ids
        p = evaluate_mosfet(DEFAULT_PMOS, LATCH_WP, LATCH_L, v - vdd, v - vdd).ids
        return n + p

    vm = brentq(mismatch, 0.2, vdd - 0.2, xtol=1e-15)
    opn = evaluate_mosfet(DEFAULT_NMOS, LATCH_WN, LATCH_L, vm, vm)
    opp = evaluate_mosfet(DEFAULT_PMOS, LATCH_WP, LATCH_L, vm - vdd, vm - vdd)
    # gate of this node's load inverter: cgs to a rail; cgd of both inverters bridges a-b
    grounded = LATCH_C + opn.cgs + opp.cgs
    bridging = 2 * (opn.cgd + opp.cgd)
    return vm, gm_eff([opn, opp]), grounded + 2 * bridging


def regeneration(dv0: float = 1e-3, dt: float = 0.1e-12):
    """Simulated (rate over the small-signal window, time from dv0 to vdd/2) and the predictions."""
    vm, g, c = latch_small_signal()
    r = transient(latch_netlist(), SolverOptions(dt_max=dt), initial={"a": vm + dv0 / 2, "b": vm - dv0 / 2})
    t, dv = r.times, r.v("a") - r.v("b")
    window = (dv > 2 * dv0) & (dv < 100e-3)
    rate = float(np.polyfit(t[window], np.log(dv[window]), 1)[0])
    t_latch = float(np.interp(0.9, dv, t) - np.interp(dv0, dv, t))
    return {"rate": rate, "rate_predicted": g / c, "t_latch": t_latch,
            "t_latch_predicted": (c / g) * math.log(0.9 / dv0)}


# -- comparator decisions ---------------------------------------------------------------

DECISION_INPUTS = (-0.5, -0.1, -0.01, 0.01, 0.1, 0.5)


def decisions(topology: str, dvs=DECISION_INPUTS, vdd: float = 1.8, vref: float = 0.8):
    """Per input difference: whether both evaluations decided correctly, and the worst reset error.

    The testbench clock resets for the first half of each 10 ns period and
    evaluates for the second; outputs are sampled just before each edge.
    A decision counts when the output that should be high is above 80 % of
    vdd and the other is below 20 % (ratioed latches do not reach the rails).
    """
    nets = [generate_topology(topology, with_testbench=True, vdd=vdd, vref=vref, vin=vref + dv) for dv in dvs]
    out = []
    for dv, r in zip(dvs, transient_batch(nets, BENCH_OPTIONS)):
        def at(node, t):
            return float(np.interp(t, r.times, r.v(node)))

        high, low = ("voutp", "voutn") if dv > 0 else ("voutn", "voutp")
        correct = all(at(high, t) > 0.8 * vdd and at(low, t) < 0.2 * vdd for t in (9.9e-9, 19.9e-9))
        reset_err = max(abs(at(n, t) - vdd) for n in ("voutp", "voutn") for t in (4.9e-9, 14.9e-9))
        out.append({"dv": dv, "correct": correct, "reset_error": reset_err})
    return out
