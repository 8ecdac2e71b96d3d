"""Closed-form delay, power and offset models of a StrongARM-style latch.

The delay model splits the decision time into a discharge phase, where the
tail current pulls the outputs down until a PMOS of the latch turns on, and
a regeneration phase, where the cross-coupled pair amplifies the imbalance
left over from the discharge phase exponentially up to half the supply.

All inputs and outputs are SI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class DegenerateImbalance(ValueError):
    """The initial output imbalance is zero or negative, so the latch never resolves."""


@dataclass(frozen=True)
class DelayModelInputs:
    c_load: float
    v_thp: float
    i_tail: float
    gm_eff: float
    vdd: float
    beta: float
    dv_in: float

    def __post_init__(self):
        for name in ("c_load", "v_thp", "i_tail", "gm_eff", "vdd", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        # dv_in = 0 is accepted so the balanced case can be represented;
        # latch_delay rejects it with DegenerateImbalance instead.
        if not (math.isfinite(self.dv_in) and 0 <= self.dv_in < self.vdd):
            raise ValueError(f"dv_in must satisfy 0 <= dv_in < vdd, got {self.dv_in!r}")


@dataclass(frozen=True)
class OffsetModelInputs:
    d_vt: float
    vgs_minus_vt: float
    d_rl_over_r: float = 0.0
    d_beta_over_beta: float = 0.0

    def __post_init__(self):
        if self.vgs_minus_vt < 0:
            raise ValueError("overdrive vgs_minus_vt must be >= 0")


def discharge_delay(p: DelayModelInputs) -> float:
    """Time for one output to fall by |V_thp| with half the tail current."""
    return 2.0 * p.c_load * p.v_thp / p.i_tail


def imbalance_from_discharge(p: DelayModelInputs, i_d2: float | None = None,
                             t0: float | None = None) -> float:
    """Output imbalance from the slower branch's discharge: |V_thp| - I_D2*t0/C_L.

    ``i_d2`` defaults to half the tail current and ``t0`` to
    :func:`discharge_delay`; with both defaults the result is exactly zero,
    which is why the small-signal form below is used for the delay model.
    """
    if i_d2 is None:
        i_d2 = p.i_tail / 2
    if t0 is None:
        t0 = discharge_delay(p)
    return p.v_thp - i_d2 * t0 / p.c_load


def initial_imbalance(p: DelayModelInputs) -> float:
    """Output imbalance handed to the latch: 2|V_thp| sqrt(beta/I_tail) dV_in."""
    return 2.0 * p.v_thp * math.sqrt(p.beta / p.i_tail) * p.dv_in


def latch_delay(p: DelayModelInputs, dv0: float) -> float:
    """Regeneration time from ``dv0`` to vdd/2: (C_L/gm_eff) ln((vdd/2)/dv0).

    An imbalance already at or beyond vdd/2 needs no regeneration and
    returns 0.
    """
    if not dv0 > 0:
        raise DegenerateImbalance(f"initial imbalance must be > 0 V, got {dv0!r}")
    half = p.vdd / 2
    if dv0 >= half:
        return 0.0
    return (p.c_load / p.gm_eff) * math.log(half / dv0)


def total_delay(p: DelayModelInputs) -> float:
    return discharge_delay(p) + latch_delay(p, initial_imbalance(p))


def average_power(supply_charge: float, vdd: float, f_clk: float) -> float:
    """Mean supply power for ``supply_charge`` drawn once per clock period."""
    if not f_clk > 0:
        raise ValueError("f_clk must be > 0")
    return f_clk * vdd * supply_charge


def offset_voltage(p: OffsetModelInputs) -> float:
    """Input-referred offset from threshold, load and current-factor mismatch."""
    return p.d_vt + 0.5 * p.vgs_minus_vt * (p.d_rl_over_r + p.d_beta_over_beta)
