"""Square-law MOSFET model plus the helpers the analytic delay model leans on.

All quantities are SI. PMOS cards store ``vt0`` as a positive magnitude; the
sign is handled by evaluating the PMOS as a mirrored NMOS.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

Polarity = Literal["nmos", "pmos"]

# LAMBDA on a model card is quoted at this channel length and scales as 1/L.
LAMBDA_REF_LENGTH = 180e-9

CUTOFF = "cutoff"
TRIODE = "triode"
SATURATION = "saturation"


@dataclass(frozen=True)
class ModelCard:
    polarity: Polarity
    vt0: float
    kp: float
    lambda_: float = 0.0
    cgso: float = 0.0
    cgdo: float = 0.0
    cox: float = 0.0

    def __post_init__(self):
        if self.polarity not in ("nmos", "pmos"):
            raise ValueError(f"polarity must be nmos or pmos, got {self.polarity!r}")
        if not self.kp > 0:
            raise ValueError("kp must be > 0")
        if self.vt0 <= 0:
            raise ValueError("vt0 must be > 0 (PMOS thresholds are stored as magnitudes)")
        if self.lambda_ < 0:
            raise ValueError("lambda must be >= 0")
        if min(self.cgso, self.cgdo, self.cox) < 0:
            raise ValueError("capacitance parameters must be >= 0")

    def scaled(self, kp_scale: float = 1.0, vt0_scale: float = 1.0, vt0_shift: float = 0.0) -> "ModelCard":
        return replace(self, kp=self.kp * kp_scale, vt0=self.vt0 * vt0_scale + vt0_shift)


# Generic 180nm-class defaults (no foundry data behind them).
DEFAULT_NMOS = ModelCard("nmos", vt0=0.45, kp=170e-6, lambda_=0.06, cgso=0.3e-9, cgdo=0.3e-9, cox=8.5e-3)
DEFAULT_PMOS = ModelCard("pmos", vt0=0.45, kp=60e-6, lambda_=0.08, cgso=0.3e-9, cgdo=0.3e-9, cox=8.5e-3)


@dataclass(frozen=True)
class OperatingPoint:
    region: str
    ids: float
    gm: float
    gds: float
    cgs: float
    cgd: float


def beta(model: ModelCard, width_m: float, length_m: float) -> float:
    """Current factor kp * W/L in A/V^2."""
    if width_m <= 0 or length_m <= 0:
        raise ValueError("device dimensions must be positive")
    return model.kp * (width_m / length_m)


def effective_lambda(model: ModelCard, length_m: float) -> float:
    return model.lambda_ * (LAMBDA_REF_LENGTH / length_m)


def square_law(vgs, vov_thr, vds, beta_, lam):
    """Forward-mode (vds >= 0) NMOS-frame drain current and its derivatives.

    Works elementwise on arrays. Returns ``(ids, gm, gds, region_code)`` with
    region codes 0 = cutoff, 1 = triode, 2 = saturation.
    """
    vov = vgs - vov_thr
    on = vov > 0
    sat = on & (vds >= vov)
    tri = on & ~sat
    clm = 1.0 + lam * vds

    vov_sq = vov * vov
    core_sat = 0.5 * beta_ * vov_sq
    core_tri = beta_ * (vov * vds - 0.5 * vds * vds)

    ids = np.where(sat, core_sat * clm, np.where(tri, core_tri * clm, 0.0))
    gm = np.where(sat, beta_ * vov * clm, np.where(tri, beta_ * vds * clm, 0.0))
    gds = np.where(
        sat,
        core_sat * lam,
        np.where(tri, beta_ * (vov - vds) * clm + core_tri * lam, 0.0),
    )
    region = np.where(sat, 2, np.where(tri, 1, 0))
    return ids, gm, gds, region


def meyer_caps(region, cox_wl, cgso_w, cgdo_w):
    """Piecewise-constant gate capacitances (cgs, cgd) for each region code."""
    cgs = np.where(region == 2, (2.0 / 3.0) * cox_wl, np.where(region == 1, 0.5 * cox_wl, 0.0)) + cgso_w
    cgd = np.where(region == 1, 0.5 * cox_wl, 0.0) + cgdo_w
    return cgs, cgd


def mosfet_terminal_eval(vd, vg, vs, pol, vt0, beta_, lam):
    """Evaluate devices from physical terminal voltages.

    ``pol`` is +1 for NMOS and -1 for PMOS. Returns the current flowing into
    the drain terminal, its partials with respect to (vd, vg, vs), the region
    code, and a ``reversed`` mask marking devices whose drain and source have
    swapped roles.
    """
    vgs_n = pol * (vg - vs)
    vds_n = pol * (vd - vs)
    rev = vds_n < 0
    vgs_eff = np.where(rev, vgs_n - vds_n, vgs_n)
    vds_eff = np.abs(vds_n)
    ids_eff, gm, gds, region = square_law(vgs_eff, vt0, vds_eff, beta_, lam)

    i_d = pol * np.where(rev, -ids_eff, ids_eff)
    d_vd = np.where(rev, gm + gds, gds)
    d_vg = np.where(rev, -gm, gm)
    d_vs = np.where(rev, -gds, -(gm + gds))
    return i_d, d_vd, d_vg, d_vs, region, rev


_REGION_NAMES = {0: CUTOFF, 1: TRIODE, 2: SATURATION}


def evaluate_mosfet(model: ModelCard, width_m: float, length_m: float,
                    vgs: float, vds: float, vbs: float = 0.0) -> OperatingPoint:
    """Operating point of a single device.

    ``ids`` follows the drain-current sign convention of the device itself,
    so a conducting PMOS reports a negative value; ``gm`` and ``gds`` are the
    partials of ``ids`` with respect to ``vgs`` and ``vds``. When drain and
    source swap roles (vds of the wrong sign), gm/gds/cgs/cgd refer to the
    effective source terminal. ``vbs`` is accepted for interface
    completeness; the model has no body effect.
    """
    del vbs
    b = beta(model, width_m, length_m)
    lam = effective_lambda(model, length_m)
    pol = 1.0 if model.polarity == "nmos" else -1.0

    vgs_n, vds_n = pol * vgs, pol * vds
    rev = vds_n < 0
    if rev:
        vgs_n, vds_n = vgs_n - vds_n, -vds_n
    ids, gm, gds, region = square_law(vgs_n, model.vt0, vds_n, b, lam)
    ids = float(ids) * pol * (-1.0 if rev else 1.0)
    cgs, cgd = meyer_caps(region, model.cox * width_m * length_m, model.cgso * width_m, model.cgdo * width_m)
    return OperatingPoint(
        region=_REGION_NAMES[int(region)],
        ids=ids,
        gm=float(gm),
        gds=float(gds),
        cgs=float(cgs),
        cgd=float(cgd),
    )


def gm_eff(latch_devices: Sequence[OperatingPoint]) -> float:
    """Regeneration transconductance of one inverter of a cross-coupled pair.

    Pass the NMOS and PMOS operating points of one inverter; for a
    pseudo-NMOS latch pass only the NMOS (its grounded-gate load does not
    contribute positive feedback).
    """
    if len(latch_devices) == 0:
        raise ValueError("gm_eff needs at least one device operating point")
    return float(sum(op.gm for op in latch_devices))
