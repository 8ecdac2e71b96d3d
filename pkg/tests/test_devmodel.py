from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dlcsim.devmodel import (CUTOFF, DEFAULT_NMOS, DEFAULT_PMOS, SATURATION, TRIODE, ModelCard, OperatingPoint,
                             beta, evaluate_mosfet, gm_eff)

import oracles

W, L = 720e-9, 180e-9
NMOS0 = replace(DEFAULT_NMOS, lambda_=0.0)


def test_beta_hand_value():
    assert beta(DEFAULT_NMOS, W, L) == pytest.approx(680e-6, rel=1e-12)
    assert beta(DEFAULT_NMOS, L, L) == DEFAULT_NMOS.kp
    assert beta(DEFAULT_NMOS, 2 * W, L) == pytest.approx(2 * beta(DEFAULT_NMOS, W, L), rel=1e-15)


def test_model_card_invariants():
    with pytest.raises(ValueError):
        ModelCard("nmos", vt0=0.45, kp=0.0)
    with pytest.raises(ValueError):
        ModelCard("nmos", vt0=-0.1, kp=1e-4)
    with pytest.raises(ValueError):
        ModelCard("nmos", vt0=0.45, kp=1e-4, lambda_=-1)
    with pytest.raises(ValueError):
        ModelCard("bjt", vt0=0.45, kp=1e-4)


def test_cutoff():
    op = evaluate_mosfet(NMOS0, W, L, 0.3, 1.0)
    assert op.region == CUTOFF and op.ids == 0 and op.gm == 0


def test_saturation_hand_value():
    op = evaluate_mosfet(NMOS0, W, L, 1.0, 1.0)
    assert op.region == SATURATION
    assert op.ids == pytest.approx(oracles.FROZEN["ids_saturation"], rel=1e-6)
    assert op.ids == pytest.approx(oracles.nmos_ids(170e-6, W, L, 0.45, 1.0, 1.0), rel=1e-12)


def test_triode_hand_value():
    op = evaluate_mosfet(NMOS0, W, L, 1.8, 0.1)
    assert op.region == TRIODE
    assert op.ids == pytest.approx(oracles.FROZEN["ids_triode"], rel=1e-6)


def test_zero_bias_zero_current():
    for card in (DEFAULT_NMOS, DEFAULT_PMOS):
        assert evaluate_mosfet(card, W, L, 0.0, 0.0, 0.0).ids == 0


def test_region_boundary_continuity():
    for vgs in np.linspace(0.5, 1.8, 27):
        vov = vgs - DEFAULT_NMOS.vt0
        below = evaluate_mosfet(DEFAULT_NMOS, W, L, vgs, vov * (1 - 1e-12)).ids
        at = evaluate_mosfet(DEFAULT_NMOS, W, L, vgs, vov).ids
        assert abs(below - at) <= 1e-15


def test_monotone_in_vgs():
    for vds in (0.05, 0.5, 1.8):
        ids = [evaluate_mosfet(DEFAULT_NMOS, W, L, v, vds).ids for v in np.arange(0, 1.8001, 1e-3)]
        assert np.all(np.diff(ids) >= 0)


@given(vgs=st.floats(-1.8, 1.8), vds=st.floats(-1.8, 1.8))
def test_polarity_antisymmetry(vgs, vds):
    pmos_mirror = replace(DEFAULT_NMOS, polarity="pmos")
    assert (evaluate_mosfet(pmos_mirror, W, L, vgs, vds).ids
            + evaluate_mosfet(DEFAULT_NMOS, W, L, -vgs, -vds).ids) == 0


def _fd(card, vgs, vds, h=1e-6):
    f = lambda a, b: evaluate_mosfet(card, W, L, a, b).ids  # noqa: E731
    return (f(vgs + h, vds) - f(vgs - h, vds)) / (2 * h), (f(vgs, vds + h) - f(vgs, vds - h)) / (2 * h)


@pytest.mark.parametrize("card", [DEFAULT_NMOS, DEFAULT_PMOS])
@pytest.mark.parametrize("vgs, vds", [(1.0, 1.0), (1.8, 0.1), (0.9, 0.3), (1.2, 1.5), (0.7, 0.05)])
def test_derivatives_match_finite_differences(card, vgs, vds):
    s = 1.0 if card.polarity == "nmos" else -1.0
    op = evaluate_mosfet(card, W, L, s * vgs, s * vds)
    gm_fd, gds_fd = _fd(card, s * vgs, s * vds)
    assert op.gm >= 0 and op.gds >= 0
    assert gm_fd == pytest.approx(op.gm, rel=1e-4)
    assert gds_fd == pytest.approx(op.gds, rel=1e-4)


def test_meyer_capacitances():
    cox_wl = DEFAULT_NMOS.cox * W * L
    ov = DEFAULT_NMOS.cgso * W
    sat = evaluate_mosfet(DEFAULT_NMOS, W, L, 1.0, 1.0)
    tri = evaluate_mosfet(DEFAULT_NMOS, W, L, 1.8, 0.1)
    off = evaluate_mosfet(DEFAULT_NMOS, W, L, 0.0, 1.0)
    assert sat.cgs == pytest.approx(2 / 3 * cox_wl + ov) and sat.cgd == pytest.approx(ov)
    assert tri.cgs == pytest.approx(0.5 * cox_wl + ov) and tri.cgd == pytest.approx(0.5 * cox_wl + ov)
    assert off.cgs == pytest.approx(ov) and off.cgd == pytest.approx(ov)


def test_lambda_scales_with_length():
    short = evaluate_mosfet(DEFAULT_NMOS, W, L, 1.0, 1.0)
    long_ = evaluate_mosfet(DEFAULT_NMOS, 2 * W, 2 * L, 1.0, 1.0)
    # same W/L, twice the length: half the channel-length modulation
    assert long_.ids == pytest.approx(0.5 * 680e-6 * 0.55**2 * (1 + 0.03), rel=1e-12)
    assert short.ids == pytest.approx(0.5 * 680e-6 * 0.55**2 * (1 + 0.06), rel=1e-12)


def test_gm_eff():
    n = OperatingPoint(SATURATION, 1e-5, 120e-6, 1e-6, 0, 0)
    p = OperatingPoint(SATURATION, -1e-5, 80e-6, 1e-6, 0, 0)
    assert gm_eff([n, p]) == pytest.approx(200e-6)
    assert gm_eff([n]) == 120e-6
    off = evaluate_mosfet(DEFAULT_NMOS, W, L, 0.0, 1.0)
    assert gm_eff([off, off]) == 0
    with pytest.raises(ValueError):
        gm_eff([])
