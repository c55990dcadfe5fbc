import math

import numpy as np
import pytest

from lerwlab import extremal


def test_rectangle_golden_value():
    # conformal modulus of an a x b rectangle (sides as electrodes) is a/b
    d = extremal.build_domain("rectangle", 1 / 32, a=2.0, b=1.0)
    res = extremal.extremal_length(d)
    assert res.extremal_length == pytest.approx(2.0, rel=0.05)


def test_rectangle_duality():
    # swapping electrode pairs inverts the modulus, up to the O(mesh)
    # lattice bias of each factor
    h = 1 / 64
    ab = extremal.extremal_length(extremal.build_domain("rectangle", h, a=1.5, b=1.0))
    ba = extremal.extremal_length(extremal.build_domain("rectangle", h, a=1.0, b=1.5))
    assert ab.extremal_length * ba.extremal_length == pytest.approx(1.0, rel=0.04)


def test_rectangle_scale_invariance():
    # scaling the domain and mesh together leaves the discrete problem
    # unchanged, so the modulus matches to solver precision
    h = 1 / 24
    base = extremal.extremal_length(
        extremal.build_domain("rectangle", h, a=1.0, b=0.5)
    ).extremal_length
    for k in (2.0, 4.0):
        scaled = extremal.extremal_length(
            extremal.build_domain("rectangle", h * k, a=k, b=0.5 * k)
        ).extremal_length
        assert scaled == pytest.approx(base, rel=1e-8)


def test_split_annulus_golden_value():
    # ring 1/e <= |z| <= 1 cut along a radius opens to a 1 x 2 pi rectangle
    d = extremal.build_domain("split_annulus", 1 / 48, n=1)
    res = extremal.extremal_length(d)
    assert res.extremal_length == pytest.approx(1.0 / (2.0 * math.pi), rel=0.06)


def test_energy_is_inverse_modulus():
    d = extremal.build_domain("rectangle", 1 / 16, a=1.0, b=1.0)
    res = extremal.extremal_length(d)
    assert res.extremal_length == pytest.approx(1.0 / res.energy)


def test_disconnected_electrodes_give_infinite_length():
    # closed slit loop encircling the inner boundary of the slit disk
    loop = [
        (0.6 * math.cos(t), 0.6 * math.sin(t))
        for t in np.linspace(0.0, 2.0 * math.pi, 200)
    ]
    d = extremal.build_domain("slit_disk", 1 / 32, r=1, slit=loop)
    res = extremal.extremal_length(d)
    assert math.isinf(res.extremal_length)
    assert not res.connected


def test_slit_disk_partial_slit_stays_connected():
    slit = [(x, 0.0) for x in np.linspace(math.exp(-2), 0.8, 40)]
    blocked = extremal.extremal_length(
        extremal.build_domain("slit_disk", 1 / 64, r=2, slit=slit)
    )
    assert blocked.connected
    # obstruction cannot shorten the connecting family below the free ring
    free = 2.0 / (2.0 * math.pi)
    assert blocked.extremal_length >= free * 0.95


def test_serial_rule_single_pair_and_slack():
    d = extremal.build_domain("split_annulus", 1 / 64, n=2)
    rep = extremal.serial_rule_check(d, [0, 2])
    # a single pair: the left side is its own (only) term
    assert rep.terms == [rep.left]
    assert rep.slack == pytest.approx(0.0)

    rep3 = extremal.serial_rule_check(d, [0, 1, 2])
    assert rep3.left > 0
    assert len(rep3.terms) == 2
    assert rep3.relative_slack >= -0.02


def test_serial_rule_validation():
    d = extremal.build_domain("split_annulus", 1 / 32, n=1)
    with pytest.raises(ValueError):
        extremal.serial_rule_check(d, [])


def test_pfluger_window_stable_across_arcs():
    windows = [
        extremal.pfluger_check(l, 2, 1 / 48).window
        for l in (math.pi / 4, math.pi / 2, math.pi)
    ]
    assert max(windows) - min(windows) < 1.0
    for w in windows:
        assert abs(w) < 4.0


def test_pfluger_validation():
    with pytest.raises(ValueError):
        extremal.pfluger_check(0.0, 2, 1 / 32)
    with pytest.raises(ValueError):
        extremal.pfluger_check(1.0, 9, 1 / 32)


def test_build_domain_validation():
    with pytest.raises(ValueError):
        extremal.build_domain("klein_bottle", 1 / 16)
