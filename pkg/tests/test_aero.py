import math

import numpy as np
import pytest

from foilgen import aero
from foilgen.geometry import CANONICAL_X, AirfoilProfile, canonicalize, from_canonical, mirror
from foilgen.naca import naca4


def canon(code):
    return canonicalize(naca4(code))


def flat_plate():
    return from_canonical(np.zeros((2, 100)), "flat plate")


def test_symmetric_zero_lift():
    assert abs(aero.lift_coefficient(canon("0012"), 0.0)) <= 0.01


def test_symmetric_lift_slope_near_thin_airfoil():
    p = canon("0012")
    a = math.radians(4)
    slope = (aero.lift_coefficient(p, a) - aero.lift_coefficient(p, -a)) / (2 * a)
    # thickness raises the slope a little above 2 pi in inviscid flow
    assert 2 * math.pi < slope < 1.15 * 2 * math.pi


def test_flat_plate_slope():
    p = flat_plate()
    a = math.radians(2)
    slope = aero.lift_coefficient(p, a) / a
    assert abs(slope - 2 * math.pi) / (2 * math.pi) < 0.10


def test_cambered_zero_lift_against_thin_airfoil_theory():
    # thin-airfoil theory for NACA 2412: alpha_L0 ~ -2.08 deg -> cl(0) ~ 0.228
    cl = aero.lift_coefficient(canon("2412"), 0.0)
    assert 0.2 < cl < 0.3


def test_mirror_antisymmetry():
    p = canon("4415")
    a = math.radians(3)
    assert abs(aero.lift_coefficient(p, a) + aero.lift_coefficient(mirror(p), -a)) < 1e-6


def test_drag_increases_with_thickness():
    cds = [aero.evaluate(canon(f"00{t:02d}")).cd for t in range(6, 19, 2)]
    assert all(b > a for a, b in zip(cds, cds[1:]))
    assert 0.005 < cds[0] < 0.02


def test_skin_friction_decreases_with_reynolds():
    assert aero.skin_friction(1e5) > aero.skin_friction(1e6) > aero.skin_friction(1e7)


def test_flow_condition_validation():
    with pytest.raises(aero.EnvelopeExceeded):
        aero.FlowCondition(alpha=1.0)
    with pytest.raises(aero.EnvelopeExceeded):
        aero.FlowCondition(reynolds=0.0)
    assert aero.FlowCondition.from_degrees(5).alpha == pytest.approx(math.radians(5))


def test_lift_to_drag():
    c = aero.AeroCoefficients(0.5, 0.01)
    assert c.lift_to_drag == pytest.approx(50.0)


def test_open_trailing_edge():
    y = np.stack([canon("0012").y[:100], canon("0012").y[100:]])
    y[0, :3] += [0.002, 0.0015, 0.001]
    y[1, -3:] -= [0.001, 0.0015, 0.002]
    p = from_canonical(y)
    assert abs(aero.lift_coefficient(p, 0.0)) < 0.01
    assert aero.lift_coefficient(p, math.radians(4)) > 0.3


def test_batch_records_failures():
    good = canon("0012")
    bad = AirfoilProfile("bad", np.column_stack([CANONICAL_X[:150], np.zeros(150)]))
    res = aero.evaluate_batch([good, bad])
    assert isinstance(res[0], aero.AeroCoefficients)
    assert isinstance(res[1], aero.AeroFailure) and res[1].index == 1


def test_evaluate_is_deterministic():
    p = canon("2415")
    assert aero.evaluate(p) == aero.evaluate(p)
