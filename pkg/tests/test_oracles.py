import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robinlab import oracles as orc


def interior_points(max_abs=0.95):
    return st.complex_numbers(max_magnitude=max_abs, allow_nan=False, allow_infinity=False)


def quadrant_points(lo=0.05, hi=5.0):
    return st.builds(
        complex,
        st.floats(min_value=lo, max_value=hi),
        st.floats(min_value=lo, max_value=hi),
    )


class TestDiskGreen:
    def test_centered_pole(self):
        assert orc.disk_green(0.5, 0.0) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_offcenter_value(self):
        # log(0.82 / 0.3)
        assert orc.disk_green(0.3, 0.6) == pytest.approx(1.0055218656020977, abs=1e-12)

    @given(z=interior_points(), z0=interior_points())
    def test_symmetry_and_positivity(self, z, z0):
        if abs(z - z0) < 1e-6:
            return
        g = orc.disk_green(z, z0)
        assert g == pytest.approx(orc.disk_green(z0, z), rel=1e-12, abs=1e-12)
        assert g > 0.0

    def test_vanishes_on_circle(self):
        for t in (0.1, 1.7, 3.0):
            assert abs(orc.disk_green(cmath.exp(1j * t), 0.4 - 0.2j)) < 1e-12

    def test_rejects_exterior(self):
        with pytest.raises(orc.OracleError):
            orc.disk_green(1.5, 0.0)


class TestDiskDelta:
    def test_example(self):
        assert orc.disk_delta(0.5, 0.0) == pytest.approx(0.5, abs=1e-15)

    @given(z=interior_points(), z0=interior_points())
    def test_range_and_symmetry(self, z, z0):
        d = orc.disk_delta(z, z0)
        assert 0.0 <= d < 1.0 + 1e-12
        assert d == pytest.approx(orc.disk_delta(z0, z), rel=1e-12, abs=1e-12)

    def test_matches_green(self):
        z, z0 = 0.3 + 0.4j, -0.2 + 0.1j
        assert orc.disk_delta(z, z0) == pytest.approx(
            math.exp(-orc.disk_green(z, z0)), rel=1e-14
        )


class TestHalfplaneGreen:
    def test_example(self):
        assert orc.halfplane_green(1.0, 2.0) == pytest.approx(math.log(3.0), abs=1e-14)

    def test_boundary_zero(self):
        assert abs(orc.halfplane_green(2j, 1.0 + 1j)) < 1e-14

    @given(z=quadrant_points(), z0=quadrant_points())
    def test_symmetry(self, z, z0):
        if abs(z - z0) < 1e-6:
            return
        assert orc.halfplane_green(z, z0) == pytest.approx(
            orc.halfplane_green(z0, z), rel=1e-12, abs=1e-12
        )


class TestBracketAndQuadrant:
    def test_coincident_zero(self):
        assert orc.bracket(1 + 1j, 1 + 1j) == 0.0

    def test_imaginary_axis_pair(self):
        assert orc.bracket(1j, 2j) == pytest.approx(1.0, abs=1e-14)

    def test_quadrant_example(self):
        # bracket(1+i, 2+2i) = 1/3, so the field value is log 3
        assert orc.bracket(1 + 1j, 2 + 2j) == pytest.approx(1.0 / 3.0, rel=1e-14)
        assert orc.quarterplane_robin(1 + 1j, 2 + 2j) == pytest.approx(
            math.log(3.0), rel=1e-13
        )

    @given(a=quadrant_points(), b=quadrant_points())
    @settings(max_examples=200)
    def test_exp_identity(self, a, b):
        if abs(a - b) < 1e-8:
            return
        assert math.exp(-orc.quarterplane_robin(a, b)) == pytest.approx(
            orc.bracket(a, b), rel=1e-12
        )

    def test_grounded_side_vanishes(self):
        # evaluation on the positive imaginary axis
        assert abs(orc.quarterplane_robin(3j, 1 + 1j)) < 1e-13

    def test_reflecting_side_positive(self):
        assert orc.quarterplane_robin(2.0, 1 + 1j) > 0.1

    def test_radius_example(self):
        assert orc.quarterplane_radius(1 + 1j) == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-14)


class TestStrip:
    def test_coincident(self):
        assert orc.strip_delta(1 + 0.3j, 1 + 0.3j) == 0.0

    @given(
        x=st.floats(-2, 2),
        y=st.floats(0.05, math.pi / 2 - 0.05),
        u=st.floats(-2, 2),
        v=st.floats(0.05, math.pi / 2 - 0.05),
        c=st.floats(-3, 3),
    )
    @settings(max_examples=150)
    def test_translation_invariance(self, x, y, u, v, c):
        z, w = complex(x, y), complex(u, v)
        d1 = orc.strip_delta(z, w)
        d2 = orc.strip_delta(z + c, w + c)
        assert d2 == pytest.approx(d1, rel=1e-9, abs=1e-12)

    def test_matches_quadrant_through_exp(self):
        z, w = 1 + 0.7j, -0.5 + 0.4j
        assert orc.strip_delta(z, w) == pytest.approx(
            orc.bracket(cmath.exp(z), cmath.exp(w)), rel=1e-13
        )


class TestCapacities:
    @pytest.mark.parametrize(
        "measure,expected",
        [
            (2 * math.pi, 1.0),
            (math.pi, math.sin(math.pi / 4)),
            (math.pi / 2, math.sin(math.pi / 8)),
        ],
    )
    def test_arc_values(self, measure, expected):
        assert orc.arc_capacity(measure) == pytest.approx(expected, rel=1e-15)

    @given(m1=st.floats(0.01, 2 * math.pi), m2=st.floats(0.01, 2 * math.pi))
    def test_arc_monotone(self, m1, m2):
        if m1 < m2:
            assert orc.arc_capacity(m1) < orc.arc_capacity(m2)

    def test_arc_degenerates(self):
        assert orc.arc_capacity(1e-9) < 1e-9

    @pytest.mark.parametrize("a,b,expected", [(-1, 1, 0.5), (0, 4, 1.0)])
    def test_segment_values(self, a, b, expected):
        assert orc.segment_capacity(a, b) == pytest.approx(expected, rel=1e-15)

    @given(a=st.floats(-5, 5), s=st.floats(1e-3, 10), lam=st.floats(0.1, 10))
    def test_segment_dilation(self, a, s, lam):
        base = orc.segment_capacity(a, a + s)
        scaled = orc.segment_capacity(lam * a, lam * (a + s))
        assert scaled == pytest.approx(lam * base, rel=1e-12)


class TestSegmentExterior:
    def test_capacity_normalization(self):
        # far away, g(z, inf) - log|z| -> -log cap = log 2 for [-1, 1]
        for R in (1e3, 1e5):
            g = orc.segment_exterior_green_at_infinity(-1, 1, R * (0.6 + 0.8j))
            assert g - math.log(R) == pytest.approx(math.log(2.0), abs=5 / R)

    def test_green_vanishes_on_segment(self):
        for x in (-0.9, 0.0, 0.7):
            g = orc.segment_exterior_green(-1, 1, complex(x, 1e-12), 2 + 1j)
            assert abs(g) < 1e-5

    def test_green_symmetry(self):
        z, z0 = 0.5 + 2j, -3 + 0.25j
        assert orc.segment_exterior_green(-1, 1, z, z0) == pytest.approx(
            orc.segment_exterior_green(-1, 1, z0, z), rel=1e-12
        )

    def test_radius_far_field(self):
        # at distance R the complement looks like the whole plane: r ~ 2R^2/... grows
        r1 = orc.segment_exterior_radius(-1, 1, 5j)
        r2 = orc.segment_exterior_radius(-1, 1, 10j)
        assert r2 > r1 > 0

    def test_scaling_consistency(self):
        # [a,b] values reduce to the unit model by the affine change of variable
        z, z0 = 1 + 2j, 4 - 1j
        g_ab = orc.segment_exterior_green(0, 4, z, z0)
        s = lambda t: (2 * t - 4) / 4
        g_unit = orc.segment_exterior_green(-1, 1, s(z), s(z0))
        assert g_ab == pytest.approx(g_unit, rel=1e-12)


class TestHalfplaneSegment:
    def test_radius_at_infinity(self):
        assert orc.halfplane_segment_radius_at_infinity(-1, 1) == pytest.approx(2.0)
        assert orc.halfplane_segment_radius_at_infinity(0, 4) == pytest.approx(1.0)

    def test_green_vanishes_on_segment(self):
        g = orc.halfplane_segment_green(-1, 1, 0.3 + 1e-13j, 1j)
        assert abs(g) < 1e-5

    def test_green_positive_inside(self):
        assert orc.halfplane_segment_green(-1, 1, 0.5 + 0.5j, 1j) > 0

    def test_radius_scaling(self):
        # dilation by s moves the pole and multiplies the radius by s
        r1 = orc.halfplane_segment_radius(-1, 1, 2j)
        r2 = orc.halfplane_segment_radius(-2, 2, 4j)
        assert r2 == pytest.approx(2 * r1, rel=1e-12)


class TestDispatch:
    def test_known(self):
        v = orc.evaluate_oracle("arc-capacity", [str(math.pi)])
        assert v == pytest.approx(math.sin(math.pi / 4))

    def test_complex_args(self):
        v = orc.evaluate_oracle("disk-green", ["0.3", "0.6"])
        assert v == pytest.approx(1.0055218656020977)

    def test_unknown_name(self):
        with pytest.raises(orc.OracleError):
            orc.evaluate_oracle("nope", [])

    def test_bad_arity(self):
        with pytest.raises(orc.OracleError):
            orc.evaluate_oracle("bracket", ["1"])
