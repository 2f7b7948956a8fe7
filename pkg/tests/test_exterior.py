import math

import numpy as np
import pytest

from robinlab import oracles as orc
from robinlab.exterior import SlitExterior, arc_track, circle_track, segment_track


def unit_arc(measure, n=320):
    return SlitExterior([arc_track(0.0, 1.0, -measure / 2, measure / 2)], panels_per_track=n)


class TestCapacity:
    def test_unit_circle(self):
        ext = SlitExterior([circle_track(0.0, 1.0)], panels_per_track=256)
        assert ext.capacity() == pytest.approx(1.0, abs=2e-5)

    def test_shifted_circle(self):
        ext = SlitExterior([circle_track(2.0 + 1.0j, 0.5)], panels_per_track=256)
        assert ext.capacity() == pytest.approx(0.5, abs=2e-5)

    def test_unit_segment(self):
        ext = SlitExterior([segment_track(-1.0, 1.0)])
        assert ext.capacity() == pytest.approx(0.5, rel=2e-5)

    def test_scaled_segment(self):
        ext = SlitExterior([segment_track(0.0, 4.0)])
        assert ext.capacity() == pytest.approx(1.0, rel=2e-5)

    @pytest.mark.parametrize("measure", [math.pi / 2, math.pi, 3 * math.pi / 2])
    def test_circular_arcs_match_sine_rule(self, measure):
        # confirms the arc-capacity formula at three parameter values
        assert unit_arc(measure).capacity() == pytest.approx(
            orc.arc_capacity(measure), rel=5e-5
        )

    def test_full_arc_equals_circle(self):
        ext = SlitExterior([arc_track(0.0, 1.0, 0.0, 2 * math.pi)], panels_per_track=256)
        assert ext.capacity() == pytest.approx(1.0, abs=2e-5)


class TestSegmentGreens:
    def test_green_inf_matches_oracle(self):
        ext = SlitExterior([segment_track(-1.0, 1.0)])
        for z in (2.0 + 1.0j, -0.5 + 0.8j, 3.0j, 1.5):
            assert ext.green_inf(z) == pytest.approx(
                orc.segment_exterior_green_at_infinity(-1, 1, z), abs=5e-5
            )

    def test_finite_pole_matches_oracle(self):
        ext = SlitExterior([segment_track(-1.0, 1.0)])
        z, z0 = 0.5 + 1.2j, -0.7 + 0.6j
        assert ext.green(z, z0) == pytest.approx(
            orc.segment_exterior_green(-1, 1, z, z0), abs=5e-5
        )

    def test_radius_matches_oracle(self):
        ext = SlitExterior([segment_track(-1.0, 1.0)])
        for z0 in (1.0j, 0.4 + 0.5j, -2.0 + 0.3j):
            assert ext.radius(z0) == pytest.approx(
                orc.segment_exterior_radius(-1, 1, z0), rel=2e-4
            )

    def test_radius_at_infinity_is_inverse_capacity(self):
        ext = SlitExterior([segment_track(-1.0, 1.0)])
        assert ext.radius(None) == pytest.approx(2.0, rel=2e-5)


class TestArcExterior:
    def test_symmetry_of_green(self):
        ext = unit_arc(math.pi)
        a, b = 0.3 + 0.1j, -0.4 - 0.2j
        assert ext.green(a, b) == pytest.approx(ext.green(b, a), abs=2e-5)

    def test_green_positive_off_set(self):
        ext = unit_arc(math.pi)
        assert ext.green(0.2, 0.0) > 0
        assert ext.green_inf(0.0) > 0

    def test_center_value_for_symmetric_arc(self):
        # potential of the equilibrium measure at 0 vanishes for arcs of |y|=1,
        # so the grounded field at 0 equals -log cap
        for measure in (math.pi / 2, math.pi):
            ext = unit_arc(measure)
            expected = -math.log(orc.arc_capacity(measure))
            assert ext.green_inf(0.0) == pytest.approx(expected, abs=2e-4)

    def test_pole_on_set_rejected(self):
        ext = unit_arc(math.pi)
        with pytest.raises(ValueError):
            ext.green(0.0, 1.0)


class TestMultiComponent:
    def test_two_segments_capacity_bounds(self):
        # capacity is monotone: between one segment and the enclosing one
        ext = SlitExterior(
            [segment_track(-1.0, -0.2), segment_track(0.2, 1.0)], panels_per_track=240
        )
        c = ext.capacity()
        assert orc.segment_capacity(-1.0, -0.2) < c < orc.segment_capacity(-1.0, 1.0)

    def test_mass_splits_between_components(self):
        ext = SlitExterior(
            [segment_track(-1.0, -0.2), segment_track(0.2, 1.0)], panels_per_track=240
        )
        sigma, _ = ext._equilibrium()
        half = ext.n // 2
        m1 = float(np.dot(sigma[:half], ext.length[:half]))
        assert m1 == pytest.approx(0.5, abs=1e-6)  # symmetric configuration
