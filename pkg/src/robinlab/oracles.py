"""Closed-form reference values on the model domains.

Every formula here is a pure, mesh-free evaluation.  The mesh solver and the
boundary-integral solver are validated against these functions, so nothing in
this module may call back into them.

Conventions
-----------
* ``disk``        : open unit disk U = {|z| < 1}.
* ``halfplane``   : right half-plane D = {Re z > 0}.
* ``quarterplane``: first quadrant Q = {Re z > 0, Im z > 0}; the grounded
  boundary part is the positive imaginary axis, the positive real axis is
  reflecting (zero normal derivative).
* ``strip``       : {0 < Im z < pi/2} with the grounded part on the upper
  edge {Im z = pi/2} and the real axis reflecting.
* ``segment exterior``: complement of a real interval [a, b], reached through
  the inverse Joukowski map; also provides the upper half-plane marked on
  [a, b] by even reflection across the free part of the real axis.
"""

from __future__ import annotations

import cmath
import math

__all__ = [
    "OracleError",
    "arc_capacity",
    "bracket",
    "disk_delta",
    "disk_green",
    "disk_radius",
    "halfplane_green",
    "halfplane_segment_green",
    "halfplane_segment_radius",
    "halfplane_segment_radius_at_infinity",
    "quarterplane_radius",
    "quarterplane_robin",
    "segment_capacity",
    "segment_exterior_green",
    "segment_exterior_green_at_infinity",
    "segment_exterior_radius",
    "strip_delta",
    "strip_green",
    "ORACLES",
    "evaluate_oracle",
]


class OracleError(ValueError):
    """Arguments outside an oracle's domain of validity."""


def _as_complex(z) -> complex:
    return complex(z)


# ---------------------------------------------------------------------------
# unit disk
# ---------------------------------------------------------------------------

def disk_green(z, z0) -> float:
    """Green value of the unit disk: log|1 - conj(z0) z| - log|z - z0|."""
    z, z0 = _as_complex(z), _as_complex(z0)
    if abs(z) >= 1.0 + 1e-14 or abs(z0) >= 1.0 + 1e-14:
        raise OracleError("disk_green arguments must lie in the closed unit disk")
    if z == z0:
        raise OracleError("coincident pole and evaluation point")
    return math.log(abs(1.0 - z0.conjugate() * z)) - math.log(abs(z - z0))


def disk_delta(z, z0) -> float:
    """Pseudo-hyperbolic distance |(z - z0) / (1 - conj(z0) z)|."""
    z, z0 = _as_complex(z), _as_complex(z0)
    return abs((z - z0) / (1.0 - z0.conjugate() * z))


def disk_radius(z0) -> float:
    """Inner radius of the unit disk at z0: 1 - |z0|^2."""
    z0 = _as_complex(z0)
    if abs(z0) >= 1.0:
        raise OracleError("point outside the open unit disk")
    return 1.0 - abs(z0) ** 2


# ---------------------------------------------------------------------------
# right half-plane and first quadrant
# ---------------------------------------------------------------------------

def halfplane_green(z, z0) -> float:
    """Green value of {Re z > 0}: log|z + conj(z0)| - log|z - z0|."""
    z, z0 = _as_complex(z), _as_complex(z0)
    if z0.real <= 0 or z.real < -1e-14:
        raise OracleError("halfplane_green needs points with Re >= 0, pole interior")
    if z == z0:
        raise OracleError("coincident pole and evaluation point")
    return math.log(abs(z + z0.conjugate())) - math.log(abs(z - z0))


def bracket(a, b) -> float:
    """|(a - b)(a - conj b)| / |(a + b)(a + conj b)|."""
    a, b = _as_complex(a), _as_complex(b)
    den = (a + b) * (a + b.conjugate())
    if den == 0:
        raise OracleError("bracket undefined: a + b or a + conj(b) vanishes")
    return abs((a - b) * (a - b.conjugate())) / abs(den)


def quarterplane_robin(z, zeta) -> float:
    """Quadrant field with grounded imaginary axis and reflecting real axis.

    Even reflection across the real axis folds the problem onto the right
    half-plane, giving the two-term sum below; it equals -log bracket(z, zeta).
    """
    z, zeta = _as_complex(z), _as_complex(zeta)
    if min(z.real, z.imag) < -1e-14 or zeta.real <= 0 or zeta.imag <= 0:
        raise OracleError("points must lie in the closed first quadrant, pole interior")
    return halfplane_green(z, zeta) + halfplane_green(z, zeta.conjugate())


def quarterplane_radius(zeta) -> float:
    """|2 zeta Re(zeta) / Im(zeta)| for an interior pole of the quadrant."""
    zeta = _as_complex(zeta)
    if zeta.real <= 0 or zeta.imag <= 0:
        raise OracleError("pole must lie in the open first quadrant")
    return abs(2.0 * zeta * zeta.real / zeta.imag)


# ---------------------------------------------------------------------------
# strip 0 < Im z < pi/2, grounded on the upper edge
# ---------------------------------------------------------------------------

def strip_delta(z, zeta) -> float:
    """|(e^z - e^zeta)(e^z - e^conj(zeta))| / |(e^z + e^zeta)(e^z + e^conj(zeta))|."""
    z, zeta = _as_complex(z), _as_complex(zeta)
    for w in (z, zeta):
        if not -1e-12 <= w.imag <= math.pi / 2 + 1e-12:
            raise OracleError("points must lie in the closed strip 0 <= Im z <= pi/2")
    ez, ew = cmath.exp(z), cmath.exp(zeta)
    den = (ez + ew) * (ez + ew.conjugate())
    if den == 0:
        raise OracleError("degenerate strip configuration")
    return abs((ez - ew) * (ez - ew.conjugate())) / abs(den)


def strip_green(z, zeta) -> float:
    """-log of strip_delta; the strip analogue of a grounded-edge Green value."""
    d = strip_delta(z, zeta)
    if d == 0:
        raise OracleError("coincident points")
    return -math.log(d)


# ---------------------------------------------------------------------------
# capacities of arcs and segments
# ---------------------------------------------------------------------------

def arc_capacity(angular_measure: float) -> float:
    """Logarithmic capacity sin(m/4) of a unit-circle arc of angular measure m."""
    m = float(angular_measure)
    if not 0.0 < m <= 2.0 * math.pi + 1e-12:
        raise OracleError("angular measure must lie in (0, 2*pi]")
    return math.sin(min(m, 2.0 * math.pi) / 4.0)


def segment_capacity(a: float, b: float) -> float:
    """Logarithmic capacity (b - a)/4 of the real segment [a, b]."""
    a, b = float(a), float(b)
    if not a < b:
        raise OracleError("segment requires a < b")
    return (b - a) / 4.0


# ---------------------------------------------------------------------------
# exterior of a real segment, via the inverse Joukowski map
# ---------------------------------------------------------------------------

def _inv_joukowski(z: complex) -> complex:
    # w = z + sqrt(z-1)*sqrt(z+1) maps the segment exterior onto |w| > 1;
    # the product of principal roots puts the branch cut exactly on [-1, 1].
    w = z + cmath.sqrt(z - 1.0) * cmath.sqrt(z + 1.0)
    if abs(w) < 1.0:  # guard against roundoff flipping the branch near the cut
        w = 1.0 / w.conjugate() if w != 0 else complex(1.0)
    return w


def _to_unit_segment(a: float, b: float, z: complex) -> complex:
    return (2.0 * z - (a + b)) / (b - a)


def segment_exterior_green(a: float, b: float, z, z0) -> float:
    """Green value of the complement of [a, b] with a finite pole z0."""
    a, b = float(a), float(b)
    if not a < b:
        raise OracleError("segment requires a < b")
    z, z0 = _as_complex(z), _as_complex(z0)
    w = _inv_joukowski(_to_unit_segment(a, b, z))
    w0 = _inv_joukowski(_to_unit_segment(a, b, z0))
    if abs(w0) <= 1.0 + 1e-14:
        raise OracleError("pole lies on the segment")
    if w == w0:
        raise OracleError("coincident pole and evaluation point")
    return math.log(abs(w * w0.conjugate() - 1.0)) - math.log(abs(w - w0))


def segment_exterior_green_at_infinity(a: float, b: float, z) -> float:
    """Green value of the segment complement with the pole at infinity."""
    a, b = float(a), float(b)
    if not a < b:
        raise OracleError("segment requires a < b")
    w = _inv_joukowski(_to_unit_segment(a, b, _as_complex(z)))
    # log|w| already carries the log|z| + log(4/(b-a)) normalization at infinity
    return math.log(abs(w))


def segment_exterior_radius(a: float, b: float, z0) -> float:
    """Robin radius of the segment complement at a finite point off [a, b]."""
    a, b = float(a), float(b)
    if not a < b:
        raise OracleError("segment requires a < b")
    z0 = _as_complex(z0)
    s = _to_unit_segment(a, b, z0)
    w = _inv_joukowski(s)
    if abs(w) <= 1.0 + 1e-14:
        raise OracleError("point lies on the segment")
    root = cmath.sqrt(s - 1.0) * cmath.sqrt(s + 1.0)
    r_unit = (abs(w) ** 2 - 1.0) * abs(root) / abs(w)
    return r_unit * (b - a) / 2.0


# ---------------------------------------------------------------------------
# upper half-plane grounded on a real segment [a, b]
# ---------------------------------------------------------------------------

def halfplane_segment_green(a: float, b: float, z, z0) -> float:
    """Upper half-plane, grounded on [a, b], reflecting on the rest of R.

    Even reflection across the free part of the real axis identifies the
    field with the segment-exterior Green values of z0 and conj(z0).
    """
    z, z0 = _as_complex(z), _as_complex(z0)
    if z.imag < -1e-12 or z0.imag <= 0:
        raise OracleError("points must lie in the closed upper half-plane, pole interior")
    return segment_exterior_green(a, b, z, z0) + segment_exterior_green(a, b, z, z0.conjugate())


def halfplane_segment_radius(a: float, b: float, z0) -> float:
    """Robin radius of the segment-marked upper half-plane at a finite pole."""
    z0 = _as_complex(z0)
    if z0.imag <= 0:
        raise OracleError("pole must lie in the open upper half-plane")
    return segment_exterior_radius(a, b, z0) * math.exp(
        segment_exterior_green(a, b, z0, z0.conjugate())
    )


def halfplane_segment_radius_at_infinity(a: float, b: float) -> float:
    """Robin radius at the boundary point infinity: 4 / (b - a)."""
    a, b = float(a), float(b)
    if not a < b:
        raise OracleError("segment requires a < b")
    return 4.0 / (b - a)


# ---------------------------------------------------------------------------
# name-based dispatch for the CLI `oracle` subcommand
# ---------------------------------------------------------------------------

# name -> (function, argument kinds): "c" complex, "r" real
ORACLES = {
    "disk-green": (disk_green, "cc"),
    "disk-delta": (disk_delta, "cc"),
    "disk-radius": (disk_radius, "c"),
    "halfplane-green": (halfplane_green, "cc"),
    "quarterplane-robin": (quarterplane_robin, "cc"),
    "quarterplane-radius": (quarterplane_radius, "c"),
    "bracket": (bracket, "cc"),
    "strip-delta": (strip_delta, "cc"),
    "strip-green": (strip_green, "cc"),
    "arc-capacity": (arc_capacity, "r"),
    "segment-capacity": (segment_capacity, "rr"),
    "segment-exterior-green": (segment_exterior_green, "rrcc"),
    "segment-exterior-radius": (segment_exterior_radius, "rrc"),
    "halfplane-segment-green": (halfplane_segment_green, "rrcc"),
    "halfplane-segment-radius": (halfplane_segment_radius, "rrc"),
    "halfplane-segment-radius-inf": (halfplane_segment_radius_at_infinity, "rr"),
}


def evaluate_oracle(name: str, args) -> float:
    """Evaluate the oracle `name` on string/number arguments (CLI helper)."""
    if name not in ORACLES:
        raise OracleError(f"unknown oracle {name!r}; known: {sorted(ORACLES)}")
    fn, kinds = ORACLES[name]
    if len(args) != len(kinds):
        raise OracleError(f"oracle {name!r} expects {len(kinds)} argument(s)")
    parsed = []
    for a, kind in zip(args, kinds):
        v = complex(a.replace(" ", "")) if isinstance(a, str) else complex(a)
        if kind == "r":
            if v.imag != 0:
                raise OracleError(f"oracle {name!r} expects a real argument, got {a!r}")
            parsed.append(v.real)
        else:
            parsed.append(v)
    return float(fn(*parsed))
