"""Planar domains, boundary marking, and deterministic graded triangulation.

Domains are bounded by chains of circular arcs and line segments (enough for
every disk, annulus, half-disk, and polygonal-plate geometry used here).
Unbounded model domains (half-plane, quadrant, strip, slit complements) are
represented by tag only and are never meshed; they reach the solvers through
conformal model maps, with radii moved across by `transfer_radius`.

Meshing is fully deterministic: graded boundary walks, structured rings
around poles and plate holes, a hex background lattice, and one Delaunay
pass, with no randomized insertion anywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import Delaunay, cKDTree

__all__ = [
    "GeometryError", "MeshError",
    "ArcSegment", "line_segment", "circular_arc",
    "BoundaryLoop", "polygon_loop", "circle_loop",
    "DomainSpec", "MarkedDomain", "GammaArc", "ModelGamma", "Mesh",
    "make_domain", "mark_boundary", "mesh_domain", "transfer_radius",
    "disk_domain", "annulus_domain", "halfdisk_domain",
    "halfplane_domain", "quarterplane_domain", "strip_domain",
    "full_gamma", "disk_arc_gamma",
    "domain_to_dict", "domain_from_dict", "marked_to_dict", "marked_from_dict",
    "save_marked", "load_marked", "domain_contains",
]

_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid domain, loop, or marking."""


class MeshError(RuntimeError):
    """Meshing could not satisfy its resolution or conformity contract."""


# ---------------------------------------------------------------------------
# arcs and loops
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArcSegment:
    """One boundary piece: a line segment or a circular arc.

    Circular arcs run from theta0 to theta1 (radians); increasing angle is
    the positive orientation.  Parameter t in [0, 1] walks start -> end.
    """

    kind: str
    start: complex = 0.0
    end: complex = 0.0
    center: complex = 0.0
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0

    def point(self, t):
        t = np.asarray(t, float)
        if self.kind == "line-segment":
            out = self.start + (self.end - self.start) * t
        else:
            ang = self.theta0 + (self.theta1 - self.theta0) * t
            out = self.center + self.radius * np.exp(1j * ang)
        return complex(out) if out.ndim == 0 else out

    def length(self) -> float:
        if self.kind == "line-segment":
            return abs(self.end - self.start)
        return self.radius * abs(self.theta1 - self.theta0)

    @property
    def orientation(self) -> int:
        if self.kind == "circular-arc":
            return 1 if self.theta1 > self.theta0 else -1
        return 1

    def reversed(self) -> "ArcSegment":
        if self.kind == "line-segment":
            return ArcSegment("line-segment", start=self.end, end=self.start)
        return ArcSegment("circular-arc", start=self.end, end=self.start,
                          center=self.center, radius=self.radius,
                          theta0=self.theta1, theta1=self.theta0)


def line_segment(a, b) -> ArcSegment:
    a, b = complex(a), complex(b)
    if abs(b - a) <= _TOL:
        raise GeometryError("zero-length segment")
    return ArcSegment("line-segment", start=a, end=b)


def circular_arc(center, radius, theta0, theta1) -> ArcSegment:
    center = complex(center)
    radius = float(radius)
    if radius <= 0:
        raise GeometryError("arc radius must be positive")
    if abs(theta1 - theta0) <= _TOL:
        raise GeometryError("zero-length arc")
    if abs(theta1 - theta0) > 2 * math.pi + 1e-9:
        raise GeometryError("arc spans more than a full turn")
    start = center + radius * np.exp(1j * float(theta0))
    end = center + radius * np.exp(1j * float(theta1))
    return ArcSegment("circular-arc", start=complex(start), end=complex(end),
                      center=center, radius=radius,
                      theta0=float(theta0), theta1=float(theta1))


@dataclass(frozen=True)
class BoundaryLoop:
    arcs: tuple

    def __post_init__(self):
        if not self.arcs:
            raise GeometryError("empty loop")
        scale = max(max(abs(a.start), abs(a.end)) for a in self.arcs) or 1.0
        for a, b in zip(self.arcs, self.arcs[1:] + self.arcs[:1]):
            if abs(a.end - b.start) > 1e-9 * scale:
                raise GeometryError("loop arcs do not chain head-to-tail")

    def polyline(self, max_edge: float = 0.05) -> np.ndarray:
        pts = []
        for arc in self.arcs:
            n = max(2, int(math.ceil(arc.length() / max_edge)) + 1)
            ts = np.linspace(0.0, 1.0, n)[:-1]
            pts.append(np.atleast_1d(arc.point(ts)))
        pts.append(np.array([self.arcs[0].start]))
        return np.concatenate(pts)

    def signed_area(self) -> float:
        p = self.polyline(max_edge=self.total_length() / 512)
        x, y = p.real, p.imag
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    def total_length(self) -> float:
        return sum(a.length() for a in self.arcs)

    def reversed(self) -> "BoundaryLoop":
        return BoundaryLoop(tuple(a.reversed() for a in reversed(self.arcs)))

    def as_circle(self):
        """(center, radius) when the loop is one full circle, else None."""
        if len(self.arcs) == 1 and self.arcs[0].kind == "circular-arc":
            a = self.arcs[0]
            if abs(abs(a.theta1 - a.theta0) - 2 * math.pi) < 1e-9:
                return a.center, a.radius
        return None


def circle_loop(center, radius) -> BoundaryLoop:
    return BoundaryLoop((circular_arc(center, radius, 0.0, 2.0 * math.pi),))


def polygon_loop(vertices) -> BoundaryLoop:
    vs = [complex(v) for v in vertices]
    if len(vs) < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    return BoundaryLoop(tuple(line_segment(a, b) for a, b in zip(vs, vs[1:] + vs[:1])))


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    outer: BoundaryLoop | None
    holes: tuple = ()
    contains_infinity: bool = False
    model: str | None = None       # "halfplane" | "quarterplane" | "strip" | "exterior"
    label: str = ""

    @property
    def bounded(self) -> bool:
        return self.model is None and not self.contains_infinity

    @property
    def loops(self):
        return [self.outer, *self.holes]


def disk_domain(label: str = "disk") -> DomainSpec:
    return make_domain(DomainSpec(outer=circle_loop(0.0, 1.0), label=label))


def annulus_domain(rho: float, label: str = "") -> DomainSpec:
    if not 0.0 < rho < 1.0:
        raise GeometryError("annulus needs 0 < rho < 1")
    return make_domain(DomainSpec(outer=circle_loop(0.0, 1.0),
                                  holes=(circle_loop(0.0, rho),),
                                  label=label or f"annulus{rho:g}"))


def halfdisk_domain(label: str = "halfdisk") -> DomainSpec:
    loop = BoundaryLoop((line_segment(-1.0, 1.0), circular_arc(0.0, 1.0, 0.0, math.pi)))
    return make_domain(DomainSpec(outer=loop, label=label))


def halfplane_domain() -> DomainSpec:
    """Upper half-plane Im z > 0 (model domain, never meshed)."""
    return DomainSpec(outer=None, model="halfplane", contains_infinity=True,
                      label="halfplane")


def quarterplane_domain() -> DomainSpec:
    """First quadrant (model domain, never meshed)."""
    return DomainSpec(outer=None, model="quarterplane", label="quarterplane")


def strip_domain() -> DomainSpec:
    """Strip 0 < Im z < pi/2 (model domain, never meshed)."""
    return DomainSpec(outer=None, model="strip", label="strip")


def _loop_contains(loop: BoundaryLoop, z: complex, polyline=None) -> bool:
    circ = loop.as_circle()
    if circ is not None:
        c, r = circ
        return abs(z - c) < r
    if polyline is None:
        polyline = loop.polyline(max_edge=loop.total_length() / 1024)
    return bool(_points_in_polygon(np.array([z]), polyline)[0])


def _points_in_polygon(zs: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Crossing-number containment for complex points vs closed polyline."""
    px, py = zs.real, zs.imag
    x0, y0 = poly[:-1].real, poly[:-1].imag
    x1, y1 = poly[1:].real, poly[1:].imag
    dx, dy = x1 - x0, y1 - y0
    out = np.zeros(len(zs), bool)
    chunk = 2048
    for s in range(0, len(zs), chunk):
        X = px[s:s + chunk, None]
        Y = py[s:s + chunk, None]
        cross = (y0[None, :] > Y) != (y1[None, :] > Y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0[None, :] + (Y - y0[None, :]) * dx[None, :] / dy[None, :]
        hit = cross & (X < xint)
        out[s:s + chunk] = np.sum(hit, axis=1) % 2 == 1
    return out


def domain_contains(domain: DomainSpec, z) -> bool:
    """Open-region membership; model domains use their defining inequalities."""
    z = complex(z)
    if domain.model == "halfplane":
        return z.imag > 0
    if domain.model == "quarterplane":
        return z.real > 0 and z.imag > 0
    if domain.model == "strip":
        return 0.0 < z.imag < math.pi / 2
    if domain.model == "exterior":
        return True  # complement of a slit set: everything off the slits
    if not _loop_contains(domain.outer, z):
        return False
    return not any(_loop_contains(hole, z) for hole in domain.holes)


def make_domain(spec: DomainSpec) -> DomainSpec:
    """Validate and orientation-normalize a bounded spec (models pass through)."""
    if spec.model is not None:
        return spec
    if spec.outer is None:
        raise GeometryError("bounded domain needs an outer loop")
    outer = spec.outer if spec.outer.signed_area() > 0 else spec.outer.reversed()
    holes = tuple(h if h.signed_area() < 0 else h.reversed() for h in spec.holes)
    loops = [outer, *holes]
    polys = [lp.polyline(max_edge=max(lp.total_length() / 512, 1e-9)) for lp in loops]
    for i, hole in enumerate(holes):
        probe = hole.arcs[0].point(0.0)
        if not _loop_contains(outer, probe, polys[0]):
            raise GeometryError(f"hole {i} lies outside the outer loop")
    for i in range(len(loops)):
        for j in range(i + 1, len(loops)):
            if _polylines_intersect(polys[i], polys[j], (loops[i], loops[j])):
                raise GeometryError(f"boundary loops {i} and {j} intersect")
        if _polyline_self_intersects(polys[i], loops[i]):
            raise GeometryError(f"loop {i} is self-intersecting")
    for i in range(1, len(loops)):
        for j in range(1, len(loops)):
            if i != j:
                probe = loops[j].arcs[0].point(0.0)
                if _loop_contains(loops[i], probe, polys[i]):
                    raise GeometryError("nested holes are not supported")
    return replace(spec, outer=outer, holes=holes)


def _seg_intersect_many(p, p2, q, q2) -> np.ndarray:
    """Vectorized proper-intersection test for segment arrays (complex)."""
    d1 = p2 - p
    d2 = q2 - q
    den = d1.real * d2.imag - d1.imag * d2.real
    w = q - p
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w.real * d2.imag - w.imag * d2.real) / den
        u = (w.real * d1.imag - w.imag * d1.real) / den
    ok = np.abs(den) > 1e-30
    return ok & (t > 1e-12) & (t < 1 - 1e-12) & (u > 1e-12) & (u < 1 - 1e-12)


def _circles_intersect(c1, r1, c2, r2) -> bool:
    d = abs(c1 - c2)
    return abs(r1 - r2) + 1e-12 < d < r1 + r2 - 1e-12


def _polylines_intersect(a: np.ndarray, b: np.ndarray, loops=None) -> bool:
    if loops is not None:
        ca, cb = loops[0].as_circle(), loops[1].as_circle()
        if ca is not None and cb is not None:
            return _circles_intersect(*ca, *cb)
    if (a.real.max() < b.real.min() or b.real.max() < a.real.min()
            or a.imag.max() < b.imag.min() or b.imag.max() < a.imag.min()):
        return False
    p, p2 = a[:-1], a[1:]
    q, q2 = b[:-1], b[1:]
    P = np.repeat(p, len(q))
    P2 = np.repeat(p2, len(q))
    Q = np.tile(q, len(p))
    Q2 = np.tile(q2, len(p))
    return bool(np.any(_seg_intersect_many(P, P2, Q, Q2)))


def _polyline_self_intersects(a: np.ndarray, loop=None) -> bool:
    if loop is not None and loop.as_circle() is not None:
        return False
    n = len(a) - 1
    i_idx, j_idx = np.triu_indices(n, k=2)
    keep = ~((i_idx == 0) & (j_idx == n - 1))
    i_idx, j_idx = i_idx[keep], j_idx[keep]
    hits = _seg_intersect_many(a[i_idx], a[i_idx + 1], a[j_idx], a[j_idx + 1])
    return bool(np.any(hits))


# ---------------------------------------------------------------------------
# boundary marking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaArc:
    """Closed parameter interval [t0, t1] of one arc marked as grounded."""
    loop: int
    arc: int
    t0: float
    t1: float


@dataclass(frozen=True)
class ModelGamma:
    name: str
    params: tuple = ()


@dataclass(frozen=True)
class MarkedDomain:
    domain: DomainSpec
    gamma: tuple

    def gamma_intervals(self, loop: int, arc: int):
        return [(g.t0, g.t1) for g in self.gamma
                if isinstance(g, GammaArc) and g.loop == loop and g.arc == arc]

    @property
    def model_gamma(self) -> "ModelGamma | None":
        if self.gamma and isinstance(self.gamma[0], ModelGamma):
            return self.gamma[0]
        return None


def mark_boundary(domain: DomainSpec, selection) -> MarkedDomain:
    """Attach the grounded boundary set; it is stored closed (endpoints in)."""
    if domain.model is not None:
        if not isinstance(selection, ModelGamma):
            raise GeometryError("model domains take a ModelGamma selection")
        return MarkedDomain(domain=domain, gamma=(selection,))
    items = []
    for g in selection:
        if not isinstance(g, GammaArc):
            g = GammaArc(*g)
        if not (0 <= g.loop < len(domain.loops)):
            raise GeometryError(f"loop index {g.loop} out of range")
        loop = domain.loops[g.loop]
        if not (0 <= g.arc < len(loop.arcs)):
            raise GeometryError(f"arc index {g.arc} out of range on loop {g.loop}")
        t0, t1 = float(g.t0), float(g.t1)
        if not (0.0 <= t0 < t1 <= 1.0):
            raise GeometryError("marking interval must satisfy 0 <= t0 < t1 <= 1")
        if (t1 - t0) * loop.arcs[g.arc].length() < 1e-9:
            raise GeometryError("degenerate marking interval")
        items.append(GammaArc(g.loop, g.arc, t0, t1))
    if not items:
        raise GeometryError("empty marking: the grounded set must be nonempty")
    items.sort(key=lambda g: (g.loop, g.arc, g.t0))
    for a, b in zip(items, items[1:]):
        if a.loop == b.loop and a.arc == b.arc and b.t0 < a.t1 - 1e-12:
            raise GeometryError("overlapping marking intervals")
    return MarkedDomain(domain=domain, gamma=tuple(items))


def full_gamma(domain: DomainSpec) -> MarkedDomain:
    sel = []
    for li, loop in enumerate(domain.loops):
        for ai in range(len(loop.arcs)):
            sel.append(GammaArc(li, ai, 0.0, 1.0))
    return mark_boundary(domain, sel)


def disk_arc_gamma(measure: float, center_angle: float = 0.0) -> MarkedDomain:
    """Unit disk marked on the arc of given angular measure centered at an angle."""
    if not 0 < measure <= 2 * math.pi:
        raise GeometryError("angular measure must lie in (0, 2*pi]")
    dom = disk_domain()
    if measure >= 2 * math.pi - 1e-12:
        return full_gamma(dom)
    a = (center_angle - measure / 2) / (2 * math.pi) % 1.0
    b = a + measure / (2 * math.pi)
    if b <= 1.0:
        sel = [GammaArc(0, 0, a, b)]
    else:
        sel = [GammaArc(0, 0, a, 1.0), GammaArc(0, 0, 0.0, b - 1.0)]
    return mark_boundary(dom, sel)


# ---------------------------------------------------------------------------
# radius transfer across conformal model changes
# ---------------------------------------------------------------------------

def transfer_radius(r_model: float, phi_derivative_at_pole) -> float:
    """Pull a radius back through a conformal map phi with phi'(z0) given.

    If phi maps the working domain onto the model where the radius r_model
    was computed, the working-domain radius at the (finite) pole z0 is
    r_model / |phi'(z0)|.
    """
    d = abs(complex(phi_derivative_at_pole))
    if d == 0 or not math.isfinite(d):
        raise GeometryError("transfer requires a finite nonzero derivative at the pole")
    if r_model <= 0:
        raise GeometryError("model radius must be positive")
    return float(r_model) / d


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------

@dataclass
class Mesh:
    vertices: np.ndarray          # (n, 2) float
    triangles: np.ndarray         # (m, 3) int, counterclockwise
    boundary_edges: np.ndarray    # (k, 2) int
    edge_tags: np.ndarray         # (k,) int: 1 grounded, 0 free
    edge_loop: np.ndarray         # (k,) int loop index
    edge_arc: np.ndarray          # (k,) int arc index within the loop
    edge_tri: np.ndarray          # (k,) int adjacent triangle
    h: float
    vertex_flags: dict = field(default_factory=dict)   # name -> vertex index
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def zs(self) -> np.ndarray:
        return self.vertices[:, 0] + 1j * self.vertices[:, 1]

    def loop_vertex_indices(self, loop: int) -> np.ndarray:
        sel = self.edge_loop == loop
        return np.unique(self.boundary_edges[sel].ravel())

    def gamma_vertex_indices(self) -> np.ndarray:
        sel = self.edge_tags == 1
        return np.unique(self.boundary_edges[sel].ravel())

    def stats(self) -> dict:
        return {
            "vertices": int(len(self.vertices)),
            "triangles": int(len(self.triangles)),
            "boundary_edges": int(len(self.boundary_edges)),
            "gamma_edges": int(np.sum(self.edge_tags == 1)),
            "h": self.h,
        }


def ring_ratio(h: float) -> float:
    """Geometric growth of refinement rings; tightens with h so that the
    near-field discretization error scales out under Richardson steps."""
    return 1.0 + 0.3 * min(1.0, h / 0.02)


class _Sizing:
    """Target local spacing: background h, graded near junctions and poles."""

    def __init__(self, h, junctions, zones):
        self.h = h
        self.junctions = np.array(junctions, complex) if len(junctions) else None
        self.zones = zones  # list of (center, r_inner, r_outer, q)

    def __call__(self, zs) -> np.ndarray:
        zs = np.atleast_1d(np.asarray(zs, complex))
        s = np.full(zs.shape, self.h, float)
        if self.junctions is not None:
            d = np.min(np.abs(zs[:, None] - self.junctions[None, :]), axis=1)
            s = np.minimum(s, np.maximum(self.h / 64.0, 0.6 * d))
        for c, r_in, r_out, q in self.zones:
            d = np.abs(zs - c)
            local = np.maximum(0.35 * r_in, 0.85 * (q - 1.0) * d)
            s = np.where(d < 1.35 * r_out, np.minimum(s, local), s)
        return s

    def at(self, z) -> float:
        return float(self(np.array([complex(z)]))[0])


def _junction_points(md: MarkedDomain):
    """Boundary points where the grounded set meets the free boundary."""
    pts = []
    for li, loop in enumerate(md.domain.loops):
        lengths = [a.length() for a in loop.arcs]
        total = sum(lengths)
        events = []
        offset = 0.0
        for ai, arc in enumerate(loop.arcs):
            for (t0, t1) in md.gamma_intervals(li, ai):
                events.append((offset + t0 * lengths[ai], offset + t1 * lengths[ai]))
            offset += lengths[ai]
        if not events:
            continue
        events.sort()
        eps = 1e-9 * total
        merged = []
        for s, e in events:
            if merged and s <= merged[-1][1] + eps:
                merged[-1] = (merged[-1][0], max(merged[-1][1], e))
            else:
                merged.append((s, e))
        if len(merged) > 1 and merged[0][0] <= eps and merged[-1][1] >= total - eps:
            merged[0] = (merged[-1][0] - total, merged[0][1])
            merged.pop()
        for s, e in merged:
            if (e - s) >= total - eps:
                continue  # whole loop grounded: no junction on this loop
            for sval in (s % total, e % total):
                pts.append(_loop_point_at_arclength(loop, lengths, sval))
    return pts


def _loop_point_at_arclength(loop: BoundaryLoop, lengths, s: float) -> complex:
    acc = 0.0
    for arc, L in zip(loop.arcs, lengths):
        if s <= acc + L + 1e-15:
            t = min(max((s - acc) / L, 0.0), 1.0)
            return complex(arc.point(t))
        acc += L
    return complex(loop.arcs[-1].end)


def _walk_piece(arc: ArcSegment, t0: float, t1: float, sizing: _Sizing):
    """Graded interior node parameters strictly inside (t0, t1)."""
    L = arc.length() * (t1 - t0)
    params = []
    s = 0.0
    guard = 0
    while True:
        # both arc kinds have constant speed, so param offset = arclength / length
        t_here = t0 + s / arc.length()
        step = sizing.at(arc.point(min(t_here, t1)))
        if s + 1.45 * step >= L:
            break
        s += step
        params.append(t0 + s / arc.length())
        guard += 1
        if guard > 500000:
            raise MeshError("graded boundary walk failed to terminate")
    return params


def _ring_zone(r: float, h: float, q: float):
    # rings stop where their radial gap matches the background spacing
    r_out = max(0.9 * h / (q - 1.0), 1.3 * r / q ** 10)
    return (r / q ** 12, r_out)


def _ring_points(c: complex, r_in: float, r_out: float, q: float):
    pts = []
    r = r_in
    k = 0
    n = max(10, int(round(2 * math.pi / (0.75 * (q - 1)))))
    while r <= r_out * (1 + 1e-9):
        ang = 2 * math.pi * (np.arange(n) + 0.5 * (k % 2)) / n
        pts.extend(c + r * np.exp(1j * ang))
        r *= q
        k += 1
    return pts


def _junction_ring_points(p: complex, h: float):
    pts = []
    for j in range(7):
        r = h * 0.5 ** j
        n = 8
        ang = 2 * math.pi * (np.arange(n) + 0.5 * (j % 2)) / n
        pts.extend(p + r * np.exp(1j * ang))
    return pts


class _ChainClearance:
    """True distance from a point to the polygonized boundary chains."""

    def __init__(self, boundary_pts: np.ndarray, chain_ranges, tree: cKDTree):
        self.pts = boundary_pts
        self.tree = tree
        n_all = len(boundary_pts)
        self.next = np.arange(n_all)
        self.prev = np.arange(n_all)
        for (s, n) in chain_ranges:
            self.next[s:s + n] = np.r_[np.arange(s + 1, s + n), s]
            self.prev[s:s + n] = np.r_[s + n - 1, np.arange(s, s + n - 1)]

    def distance(self, p: complex) -> float:
        k = min(8, len(self.pts))
        _, idx = self.tree.query([p.real, p.imag], k=k)
        best = np.inf
        for i in np.atleast_1d(idx):
            i = int(i)
            for a, b in ((i, self.next[i]), (self.prev[i], i)):
                best = min(best, _point_segment_distance(p, self.pts[a], self.pts[b]))
        return best


def _point_segment_distance(p: complex, a: complex, b: complex) -> float:
    d = b - a
    L2 = abs(d) ** 2
    if L2 == 0:
        return abs(p - a)
    t = ((p - a).real * d.real + (p - a).imag * d.imag) / L2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))


def mesh_domain(md: MarkedDomain, h: float, refine_at=()) -> Mesh:
    """Deterministic graded triangulation of a bounded marked domain.

    refine_at: iterable of (point, radius) pairs; each gets a structured ring
    system reaching well inside the given radius (for pole accuracy) and a
    smooth transition to the background lattice.
    """
    if md.domain.model is not None:
        raise GeometryError("model domains are never meshed; use their conformal model")
    if h <= 0:
        raise GeometryError("mesh size must be positive")
    domain = make_domain(md.domain)
    md = MarkedDomain(domain=domain, gamma=md.gamma)
    loops = domain.loops

    refine_at = [(complex(c), float(r)) for c, r in refine_at]
    for c, r in refine_at:
        if r <= 0:
            raise GeometryError("refinement radius must be positive")
        # hole interiors are allowed: plate refinements radiate outward from
        # cut-out plates; only points beyond the outer boundary are invalid
        if not _loop_contains(domain.outer, c):
            raise GeometryError(f"refinement point {c} outside the domain")

    junctions = _junction_points(md)
    q_ring = ring_ratio(h)
    zones = [_ring_zone(r, h, q_ring) for _, r in refine_at]
    sizing = _Sizing(h, junctions,
                     [(c, z[0], z[1], q_ring) for (c, _), z in zip(refine_at, zones)])

    # --- boundary nodes with provenance (loop, arc, t) -----------------------
    points: list[complex] = []
    meta: list[tuple] = []
    chain_ranges = []
    gamma_breaks = {}
    for li, loop in enumerate(loops):
        for ai in range(len(loop.arcs)):
            ivs = md.gamma_intervals(li, ai)
            gamma_breaks[(li, ai)] = (
                sorted({t for iv in ivs for t in iv if 1e-12 < t < 1 - 1e-12}), ivs)

    for li, loop in enumerate(loops):
        start_idx = len(points)
        for ai, arc in enumerate(loop.arcs):
            breaks = [0.0, *gamma_breaks[(li, ai)][0], 1.0]
            points.append(complex(arc.point(0.0)))
            meta.append((li, ai, 0.0))
            for b0, b1 in zip(breaks[:-1], breaks[1:]):
                for t in _walk_piece(arc, b0, b1, sizing):
                    points.append(complex(arc.point(t)))
                    meta.append((li, ai, float(t)))
                if b1 < 1.0:
                    points.append(complex(arc.point(b1)))
                    meta.append((li, ai, float(b1)))
        count = len(points) - start_idx
        if count < 12:
            raise MeshError(f"h={h} too large to resolve loop {li} ({count} nodes)")
        chain_ranges.append((start_idx, count))

    for g in md.gamma:
        n_inside = sum(
            1 for (li, ai, t) in meta
            if li == g.loop and ai == g.arc and g.t0 - 1e-12 <= t <= g.t1 + 1e-12)
        if n_inside < 5:
            raise MeshError("h too large to resolve a grounded boundary interval")

    boundary_pts = np.array(points, complex)
    boundary_tree = cKDTree(np.c_[boundary_pts.real, boundary_pts.imag])
    chain_clearance = _ChainClearance(boundary_pts, chain_ranges, boundary_tree)

    # --- structured interior points ------------------------------------------
    extra: list[complex] = []
    flags = {}

    def _try_add(p: complex, clearance: float) -> bool:
        if not domain_contains(domain, p):
            return False
        if chain_clearance.distance(p) <= clearance:
            return False
        extra.append(p)
        return True

    for (c, r), (r_in, r_out) in zip(refine_at, zones):
        if domain_contains(domain, c):
            flags[f"pole:{c}"] = len(boundary_pts) + len(extra)
            extra.append(c)
        for p in _ring_points(c, r_in, r_out, q_ring):
            _try_add(p, 0.5 * sizing.at(p))
    for p0 in junctions:
        for p in _junction_ring_points(p0, h):
            _try_add(p, 0.45 * sizing.at(p))

    extra_arr = np.array(extra, complex) if extra else np.zeros(0, complex)

    # --- background hex lattice ----------------------------------------------
    xs = boundary_pts.real
    ys = boundary_pts.imag
    x0, x1 = xs.min() - h, xs.max() + h
    y0, y1 = ys.min() - h, ys.max() + h
    rows = int(math.ceil((y1 - y0) / (h * math.sqrt(3) / 2))) + 1
    cols = int(math.ceil((x1 - x0) / h)) + 2
    lat = []
    for r_i in range(rows):
        y = y0 + r_i * h * math.sqrt(3) / 2
        xoff = 0.5 * h if r_i % 2 else 0.0
        lat.append((x0 + xoff + h * np.arange(cols)) + 1j * y)
    lattice = np.concatenate(lat)

    polys = {}
    for li in range(len(loops)):
        s, n = chain_ranges[li]
        polys[li] = np.append(boundary_pts[s:s + n], boundary_pts[s])
    inside = _points_in_polygon(lattice, polys[0])
    for li in range(1, len(loops)):
        inside &= ~_points_in_polygon(lattice, polys[li])
    lattice = lattice[inside]
    if len(lattice):
        d_bnd, _ = boundary_tree.query(np.c_[lattice.real, lattice.imag])
        lattice = lattice[d_bnd > 0.72 * h]
    for (c, _), (r_in, r_out) in zip(refine_at, zones):
        if len(lattice):
            lattice = lattice[np.abs(lattice - c) > r_out + 0.55 * h]
    for p0 in junctions:
        if len(lattice):
            lattice = lattice[np.abs(lattice - p0) > 1.3 * h]
    if len(extra_arr) and len(lattice):
        tree = cKDTree(np.c_[extra_arr.real, extra_arr.imag])
        d, _ = tree.query(np.c_[lattice.real, lattice.imag])
        lattice = lattice[d > 0.6 * h]

    all_pts = np.concatenate([boundary_pts, extra_arr, lattice])
    verts = np.c_[all_pts.real, all_pts.imag]

    # --- triangulate, filter, orient ------------------------------------------
    tri = Delaunay(verts)
    simplices = tri.simplices
    cents = all_pts[simplices].mean(axis=1)
    keep = _points_in_polygon(cents, polys[0])
    for li in range(1, len(loops)):
        keep &= ~_points_in_polygon(cents, polys[li])
    simplices = simplices[keep]

    used = np.unique(simplices)
    remap = -np.ones(len(verts), int)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    simplices = remap[simplices]
    new_flags = {k: int(remap[v]) for k, v in flags.items() if remap[v] >= 0}
    chain_pos = {}
    meta_by_new = {}
    for li, (s, n) in enumerate(chain_ranges):
        for k in range(n):
            j = remap[s + k]
            if j >= 0:
                chain_pos[int(j)] = (li, k, n)
                meta_by_new[int(j)] = meta[s + k]

    a = verts[simplices[:, 1]] - verts[simplices[:, 0]]
    b = verts[simplices[:, 2]] - verts[simplices[:, 0]]
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    flip = det < 0
    simplices[flip] = simplices[flip][:, ::-1]

    # --- boundary edges ---------------------------------------------------------
    seen = {}
    for t_idx, tri_ in enumerate(simplices):
        for k in range(3):
            e = (int(tri_[k]), int(tri_[(k + 1) % 3]))
            key = (min(e), max(e))
            if key in seen:
                seen[key] = None
            else:
                seen[key] = t_idx
    bedges, btris = [], []
    for key, t_idx in seen.items():
        if t_idx is not None:
            bedges.append(key)
            btris.append(t_idx)
    if not bedges:
        raise MeshError("triangulation produced no boundary")
    bedges = np.array(bedges, int)
    btris = np.array(btris, int)

    tags = np.zeros(len(bedges), int)
    eloops = np.zeros(len(bedges), int)
    earcs = np.zeros(len(bedges), int)
    for idx, (i, j) in enumerate(bedges):
        pi, pj = chain_pos.get(int(i)), chain_pos.get(int(j))
        if pi is None or pj is None or pi[0] != pj[0]:
            raise MeshError("boundary edge does not follow the boundary chain")
        li, ki, n = pi
        kj = pj[1]
        if (ki - kj) % n not in (1, n - 1):
            raise MeshError("boundary edge skips a boundary node")
        first = i if (kj - ki) % n == 1 else j   # chain-order start of the edge
        second = j if first == i else i
        la, aa, ta = meta_by_new[int(first)]
        lb, ab, tb = meta_by_new[int(second)]
        if aa == ab and not (tb == 0.0 and ta > 0.0):
            tmid = 0.5 * (ta + tb)
        else:
            # edge runs from ta on arc aa to the start of the next arc
            tmid = 0.5 * (ta + 1.0)
        eloops[idx] = li
        earcs[idx] = aa
        for (t0, t1) in gamma_breaks[(li, aa)][1]:
            if t0 - 1e-12 <= tmid <= t1 + 1e-12:
                tags[idx] = 1
                break

    return Mesh(vertices=verts, triangles=simplices.astype(int),
                boundary_edges=bedges, edge_tags=tags, edge_loop=eloops,
                edge_arc=earcs, edge_tri=btris, h=float(h), vertex_flags=new_flags)


# ---------------------------------------------------------------------------
# serialization (exact float round-trip through JSON)
# ---------------------------------------------------------------------------

def _arc_to_dict(a: ArcSegment) -> dict:
    if a.kind == "line-segment":
        return {"kind": a.kind, "start": [a.start.real, a.start.imag],
                "end": [a.end.real, a.end.imag]}
    return {"kind": a.kind, "center": [a.center.real, a.center.imag],
            "radius": a.radius, "angles": [a.theta0, a.theta1]}


def _arc_from_dict(d: dict) -> ArcSegment:
    if d["kind"] == "line-segment":
        return line_segment(complex(*d["start"]), complex(*d["end"]))
    return circular_arc(complex(*d["center"]), d["radius"], *d["angles"])


def domain_to_dict(domain: DomainSpec) -> dict:
    return {
        "label": domain.label,
        "model": domain.model,
        "contains_infinity": domain.contains_infinity,
        "outer": [_arc_to_dict(a) for a in domain.outer.arcs] if domain.outer else None,
        "holes": [[_arc_to_dict(a) for a in hole.arcs] for hole in domain.holes],
    }


def domain_from_dict(d: dict) -> DomainSpec:
    outer = BoundaryLoop(tuple(_arc_from_dict(a) for a in d["outer"])) if d.get("outer") else None
    holes = tuple(BoundaryLoop(tuple(_arc_from_dict(a) for a in hole))
                  for hole in d.get("holes", []))
    spec = DomainSpec(outer=outer, holes=holes,
                      contains_infinity=bool(d.get("contains_infinity", False)),
                      model=d.get("model"), label=d.get("label", ""))
    return make_domain(spec) if spec.model is None else spec


def marked_to_dict(md: MarkedDomain) -> dict:
    out = {"domain": domain_to_dict(md.domain)}
    mg = md.model_gamma
    if mg is not None:
        out["gamma"] = {"name": mg.name, "params": list(mg.params)}
    else:
        out["gamma"] = [
            {"loop": g.loop, "arc": g.arc, "interval": [g.t0, g.t1]} for g in md.gamma
        ]
    return out


def marked_from_dict(d: dict) -> MarkedDomain:
    domain = domain_from_dict(d["domain"])
    g = d["gamma"]
    if isinstance(g, dict):
        sel = ModelGamma(g["name"], tuple(g.get("params", ())))
        return mark_boundary(domain, sel)
    sel = [GammaArc(int(e["loop"]), int(e["arc"]), *e["interval"]) for e in g]
    return mark_boundary(domain, sel)


def save_marked(md: MarkedDomain, path) -> None:
    with open(path, "w") as f:
        json.dump(marked_to_dict(md), f, indent=1, sort_keys=True)
        f.write("\n")


def load_marked(path) -> MarkedDomain:
    with open(path) as f:
        return marked_from_dict(json.load(f))
