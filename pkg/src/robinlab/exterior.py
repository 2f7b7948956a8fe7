"""Potential theory on the complement of a compact union of arcs.

Solves the single-layer integral equation for the equilibrium / grounded
density on a compact set E made of line segments and circular arcs (open
"slits" are allowed, in which case the density carries the usual inverse
square-root endpoint blow-up and the panels are cosine graded).  From one LU
factorization the solver produces

* logarithmic capacity of E,
* the grounded field of the complement with the pole at infinity,
* grounded fields with finite poles, and the associated radii.

This is the numerical route for exterior (unbounded, possibly slit) domains,
which are outside the reach of the triangle mesher.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

__all__ = ["Track", "segment_track", "arc_track", "circle_track", "SlitExterior"]

_GAUSS8 = np.polynomial.legendre.leggauss(8)
_GAUSS16 = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class Track:
    """Parametrized boundary piece on t in [0, 1]."""

    kind: str            # "segment" | "arc"
    a: complex = 0.0     # segment endpoints, or arc center
    b: complex = 0.0
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0
    closed: bool = False

    def point(self, t):
        t = np.asarray(t, float)
        if self.kind == "segment":
            return self.a + (self.b - self.a) * t
        ang = self.theta0 + (self.theta1 - self.theta0) * t
        return self.a + self.radius * np.exp(1j * ang)

    def speed(self, t):
        if self.kind == "segment":
            return np.full_like(np.asarray(t, float), abs(self.b - self.a))
        return np.full_like(np.asarray(t, float), self.radius * abs(self.theta1 - self.theta0))


def segment_track(a, b) -> Track:
    a, b = complex(a), complex(b)
    if a == b:
        raise ValueError("degenerate segment")
    return Track("segment", a=a, b=b)


def arc_track(center, radius, theta0, theta1) -> Track:
    if radius <= 0 or theta0 == theta1:
        raise ValueError("degenerate arc")
    closed = abs(abs(theta1 - theta0) - 2 * math.pi) < 1e-12
    return Track("arc", a=complex(center), radius=float(radius),
                 theta0=float(theta0), theta1=float(theta1), closed=closed)


def circle_track(center, radius) -> Track:
    return arc_track(center, radius, 0.0, 2.0 * math.pi)


def _breakpoints(track: Track, n: int) -> np.ndarray:
    if track.closed:
        return np.linspace(0.0, 1.0, n + 1)
    # cosine grading clusters panels at the endpoints where the density blows up
    k = np.arange(n + 1)
    return 0.5 * (1.0 - np.cos(math.pi * k / n))


class SlitExterior:
    """Grounded-complement solver for a compact union of disjoint tracks."""

    def __init__(self, tracks, panels_per_track: int = 320):
        if not tracks:
            raise ValueError("need at least one boundary track")
        self.tracks = list(tracks)
        mids, lengths, starts, ends = [], [], [], []
        self._segments = []  # (start point, end point) per panel, for quadrature
        for tr in self.tracks:
            bp = _breakpoints(tr, panels_per_track)
            t0, t1 = bp[:-1], bp[1:]
            tm = 0.5 * (t0 + t1)
            p0, p1, pm = tr.point(t0), tr.point(t1), tr.point(tm)
            # resolve curved panels with an interior quadrature node on the
            # true curve; panel arclength from the exact parametrization
            ds = tr.speed(tm) * (t1 - t0)
            mids.append(pm)
            lengths.append(ds)
            starts.append(p0)
            ends.append(p1)
        self.mid = np.concatenate(mids)
        self.length = np.concatenate(lengths)
        self.start = np.concatenate(starts)
        self.end = np.concatenate(ends)
        self.n = len(self.mid)
        self._factor = None
        self._assemble()

    # -- quadrature ---------------------------------------------------------

    def _panel_integrals(self, z: complex, refine_mask=None) -> np.ndarray:
        """Row of integrals int_panel log|z - y| ds(y) for every panel.

        Quadrature runs over the two half-chords through the on-curve panel
        midpoint, so curved panels only contribute a higher-order sagitta error.
        """
        nodes, w = _GAUSS8
        t = 0.5 * (nodes + 1.0)
        y1 = self.start[:, None] + (self.mid - self.start)[:, None] * t[None, :]
        y2 = self.mid[:, None] + (self.end - self.mid)[:, None] * t[None, :]
        vals = (np.log(np.abs(z - y1)) + np.log(np.abs(z - y2))) @ w * 0.25
        row = vals * self.length
        near = np.abs(z - self.mid) < 4.0 * self.length if refine_mask is None else refine_mask
        for j in np.nonzero(near)[0]:
            row[j] = self._near_integral(z, j)
        return row

    def _near_integral(self, z: complex, j: int, splits: int = 4) -> float:
        nodes, w = _GAUSS16
        t = 0.5 * (nodes + 1.0)
        acc = 0.0
        for s0, s1 in ((self.start[j], self.mid[j]), (self.mid[j], self.end[j])):
            for k in range(splits):
                a = s0 + (s1 - s0) * (k / splits)
                b = s0 + (s1 - s0) * ((k + 1) / splits)
                y = a + (b - a) * t
                r = np.abs(z - y)
                if np.any(r < 1e-15):
                    continue
                acc += float(np.log(r) @ w) * 0.5 * (self.length[j] / (2 * splits))
        return acc

    def _self_integral(self, j: int) -> float:
        half = 0.5 * self.length[j]
        return 2.0 * half * (math.log(half) - 1.0)

    def _assemble(self):
        n = self.n
        A = np.empty((n + 1, n + 1))
        for i in range(n):
            z = complex(self.mid[i])
            near = np.abs(z - self.mid) < 4.0 * self.length
            near[i] = False
            A[i, :n] = self._panel_integrals(z, refine_mask=near)
            A[i, i] = self._self_integral(i)
        A[:n, n] = 1.0
        A[n, :n] = self.length
        A[n, n] = 0.0
        self._matrix = A
        self._factor = lu_factor(A)

    # -- solves ---------------------------------------------------------------

    def _solve(self, rhs_boundary: np.ndarray):
        rhs = np.empty(self.n + 1)
        rhs[: self.n] = rhs_boundary
        rhs[self.n] = 1.0
        sol = lu_solve(self._factor, rhs)
        return sol[: self.n], float(sol[self.n])

    def _equilibrium(self):
        if not hasattr(self, "_eq"):
            self._eq = self._solve(np.zeros(self.n))
        return self._eq

    def _pole_density(self, z0: complex):
        z0 = complex(z0)
        near = np.abs(z0 - self.mid) < 2.0 * self.length
        if near.any():
            raise ValueError("pole lies on or too close to the compact set")
        return self._solve(np.log(np.abs(z0 - self.mid)))

    def _potential(self, sigma: np.ndarray, z: complex) -> float:
        return float(self._panel_integrals(complex(z)) @ sigma)

    # -- public quantities ----------------------------------------------------

    def capacity(self) -> float:
        """Logarithmic capacity of the compact set."""
        _, beta = self._equilibrium()
        return math.exp(-beta)

    def green_inf(self, z) -> float:
        """Grounded field of the complement with pole at infinity."""
        sigma, beta = self._equilibrium()
        return self._potential(sigma, z) + beta

    def green(self, z, z0) -> float:
        """Grounded field of the complement with a finite pole z0."""
        z, z0 = complex(z), complex(z0)
        if z == z0:
            raise ValueError("coincident pole and evaluation point")
        sigma, c = self._pole_density(z0)
        return -math.log(abs(z - z0)) + self._potential(sigma, z) + c

    def radius(self, z0=None) -> float:
        """Robin radius of the complement at z0 (None or inf for infinity)."""
        if z0 is None or (isinstance(z0, float) and math.isinf(z0)):
            return 1.0 / self.capacity()
        z0 = complex(z0)
        sigma, c = self._pole_density(z0)
        return math.exp(self._potential(sigma, z0) + c)
