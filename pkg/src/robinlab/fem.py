"""Piecewise-linear finite elements for the mixed grounded/reflecting problem.

The variational problem: minimize the Dirichlet integral over fields with
prescribed values on grounded (Dirichlet) nodes and a weak flux on the free
boundary.  Zero flux is the natural condition and costs nothing; nonzero flux
enters through edge quadrature.  The discrete minimizer over-approximates the
continuous energy minimum, so capacity-type quantities converge from above
under refinement.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve, cg
from scipy.spatial import cKDTree

from .geometry import Mesh

__all__ = ["FemError", "BoundaryData", "HarmonicField", "solve_mixed",
           "dirichlet_energy", "stiffness_matrix", "dump_system",
           "export_field_csv", "sample_grid"]


class FemError(RuntimeError):
    """Singular or unsolvable discrete problem."""


@dataclass
class BoundaryData:
    """Dirichlet values per node plus an optional flux density on free edges.

    dirichlet: {vertex index: value}.  neumann_flux(z, n) takes复 the edge
    midpoint(s) as complex array and the outward unit normal(s) as complex
    array, returning the flux density (directional derivative outward).
    """

    dirichlet: dict
    neumann_flux: object = None


def _tri_geometry(mesh: Mesh):
    v = mesh.vertices
    t = mesh.triangles
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    d1 = p1 - p0
    d2 = p2 - p0
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(area2 <= 0):
        raise FemError("degenerate or mis-oriented triangle in mesh")
    # gradients of the three hat functions on each triangle
    gx = np.stack([p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]], axis=1)
    gy = np.stack([p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]], axis=1)
    gx /= area2[:, None]
    gy /= area2[:, None]
    return gx, gy, 0.5 * area2


def stiffness_matrix(mesh: Mesh) -> sparse.csr_matrix:
    """Assembled P1 stiffness matrix (cached on the mesh)."""
    if "stiffness" in mesh.cache:
        return mesh.cache["stiffness"]
    gx, gy, area = _tri_geometry(mesh)
    t = mesh.triangles
    n = len(mesh.vertices)
    rows, cols, vals = [], [], []
    for a in range(3):
        for b in range(3):
            rows.append(t[:, a])
            cols.append(t[:, b])
            vals.append(area * (gx[:, a] * gx[:, b] + gy[:, a] * gy[:, b]))
    K = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    mesh.cache["stiffness"] = K
    return K


def _edge_outward_normals(mesh: Mesh):
    """Unit outward normal per boundary edge, via the adjacent triangle."""
    if "edge_normals" in mesh.cache:
        return mesh.cache["edge_normals"]
    v = mesh.vertices
    e = mesh.boundary_edges
    p, q = v[e[:, 0]], v[e[:, 1]]
    tangent = q - p
    nx, ny = tangent[:, 1], -tangent[:, 0]
    norm = np.hypot(nx, ny)
    nx, ny = nx / norm, ny / norm
    tri = mesh.triangles[mesh.edge_tri]
    cent = v[tri].mean(axis=1)
    mid = 0.5 * (p + q)
    flip = (nx * (cent[:, 0] - mid[:, 0]) + ny * (cent[:, 1] - mid[:, 1])) > 0
    nx[flip] = -nx[flip]
    ny[flip] = -ny[flip]
    out = nx + 1j * ny
    mesh.cache["edge_normals"] = out
    return out


def solve_mixed(mesh: Mesh, data: BoundaryData) -> "HarmonicField":
    """Solve the mixed problem; returns the discrete energy minimizer.

    Direct sparse factorization first; if its residual is not small, an
    iterative solve polishes to relative residual 1e-12.
    """
    if not data.dirichlet:
        raise FemError("no grounded nodes: the mixed problem is singular")
    n = len(mesh.vertices)
    K = stiffness_matrix(mesh)
    rhs = np.zeros(n)

    if data.neumann_flux is not None:
        free = mesh.edge_tags == 0
        if np.any(free):
            e = mesh.boundary_edges[free]
            normals = _edge_outward_normals(mesh)[free]
            p = mesh.vertices[e[:, 0]]
            q = mesh.vertices[e[:, 1]]
            lengths = np.hypot(*(q - p).T)
            # two-point Gauss on each edge; hat values at the Gauss points
            for xi, w in ((0.5 - 0.5 / np.sqrt(3.0), 0.5), (0.5 + 0.5 / np.sqrt(3.0), 0.5)):
                pts = p + xi * (q - p)
                zpts = pts[:, 0] + 1j * pts[:, 1]
                fl = np.asarray(data.neumann_flux(zpts, normals), float)
                np.add.at(rhs, e[:, 0], w * lengths * fl * (1.0 - xi))
                np.add.at(rhs, e[:, 1], w * lengths * fl * xi)

    fixed = np.array(sorted(data.dirichlet), int)
    fixed_vals = np.array([data.dirichlet[i] for i in fixed], float)
    is_fixed = np.zeros(n, bool)
    is_fixed[fixed] = True
    freei = np.nonzero(~is_fixed)[0]

    u = np.zeros(n)
    u[fixed] = fixed_vals
    if len(freei):
        Kff = K[freei][:, freei].tocsc()
        b = rhs[freei] - K[freei][:, fixed] @ fixed_vals
        uf = spsolve(Kff, b)
        res = np.linalg.norm(Kff @ uf - b)
        scale = max(np.linalg.norm(b), 1e-30)
        if not np.isfinite(res) or res > 1e-10 * scale:
            uf, info = cg(Kff, b, x0=np.nan_to_num(uf), rtol=1e-12, maxiter=20000)
            if info != 0:
                raise FemError(f"linear solve did not converge (cg info={info})")
        u[freei] = uf
        residual = float(res / scale)
    else:
        residual = 0.0
    return HarmonicField(mesh=mesh, values=u, residual=residual)


@dataclass
class HarmonicField:
    """Nodal field on a mesh with barycentric evaluation."""

    mesh: Mesh
    values: np.ndarray
    residual: float = 0.0
    _locator: object = field(default=None, repr=False)

    def energy(self) -> float:
        K = stiffness_matrix(self.mesh)
        return float(self.values @ (K @ self.values))

    def _ensure_locator(self):
        if self._locator is None:
            cents = self.mesh.vertices[self.mesh.triangles].mean(axis=1)
            self._locator = cKDTree(cents)

    def _find_triangle(self, x: float, y: float):
        self._ensure_locator()
        k = min(32, len(self.mesh.triangles))
        _, cand = self._locator.query([x, y], k=k)
        cand = np.atleast_1d(cand)
        v = self.mesh.vertices
        t = self.mesh.triangles
        best, best_viol = None, np.inf
        for ti in cand:
            lam = _barycentric(v[t[ti]], x, y)
            viol = -min(lam)
            if viol < best_viol:
                best, best_viol = (ti, lam), viol
            if viol <= 1e-12:
                return ti, lam
        if best is not None and best_viol < 1e-7:
            return best
        return None

    def evaluate(self, z) -> float:
        """Barycentric interpolation at a point of the meshed closure."""
        z = complex(z)
        hit = self._find_triangle(z.real, z.imag)
        if hit is None:
            raise FemError(f"point {z} lies outside the meshed domain")
        ti, lam = hit
        idx = self.mesh.triangles[ti]
        return float(np.dot(lam, self.values[idx]))

    def evaluate_many(self, zs) -> np.ndarray:
        return np.array([self.evaluate(z) for z in np.atleast_1d(np.asarray(zs, complex))])

    def vertex_value(self, index: int) -> float:
        return float(self.values[index])


def _barycentric(tri_pts: np.ndarray, x: float, y: float):
    (x0, y0), (x1, y1), (x2, y2) = tri_pts
    det = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
    l0 = ((y1 - y2) * (x - x2) + (x2 - x1) * (y - y2)) / det
    l1 = ((y2 - y0) * (x - x2) + (x0 - x2) * (y - y2)) / det
    return (l0, l1, 1.0 - l0 - l1)


def dirichlet_energy(fieldv: HarmonicField) -> float:
    """Exact quadratic-form value of the discrete gradient energy."""
    return fieldv.energy()


# ---------------------------------------------------------------------------
# debugging / export interfaces
# ---------------------------------------------------------------------------

_MAGIC = b"RLHS"
_VERSION = 1


def dump_system(fieldv: HarmonicField, path) -> None:
    """Flat little-endian binary dump of the assembled system and solution.

    Layout: magic 'RLHS', uint32 version, uint64 n_vertices, n_triangles,
    nnz; float64 vertex coords (x0 y0 x1 y1 ...); int64 triangle index
    triples; CSR stiffness (int64 indptr, int64 indices, float64 data);
    float64 nodal solution values.
    """
    mesh = fieldv.mesh
    K = stiffness_matrix(mesh).tocsr()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<QQQ", len(mesh.vertices), len(mesh.triangles), K.nnz))
        f.write(np.asarray(mesh.vertices, "<f8").tobytes())
        f.write(np.asarray(mesh.triangles, "<i8").tobytes())
        f.write(np.asarray(K.indptr, "<i8").tobytes())
        f.write(np.asarray(K.indices, "<i8").tobytes())
        f.write(np.asarray(K.data, "<f8").tobytes())
        f.write(np.asarray(fieldv.values, "<f8").tobytes())


def load_system(path) -> dict:
    """Read back a dump_system file (debugging helper)."""
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise FemError("bad magic bytes in system dump")
        (version,) = struct.unpack("<I", f.read(4))
        if version != _VERSION:
            raise FemError(f"unsupported dump version {version}")
        nv, nt, nnz = struct.unpack("<QQQ", f.read(24))
        verts = np.frombuffer(f.read(16 * nv), "<f8").reshape(nv, 2)
        tris = np.frombuffer(f.read(24 * nt), "<i8").reshape(nt, 3)
        indptr = np.frombuffer(f.read(8 * (nv + 1)), "<i8")
        indices = np.frombuffer(f.read(8 * nnz), "<i8")
        data = np.frombuffer(f.read(8 * nnz), "<f8")
        values = np.frombuffer(f.read(8 * nv), "<f8")
    K = sparse.csr_matrix((data, indices, indptr), shape=(nv, nv))
    return {"vertices": verts, "triangles": tris, "stiffness": K, "values": values}


def sample_grid(fieldv: HarmonicField, nx: int, ny: int):
    """(x, y, value-or-None) rows over the mesh bounding box."""
    v = fieldv.mesh.vertices
    xs = np.linspace(v[:, 0].min(), v[:, 0].max(), nx)
    ys = np.linspace(v[:, 1].min(), v[:, 1].max(), ny)
    rows = []
    for y in ys:
        for x in xs:
            hit = fieldv._find_triangle(float(x), float(y))
            if hit is None:
                rows.append((float(x), float(y), None))
            else:
                ti, lam = hit
                idx = fieldv.mesh.triangles[ti]
                rows.append((float(x), float(y), float(np.dot(lam, fieldv.values[idx]))))
    return rows


def export_field_csv(fieldv: HarmonicField, nx: int, ny: int, path) -> None:
    """CSV rows (x, y, value); points outside the domain have an empty value."""
    if nx <= 0 or ny <= 0:
        raise FemError("grid dimensions must be positive")
    rows = sample_grid(fieldv, nx, ny)
    with open(path, "w") as f:
        f.write("x,y,value\n")
        for x, y, val in rows:
            sval = "" if val is None else format(val, ".17g")
            f.write(f"{format(x, '.17g')},{format(y, '.17g')},{sval}\n")
