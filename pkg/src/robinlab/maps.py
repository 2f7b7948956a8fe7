"""Holomorphic test maps: expression trees, exact derivatives, preimages.

Maps are small symbolic trees over {z, constants, +, -, *, /, integer powers,
exp} plus Moebius and Blaschke constructors.  Derivatives are produced by
symbolic differentiation of the tree, never by fitting.  When the tree is
rational, numerator/denominator coefficient vectors are recovered so that
preimages can be enumerated through the companion matrix of a polynomial and
Taylor coefficients through exact power-series division.
"""

from __future__ import annotations

import ast
import cmath
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as npoly

__all__ = [
    "Expr", "Const", "Var", "Add", "Sub", "Mul", "Div", "Neg", "Pow", "Exp",
    "HolomorphicMap", "MapError", "PreimageError",
    "parse_expression", "from_expression", "polynomial_map", "mobius", "disk_automorphism",
    "blaschke", "affine", "schwarzian", "schwarzian_from_series",
    "derivative_fd_error", "preimages",
]


class MapError(ValueError):
    """Malformed map expression or unsupported operation."""


class PreimageError(RuntimeError):
    """Preimage enumeration cannot be guaranteed complete for this map."""


# ---------------------------------------------------------------------------
# expression tree
# ---------------------------------------------------------------------------

class Expr:
    def __call__(self, z):
        raise NotImplementedError

    def diff(self) -> "Expr":
        raise NotImplementedError

    def rational(self):
        """(num, den) ascending complex coefficient arrays, or None."""
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: complex

    def __call__(self, z):
        return self.value if np.isscalar(z) else np.full_like(np.asarray(z, complex), self.value)

    def diff(self):
        return Const(0)

    def rational(self):
        return np.array([self.value], complex), np.array([1.0], complex)

    def __str__(self):
        return _fmt_const(self.value)


@dataclass(frozen=True)
class Var(Expr):
    def __call__(self, z):
        return z if np.isscalar(z) else np.asarray(z, complex)

    def diff(self):
        return Const(1)

    def rational(self):
        return np.array([0.0, 1.0], complex), np.array([1.0], complex)

    def __str__(self):
        return "z"


def _is_const(e, v=None):
    return isinstance(e, Const) and (v is None or e.value == v)


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr

    def __call__(self, z):
        return self.a(z) + self.b(z)

    def diff(self):
        return add(self.a.diff(), self.b.diff())

    def rational(self):
        return _rat_add(self.a.rational(), self.b.rational(), 1)

    def __str__(self):
        return f"({self.a} + {self.b})"


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr

    def __call__(self, z):
        return self.a(z) - self.b(z)

    def diff(self):
        return sub(self.a.diff(), self.b.diff())

    def rational(self):
        return _rat_add(self.a.rational(), self.b.rational(), -1)

    def __str__(self):
        return f"({self.a} - {self.b})"


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr

    def __call__(self, z):
        return self.a(z) * self.b(z)

    def diff(self):
        return add(mul(self.a.diff(), self.b), mul(self.a, self.b.diff()))

    def rational(self):
        ra, rb = self.a.rational(), self.b.rational()
        if ra is None or rb is None:
            return None
        return _trim(npoly.polymul(ra[0], rb[0])), _trim(npoly.polymul(ra[1], rb[1]))

    def __str__(self):
        return f"({self.a} * {self.b})"


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr

    def __call__(self, z):
        return self.a(z) / self.b(z)

    def diff(self):
        num = sub(mul(self.a.diff(), self.b), mul(self.a, self.b.diff()))
        return div(num, Pow(self.b, 2))

    def rational(self):
        ra, rb = self.a.rational(), self.b.rational()
        if ra is None or rb is None:
            return None
        return _trim(npoly.polymul(ra[0], rb[1])), _trim(npoly.polymul(ra[1], rb[0]))

    def __str__(self):
        return f"({self.a} / {self.b})"


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr

    def __call__(self, z):
        return -self.a(z)

    def diff(self):
        return neg(self.a.diff())

    def rational(self):
        ra = self.a.rational()
        if ra is None:
            return None
        return -ra[0], ra[1]

    def __str__(self):
        return f"(-{self.a})"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int):
            raise MapError("only integer powers are supported")

    def __call__(self, z):
        return self.base(z) ** self.exponent

    def diff(self):
        n = self.exponent
        if n == 0:
            return Const(0)
        return mul(mul(Const(n), Pow(self.base, n - 1)), self.base.diff())

    def rational(self):
        rb = self.base.rational()
        if rb is None:
            return None
        n = self.exponent
        num, den = rb
        if n < 0:
            num, den, n = den, num, -n
        return _trim(npoly.polypow(num, n)), _trim(npoly.polypow(den, n))

    def __str__(self):
        return f"({self.base}**{self.exponent})"


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr

    def __call__(self, z):
        v = self.arg(z)
        return cmath.exp(v) if np.isscalar(v) else np.exp(v)

    def diff(self):
        return mul(self, self.arg.diff())

    def rational(self):
        return None

    def __str__(self):
        return f"exp({self.arg})"


def _fmt_const(v: complex) -> str:
    if v.imag == 0:
        return repr(v.real)
    return f"({v.real!r}{v.imag:+}j)".replace("+-", "-")


def _trim(c):
    c = np.atleast_1d(np.asarray(c, complex))
    nz = np.nonzero(np.abs(c) > 0)[0]
    return c[: nz[-1] + 1] if len(nz) else np.array([0.0], complex)


def _rat_add(ra, rb, sign):
    if ra is None or rb is None:
        return None
    na, da = ra
    nb, db = rb
    num = npoly.polyadd(npoly.polymul(na, db), sign * npoly.polymul(nb, da))
    return _trim(num), _trim(npoly.polymul(da, db))


# folding constructors keep derivative trees small
def add(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def sub(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return Const(0)
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


def div(a, b):
    if _is_const(b, 1):
        return a
    if _is_const(a, 0):
        return Const(0)
    if _is_const(a) and _is_const(b):
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    return Neg(a)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def parse_expression(text: str) -> Expr:
    """Parse an expression in z with +,-,*,/,** (integer), exp(), i/j literals."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise MapError(f"cannot parse map expression {text!r}: {exc}") from None
    return _from_ast(tree.body)


def _from_ast(node) -> Expr:
    if isinstance(node, ast.BinOp):
        a, b = _from_ast(node.left), _from_ast(node.right)
        if isinstance(node.op, ast.Add):
            return add(a, b)
        if isinstance(node.op, ast.Sub):
            return sub(a, b)
        if isinstance(node.op, ast.Mult):
            return mul(a, b)
        if isinstance(node.op, ast.Div):
            return div(a, b)
        if isinstance(node.op, ast.Pow):
            if not _is_const(b) or b.value.imag != 0 or b.value.real != int(b.value.real):
                raise MapError("exponent must be a literal integer")
            return Pow(a, int(b.value.real))
        raise MapError(f"unsupported operator {ast.dump(node.op)}")
    if isinstance(node, ast.UnaryOp):
        a = _from_ast(node.operand)
        if isinstance(node.op, ast.USub):
            return neg(a)
        if isinstance(node.op, ast.UAdd):
            return a
        raise MapError("unsupported unary operator")
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float, complex)):
            return Const(complex(node.value))
        raise MapError(f"unsupported literal {node.value!r}")
    if isinstance(node, ast.Name):
        if node.id == "z":
            return Var()
        if node.id in ("i", "I", "j", "J"):
            return Const(1j)
        raise MapError(f"unknown symbol {node.id!r}")
    if isinstance(node, ast.Call):
        if isinstance(node.func, ast.Name) and node.func.id == "exp" and len(node.args) == 1:
            return Exp(_from_ast(node.args[0]))
        raise MapError("only exp(...) calls are supported in expressions")
    raise MapError(f"unsupported syntax {ast.dump(node)}")


# ---------------------------------------------------------------------------
# the map object
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HolomorphicMap:
    """A holomorphic map with exact derivative trees and optional valence hint."""

    expr: Expr
    valence: int = 1
    label: str = ""

    def __call__(self, z):
        return self.expr(z)

    @cached_property
    def _derivatives(self):
        return [self.expr]

    def derivative_expr(self, order: int = 1) -> Expr:
        chain = self._derivatives
        while len(chain) <= order:
            chain.append(chain[-1].diff())
        return chain[order]

    def derivative(self, z, order: int = 1):
        return self.derivative_expr(order)(z)

    @cached_property
    def rational(self):
        """(num, den) ascending coefficients, or None for non-rational maps."""
        return self.expr.rational()

    def taylor(self, z0: complex, n: int):
        """Exact coefficients c_0..c_n of the expansion around z0.

        Rational maps use polynomial shift + power-series division; this route
        is independent of the derivative trees.  Non-rational maps fall back
        to derivatives / factorial.
        """
        z0 = complex(z0)
        if self.rational is not None:
            num, den = self.rational
            nums = _shift(num, z0)
            dens = _shift(den, z0)
            if abs(dens[0]) == 0:
                raise MapError("expansion point is a pole of the map")
            return _series_div(nums, dens, n)
        fact = 1.0
        out = []
        for k in range(n + 1):
            if k > 1:
                fact *= k
            out.append(self.derivative(z0, k) / fact)
        return np.array(out, complex)

    def local_expansion(self, z0: complex):
        """(order n, leading coefficient c_n) of f(z) - f(z0) at z0."""
        max_order = max(self.valence, 1) + 4
        coeffs = self.taylor(z0, max_order)
        scale = max(1.0, float(np.max(np.abs(coeffs))))
        for k in range(1, max_order + 1):
            if abs(coeffs[k]) > 1e-11 * scale:
                return k, complex(coeffs[k])
        raise MapError("map is locally constant at the expansion point")

    def __str__(self):
        return self.label or str(self.expr)


# constructors -----------------------------------------------------------------

def from_expression(text: str, valence: int = 1, label: str = "") -> HolomorphicMap:
    return HolomorphicMap(parse_expression(text), valence=valence, label=label or text)


def polynomial_map(coeffs, label: str = "") -> HolomorphicMap:
    """Map from ascending coefficients c0 + c1 z + ..."""
    coeffs = [complex(c) for c in coeffs]
    expr: Expr = Const(coeffs[0])
    for k, c in enumerate(coeffs[1:], start=1):
        if c == 0:
            continue
        term = Pow(Var(), k) if k > 1 else Var()
        expr = add(expr, mul(Const(c), term))
    deg = max((k for k, c in enumerate(coeffs) if c != 0), default=0)
    return HolomorphicMap(expr, valence=max(deg, 1), label=label)


def mobius(a, b, c, d, label: str = "") -> HolomorphicMap:
    a, b, c, d = (complex(v) for v in (a, b, c, d))
    if a * d - b * c == 0:
        raise MapError("degenerate Moebius coefficients (ad - bc = 0)")
    num = add(mul(Const(a), Var()), Const(b))
    den = add(mul(Const(c), Var()), Const(d))
    expr = num if (c == 0 and d == 1) else div(num, den)
    return HolomorphicMap(expr, valence=1, label=label or "mobius")


def disk_automorphism(a, theta: float = 0.0) -> HolomorphicMap:
    """e^{i theta} (z - a) / (1 - conj(a) z), an automorphism of the unit disk."""
    a = complex(a)
    if abs(a) >= 1:
        raise MapError("automorphism parameter must lie in the open unit disk")
    rot = cmath.exp(1j * theta)
    return mobius(rot, -rot * a, -a.conjugate(), 1.0,
                  label=f"aut(a={a:.3g},theta={theta:.3g})")


def affine(a, b, label: str = "") -> HolomorphicMap:
    a, b = complex(a), complex(b)
    if a == 0:
        raise MapError("degenerate affine map")
    return HolomorphicMap(add(mul(Const(a), Var()), Const(b)), valence=1,
                          label=label or f"{_fmt_const(a)}*z+{_fmt_const(b)}")


def blaschke(zeros, rotation=1.0, label: str = "") -> HolomorphicMap:
    """Finite Blaschke product rot * prod (z - a_k)/(1 - conj(a_k) z)."""
    zeros = [complex(a) for a in zeros]
    if not zeros:
        raise MapError("Blaschke product needs at least one zero")
    if any(abs(a) >= 1 for a in zeros):
        raise MapError("Blaschke zeros must lie in the open unit disk")
    rotation = complex(rotation)
    if abs(abs(rotation) - 1.0) > 1e-12:
        raise MapError("Blaschke rotation must be unimodular")
    expr: Expr = Const(rotation)
    for a in zeros:
        factor = div(sub(Var(), Const(a)), sub(Const(1), mul(Const(a.conjugate()), Var())))
        expr = mul(expr, factor)
    return HolomorphicMap(expr, valence=len(zeros),
                          label=label or f"blaschke(deg={len(zeros)})")


# ---------------------------------------------------------------------------
# series helpers
# ---------------------------------------------------------------------------

def _shift(coeffs, z0: complex):
    """Coefficients of p(z0 + t) from coefficients of p(z)."""
    out = np.zeros(len(coeffs), complex)
    # Horner-style synthetic shift
    work = np.asarray(coeffs, complex).copy()
    for k in range(len(coeffs)):
        out[k] = npoly.polyval(z0, work)
        work = npoly.polyder(work) / (k + 1)
        if len(work) == 0:
            break
    return out


def _series_div(num, den, n: int):
    """First n+1 coefficients of num(t)/den(t) as power series (den[0] != 0)."""
    a = np.zeros(n + 1, complex)
    b = np.zeros(n + 1, complex)
    a[: min(len(num), n + 1)] = num[: n + 1]
    b[: min(len(den), n + 1)] = den[: n + 1]
    c = np.zeros(n + 1, complex)
    for k in range(n + 1):
        s = a[k] - np.dot(b[1 : k + 1], c[k - 1 :: -1][: k]) if k else a[0]
        c[k] = s / b[0]
    return c


# ---------------------------------------------------------------------------
# Schwarzian derivative
# ---------------------------------------------------------------------------

def schwarzian(f: HolomorphicMap, z) -> complex:
    """f'''/f' - (3/2)(f''/f')^2 evaluated with the derivative trees."""
    d1 = f.derivative(z, 1)
    if d1 == 0:
        raise MapError("Schwarzian undefined where the derivative vanishes")
    d2 = f.derivative(z, 2)
    d3 = f.derivative(z, 3)
    q = d2 / d1
    return d3 / d1 - 1.5 * q * q


def schwarzian_from_series(f: HolomorphicMap, z) -> complex:
    """6 (c3/c1 - c2^2/c1^2) from the exact local expansion at z.

    For rational maps the coefficients come from power-series division, an
    independent route from the derivative trees used by `schwarzian`.
    """
    c = f.taylor(complex(z), 3)
    if c[1] == 0:
        raise MapError("Schwarzian undefined where the derivative vanishes")
    return 6.0 * (c[3] / c[1] - (c[2] / c[1]) ** 2)


def derivative_fd_error(f: HolomorphicMap, points, step: float = 1e-5) -> float:
    """Max relative gap between the derivative tree and central differences."""
    worst = 0.0
    for z in points:
        z = complex(z)
        fd = (f(z + step) - f(z - step)) / (2.0 * step)
        ex = f.derivative(z, 1)
        denom = max(abs(ex), 1e-12)
        worst = max(worst, abs(fd - ex) / denom)
    return worst


# ---------------------------------------------------------------------------
# preimage enumeration
# ---------------------------------------------------------------------------

def preimages(f: HolomorphicMap, w0, contains, cluster_tol: float = 1e-7):
    """All solutions of f(z) = w0 inside the region, with multiplicities.

    `contains` is a predicate for the open region.  Only map classes with a
    complete enumeration are accepted: rational maps (through the companion
    matrix of num - w0*den) and affine maps.  Anything else raises
    PreimageError rather than returning a possibly partial list.
    """
    w0 = complex(w0)
    rat = f.rational
    if rat is None:
        raise PreimageError(f"cannot enumerate preimages of non-rational map {f}")
    num, den = rat
    poly = _trim(npoly.polyadd(num, -w0 * den))
    if len(poly) <= 1:
        raise PreimageError("f - w0 is constant; preimage set is empty or everything")
    roots = np.roots(poly[::-1])
    roots = _polish_roots(poly, roots)
    groups = _cluster(roots, cluster_tol)
    out = []
    for center, mult in groups:
        if abs(npoly.polyval(center, den)) < 1e-12:
            continue  # pole of the map, not a preimage
        if contains(center):
            out.append((center, mult))
    total = sum(m for _, m in out)
    if total > max(f.valence, 1):
        raise PreimageError(
            f"found {total} preimages inside the region, more than the valence "
            f"hint {f.valence}; refusing"
        )
    return out


def _polish_roots(poly, roots, iterations: int = 3):
    dpoly = npoly.polyder(poly)
    polished = []
    for r in roots:
        z = complex(r)
        for _ in range(iterations):
            dp = npoly.polyval(z, dpoly)
            if abs(dp) < 1e-14:
                break  # multiple root; companion estimate is kept
            z = z - npoly.polyval(z, poly) / dp
        polished.append(z)
    return polished


def _cluster(roots, tol):
    scale = max([1.0] + [abs(r) for r in roots])
    remaining = list(roots)
    groups = []
    while remaining:
        seed = remaining.pop()
        members = [seed]
        keep = []
        for r in remaining:
            if abs(r - seed) <= tol * scale * 10:
                members.append(r)
            else:
                keep.append(r)
        remaining = keep
        center = sum(members) / len(members)
        groups.append((center, len(members)))
    groups.sort(key=lambda g: (g[0].real, g[0].imag))
    return groups
