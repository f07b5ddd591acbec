"""Truncated multivariate Taylor (jet) arithmetic over the four coordinates x0..x3.

A jet stores the raw partial derivatives of a scalar field at a base point,
up to a truncation order (default 3).  Coefficients are kept in a dense
vector indexed by multi-indices in graded-lexicographic order, so that
truncating to a lower order is a prefix slice.  Storage is RAW partials
``d^|a| f / dx^a``, not Taylor coefficients: downstream differential-geometry
formulas quote partial derivatives directly.

Jets may carry leading component axes (a 3x3 matrix of jets is one ``Jet``
whose coefficient array has shape (3, 3, ncoeffs)); all arithmetic
broadcasts over those axes.  Jets are immutable values and every operation
is pure.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np

from .errors import DivisionByZeroAtPoint, DomainErrorAtPoint, OrderExhausted

NVARS = 4
DEFAULT_ORDER = 3


@lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, int, int, int], ...]:
    """All 4-variable multi-indices of total order <= `order`, graded-lex sorted."""
    out = []
    for total in range(order + 1):
        for a in range(total, -1, -1):
            for b in range(total - a, -1, -1):
                for c in range(total - a - b, -1, -1):
                    out.append((a, b, c, total - a - b - c))
    # graded first, then plain lexicographic inside each grade
    out.sort(key=lambda m: (sum(m), m))
    return tuple(out)


@lru_cache(maxsize=None)
def ncoeffs(order: int) -> int:
    return len(multi_indices(order))


@lru_cache(maxsize=None)
def index_of(order: int) -> dict[tuple[int, int, int, int], int]:
    return {m: i for i, m in enumerate(multi_indices(order))}


def _binom_multi(g: tuple, a: tuple) -> int:
    n = 1
    for gi, ai in zip(g, a):
        n *= comb(gi, ai)
    return n


@lru_cache(maxsize=None)
def _mul_table(order: int):
    """(P-index arrays IA, IB, scatter matrix S) realizing the Leibniz product.

    For raw-partial storage the product rule is
    (fg)^(g) = sum_{a<=g} C(g,a) f^(a) g^(g-a), with C a product of binomials.
    """
    idx = index_of(order)
    mis = multi_indices(order)
    ia, ib, io, cf = [], [], [], []
    for g in mis:
        gi = idx[g]
        for a in mis:
            if all(x <= y for x, y in zip(a, g)):
                b = tuple(y - x for x, y in zip(a, g))
                ia.append(idx[a])
                ib.append(idx[b])
                io.append(gi)
                cf.append(float(_binom_multi(g, a)))
    n = ncoeffs(order)
    scatter = np.zeros((len(ia), n))
    scatter[np.arange(len(ia)), io] = cf
    return np.asarray(ia), np.asarray(ib), scatter


@lru_cache(maxsize=None)
def _recip_table(order: int):
    """Index arrays building the triangular system M(b) r = e0 for 1/b."""
    idx = index_of(order)
    mis = multi_indices(order)
    rg, rd, rs, rc = [], [], [], []
    for g in mis:
        for d in mis:
            if all(x <= y for x, y in zip(d, g)):
                a = tuple(y - x for x, y in zip(d, g))
                rg.append(idx[g])
                rd.append(idx[d])
                rs.append(idx[a])
                rc.append(float(_binom_multi(g, a)))
    return np.asarray(rg), np.asarray(rd), np.asarray(rs), np.asarray(rc)


@lru_cache(maxsize=None)
def _shift_table(order: int, axis: int):
    """Map coefficient slots of d f/dx_axis (order-1) to slots of f (order)."""
    src = index_of(order)
    out = []
    for m in multi_indices(order - 1):
        shifted = list(m)
        shifted[axis] += 1
        out.append(src[tuple(shifted)])
    return np.asarray(out)


@lru_cache(maxsize=None)
def _inv_decomps(order: int):
    """Per-slot Leibniz decompositions g = a + b with a > 0 (matrix inverse)."""
    idx = index_of(order)
    mis = multi_indices(order)
    table = []
    for g in mis:
        terms = []
        for a in mis:
            if sum(a) > 0 and all(x <= y for x, y in zip(a, g)):
                b = tuple(y - x for x, y in zip(a, g))
                terms.append((float(_binom_multi(g, a)), idx[a], idx[b]))
        table.append(tuple(terms))
    return tuple(table)


class Jet:
    """Raw-partial jet of a scalar field (optionally an array of such fields).

    `coeffs` has shape ``leading + (ncoeffs(order),)``; the last axis runs
    over multi-indices in graded-lex order.  Binary operations truncate to
    the smaller operand order.
    """

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: np.ndarray):
        self.order = order
        self.coeffs = coeffs

    # -- construction ------------------------------------------------------

    @staticmethod
    def constant(value, order: int = DEFAULT_ORDER) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (ncoeffs(order),))
        c[..., 0] = value
        return Jet(order, c)

    @staticmethod
    def coordinate(point_value: float, axis: int, order: int) -> "Jet":
        c = np.zeros(ncoeffs(order))
        c[0] = point_value
        if order >= 1:
            unit = [0, 0, 0, 0]
            unit[axis] = 1
            c[index_of(order)[tuple(unit)]] = 1.0
        return Jet(order, c)

    # -- inspection --------------------------------------------------------

    @property
    def value(self):
        return self.coeffs[..., 0]

    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    def partial(self, alpha) -> np.ndarray:
        """Raw partial derivative for multi-index `alpha` (4 exponents)."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != NVARS or any(a < 0 for a in alpha):
            raise ValueError(f"bad multi-index {alpha!r}")
        if sum(alpha) > self.order:
            raise OrderExhausted(
                f"partial {alpha} of total order {sum(alpha)} exceeds jet order {self.order}"
            )
        return self.coeffs[..., index_of(self.order)[alpha]]

    def __getitem__(self, key) -> "Jet":
        return Jet(self.order, self.coeffs[key])

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape}, value={self.value!r})"

    # -- order management ----------------------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderExhausted(f"cannot extend jet of order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(order, self.coeffs[..., : ncoeffs(order)])

    def _align(self, other: "Jet"):
        m = min(self.order, other.order)
        return self.truncate(m), other.truncate(m), m

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, m = self._align(other)
            return Jet(m, a.coeffs + b.coeffs)
        c = self.coeffs.copy()
        c[..., 0] += other
        return Jet(self.order, c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b, m = self._align(other)
            return Jet(m, a.coeffs - b.coeffs)
        c = self.coeffs.copy()
        c[..., 0] -= other
        return Jet(self.order, c)

    def __rsub__(self, other):
        c = -self.coeffs
        c[..., 0] += other
        return Jet(self.order, c)

    def __neg__(self):
        return Jet(self.order, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, m = self._align(other)
            ia, ib, scatter = _mul_table(m)
            prod = a.coeffs[..., ia] * b.coeffs[..., ib]
            return Jet(m, prod @ scatter)
        return Jet(self.order, self.coeffs * np.asarray(other, dtype=float)[..., None])

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        if np.any(self.value == 0.0):
            raise DivisionByZeroAtPoint("jet reciprocal of value 0")
        rg, rd, rs, rc = _recip_table(self.order)
        n = ncoeffs(self.order)
        mat = np.zeros(self.shape + (n, n))
        mat[..., rg, rd] = rc * self.coeffs[..., rs]
        rhs = np.zeros(self.shape + (n,))
        rhs[..., 0] = 1.0
        return Jet(self.order, np.linalg.solve(mat, rhs[..., None])[..., 0])

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.order, self.coeffs / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, e):
        if isinstance(e, int) or (isinstance(e, float) and e.is_integer()):
            n = int(e)
            if n == 0:
                return Jet.constant(np.ones(self.shape), self.order)
            base = self if n > 0 else self.reciprocal()
            n = abs(n)
            acc = None
            while n:
                if n & 1:
                    acc = base if acc is None else acc * base
                base = base * base if n > 1 else base
                n >>= 1
            return acc
        if np.any(self.value <= 0.0):
            raise DomainErrorAtPoint("non-integer power of non-positive base")
        return exp(float(e) * ln(self))

    # -- calculus ------------------------------------------------------------

    def d(self, axis: int) -> "Jet":
        """Jet of the partial derivative field d f / dx_axis (one order lower)."""
        if self.order < 1:
            raise OrderExhausted("derivative of an order-0 jet")
        return Jet(self.order - 1, self.coeffs[..., _shift_table(self.order, axis)])

    def compose(self, derivs) -> "Jet":
        """Jet of phi(f) given univariate derivatives [phi(f0), phi'(f0), ...].

        Horner evaluation of the truncated Taylor series of phi about the
        base value; exact at the truncation order because (f - f0) has zero
        constant term.
        """
        df = Jet(self.order, self.coeffs.copy())
        df.coeffs[..., 0] = 0.0
        acc = Jet.constant(np.asarray(derivs[self.order]) / factorial(self.order), self.order)
        if acc.coeffs.shape != self.coeffs.shape:
            acc = Jet(self.order, np.broadcast_to(acc.coeffs, self.coeffs.shape).copy())
        for k in range(self.order - 1, -1, -1):
            acc = acc * df
            acc.coeffs[..., 0] += np.asarray(derivs[k]) / factorial(k)
        return acc

    # -- array plumbing --------------------------------------------------------

    def sum(self, axis) -> "Jet":
        ax = axis if axis >= 0 else axis - 1
        return Jet(self.order, self.coeffs.sum(axis=ax))

    def transpose(self, *axes) -> "Jet":
        perm = list(axes) + [len(self.shape)]
        return Jet(self.order, self.coeffs.transpose(perm))


def stack(jets, axis: int = 0) -> Jet:
    """Stack jets along a new leading (component) axis."""
    order = min(j.order for j in jets)
    ax = axis if axis >= 0 else axis - 1  # keep the coefficient axis last
    return Jet(order, np.stack([j.truncate(order).coeffs for j in jets], axis=ax))


def tdot(a: Jet, b: Jet, axis_a: int, axis_b: int) -> Jet:
    """Contract one component axis of `a` against one of `b` (tensordot-style).

    Result components are ordered: remaining axes of `a`, then of `b`.
    """
    m = min(a.order, b.order)
    ca = np.moveaxis(a.truncate(m).coeffs, axis_a, 0)
    cb = np.moveaxis(b.truncate(m).coeffs, axis_b, 0)
    ra = ca.shape[1:-1]
    rb = cb.shape[1:-1]
    ca = ca.reshape(ca.shape[:1] + ra + (1,) * len(rb) + ca.shape[-1:])
    cb = cb.reshape(cb.shape[:1] + (1,) * len(ra) + rb + cb.shape[-1:])
    return (Jet(m, ca) * Jet(m, cb)).sum(0)


def constant(value, order: int = DEFAULT_ORDER) -> Jet:
    return Jet.constant(value, order)


class JetEnv:
    """The four coordinate jets seeded at a base point."""

    __slots__ = ("point", "order", "coords")

    def __init__(self, point, order: int):
        self.point = tuple(float(x) for x in point)
        self.order = order
        self.coords = tuple(
            Jet.coordinate(self.point[k], k, order) for k in range(NVARS)
        )

    def __getitem__(self, k: int) -> Jet:
        return self.coords[k]


def seed_point(point, order: int = DEFAULT_ORDER) -> JetEnv:
    if order < 0:
        raise ValueError("jet order must be >= 0")
    if len(point) != NVARS:
        raise ValueError("a base point has exactly 4 coordinates")
    return JetEnv(point, order)


# -- analytic functions --------------------------------------------------------
#
# Each builds the univariate derivative list at the base value(s) and composes.


def _cycle4(f0, f1, f2, f3, order):
    seq = [f0, f1, f2, f3]
    return [seq[k % 4] for k in range(order + 1)]


def sin(j: Jet) -> Jet:
    v = j.value
    return j.compose(_cycle4(np.sin(v), np.cos(v), -np.sin(v), -np.cos(v), j.order))


def cos(j: Jet) -> Jet:
    v = j.value
    return j.compose(_cycle4(np.cos(v), -np.sin(v), -np.cos(v), np.sin(v), j.order))


def exp(j: Jet) -> Jet:
    e = np.exp(j.value)
    return j.compose([e] * (j.order + 1))


def ln(j: Jet) -> Jet:
    v = j.value
    if np.any(v <= 0.0):
        raise DomainErrorAtPoint("ln of non-positive value")
    derivs = [np.log(v)]
    for k in range(1, j.order + 1):
        derivs.append((-1.0) ** (k - 1) * factorial(k - 1) * v ** (-k))
    return j.compose(derivs)


def sqrt(j: Jet) -> Jet:
    v = j.value
    if np.any(v <= 0.0):
        raise DomainErrorAtPoint("sqrt of non-positive value")
    derivs = [np.sqrt(v)]
    coef = 0.5
    for k in range(1, j.order + 1):
        derivs.append(coef * v ** (0.5 - k))
        coef *= 0.5 - k
    return j.compose(derivs)


def sinh(j: Jet) -> Jet:
    v = j.value
    s, c = np.sinh(v), np.cosh(v)
    return j.compose([s if k % 2 == 0 else c for k in range(j.order + 1)])


def cosh(j: Jet) -> Jet:
    v = j.value
    s, c = np.sinh(v), np.cosh(v)
    return j.compose([c if k % 2 == 0 else s for k in range(j.order + 1)])


def _poly_derivs(j: Jet, base, slope_poly) -> Jet:
    # phi' = slope_poly(t) with t = phi(x); successive derivatives stay
    # polynomial in t: P_{k+1}(t) = P_k'(t) * slope_poly(t).
    t = base
    derivs = [t]
    poly = np.array([0.0, 1.0])  # P_0(t) = t
    for _ in range(j.order):
        dp = np.polynomial.polynomial.polyder(poly)
        poly = np.polynomial.polynomial.polymul(dp, slope_poly)
        derivs.append(np.polynomial.polynomial.polyval(t, poly))
    return j.compose(derivs)


def tan(j: Jet) -> Jet:
    return _poly_derivs(j, np.tan(j.value), np.array([1.0, 0.0, 1.0]))


def tanh(j: Jet) -> Jet:
    return _poly_derivs(j, np.tanh(j.value), np.array([1.0, 0.0, -1.0]))


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "ln": ln,
    "sqrt": sqrt,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
}


def matrix_inverse(m: Jet) -> Jet:
    """Jet of the inverse of a square matrix of scalar fields.

    `m` has shape (n, n).  The value-level inverse seeds a Leibniz recursion
    d(g^-1) = -g^-1 (dg) g^-1 carried out coefficient by coefficient, which
    is exact at the truncation order.
    """
    n = m.shape[0]
    nc = ncoeffs(m.order)
    out = np.empty((n, n, nc))
    try:
        inv0 = np.linalg.inv(m.coeffs[..., 0])
    except np.linalg.LinAlgError as e:
        raise DivisionByZeroAtPoint(f"singular matrix at base point: {e}") from e
    out[..., 0] = inv0
    for gi, terms in enumerate(_inv_decomps(m.order)):
        if gi == 0:
            continue
        acc = np.zeros((n, n))
        for cf, ai, bi in terms:
            acc += cf * (m.coeffs[..., ai] @ out[..., bi])
        out[..., gi] = -inv0 @ acc
    return Jet(m.order, out)
