"""Truncated multivariate power series algebra.

A :class:`TaylorPoly` stores the coefficients of a multivariate Taylor
polynomial truncated at a fixed total order ``k`` in ``v`` normalized
deviation variables.  All arithmetic, elementary functions, evaluation,
differentiation and range bounding operate coefficient-wise on a dense
vector indexed by a graded monomial enumeration shared through a cached
:class:`TpsAlgebra` table per ``(v, k)`` pair.

Values are immutable after construction and every operation is a pure
function, so instances are safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as _iproduct

import numpy as np

__all__ = [
    "TpsAlgebra",
    "TaylorPoly",
    "RealInterval",
    "algebra",
    "make_variable",
    "constant_poly",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "tan",
    "asin",
    "acos",
    "atan",
    "atan2",
    "sinh",
    "cosh",
    "power",
]

# Coefficients below this are flushed to exact zero on canonicalization.
_FLUSH = 1e-300


def _graded_exponents(v: int, k: int) -> list[tuple[int, ...]]:
    """All exponent tuples of length v with total degree <= k, graded order."""
    exps = [e for e in _iproduct(range(k + 1), repeat=v) if sum(e) <= k]
    exps.sort(key=lambda e: (sum(e), e))
    return exps


class TpsAlgebra:
    """Shared monomial tables for one (num_vars, order) pair.

    Holds the graded monomial enumeration, the truncated multiplication
    table and a predecessor chain used for evaluation and composition.
    """

    def __init__(self, num_vars: int, order: int):
        if num_vars < 1 or order < 1:
            raise ValueError("num_vars and order must be positive")
        self.num_vars = num_vars
        self.order = order
        exps = _graded_exponents(num_vars, order)
        self.size = len(exps)
        self.exps = np.array(exps, dtype=np.int64)
        self.deg = self.exps.sum(axis=1)
        self.index = {tuple(e): i for i, e in enumerate(exps)}

        # multiplication table: all ordered index pairs whose degrees fit
        ia, ib, it = [], [], []
        by_deg: dict[int, list[int]] = {}
        for i, d in enumerate(self.deg):
            by_deg.setdefault(int(d), []).append(i)
        for da in range(order + 1):
            for db in range(order + 1 - da):
                for i in by_deg.get(da, ()):
                    for j in by_deg.get(db, ()):
                        ia.append(i)
                        ib.append(j)
                        it.append(self.index[tuple(self.exps[i] + self.exps[j])])
        self._mul_a = np.array(ia, dtype=np.intp)
        self._mul_b = np.array(ib, dtype=np.intp)
        self._mul_t = np.array(it, dtype=np.intp)

        # predecessor chain: monomial m = predecessor * x_var, for deg >= 1
        pv = np.zeros(self.size, dtype=np.intp)
        pi = np.zeros(self.size, dtype=np.intp)
        for m in range(1, self.size):
            e = list(self.exps[m])
            var = next(j for j in range(num_vars) if e[j] > 0)
            e[var] -= 1
            pv[m] = var
            pi[m] = self.index[tuple(e)]
        self.pred_var = pv
        self.pred_idx = pi

    def mul_coeffs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        p = a[self._mul_a] * b[self._mul_b]
        return np.bincount(self._mul_t, weights=p, minlength=self.size)

    def __repr__(self) -> str:  # pragma: no cover
        return f"TpsAlgebra(v={self.num_vars}, k={self.order})"


@lru_cache(maxsize=None)
def algebra(num_vars: int, order: int) -> TpsAlgebra:
    return TpsAlgebra(num_vars, order)


@dataclass(frozen=True)
class RealInterval:
    """Closed finite interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if self.lo > self.hi:
            raise ValueError(f"empty interval: [{self.lo}, {self.hi}]")

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def hull(self, other: "RealInterval") -> "RealInterval":
        return RealInterval(min(self.lo, other.lo), max(self.hi, other.hi))


class TaylorPoly:
    """Immutable truncated Taylor polynomial over normalized deviations."""

    __slots__ = ("alg", "coeffs")

    def __init__(self, alg: TpsAlgebra, coeffs: np.ndarray):
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (alg.size,):
            raise ValueError("coefficient vector does not match algebra size")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        tiny = np.abs(c) < _FLUSH
        if tiny.any():
            c = np.where(tiny, 0.0, c)
        c.setflags(write=False)
        object.__setattr__(self, "alg", alg)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, *a):  # immutability guard
        raise AttributeError("TaylorPoly is immutable")

    @classmethod
    def _new(cls, alg: TpsAlgebra, coeffs: np.ndarray) -> "TaylorPoly":
        """Internal fast path: takes ownership of a fresh float array and
        skips validation."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "alg", alg)
        object.__setattr__(obj, "coeffs", coeffs)
        return obj

    # -- inspection ----------------------------------------------------
    @property
    def num_vars(self) -> int:
        return self.alg.num_vars

    @property
    def order(self) -> int:
        return self.alg.order

    @property
    def const(self) -> float:
        return float(self.coeffs[0])

    def coefficient(self, exponents: tuple[int, ...]) -> float:
        return float(self.coeffs[self.alg.index[tuple(exponents)]])

    def linear_part(self) -> np.ndarray:
        """Gradient at the origin, one entry per variable."""
        out = np.empty(self.num_vars)
        for j in range(self.num_vars):
            e = [0] * self.num_vars
            e[j] = 1
            out[j] = self.coeffs[self.alg.index[tuple(e)]]
        return out

    def nonconstant(self) -> "TaylorPoly":
        c = self.coeffs.copy()
        c[0] = 0.0
        return TaylorPoly._new(self.alg, c)

    def truncated(self, order: int) -> "TaylorPoly":
        """Drop all terms of total degree above ``order`` (same container)."""
        if order < 0:
            raise ValueError("order must be non-negative")
        c = np.where(self.alg.deg <= order, self.coeffs, 0.0)
        return TaylorPoly._new(self.alg, c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TaylorPoly):
            return NotImplemented
        return self.alg is other.alg and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((id(self.alg), self.coeffs.tobytes()))

    def __repr__(self) -> str:  # pragma: no cover
        terms = []
        for i in np.nonzero(self.coeffs)[0][:8]:
            mono = "".join(
                f"x{j}^{e}" if e > 1 else (f"x{j}" if e == 1 else "")
                for j, e in enumerate(self.alg.exps[i])
            )
            terms.append(f"{self.coeffs[i]:+.6g}{mono}")
        body = " ".join(terms) if terms else "0"
        return f"TaylorPoly(v={self.num_vars}, k={self.order}: {body})"

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other) -> "TaylorPoly | None":
        if isinstance(other, TaylorPoly):
            if other.alg is not self.alg:
                if (other.num_vars, other.order) != (self.num_vars, self.order):
                    raise ValueError(
                        "operands must share (num_vars, order): "
                        f"({self.num_vars},{self.order}) vs "
                        f"({other.num_vars},{other.order})"
                    )
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return None
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            c = self.coeffs.copy()
            c[0] += float(other)
            return TaylorPoly._new(self.alg, c)
        return TaylorPoly._new(self.alg, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return TaylorPoly._new(self.alg, -self.coeffs)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            c = self.coeffs.copy()
            c[0] -= float(other)
            return TaylorPoly._new(self.alg, c)
        return TaylorPoly._new(self.alg, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            return TaylorPoly._new(self.alg, self.coeffs * float(other))
        return TaylorPoly._new(self.alg, self.alg.mul_coeffs(self.coeffs, o.coeffs))

    __rmul__ = __mul__

    def reciprocal(self) -> "TaylorPoly":
        c0 = self.const
        if c0 == 0.0:
            raise ZeroDivisionError("division by polynomial with zero constant part")
        h = self.nonconstant()
        # 1/(c0 + h) via Horner on the geometric series around c0
        k = self.order
        acc = constant_poly(self.alg, (-1.0) ** k / c0 ** (k + 1))
        for n in range(k - 1, -1, -1):
            acc = acc * h + (-1.0) ** n / c0 ** (n + 1)
        return acc

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            return TaylorPoly._new(self.alg, self.coeffs / float(other))
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            result = constant_poly(self.alg, 1.0)
            base = self
            n = int(p)
            while n:
                if n & 1:
                    result = result * base
                base = base * base
                n >>= 1
            return result
        return power(self, float(p))

    # -- evaluation / calculus ------------------------------------------
    def eval(self, point) -> float:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.num_vars,):
            raise ValueError("point length must equal num_vars")
        mono = np.empty(self.alg.size)
        mono[0] = 1.0
        for m in range(1, self.alg.size):
            mono[m] = mono[self.alg.pred_idx[m]] * p[self.alg.pred_var[m]]
        return float(self.coeffs @ mono)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.num_vars:
            raise ValueError("points must have shape (n, num_vars)")
        mono = np.empty((self.alg.size, pts.shape[0]))
        mono[0] = 1.0
        for m in range(1, self.alg.size):
            mono[m] = mono[self.alg.pred_idx[m]] * pts[:, self.alg.pred_var[m]]
        return self.coeffs @ mono

    def __call__(self, point) -> float:
        return self.eval(point)

    def derivative(self, var_index: int) -> "TaylorPoly":
        if not 0 <= var_index < self.num_vars:
            raise IndexError("variable index out of range")
        alg = self.alg
        c = np.zeros(alg.size)
        for m in range(alg.size):
            e = alg.exps[m]
            if e[var_index] > 0:
                src = list(e)
                src[var_index] -= 1
                c[alg.index[tuple(src)]] += e[var_index] * self.coeffs[m]
        return TaylorPoly._new(alg, c)

    def bound(self, box: "list[RealInterval] | None" = None) -> RealInterval:
        """Guaranteed enclosure of the range over the box (default [-1,1]^v).

        Interval arithmetic over monomials: sound but possibly loose.
        """
        alg = self.alg
        if box is None:
            los = -np.ones(alg.num_vars)
            his = np.ones(alg.num_vars)
        else:
            if len(box) != alg.num_vars:
                raise ValueError("box length must equal num_vars")
            los = np.array([b.lo for b in box])
            his = np.array([b.hi for b in box])
        mlo = np.ones(alg.size)
        mhi = np.ones(alg.size)
        for j in range(alg.num_vars):
            # interval powers of variable j, exponent 0..k
            plo = np.empty(alg.order + 1)
            phi = np.empty(alg.order + 1)
            plo[0], phi[0] = 1.0, 1.0
            for e in range(1, alg.order + 1):
                cands = (los[j] ** e, his[j] ** e)
                lo, hi = min(cands), max(cands)
                if e % 2 == 0 and los[j] < 0.0 < his[j]:
                    lo = 0.0
                plo[e], phi[e] = lo, hi
            ej = alg.exps[:, j]
            a, b = mlo.copy(), mhi.copy()
            c, d = plo[ej], phi[ej]
            prods = np.stack([a * c, a * d, b * c, b * d])
            mlo = prods.min(axis=0)
            mhi = prods.max(axis=0)
        tlo = np.where(self.coeffs >= 0, self.coeffs * mlo, self.coeffs * mhi)
        thi = np.where(self.coeffs >= 0, self.coeffs * mhi, self.coeffs * mlo)
        return RealInterval(float(tlo.sum()), float(thi.sum()))


def constant_poly(alg: TpsAlgebra, value: float) -> TaylorPoly:
    c = np.zeros(alg.size)
    c[0] = float(value)
    return TaylorPoly._new(alg, c)


def make_variable(
    constant: float, var_index: int, scale: float, num_vars: int, order: int
) -> TaylorPoly:
    """Affine initialization ``constant + scale * dx[var_index]``."""
    if not 0 <= var_index < num_vars:
        raise IndexError("var_index out of range")
    if not (math.isfinite(constant) and math.isfinite(scale)):
        raise ValueError("non-finite input")
    alg = algebra(num_vars, order)
    c = np.zeros(alg.size)
    c[0] = constant
    e = [0] * num_vars
    e[var_index] = 1
    c[alg.index[tuple(e)]] = scale
    return TaylorPoly(alg, c)


# ---------------------------------------------------------------------------
# elementary functions, generic over float / ndarray / TaylorPoly
# ---------------------------------------------------------------------------


def _horner_series(x: TaylorPoly, derivs: list[float]) -> TaylorPoly:
    """Compose f around the constant part: derivs[n] = f^(n)(c)/n!."""
    h = x.nonconstant()
    acc = constant_poly(x.alg, derivs[-1])
    for n in range(len(derivs) - 2, -1, -1):
        acc = acc * h + derivs[n]
    return acc


def _maclaurin_origin(w: TaylorPoly, coeffs: list[float]) -> TaylorPoly:
    """Series in an origin-preserving argument; exact at truncation order."""
    acc = constant_poly(w.alg, coeffs[-1])
    for n in range(len(coeffs) - 2, -1, -1):
        acc = acc * w + coeffs[n]
    return acc


def exp(x):
    if not isinstance(x, TaylorPoly):
        return np.exp(x)
    e = math.exp(x.const)
    return _horner_series(x, [e / math.factorial(n) for n in range(x.order + 1)])


def log(x):
    if not isinstance(x, TaylorPoly):
        return np.log(x)
    c = x.const
    if c <= 0:
        raise ValueError("log requires positive constant part")
    d = [math.log(c)]
    d += [(-1.0) ** (n - 1) / (n * c**n) for n in range(1, x.order + 1)]
    return _horner_series(x, d)


def sqrt(x):
    if not isinstance(x, TaylorPoly):
        return np.sqrt(x)
    c = x.const
    if c <= 0:
        raise ValueError("sqrt requires positive constant part")
    r = math.sqrt(c)
    d = [r]
    coef = r
    for n in range(1, x.order + 1):
        coef *= (1.5 - n) / n / c
        d.append(coef)
    return _horner_series(x, d)


def power(x, p: float):
    if not isinstance(x, TaylorPoly):
        return np.power(x, p)
    c = x.const
    if c <= 0:
        raise ValueError("power requires positive constant part")
    d = [c**p]
    coef = d[0]
    for n in range(1, x.order + 1):
        coef *= (p - n + 1) / n / c
        d.append(coef)
    return _horner_series(x, d)


def _sincos_derivs(c: float, k: int) -> tuple[list[float], list[float]]:
    s, co = math.sin(c), math.cos(c)
    cycle = [s, co, -s, -co]
    ds = [cycle[n % 4] / math.factorial(n) for n in range(k + 1)]
    dc = [cycle[(n + 1) % 4] / math.factorial(n) for n in range(k + 1)]
    return ds, dc


def sin(x):
    if not isinstance(x, TaylorPoly):
        return np.sin(x)
    ds, _ = _sincos_derivs(x.const, x.order)
    return _horner_series(x, ds)


def cos(x):
    if not isinstance(x, TaylorPoly):
        return np.cos(x)
    _, dc = _sincos_derivs(x.const, x.order)
    return _horner_series(x, dc)


def tan(x):
    if not isinstance(x, TaylorPoly):
        return np.tan(x)
    if abs(math.cos(x.const)) < 1e-12:
        raise ValueError("tan at a pole of the expansion point")
    return sin(x) / cos(x)


def sinh(x):
    if not isinstance(x, TaylorPoly):
        return np.sinh(x)
    sh, ch = math.sinh(x.const), math.cosh(x.const)
    d = [(sh if n % 2 == 0 else ch) / math.factorial(n) for n in range(x.order + 1)]
    return _horner_series(x, d)


def cosh(x):
    if not isinstance(x, TaylorPoly):
        return np.cosh(x)
    sh, ch = math.sinh(x.const), math.cosh(x.const)
    d = [(ch if n % 2 == 0 else sh) / math.factorial(n) for n in range(x.order + 1)]
    return _horner_series(x, d)


def atan(x):
    if not isinstance(x, TaylorPoly):
        return np.arctan(x)
    c = x.const
    h = x.nonconstant()
    # atan(c+h) = atan(c) + atan(w), w = h / (1 + c^2 + c h) origin-preserving
    w = h / (1.0 + c * c + c * h)
    coeffs = [0.0]
    for n in range(1, x.order + 1):
        coeffs.append(0.0 if n % 2 == 0 else (-1.0) ** ((n - 1) // 2) / n)
    return _maclaurin_origin(w, coeffs) + math.atan(c)


def asin(x):
    if not isinstance(x, TaylorPoly):
        return np.arcsin(x)
    if abs(x.const) >= 1.0:
        raise ValueError("asin requires |constant part| < 1")
    return atan(x / sqrt(1.0 - x * x))


def acos(x):
    if not isinstance(x, TaylorPoly):
        return np.arccos(x)
    return math.pi / 2 - asin(x)


def atan2(y, x):
    if not isinstance(y, TaylorPoly) and not isinstance(x, TaylorPoly):
        return np.arctan2(y, x)
    y0 = y.const if isinstance(y, TaylorPoly) else float(y)
    x0 = x.const if isinstance(x, TaylorPoly) else float(x)
    a0 = math.atan2(y0, x0)
    c, s = math.cos(a0), math.sin(a0)
    # rotate by -a0; the rotated abscissa has positive constant part
    u = x * c + y * s
    w = y * c - x * s
    return atan(w / u) + a0
