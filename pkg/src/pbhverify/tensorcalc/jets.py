"""Truncated multivariate Taylor arithmetic (forward-mode jets) over numpy batches.

A jet stores the raw mixed partial derivatives of a smooth quantity through a
fixed total order, indexed by multi-indices over the chart coordinates.  All
arithmetic is exact truncated-Taylor composition, so derivatives of rational
and elementary-function expressions carry no truncation error beyond float64
roundoff.  Coefficient arrays carry arbitrary leading axes (batch of points,
tensor component axes); the multi-index axis is always last.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

__all__ = ["JetSpace", "Jet", "jet_space", "jet_coords", "jet_constant",
           "jmatvec", "jmatmul", "jtranspose", "jet_inv", "jet_solve",
           "jdet", "jtrace"]


@lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> "JetSpace":
    return JetSpace(dim, order)


def _multi_indices(dim, order):
    out = []
    for deg in range(order + 1):
        combos = sorted(itertools.combinations_with_replacement(range(dim), deg))
        for c in combos:
            alpha = [0] * dim
            for i in c:
                alpha[i] += 1
            out.append(tuple(alpha))
    return out


class JetSpace:
    """Precomputed index tables for jets of a given chart dimension and order."""

    def __init__(self, dim: int, order: int):
        self.dim = dim
        self.order = order
        self.multi = _multi_indices(dim, order)
        self.n = len(self.multi)
        self.index = {m: i for i, m in enumerate(self.multi)}
        self.degree = np.array([sum(m) for m in self.multi], dtype=np.int64)
        self._build_product_table()
        self._build_shift_tables()

    def _build_product_table(self):
        # raw-partials Leibniz: (fg)^(gamma) = sum_{alpha+beta=gamma} C(gamma,alpha) f^(a) g^(b)
        rows = []
        for ia, a in enumerate(self.multi):
            for ib, b in enumerate(self.multi):
                if sum(a) + sum(b) > self.order:
                    continue
                g = tuple(x + y for x, y in zip(a, b))
                coef = 1.0
                for x, y in zip(a, b):
                    coef *= math.comb(x + y, x)
                rows.append((self.index[g], ia, ib, coef))
        rows.sort(key=lambda r: r[0])
        self.prod_out = np.array([r[0] for r in rows], dtype=np.int64)
        self.prod_a = np.array([r[1] for r in rows], dtype=np.int64)
        self.prod_b = np.array([r[2] for r in rows], dtype=np.int64)
        self.prod_c = np.array([r[3] for r in rows], dtype=np.float64)
        # reduceat segment starts: every output index appears (gamma = gamma + 0)
        starts = np.searchsorted(self.prod_out, np.arange(self.n))
        self.prod_starts = starts.astype(np.int64)

    def _build_shift_tables(self):
        # (d_i u)^(alpha) = u^(alpha + e_i) for |alpha| <= order-1
        self.shift_src = []
        self.shift_dst = []
        for i in range(self.dim):
            src, dst = [], []
            for ia, a in enumerate(self.multi):
                if sum(a) >= self.order:
                    continue
                up = list(a)
                up[i] += 1
                src.append(self.index[tuple(up)])
                dst.append(ia)
            self.shift_src.append(np.array(src, dtype=np.int64))
            self.shift_dst.append(np.array(dst, dtype=np.int64))


def _as_coeffs(space, x, dtype=None):
    x = np.asarray(x)
    if dtype is None:
        dtype = x.dtype if x.dtype.kind in "fc" else np.float64
    c = np.zeros(x.shape + (space.n,), dtype=dtype)
    c[..., 0] = x
    return c


class Jet:
    """Batched jet: coefficient array of shape (..., space.n).

    ``order`` tracks how many derivative orders are still valid; coefficients
    of higher degree are kept identically zero and must not be read.
    """

    __slots__ = ("space", "c", "order")

    def __init__(self, space: JetSpace, c: np.ndarray, order: int | None = None):
        self.space = space
        self.c = c
        self.order = space.order if order is None else order

    # -- constructors -------------------------------------------------------

    @staticmethod
    def constant(space, values, order=None, dtype=None):
        return Jet(space, _as_coeffs(space, values, dtype=dtype), order)

    # -- basic views --------------------------------------------------------

    @property
    def value(self):
        return self.c[..., 0]

    @property
    def shape(self):
        return self.c.shape[:-1]

    def partials(self, alpha):
        """Raw partial for a multi-index tuple (testing aid)."""
        if sum(alpha) > self.order:
            raise ValueError("partial order exceeds jet validity")
        return self.c[..., self.space.index[tuple(alpha)]]

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.space, self.c[idx + (slice(None),)], self.order)

    def reshape(self, *shape):
        return Jet(self.space, self.c.reshape(tuple(shape) + (self.space.n,)), self.order)

    def copy(self):
        return Jet(self.space, self.c.copy(), self.order)

    def astype(self, dtype):
        return Jet(self.space, self.c.astype(dtype), self.order)

    # -- ring operations ----------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces")
            return other
        return Jet.constant(self.space, other)

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(self.space, self.c + o.c, min(self.order, o.order))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet(self.space, self.c - o.c, min(self.order, o.order))

    def __rsub__(self, other):
        o = self._coerce(other)
        return Jet(self.space, o.c - self.c, min(self.order, o.order))

    def __neg__(self):
        return Jet(self.space, -self.c, self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c * np.asarray(other)[..., None], self.order)
        o = other
        if o.space is not self.space:
            raise ValueError("jets from different spaces")
        sp = self.space
        prod = self.c[..., sp.prod_a] * o.c[..., sp.prod_b]
        prod = prod * sp.prod_c
        out = np.add.reduceat(prod, sp.prod_starts, axis=-1)
        return Jet(sp, out, min(self.order, o.order))

    def __rmul__(self, other):
        return Jet(self.space, self.c * np.asarray(other)[..., None], self.order)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c / np.asarray(other)[..., None], self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        if k == 0:
            return Jet.constant(self.space, np.ones(self.shape, dtype=self.c.dtype), self.order)
        out = self
        for _ in range(k - 1):
            out = out * self
        return out

    # -- calculus -----------------------------------------------------------

    def partial(self, i: int):
        """Jet of the i-th coordinate derivative; drops one valid order."""
        if self.order < 1:
            raise ValueError("jet order exhausted; cannot differentiate")
        sp = self.space
        out = np.zeros_like(self.c)
        out[..., sp.shift_dst[i]] = self.c[..., sp.shift_src[i]]
        return Jet(sp, out, self.order - 1)

    # -- analytic functions via Taylor composition --------------------------

    def _compose(self, derivs):
        """sum_m derivs[m]/m! * (self - value)^m, truncated at self.order."""
        sp = self.space
        du = self.c.copy()
        du[..., 0] = 0
        dtype = np.result_type(self.c.dtype, derivs[0].dtype)
        out = np.zeros(self.shape + (sp.n,), dtype=dtype)
        out[..., 0] = derivs[0]
        term = Jet(sp, du, self.order)
        fact = 1.0
        power = term
        for m in range(1, min(self.order, len(derivs) - 1) + 1):
            fact *= m
            out = out + power.c * (derivs[m] / fact)[..., None]
            if m < self.order:
                power = power * term
        return Jet(sp, out, self.order)

    def reciprocal(self):
        v = self.value
        d = [1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4, 24.0 / v**5]
        return self._compose([np.asarray(x) for x in d[: self.order + 1]])

    def sqrt(self):
        r = np.sqrt(self.value)
        d = [r, 0.5 / r, -0.25 / r**3, 0.375 / r**5, -0.9375 / r**7]
        return self._compose([np.asarray(x) for x in d[: self.order + 1]])

    def exp(self):
        e = np.exp(self.value)
        return self._compose([e] * (self.order + 1))

    def log(self):
        v = self.value
        d = [np.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4]
        return self._compose([np.asarray(x) for x in d[: self.order + 1]])

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._compose([s, c, -s, -c, s][: self.order + 1])

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._compose([c, -s, -c, s, c][: self.order + 1])

    # -- complex helpers ----------------------------------------------------

    def conj(self):
        return Jet(self.space, np.conj(self.c), self.order)

    @property
    def real(self):
        return Jet(self.space, self.c.real.copy(), self.order)

    @property
    def imag(self):
        return Jet(self.space, self.c.imag.copy(), self.order)

    # -- reductions over component axes -------------------------------------

    def sum(self, axis: int):
        """Sum over a component axis (negative axes count from the
        coefficient axis, so -1 is the last component axis)."""
        ax = axis - 1 if axis < 0 else axis
        return Jet(self.space, self.c.sum(axis=ax), self.order)


def jet_coords(dim: int, order: int, points: np.ndarray) -> Jet:
    """Coordinate jets at a batch of points: shape (B, dim) -> Jet (B, dim)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"expected points of shape (B, {dim})")
    sp = jet_space(dim, order)
    c = np.zeros((pts.shape[0], dim, sp.n))
    c[..., 0] = pts
    if order >= 1:
        for i in range(dim):
            c[:, i, sp.index[tuple(1 if j == i else 0 for j in range(dim))]] = 1.0
    return Jet(sp, c)


def jet_constant(space: JetSpace, values, order=None) -> Jet:
    return Jet.constant(space, values, order)


# -- jet linear algebra (component axes are the trailing non-coefficient axes)


def jtranspose(a: Jet) -> Jet:
    return Jet(a.space, np.swapaxes(a.c, -2, -3), a.order)


def jmatvec(a: Jet, v: Jet) -> Jet:
    """(..., m, k) @ (..., k) -> (..., m)."""
    k = v.c.shape[-2]
    out = None
    for j in range(k):
        vj = Jet(v.space, v.c[..., j, :][..., None, :], v.order)
        t = a[..., :, j] * vj
        out = t if out is None else out + t
    return out


def jmatmul(a: Jet, b: Jet) -> Jet:
    """(..., m, k) @ (..., k, p) -> (..., m, p)."""
    k = a.c.shape[-2]
    out = None
    for j in range(k):
        ta = Jet(a.space, a.c[..., :, j, :][..., :, None, :], a.order)
        tb = Jet(b.space, b.c[..., j, :, :][..., None, :, :], b.order)
        t = ta * tb
        out = t if out is None else out + t
    return out


def jtrace(a: Jet) -> Jet:
    d = a.c.shape[-2]
    out = a[..., 0, 0]
    for i in range(1, d):
        out = out + a[..., i, i]
    return out


def jet_inv(m: Jet) -> Jet:
    """Inverse of a batched square jet matrix via the exactly-truncated
    Neumann series around the value part (valid whenever the value part is
    invertible)."""
    sp = m.space
    d = m.c.shape[-2]
    m0 = m.value
    m0inv = np.linalg.inv(m0)
    m0inv_j = Jet.constant(sp, m0inv, m.order)
    pert = m.c.copy()
    pert[..., 0] = 0
    e = jmatmul(m0inv_j, Jet(sp, pert, m.order))  # nilpotent: value part zero
    eye = Jet.constant(sp, np.broadcast_to(np.eye(d), m0.shape).copy(), m.order)
    acc = eye
    term = eye
    for k in range(1, m.order + 1):
        term = jmatmul(term, e)
        acc = acc + term * ((-1.0) ** k)
    return jmatmul(acc, m0inv_j)


def jet_solve(a: Jet, b: Jet) -> Jet:
    """Solve a @ x = b for jet matrices/vectors (b: (..., k) or (..., k, p))."""
    inv = jet_inv(a)
    if b.c.ndim == a.c.ndim:
        return jmatmul(inv, b)
    return jmatvec(inv, b)


def jdet(m: Jet) -> Jet:
    """Determinant by Leibniz expansion; intended for k <= 4 minors."""
    d = m.c.shape[-2]
    out = None
    for perm in itertools.permutations(range(d)):
        sign = _perm_sign(perm)
        term = m[..., 0, perm[0]]
        for i in range(1, d):
            term = term * m[..., i, perm[i]]
        term = term * float(sign)
        out = term if out is None else out + term
    return out


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, clen = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign
