"""Exterior calculus, Lie brackets and complex-coordinate helpers on jets.

Conventions (determinant normalization):
  (dx_i ^ dx_j)(e_i, e_j) = 1
  form components are stored on sorted index combinations,
  omega[c] = omega(e_{c_0}, ..., e_{c_{k-1}}).
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .fields import Field, form_field, oneform_field, scalar_field, vector_field
from .jets import Jet, jet_inv, jmatvec, jdet

__all__ = ["form_combos", "combo_index", "exterior_derivative", "wedge",
           "interior_product", "pullback_linear", "lie_bracket",
           "lie_derivative_form", "d_scalar", "sharp", "flat",
           "form_full_matrix", "form_from_matrix", "evaluate_form",
           "wirtinger_d", "wirtinger_dbar", "nijenhuis_tensor"]


@lru_cache(maxsize=None)
def form_combos(dim: int, k: int):
    return tuple(itertools.combinations(range(dim), k))


@lru_cache(maxsize=None)
def combo_index(dim: int, k: int):
    return {c: i for i, c in enumerate(form_combos(dim, k))}


def _insertion_sign(i, combo):
    """Sign of inserting index i into sorted combo (i not in combo)."""
    pos = sum(1 for j in combo if j < i)
    return -1.0 if pos % 2 else 1.0


@lru_cache(maxsize=None)
def _d_table(dim: int, k: int):
    """Rows (out_idx, src_idx, coord, sign) for the exterior derivative."""
    rows = []
    idx_k = combo_index(dim, k)
    for o, c in enumerate(form_combos(dim, k + 1)):
        for m, i in enumerate(c):
            rest = tuple(j for j in c if j != i)
            rows.append((o, idx_k[rest], i, (-1.0) ** m))
    return rows


@lru_cache(maxsize=None)
def _wedge_table(dim: int, k: int, l: int):
    """Rows (out_idx, a_idx, b_idx, sign): shuffle expansion of the wedge."""
    rows = []
    idx_a = combo_index(dim, k)
    idx_b = combo_index(dim, l)
    for o, c in enumerate(form_combos(dim, k + l)):
        for sub in itertools.combinations(range(k + l), k):
            a = tuple(c[i] for i in sub)
            b = tuple(c[i] for i in range(k + l) if i not in sub)
            perm = list(sub) + [i for i in range(k + l) if i not in sub]
            sign = _perm_sign_list(perm)
            rows.append((o, idx_a[a], idx_b[b], float(sign)))
    return rows


def _perm_sign_list(perm):
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _check_chart(*fields):
    chart = fields[0].chart
    for f in fields[1:]:
        if f.chart is not chart:
            raise ValueError("fields live on different charts")
    return chart


def _stack(jets):
    """Stack scalar jets (B,) into a component jet (B, m)."""
    space = jets[0].space
    order = min(j.order for j in jets)
    c = np.stack([j.c for j in jets], axis=1)
    return Jet(space, c, order)


def exterior_derivative(omega: Field) -> Field:
    chart = omega.chart
    k = omega.degree
    if omega.kind == "scalar":
        return d_scalar(omega)
    if k >= chart.dim:
        from .fields import zero_form
        return zero_form(chart, min(k + 1, chart.dim))
    table = _d_table(chart.dim, k)
    nout = len(form_combos(chart.dim, k + 1))

    def fn(jc):
        w = omega.fn(jc)
        parts = [None] * nout
        for o, src, i, sign in table:
            term = w[:, src].partial(i) * sign
            parts[o] = term if parts[o] is None else parts[o] + term
        return _stack(parts)

    return form_field(chart, k + 1, fn, cost=omega.cost + 1)


def d_scalar(f: Field) -> Field:
    chart = f.chart

    def fn(jc):
        s = f.fn(jc)
        return _stack([s.partial(i) for i in range(chart.dim)])

    return oneform_field(chart, fn, cost=f.cost + 1)


def wedge(a: Field, b: Field) -> Field:
    chart = _check_chart(a, b)
    k = a.degree if a.kind != "oneform" else 1
    l = b.degree if b.kind != "oneform" else 1
    if k + l > chart.dim:
        from .fields import zero_form
        return zero_form(chart, chart.dim)
    table = _wedge_table(chart.dim, k, l)
    nout = len(form_combos(chart.dim, k + l))

    def fn(jc):
        wa = a.fn(jc)
        wb = b.fn(jc)
        parts = [None] * nout
        for o, ia, ib, sign in table:
            term = wa[:, ia] * wb[:, ib] * sign
            parts[o] = term if parts[o] is None else parts[o] + term
        return _stack(parts)

    return form_field(chart, k + l, fn, cost=max(a.cost, b.cost))


def interior_product(x: Field, omega: Field) -> Field:
    chart = _check_chart(x, omega)
    k = omega.degree
    if k == 0:
        raise ValueError("cannot contract into a 0-form")
    combos_out = form_combos(chart.dim, k - 1)
    idx_k = combo_index(chart.dim, k)

    def fn(jc):
        xv = x.fn(jc)
        w = omega.fn(jc)
        parts = []
        for cj in combos_out:
            term = None
            for i in range(chart.dim):
                if i in cj:
                    continue
                full = tuple(sorted((i,) + cj))
                sgn = _insertion_sign(i, cj)
                t = xv[:, i] * w[:, idx_k[full]] * sgn
                term = t if term is None else term + t
            parts.append(term)
        return _stack(parts)

    out_kind = "scalar" if k == 1 else "form"
    if k == 1:
        return scalar_field(chart, lambda jc: fn(jc)[:, 0], cost=max(x.cost, omega.cost))
    return form_field(chart, k - 1, fn, cost=max(x.cost, omega.cost))


def pullback_linear(a: Field, omega: Field) -> Field:
    """(A* omega)(X_1..X_k) = omega(A X_1, ..., A X_k) for an endo field A."""
    chart = _check_chart(a, omega)
    k = omega.degree
    combos = form_combos(chart.dim, k)

    def fn(jc):
        av = a.fn(jc)
        w = omega.fn(jc)
        parts = []
        for c in combos:
            term = None
            for ci, cp in enumerate(combos):
                # minor rows cp, columns c
                rows = np.array(cp)
                cols = np.array(c)
                minor = av[:, rows][:, :, cols]
                t = w[:, ci] * jdet(minor)
                term = t if term is None else term + t
            parts.append(term)
        return _stack(parts)

    return form_field(chart, k, fn, cost=max(a.cost, omega.cost))


def evaluate_form(omega_jet: Jet, vectors, dim: int, k: int) -> Jet:
    """Evaluate form components (B, ncomb) on k vector jets (each (B, d))."""
    combos = form_combos(dim, k)
    vstack = Jet(vectors[0].space,
                 np.stack([v.c for v in vectors], axis=2),
                 min(v.order for v in vectors))  # (B, d, k)
    out = None
    for ci, c in enumerate(combos):
        rows = np.array(c)
        minor = vstack[:, rows]  # (B, k, k)
        t = omega_jet[:, ci] * jdet(minor)
        out = t if out is None else out + t
    return out


def form_full_matrix(omega_jet: Jet, dim: int) -> Jet:
    """2-form combo components (B, C(d,2)) -> full antisymmetric (B, d, d)."""
    combos = form_combos(dim, 2)
    b = omega_jet.c.shape[0]
    c = np.zeros((b, dim, dim, omega_jet.space.n), dtype=omega_jet.c.dtype)
    for ci, (i, j) in enumerate(combos):
        c[:, i, j] = omega_jet.c[:, ci]
        c[:, j, i] = -omega_jet.c[:, ci]
    return Jet(omega_jet.space, c, omega_jet.order)


def form_from_matrix(m_jet: Jet, dim: int) -> Jet:
    combos = form_combos(dim, 2)
    cols = [m_jet[:, i, j] for (i, j) in combos]
    return _stack(cols)


def lie_bracket(x: Field, y: Field) -> Field:
    """[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i."""
    chart = _check_chart(x, y)

    def fn(jc):
        xv = x.fn(jc)
        yv = y.fn(jc)
        comps = []
        for i in range(chart.dim):
            term = None
            for j in range(chart.dim):
                t = xv[:, j] * yv[:, i].partial(j) - yv[:, j] * xv[:, i].partial(j)
                term = t if term is None else term + t
            comps.append(term)
        return _stack(comps)

    return vector_field(chart, fn, cost=max(x.cost, y.cost) + 1)


def lie_derivative_form(x: Field, omega: Field) -> Field:
    """Cartan: L_X omega = i_X d omega + d(i_X omega)."""
    k = omega.degree
    term1 = interior_product(x, exterior_derivative(omega))
    inner = interior_product(x, omega)
    term2 = exterior_derivative(inner) if k >= 1 else None
    if term2 is None:
        return term1
    return term1 + term2


def sharp(g: Field, theta: Field) -> Field:
    """g-dual vector of a 1-form."""
    chart = _check_chart(g, theta)

    def fn(jc):
        gm = g.fn(jc)
        th = theta.fn(jc)
        return jmatvec(jet_inv(gm), th)

    return vector_field(chart, fn, cost=max(g.cost, theta.cost))


def flat(g: Field, x: Field) -> Field:
    chart = _check_chart(g, x)

    def fn(jc):
        return jmatvec(g.fn(jc), x.fn(jc))

    return oneform_field(chart, fn, cost=max(g.cost, x.cost))


# -- complex-coordinate (Wirtinger) helpers ---------------------------------
# Real chart coordinates are ordered (Re z_1, Im z_1, Re z_2, Im z_2, ...).


def wirtinger_d(scalar_jet: Jet, alpha: int) -> Jet:
    """d/dz_alpha = (d/da - i d/db)/2 on a scalar jet."""
    return (scalar_jet.partial(2 * alpha) - scalar_jet.partial(2 * alpha + 1) * 1j) * 0.5


def wirtinger_dbar(scalar_jet: Jet, alpha: int) -> Jet:
    """d/dzbar_alpha = (d/da + i d/db)/2 on a scalar jet."""
    return (scalar_jet.partial(2 * alpha) + scalar_jet.partial(2 * alpha + 1) * 1j) * 0.5


def nijenhuis_tensor(j_endo: Field) -> Field:
    """N(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] + J^2 [X, Y] on coordinate
    frame pairs (i < j); output components (B, d, npairs)."""
    chart = j_endo.chart
    d = chart.dim
    pairs = form_combos(d, 2)

    def fn(jc):
        jv = j_endo.fn(jc)
        jsq = _jet_matmul_square(jv)
        # brackets of coordinate fields vanish; [Je_i, Je_j] etc. via jets
        cols = []
        for (i, jx) in pairs:
            ji = jv[:, :, i]       # J e_i components (B, d)
            jj = jv[:, :, jx]
            br_jj = _bracket_comp(ji, jj, d)          # [Je_i, Je_j]
            br_j_ej = _bracket_comp(ji, None, d, jx)  # [Je_i, e_j]
            br_ei_j = _bracket_comp(None, jj, d, i)   # [e_i, Je_j]
            term = br_jj - jmatvec(jv, br_j_ej) - jmatvec(jv, br_ei_j)
            # + J^2 [e_i, e_j] = 0 for coordinate fields
            cols.append(term)
        space = cols[0].space
        c = np.stack([t.c for t in cols], axis=2)  # (B, d, npairs, n)
        return Jet(space, c, min(t.order for t in cols))

    return Field(chart, "tensor", fn, cost=j_endo.cost + 1)


def _jet_matmul_square(jv):
    from .jets import jmatmul
    return jmatmul(jv, jv)


def _bracket_comp(xv, yv, d, coord=None):
    """Bracket of two vector jets given componentwise; if one argument is a
    coordinate field e_{coord}, pass None for it."""
    comps = []
    for i in range(d):
        term = None
        if xv is not None and yv is not None:
            for j in range(d):
                t = xv[:, j] * yv[:, i].partial(j) - yv[:, j] * xv[:, i].partial(j)
                term = t if term is None else term + t
        elif yv is None:
            # [X, e_coord] = -d_coord X
            term = -xv[:, i].partial(coord)
        else:
            # [e_coord, Y] = d_coord Y
            term = yv[:, i].partial(coord)
        comps.append(term)
    return _stack(comps)
