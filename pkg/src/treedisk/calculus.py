"""Calculus of piecewise-polynomial functions on finite weighted trees.

A TreeFunction stores one polynomial per edge in the local coordinate
x = t - (L_{n,k} - ell_{n,k}) in [0, ell_{n,k}], i.e. x measures arclength
from the parent-side vertex.  All integrals against the weighted measure
d mu = omega_e dx are evaluated in closed form, so norms, the Green
identity and the orthogonal splitting hold to rounding error for
polynomial data.

The weighted Laplacian acts edgewise as f'' ; membership in its L^2 domain
additionally requires continuity and the Kirchhoff flux balance

    omega_{n,k} f'_{n,k}(ell-) = sum_j omega_{n+1,pk+j} f'_{n+1,pk+j}(0+)

at every interior vertex.  Harmonic and Poisson solves reduce to clamped
weighted graph-Laplacian systems with conductances omega_e / ell_e, solved
by a direct sparse factorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import DepthMismatch, KirchhoffViolated, NotGeometric, SingularSystem
from .tree import CondensedTree, FiniteTree, TreeParams, build_condensed, build_truncated, require_valid

# ---------------------------------------------------------------------------
# small dense polynomial helpers (rows = edges, columns = ascending coeffs)


def _pad(c, q):
    if c.shape[1] >= q:
        return c
    out = np.zeros((c.shape[0], q), dtype=c.dtype)
    out[:, : c.shape[1]] = c
    return out


def _poly_eval(c, x):
    """Evaluate each row polynomial at its own abscissa x (array)."""
    val = np.zeros(c.shape[0], dtype=np.result_type(c.dtype, np.asarray(x).dtype))
    for j in range(c.shape[1] - 1, -1, -1):
        val = val * x + c[:, j]
    return val

def _poly_der(c):
    if c.shape[1] == 1:
        return np.zeros_like(c[:, :1])
    return c[:, 1:] * np.arange(1, c.shape[1])


def _poly_antider(c):
    out = np.zeros((c.shape[0], c.shape[1] + 1), dtype=c.dtype)
    out[:, 1:] = c / np.arange(1, c.shape[1] + 1)
    return out


def _poly_defint(c, lengths):
    """Integral over [0, ell] per row."""
    val = np.zeros(c.shape[0], dtype=c.dtype)
    x = np.asarray(lengths)
    for j in range(c.shape[1] - 1, -1, -1):
        val = (val + c[:, j] / (j + 1)) * x
    return val


def _poly_mul(c1, c2):
    out = np.zeros((c1.shape[0], c1.shape[1] + c2.shape[1] - 1), dtype=np.result_type(c1.dtype, c2.dtype))
    for i in range(c1.shape[1]):
        for j in range(c2.shape[1]):
            out[:, i + j] += c1[:, i] * c2[:, j]
    return out


class TreeFunction:
    """Piecewise-polynomial function on a finite tree.

    coeffs[n] has shape (p^n, q_n + 1); ascending powers of the local
    coordinate on each edge.
    """

    def __init__(self, tree: FiniteTree, coeffs):
        if len(coeffs) != tree.depth + 1:
            raise DepthMismatch("expected %d generations of coefficients, got %d" % (tree.depth + 1, len(coeffs)))
        self.tree = tree
        self.coeffs = [np.atleast_2d(np.asarray(c)) for c in coeffs]
        for n, c in enumerate(self.coeffs):
            if c.shape[0] != tree.p**n:
                raise DepthMismatch("generation %d needs %d rows, got %d" % (n, tree.p**n, c.shape[0]))

    @property
    def degree(self) -> int:
        return max(c.shape[1] - 1 for c in self.coeffs)

    @property
    def root_value(self):
        return self.coeffs[0][0, 0]

    def start_values(self, n):
        return self.coeffs[n][:, 0]

    def end_values(self, n):
        return _poly_eval(self.coeffs[n], self.tree.lengths[n])

    def vertex_values(self):
        """Values at X_{n,k} (far vertex of each edge), per generation."""
        return [self.end_values(n) for n in range(self.tree.depth + 1)]

    def leaf_values(self):
        return self.end_values(self.tree.depth)

    def eval_edge(self, n, k, x):
        c = self.coeffs[n][k]
        val = np.zeros_like(np.asarray(x, dtype=np.result_type(c.dtype, float)))
        for j in range(c.shape[0] - 1, -1, -1):
            val = val * x + c[j]
        return val

    def derivative(self) -> "TreeFunction":
        return TreeFunction(self.tree, [_poly_der(c) for c in self.coeffs])

    def continuity_defect(self) -> float:
        """Max jump across interior vertices (roots excluded: no constraint at o)."""
        worst = 0.0
        p = self.tree.p
        for n in range(self.tree.depth):
            ends = self.end_values(n)
            starts = self.start_values(n + 1)
            jump = np.abs(starts - np.repeat(ends, p))
            if jump.size:
                worst = max(worst, float(jump.max()))
        return worst

    def _binary(self, other, sign):
        cs = []
        for n in range(self.tree.depth + 1):
            q = max(self.coeffs[n].shape[1], other.coeffs[n].shape[1])
            cs.append(_pad(self.coeffs[n], q) + sign * _pad(other.coeffs[n], q))
        return TreeFunction(self.tree, cs)

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __mul__(self, scalar):
        return TreeFunction(self.tree, [c * scalar for c in self.coeffs])

    __rmul__ = __mul__


def constant_function(tree: FiniteTree, value=1.0) -> TreeFunction:
    return TreeFunction(tree, [np.full((tree.p**n, 1), value) for n in range(tree.depth + 1)])


def from_vertex_values(tree: FiniteTree, root_value, vertex_values) -> TreeFunction:
    """Piecewise-linear interpolant of prescribed vertex values.

    vertex_values[n][k] is the value at X_{n,k}; the value at o is root_value.
    """
    coeffs = []
    for n in range(tree.depth + 1):
        if n == 0:
            a = np.full(1, root_value, dtype=np.result_type(np.asarray(root_value).dtype, float))
        else:
            a = np.asarray(vertex_values[n - 1])[np.arange(tree.p**n) // tree.p]
        b = np.asarray(vertex_values[n])
        dtype = np.result_type(a.dtype, b.dtype, float)
        c = np.zeros((tree.p**n, 2), dtype=dtype)
        c[:, 0] = a
        c[:, 1] = (b - a) / tree.lengths[n]
        coeffs.append(c)
    return TreeFunction(tree, coeffs)


# ---------------------------------------------------------------------------
# norms and pairings


def l2_inner(f: TreeFunction, g: TreeFunction):
    """Weighted L^2 inner product, conjugating the second argument."""
    _same_tree(f, g)
    acc = 0.0
    for n in range(f.tree.depth + 1):
        prod = _poly_mul(f.coeffs[n], np.conj(g.coeffs[n]))
        acc = acc + (f.tree.weights[n] * _poly_defint(prod, f.tree.lengths[n])).sum()
    return acc


def l2_norm(f: TreeFunction) -> float:
    return math.sqrt(max(float(np.real(l2_inner(f, f))), 0.0))


def h1_inner(f: TreeFunction, g: TreeFunction):
    return l2_inner(f.derivative(), g.derivative())


def h1_seminorm(f: TreeFunction) -> float:
    return l2_norm(f.derivative())


def _same_tree(f, g):
    if f.tree is not g.tree and (f.tree.depth != g.tree.depth or f.tree.p != g.tree.p):
        raise DepthMismatch("functions live on different trees")


# ---------------------------------------------------------------------------
# Laplacian, Kirchhoff residual, traces


@dataclass
class KirchhoffResidual:
    """Flux imbalance at interior vertices X_{n,k}, n < depth."""

    values: list
    scale: float

    @property
    def max_abs(self) -> float:
        return max((float(np.abs(v).max()) for v in self.values if v.size), default=0.0)

    @property
    def relative(self) -> float:
        return self.max_abs / max(self.scale, 1e-300)


def kirchhoff_residual(f: TreeFunction) -> KirchhoffResidual:
    tree = f.tree
    p = tree.p
    der = f.derivative()
    values = []
    scale = 0.0
    for n in range(tree.depth):
        out_flux = tree.weights[n] * der.end_values(n)
        in_flux = tree.weights[n + 1] * der.start_values(n + 1)
        in_sum = in_flux.reshape(-1, p).sum(axis=1)
        values.append(out_flux - in_sum)
        mags = np.abs(out_flux) + np.abs(in_flux).reshape(-1, p).sum(axis=1)
        if mags.size:
            scale = max(scale, float(mags.max()))
    return KirchhoffResidual(values=values, scale=scale)


def laplacian(f: TreeFunction):
    """Edgewise second derivative together with the Kirchhoff residual report."""
    lap = TreeFunction(f.tree, [_poly_der(_poly_der(c)) for c in f.coeffs])
    return lap, kirchhoff_residual(f)


def leaf_flux(f: TreeFunction) -> np.ndarray:
    """omega_{N,K} * f'_{N,K}(ell-) at every leaf edge.

    Dividing by the boundary cell measures |Gamma_{N,K}| turns this into
    the distributional normal-derivative trace density.
    """
    der = f.derivative()
    return f.tree.weights[f.tree.depth] * der.end_values(f.tree.depth)


@dataclass
class GreenReport:
    defect: float
    scale: float

    @property
    def relative(self) -> float:
        return self.defect / max(self.scale, 1e-300)


def green_identity_check(u: TreeFunction, v: TreeFunction) -> GreenReport:
    """Defect of (gamma1 u, gamma0 v) = int (Lap u) v dmu + int u' v' dmu.

    The boundary pairing reduces to sum_K omega_K u'_K(ell) v(X_K) over the
    leaves (the cell measures cancel between the density and the pairing).
    Requires v(o) = 0; u should satisfy Kirchhoff for the identity to hold.
    """
    _same_tree(u, v)
    vmax = max(float(np.abs(c).max()) for c in v.coeffs)
    if abs(v.root_value) > 1e-10 * max(vmax, 1.0):
        raise ValueError("green_identity_check requires v(o) = 0, got %r" % (v.root_value,))
    pairing = (leaf_flux(u) * v.leaf_values()).sum()
    lap, _ = laplacian(u)
    du, dv = u.derivative(), v.derivative()
    bulk = 0.0
    grad = 0.0
    for n in range(u.tree.depth + 1):
        w, ln = u.tree.weights[n], u.tree.lengths[n]
        bulk = bulk + (w * _poly_defint(_poly_mul(lap.coeffs[n], v.coeffs[n]), ln)).sum()
        grad = grad + (w * _poly_defint(_poly_mul(du.coeffs[n], dv.coeffs[n]), ln)).sum()
    defect = abs(pairing - bulk - grad)
    scale = abs(pairing) + abs(bulk) + abs(grad)
    return GreenReport(defect=float(defect), scale=float(scale))


# ---------------------------------------------------------------------------
# clamped graph-Laplacian solves


def _vertex_offsets(tree: FiniteTree):
    offsets = [0]
    for n in range(tree.depth + 1):
        offsets.append(offsets[-1] + tree.p**n)
    return offsets


def _graph_system(tree: FiniteTree):
    """Weighted graph Laplacian over all vertices X_{n,k} (root clamped out).

    Returns (Q, offsets) with Q in CSR; conductances omega_e / ell_e.
    """
    p = tree.p
    offsets = _vertex_offsets(tree)
    nv = offsets[-1]
    rows, cols, vals = [], [], []
    for n in range(tree.depth + 1):
        c = tree.weights[n] / tree.lengths[n]
        idx = offsets[n] + np.arange(p**n)
        rows.append(idx)
        cols.append(idx)
        vals.append(c)
        if n > 0:
            par = offsets[n - 1] + np.arange(p**n) // p
            rows += [par, par, idx]
            cols += [par, idx, par]
            vals += [c, -c, -c]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    Q = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(nv, nv))
    return Q, offsets


def _solve_sparse(lu, b):
    if np.iscomplexobj(b):
        return lu.solve(b.real.copy()) + 1j * lu.solve(b.imag.copy())
    return lu.solve(b)


def _split_interior_boundary(tree: FiniteTree):
    offsets = _vertex_offsets(tree)
    interior = np.arange(offsets[tree.depth])
    boundary = offsets[tree.depth] + np.arange(tree.n_leaves)
    return offsets, interior, boundary


def interior_factorization(tree: FiniteTree):
    """LU factorization of the interior block of the clamped graph Laplacian."""
    Q, offsets = _graph_system(tree)
    _, interior, boundary = _split_interior_boundary(tree)
    Q_ii = Q[interior][:, interior].tocsc()
    Q_ib = Q[interior][:, boundary].tocsc()
    Q_bi = Q[boundary][:, interior].tocsc()
    Q_bb = Q[boundary][:, boundary].tocsc()
    lu = scipy.sparse.linalg.splu(Q_ii) if interior.size else None
    return {"lu": lu, "Q_ib": Q_ib, "Q_bi": Q_bi, "Q_bb": Q_bb, "offsets": offsets}


def solve_harmonic_dirichlet(tree: FiniteTree, leaf_values, root_value=0.0, factor=None) -> TreeFunction:
    """Edgewise-linear function, harmonic off the vertices, with prescribed
    leaf values and root value; Kirchhoff holds at interior vertices."""
    leaf_values = np.asarray(leaf_values)
    if leaf_values.shape != (tree.n_leaves,):
        raise DepthMismatch("expected %d leaf values, got shape %r" % (tree.n_leaves, leaf_values.shape))
    fac = factor if factor is not None else interior_factorization(tree)
    dtype = np.result_type(leaf_values.dtype, type(root_value), float)
    n_int = fac["Q_ib"].shape[0]
    if n_int:
        b = -(fac["Q_ib"] @ leaf_values).astype(dtype)
        b[0] = b[0] + (tree.weights[0][0] / tree.lengths[0][0]) * root_value
        u_int = _solve_sparse(fac["lu"], b)
    else:
        u_int = np.zeros(0, dtype=dtype)
    values = []
    offsets = fac["offsets"]
    for n in range(tree.depth):
        values.append(u_int[offsets[n] : offsets[n + 1]])
    values.append(leaf_values.astype(dtype))
    return from_vertex_values(tree, root_value, values)


def solve_poisson_zero_trace(tree: FiniteTree, source: TreeFunction, factor=None) -> TreeFunction:
    """Solve Lap u = source edgewise with u(o) = 0 and zero leaf values.

    Zero traces at both ends approximate the homogeneous-boundary space of
    the infinite tree; the particular parts are exact edge antiderivatives,
    the vertex values solve the clamped graph system.
    """
    if source.tree is not tree:
        _same_tree(source, constant_function(tree, 0.0))
    p = tree.p
    w_parts = [_poly_antider(_poly_antider(c)) for c in source.coeffs]
    w_end = [_poly_eval(w_parts[n], tree.lengths[n]) for n in range(tree.depth + 1)]
    wder_end = [_poly_eval(_poly_der(w_parts[n]), tree.lengths[n]) for n in range(tree.depth + 1)]

    fac = factor if factor is not None else interior_factorization(tree)
    offsets = fac["offsets"]
    n_int = offsets[tree.depth]
    dtype = np.result_type(*(c.dtype for c in source.coeffs), float)
    rhs = np.zeros(n_int, dtype=dtype)
    for n in range(tree.depth):
        idx = offsets[n] + np.arange(p**n)
        cond = tree.weights[n] / tree.lengths[n]
        rhs[idx] += -tree.weights[n] * wder_end[n] + cond * w_end[n]
        cond_ch = tree.weights[n + 1] / tree.lengths[n + 1]
        rhs[idx] -= (cond_ch * w_end[n + 1]).reshape(-1, p).sum(axis=1)
    if n_int:
        u_int = _solve_sparse(fac["lu"], rhs)
    else:
        u_int = np.zeros(0, dtype=dtype)

    coeffs = []
    for n in range(tree.depth + 1):
        if n == 0:
            a = np.zeros(1, dtype=dtype)
        else:
            par = u_int[offsets[n - 1] : offsets[n]]
            a = par[np.arange(p**n) // p]
        if n < tree.depth:
            b = u_int[offsets[n] : offsets[n + 1]]
        else:
            b = np.zeros(p**n, dtype=dtype)
        c = _pad(w_parts[n].astype(dtype), max(w_parts[n].shape[1], 2))
        beta = (b - a - w_end[n]) / tree.lengths[n]
        c[:, 0] += a
        c[:, 1] += beta
        coeffs.append(c)
    return TreeFunction(tree, coeffs)


# ---------------------------------------------------------------------------
# radial solutions on geometric trees


@dataclass
class RadialRecord:
    flux: float
    slopes: np.ndarray
    vertex_values: np.ndarray
    boundary_value: float
    condensed: bool


def radial_harmonic(params: TreeParams, N: int, boundary_value: float = 1.0, condensed: bool = True):
    """Closed-form harmonic function depending on the generation only.

    Flux conservation across generations forces the edge slope s_n =
    s_0 / (p omega)^n; the root-to-boundary drop is the geometric series
    L0 sum r^n with r = ell/(p omega).  On the condensed tree the stretched
    leaf edge restores the full series, so the flux constant equals the
    infinite-tree value F = omega0 * (1 - r) * boundary_value / L0.
    """
    if params.N1 != 0 or params.length_overrides or params.weight_overrides:
        raise NotGeometric("radial solutions need a purely geometric tree")
    require_valid(params)
    r = params.r
    pw = params.p * params.omega
    if condensed:
        tree = build_condensed(params, N)
        s0 = boundary_value * (1.0 - r) / params.L0
        gens = tree.depth + 1
        slopes = s0 / pw ** np.arange(gens)
        vals = s0 * params.L0 * (1.0 - r ** (np.arange(gens) + 1)) / (1.0 - r)
        vals[-1] = boundary_value
    else:
        tree = build_truncated(params, N)
        s0 = boundary_value * (1.0 - r) / (params.L0 * (1.0 - r ** (N + 1)))
        gens = tree.depth + 1
        slopes = s0 / pw ** np.arange(gens)
        vals = s0 * params.L0 * (1.0 - r ** (np.arange(gens) + 1)) / (1.0 - r)
        vals[-1] = boundary_value
    coeffs = []
    for n in range(tree.depth + 1):
        c = np.zeros((tree.p**n, 2))
        c[:, 0] = vals[n - 1] if n > 0 else 0.0
        c[:, 1] = slopes[n]
        coeffs.append(c)
    f = TreeFunction(tree, coeffs)
    record = RadialRecord(
        flux=float(params.omega0 * s0),
        slopes=slopes,
        vertex_values=vals,
        boundary_value=boundary_value,
        condensed=condensed,
    )
    return f, record


# ---------------------------------------------------------------------------
# Poincare constant via a cubic Rayleigh-Ritz pencil

# local basis on [0, 1]: hat functions plus two interior bubbles
_BASIS = [
    np.array([1.0, -1.0]),
    np.array([0.0, 1.0]),
    np.array([0.0, 1.0, -1.0]),
    np.array([0.0, -0.5, 1.5, -1.0]),
]


def _local_matrices():
    k = np.zeros((4, 4))
    m = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            pi, pj = _BASIS[i], _BASIS[j]
            prod = np.convolve(pi, pj)
            m[i, j] = (prod / np.arange(1, prod.size + 1)).sum()
            di = np.polynomial.polynomial.polyder(pi)
            dj = np.polynomial.polynomial.polyder(pj)
            dprod = np.convolve(di, dj)
            k[i, j] = (dprod / np.arange(1, dprod.size + 1)).sum()
    return k, m


_K_LOC, _M_LOC = _local_matrices()


def poincare_constant(tree: FiniteTree) -> float:
    """1/sqrt(a_N) where a_N is the smallest eigenvalue of the
    stiffness/mass pencil over continuous piecewise-cubic functions
    vanishing at the root (leaves unconstrained)."""
    p = tree.p
    offsets = _vertex_offsets(tree)
    nv = offsets[-1]
    ne = tree.n_edges
    ndof = nv + 2 * ne
    A = np.zeros((ndof, ndof))
    B = np.zeros((ndof, ndof))
    edge_no = 0
    for n in range(tree.depth + 1):
        for k in range(p**n):
            ell = tree.lengths[n][k]
            w = tree.weights[n][k]
            if n == 0:
                dofs = [None, offsets[0] + k]
            else:
                dofs = [offsets[n - 1] + k // p, offsets[n] + k]
            dofs += [nv + 2 * edge_no, nv + 2 * edge_no + 1]
            k_e = (w / ell) * _K_LOC
            m_e = (w * ell) * _M_LOC
            for i in range(4):
                if dofs[i] is None:
                    continue
                for j in range(4):
                    if dofs[j] is None:
                        continue
                    A[dofs[i], dofs[j]] += k_e[i, j]
                    B[dofs[i], dofs[j]] += m_e[i, j]
            edge_no += 1
    try:
        vals = scipy.linalg.eigh(A, B, eigvals_only=True, subset_by_index=[0, 0])
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise SingularSystem(str(exc)) from exc
    a = float(vals[0])
    if a <= 0:
        raise SingularSystem("nonpositive Rayleigh quotient %g" % a)
    return 1.0 / math.sqrt(a)
