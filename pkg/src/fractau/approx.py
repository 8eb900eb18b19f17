"""Projection of problem data onto fractional Legendre spaces.

Every projection works in the variable ``u = t**alpha``, which turns the FLP
weight into the uniform measure on [0, 1] and the FLPs into ordinary shifted
Legendre polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
from mpmath import mpf

from . import exprlang as ex
from .fracpoly import FLPBasis, FracGrid, FracPoly, flp_coefficient_row, shifted_legendre_values
from .numerics import gauss_legendre, tol, to_mpf

DEFAULT_PANELS = 8
PANEL_RATIO = 8


@dataclass(frozen=True)
class Projection1D:
    basis: FLPBasis
    flp_coeffs: tuple
    monomial: FracPoly

    def eval_flp(self, t) -> mpf:
        t = to_mpf(t)
        u = t ** to_mpf(self.basis.theta) if t else mpf(0)
        vals = shifted_legendre_values(len(self.flp_coeffs) - 1, u)
        return mpmath.fsum(a * p for a, p in zip(self.flp_coeffs, vals))


def flp_to_monomial(a: Sequence) -> list:
    """``g_r = sum_{i >= r} a_i C[i][r]``."""
    n = len(a) - 1
    out = []
    for r in range(n + 1):
        out.append(sum((a[i] * flp_coefficient_row(i)[r] for i in range(r, n + 1)), start=0 * a[0]))
    return out


def project_monomial_1d(mu, n: int, grid: FracGrid) -> Projection1D:
    """Best approximation of ``t**mu`` in span{P_0, ..., P_n} (theta = alpha).

    Rational exponents are handled in exact rational arithmetic; when
    ``mu = k * alpha`` with ``k <= n`` the result is exactly ``t**(k alpha)``.
    """
    if mu < 0:
        raise ValueError("exponent must be non-negative")
    basis = FLPBasis(grid.alpha, n)
    if isinstance(mu, (int, Fraction)):
        mu = Fraction(mu)
        alpha = grid.alpha
        a = []
        for i in range(n + 1):
            row = flp_coefficient_row(i)
            a.append((2 * i + 1) * sum(c * alpha / (mu + (j + 1) * alpha) for j, c in enumerate(row)))
        monomial = flp_to_monomial(a)
        return Projection1D(
            basis,
            tuple(to_mpf(v) for v in a),
            FracPoly.from_coeffs(grid, [to_mpf(v) for v in monomial]),
        )
    mu = to_mpf(mu)
    alpha = to_mpf(grid.alpha)
    a = []
    for i in range(n + 1):
        row = flp_coefficient_row(i)
        a.append((2 * i + 1) * mpmath.fsum(c * alpha / (mu + (j + 1) * alpha) for j, c in enumerate(row)))
    return Projection1D(basis, tuple(a), FracPoly.from_coeffs(grid, flp_to_monomial(a)))


def _panel_edges(panels: int) -> list:
    # Geometric grading toward u = 0, where fractional powers of u live.
    edges = [mpf(0)] + [mpf(PANEL_RATIO) ** -(panels - 1 - k) for k in range(panels)]
    return edges


def composite_rule(quad_order: int, panels: int = DEFAULT_PANELS):
    """Nodes and weights of a graded composite Gauss-Legendre rule on [0, 1]."""
    base = gauss_legendre(quad_order)
    edges = _panel_edges(panels)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = hi - lo
        for x, w in zip(base.nodes, base.weights):
            nodes.append(lo + h * x)
            weights.append(h * w)
    return nodes, weights


def default_quad_order(n: int) -> int:
    return max(40, 2 * n + 10)


def project_fn_1d(f: Callable, n: int, grid: FracGrid, quad_order: int | None = None,
                  panels: int = DEFAULT_PANELS) -> Projection1D:
    """Best approximation of an arbitrary bounded ``f`` by quadrature in ``u``."""
    if quad_order is None:
        quad_order = default_quad_order(n)
    if quad_order < n + 1:
        raise ValueError(f"quadrature order {quad_order} is too small for n = {n}")
    nodes, weights = composite_rule(quad_order, panels)
    delta = grid.alpha_den
    acc = [mpf(0)] * (n + 1)
    for u, w in zip(nodes, weights):
        fu = w * to_mpf(f(u**delta))
        for i, p in enumerate(shifted_legendre_values(n, u)):
            acc[i] += fu * p
    a = [(2 * i + 1) * acc[i] for i in range(n + 1)]
    return Projection1D(FLPBasis(grid.alpha, n), tuple(a), FracPoly.from_coeffs(grid, flp_to_monomial(a)))


# ---------------------------------------------------------------------------
# Kernel


@dataclass(frozen=True)
class KernelCoeffs:
    """``H~(t, s) = sum h[i][j] t**(i alpha) s**(j alpha)``."""

    grid: FracGrid
    h: tuple
    trunc_tol: mpf
    height: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "height", effective_height(self))

    @property
    def h00(self) -> mpf:
        return self.h[0][0] if self.h else mpf(0)

    def terms(self) -> list[tuple[int, int, mpf]]:
        """Entries above the truncation tolerance as ``(i, j, h_ij)``."""
        return [
            (i, j, v)
            for i, row in enumerate(self.h)
            for j, v in enumerate(row)
            if abs(v) > self.trunc_tol
        ]

    def __call__(self, t, s) -> mpf:
        t, s = to_mpf(t), to_mpf(s)
        d = self.grid.alpha_den
        vt = mpmath.root(t, d) if t else mpf(0)
        vs = mpmath.root(s, d) if s else mpf(0)
        return mpmath.fsum(v * vt**i * vs**j for i, j, v in self.terms())


def effective_height(k: KernelCoeffs) -> int:
    """Largest ``i + j`` with ``|h_ij|`` above the truncation tolerance (0 if none)."""
    return max((i + j for i, j, _ in k.terms()), default=0)


def default_trunc_tol() -> mpf:
    return tol(mpmath.mp.dps / 2)


def _outer_to_kernel(grid, n, weighted_pairs, trunc_tol) -> KernelCoeffs:
    h = [[mpf(0)] * (n + 1) for _ in range(n + 1)]
    for c, gt, gs in weighted_pairs:
        for i, x in enumerate(gt):
            if not x:
                continue
            for j, y in enumerate(gs):
                h[i][j] += c * x * y
    return KernelCoeffs(grid, tuple(tuple(row) for row in h), trunc_tol)


def _padded(p: FracPoly, n: int) -> list:
    return list(p.coeffs) + [mpf(0)] * (n + 1 - len(p.coeffs))


def project_2d(H, n: int, grid: FracGrid, quad_order: int | None = None,
               trunc_tol=None, panels: int = DEFAULT_PANELS) -> KernelCoeffs:
    """Project a kernel onto the tensor FLP space and return monomial coefficients.

    ``H`` is either a list of ``(coeff, mu_t, nu_s)`` monomial terms, projected
    factor by factor in closed form, or a callable ``H(t, s)`` integrated by a
    tensor-product composite rule.
    """
    if trunc_tol is None:
        trunc_tol = default_trunc_tol()
    if not callable(H):
        pairs = []
        for c, mu, nu in H:
            gt = project_monomial_1d(mu, n, grid).monomial
            gs = project_monomial_1d(nu, n, grid).monomial
            pairs.append((to_mpf(c), _padded(gt, n), _padded(gs, n)))
        return _outer_to_kernel(grid, n, pairs, trunc_tol)

    if quad_order is None:
        quad_order = default_quad_order(n)
    if quad_order < n + 1:
        raise ValueError(f"quadrature order {quad_order} is too small for n = {n}")
    nodes, weights = composite_rule(quad_order, panels)
    delta = grid.alpha_den
    legendre = [shifted_legendre_values(n, u) for u in nodes]
    tvals = [u**delta for u in nodes]
    a = [[mpf(0)] * (n + 1) for _ in range(n + 1)]
    for p, (tp, wp) in enumerate(zip(tvals, weights)):
        # inner[j] = sum_q w_q H(t_p, s_q) P_j(u_q)
        inner = [mpf(0)] * (n + 1)
        for q, (sq, wq) in enumerate(zip(tvals, weights)):
            val = wq * to_mpf(H(tp, sq))
            for j, pj in enumerate(legendre[q]):
                inner[j] += val * pj
        for i, pi in enumerate(legendre[p]):
            scale = wp * pi
            for j in range(n + 1):
                a[i][j] += scale * inner[j]
    for i in range(n + 1):
        for j in range(n + 1):
            a[i][j] *= (2 * i + 1) * (2 * j + 1)
    # h = C^T a C
    h = [[mpf(0)] * (n + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        ci = flp_coefficient_row(i)
        for j in range(n + 1):
            cj = flp_coefficient_row(j)
            aij = a[i][j]
            for k in range(i + 1):
                f = aij * ci[k]
                for l in range(j + 1):
                    h[k][l] += f * cj[l]
    return KernelCoeffs(grid, tuple(tuple(row) for row in h), trunc_tol)


# ---------------------------------------------------------------------------
# Monomial-sum recognition


def _mul_terms(x, y):
    return [(a * b, m1 + m2, n1 + n2) for a, m1, n1 in x for b, m2, n2 in y]


def _terms(node):
    if isinstance(node, ex.Rational):
        return [(node.value, Fraction(0), Fraction(0))]
    if isinstance(node, ex.Real):
        return [(mpf(node.value), Fraction(0), Fraction(0))]
    if isinstance(node, ex.Var):
        return [(Fraction(1), Fraction(node.name == "t"), Fraction(node.name == "s"))]
    if isinstance(node, ex.Neg):
        inner = _terms(node.operand)
        return None if inner is None else [(-c, m, v) for c, m, v in inner]
    if isinstance(node, ex.Binary):
        left = _terms(node.left)
        if left is None:
            return None
        if node.op == "^":
            if not isinstance(node.right, ex.Rational):
                return None
            p = node.right.value
            if len(left) == 1:
                c, m, v = left[0]
                if p.denominator == 1:
                    coeff = c ** int(p)
                elif c == 1:
                    coeff = Fraction(1)
                elif c > 0:
                    coeff = ex._power(to_mpf(c), to_mpf(p), p)
                else:
                    return None
                return [(coeff, m * p, v * p)]
            if p.denominator == 1 and 0 <= p <= 16:
                out = [(Fraction(1), Fraction(0), Fraction(0))]
                for _ in range(int(p)):
                    out = _mul_terms(out, left)
                return out
            return None
        right = _terms(node.right)
        if right is None:
            return None
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left + [(-c, m, v) for c, m, v in right]
        if node.op == "*":
            return _mul_terms(left, right)
        if node.op == "/":
            if len(right) != 1 or right[0][0] == 0:
                return None
            c, m, v = right[0]
            inv = 1 / c if isinstance(c, Fraction) else 1 / to_mpf(c)
            return [(a * inv, m1 - m, n1 - v) for a, m1, n1 in left]
    return None


def detect_monomial_sum(expr) -> list | None:
    """Return ``[(coeff, mu_t, nu_s), ...]`` when ``expr`` is a finite sum of
    ``c * t**mu * s**nu`` with exact non-negative rational exponents, else None.
    """
    terms = _terms(ex.constant_fold(expr))
    if terms is None:
        return None
    merged: dict[tuple, object] = {}
    for c, m, v in terms:
        if m < 0 or v < 0:
            return None
        merged[(m, v)] = merged.get((m, v), 0) + c
    return [(c, m, v) for (m, v), c in sorted(merged.items()) if c != 0]
