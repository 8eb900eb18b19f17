"""Fractional recursive Tau method.

For the perturbed operator ``L y = y - K~ y`` with a projected kernel, the
image of each fractional monomial is a short band::

    L t^(r alpha) = sum_{l=r}^{r+height} S(l, r) t^(l alpha)

which drives a recursion for the associated canonical polynomials ``psi_r``
and the coupling coefficients ``d[r][j]``. The Tau-solution is assembled from
them after a ``height x height`` linear system fixes the tau parameters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath
from mpmath import mpf

from . import exprlang as ex
from .approx import (
    KernelCoeffs,
    Projection1D,
    default_quad_order,
    default_trunc_tol,
    detect_monomial_sum,
    project_2d,
    project_fn_1d,
    project_monomial_1d,
)
from .cordial import (
    DEFAULT_MARGIN,
    DEFAULT_ORACLE_NODES,
    DerivedParams,
    ProblemSpec,
    SpectrumReport,
    apply_K,
    check_solvability,
    derive_params,
    manufacture_g,
)
from .fracpoly import FLPBasis, FracGrid, FracPoly, flp_coefficient_row, flp_eval, fracpoly_combine
from .numerics import beta, solve_dense, to_mpf, tol

log = logging.getLogger(__name__)


class UnsolvableProblemError(ArithmeticError):
    """The spectrum of the projected operator contains 1 on the lattice."""

    def __init__(self, report: SpectrumReport):
        self.report = report
        self.r = report.violations[0]
        super().__init__(
            f"solvability condition fails at r = {self.r}: "
            f"h00 * B(gamma, 1 - gamma + beta + r alpha) is within the margin of 1"
        )


class DegenerateHeightError(ArithmeticError):
    def __init__(self, r: int, value):
        self.r = r
        super().__init__(
            f"leading coefficient S(r + height, r) vanishes at r = {r} "
            f"(|S| = {mpmath.nstr(abs(value), 5)}); the kernel height is probably overestimated"
        )


# ---------------------------------------------------------------------------
# Operator image


class OperatorImage:
    """Band coefficients ``S(l, r)`` of the projected cordial operator."""

    def __init__(self, kernel: KernelCoeffs, params: DerivedParams):
        self.kernel = kernel
        self.params = params
        self.height = kernel.height
        self._terms = kernel.terms()
        self._beta_cache: dict[int, mpf] = {}

    def _beta(self, k: int) -> mpf:
        # B(sigma1 alpha, (k + sigma2 - sigma1) alpha + 1) with k = r + j
        b = self._beta_cache.get(k)
        if b is None:
            p = self.params
            b = beta(p.gamma, (k + p.sigma2 - p.sigma1) * p.alpha + 1)
            self._beta_cache[k] = b
        return b

    def column(self, r: int) -> list[mpf]:
        """``[S(r, r), S(r+1, r), ..., S(r+height, r)]``."""
        if r < 0:
            raise ValueError("r must be non-negative")
        col = [mpf(0)] * (self.height + 1)
        col[0] = mpf(1)
        for i, j, h in self._terms:
            col[i + j] -= h * self._beta(r + j)
        return col

    def S(self, l: int, r: int) -> mpf:
        if not r <= l <= r + self.height:
            return mpf(0)
        return self.column(r)[l - r]


def operator_image(kernel: KernelCoeffs, params: DerivedParams, r: int) -> list[mpf]:
    return OperatorImage(kernel, params).column(r)


# ---------------------------------------------------------------------------
# Canonical polynomials


@dataclass(frozen=True)
class CanonicalTable:
    psi: tuple
    d: tuple
    height: int

    def __len__(self):
        return len(self.psi)


def generate_canonical(kernel: KernelCoeffs, params: DerivedParams, N: int,
                       image: OperatorImage | None = None) -> CanonicalTable:
    """``psi_0..psi_N`` and ``d[0..N][0..height-1]``.

    ``psi_r = 0`` and ``d[r][j] = delta_rj`` for ``r < height``; afterwards::

        psi_{r+h}    = (t^(r alpha) - sum_{l=r}^{r+h-1} S(l, r) psi_l) / S(r+h, r)
        d[r+h][j]    = -(sum_{l=r}^{r+h-1} d[l][j] S(l, r)) / S(r+h, r)
    """
    image = image or OperatorImage(kernel, params)
    h = image.height
    grid = FracGrid(params.delta)
    zero = FracPoly(grid)
    psi = [zero] * min(h, N + 1)
    d = [[mpf(int(r == j)) for j in range(h)] for r in range(min(h, N + 1))]
    threshold = tol(mpmath.mp.dps / 2)
    for r in range(0, N + 1 - h):
        col = image.column(r)
        lead = col[h]
        if abs(lead) <= threshold:
            raise DegenerateHeightError(r, lead)
        terms = [(1, FracPoly.monomial(grid, r))]
        terms += [(-col[l - r], psi[l]) for l in range(r, r + h) if not psi[l].is_zero()]
        psi.append(fracpoly_combine(terms).scaled(1 / lead))
        d.append([-mpmath.fsum(d[l][j] * col[l - r] for l in range(r, r + h)) / lead for j in range(h)])
    return CanonicalTable(tuple(psi), tuple(tuple(row) for row in d), h)


# ---------------------------------------------------------------------------
# Tau system


def assemble_tau_system(n: int, g_monomial: FracPoly, table: CanonicalTable) -> tuple[list, list]:
    """Matrix ``M[l][r] = sum_j C[n+h-r][j] d[j][l]`` and ``B[l] = -sum_r g_r d[r][l]``."""
    h = table.height
    if len(table) < n + h + 1:
        raise ValueError(f"canonical table has {len(table)} entries, needs {n + h + 1}")
    M = [[mpf(0)] * h for _ in range(h)]
    for r in range(h):
        row = flp_coefficient_row(n + h - r)
        for l in range(h):
            M[l][r] = mpmath.fsum(c * table.d[j][l] for j, c in enumerate(row))
    g = list(g_monomial.coeffs[: n + 1])
    B = [-mpmath.fsum(g[r] * table.d[r][l] for r in range(len(g))) for l in range(h)]
    return M, B


# ---------------------------------------------------------------------------
# Solve


@dataclass(frozen=True)
class SolveOptions:
    quad_order: int | None = None
    trunc_tol: object = None
    margin: object = DEFAULT_MARGIN
    oracle_nodes: int = DEFAULT_ORACLE_NODES
    residual_grid: int = 50
    error_grid: int = 2000
    compute_residual: bool = True
    alpha_den: int | None = None


@dataclass
class TauSolution:
    y: FracPoly
    tau: tuple
    perturbation: FracPoly
    n: int
    height: int
    params: DerivedParams
    kernel: KernelCoeffs
    g_tilde: FracPoly
    solvability: SpectrumReport
    residual_sup: mpf | None = None
    sup_error: mpf | None = None
    table: CanonicalTable | None = field(default=None, repr=False)

    @property
    def tau_norm(self) -> mpf:
        return max((abs(v) for v in self.tau), default=mpf(0))


def _kernel_for(spec: ProblemSpec, n: int, grid: FracGrid, options: SolveOptions) -> KernelCoeffs:
    trunc = to_mpf(options.trunc_tol) if options.trunc_tol is not None else default_trunc_tol()
    terms = detect_monomial_sum(spec.H)
    if terms is not None:
        return project_2d(terms, n, grid, trunc_tol=trunc)
    log.info("kernel is not a monomial sum; projecting by quadrature")
    return project_2d(ex.as_function(spec.H, ("t", "s")), n, grid, options.quad_order, trunc_tol=trunc)


def _forcing_for(spec: ProblemSpec, n: int, grid: FracGrid, params: DerivedParams,
                 options: SolveOptions, forcing: Callable | None) -> FracPoly:
    if spec.g is not None:
        terms = detect_monomial_sum(spec.g)
        if terms is not None:
            parts = [(c, project_monomial_1d(mu, n, grid).monomial) for c, mu, _ in terms]
            return fracpoly_combine(parts) if parts else FracPoly(grid)
        forcing = ex.as_function(spec.g, ("t",))
    elif forcing is None:
        forcing = manufacture_g(
            ex.as_function(spec.exact_y, ("t",)), ex.as_function(spec.H, ("t", "s")), params, options.oracle_nodes
        )
    return project_fn_1d(forcing, n, grid, options.quad_order).monomial


def solve(spec: ProblemSpec, n: int, options: SolveOptions | None = None, forcing: Callable | None = None) -> TauSolution:
    """Tau-solution of order ``n``.

    ``forcing`` may pass a prebuilt (memoised) manufactured forcing so that a
    sweep over ``n`` reuses its evaluations.
    """
    options = options or SolveOptions()
    if n < 1:
        raise ValueError("n must be at least 1")
    params = derive_params(spec.gamma, spec.beta, options.alpha_den or spec.alpha_den_override)
    grid = FracGrid(params.delta)

    kernel = _kernel_for(spec, n, grid, options)
    report = check_solvability(kernel.h00, params, options.margin, kernel.trunc_tol)
    if report.violations:
        raise UnsolvableProblemError(report)
    g_tilde = _forcing_for(spec, n, grid, params, options, forcing)

    image = OperatorImage(kernel, params)
    h = image.height
    table = generate_canonical(kernel, params, n + h, image)
    M, B = assemble_tau_system(n, g_tilde, table)
    tau = solve_dense(M, B) if h else []

    terms = [(g_r, table.psi[r]) for r, g_r in enumerate(g_tilde.coeffs[: n + 1])]
    for r, tau_r in enumerate(tau):
        row = flp_coefficient_row(n + h - r)
        terms += [(tau_r * c, table.psi[j]) for j, c in enumerate(row)]
    y = fracpoly_combine(terms) if terms else FracPoly(grid)

    basis = FLPBasis(grid.alpha, n + h)
    pert = [(tau_r, basis.as_fracpoly(n + h - r, grid)) for r, tau_r in enumerate(tau)]
    perturbation = fracpoly_combine(pert) if pert else FracPoly(grid)

    sol = TauSolution(y, tuple(tau), perturbation, n, h, params, kernel, g_tilde, report, table=table)
    if options.compute_residual:
        sol.residual_sup = residual_sup(sol, options.residual_grid, options.oracle_nodes)
    if spec.exact_y is not None:
        sol.sup_error = sup_error(sol, ex.as_function(spec.exact_y, ("t",)), options.error_grid)
    return sol


def perturbation_eval(solution: TauSolution, t) -> mpf:
    """``sum_r tau_r P_{n+h-r, alpha}(t)``."""
    alpha = solution.params.alpha
    top = solution.n + solution.height
    return mpmath.fsum(tau_r * flp_eval(top - r, alpha, t) for r, tau_r in enumerate(solution.tau))


def apply_L(poly: FracPoly, t, kernel: KernelCoeffs, params: DerivedParams, m: int = DEFAULT_ORACLE_NODES) -> mpf:
    """``(L~ p)(t) = p(t) - (K~ p)(t)`` with ``K~`` applied by quadrature."""
    return poly(t) - apply_K(poly, t, kernel, params, m)


def residual_sup(solution: TauSolution, grid_size: int = 50, quad_order: int = DEFAULT_ORACLE_NODES) -> mpf:
    """Max over ``t = k / grid_size`` of ``|L~ y_n - g~ - H_n|``."""
    if grid_size < 10:
        raise ValueError("grid_size must be at least 10")
    worst = mpf(0)
    for k in range(1, grid_size + 1):
        t = mpf(k) / grid_size
        lhs = apply_L(solution.y, t, solution.kernel, solution.params, quad_order)
        worst = max(worst, abs(lhs - solution.g_tilde(t) - solution.perturbation(t)))
    return worst


def sup_error(solution: TauSolution, exact: Callable, grid_size: int = 2000) -> mpf:
    """``max |y(t) - y_n(t)|`` over ``t = k / grid_size``, ``k = 1..grid_size``."""
    return max(abs(to_mpf(exact(mpf(k) / grid_size)) - solution.y(mpf(k) / grid_size)) for k in range(1, grid_size + 1))


def canonical_defect(table: CanonicalTable, r: int, kernel: KernelCoeffs, params: DerivedParams, t,
                     m: int = DEFAULT_ORACLE_NODES) -> mpf:
    """``(L~ phi_r)(t) - t^(r alpha)`` for ``phi_r = psi_r + sum_j d[r][j] phi_j``.

    The undefined ``phi_j`` (``j < height``) enter only through
    ``L~ phi_j = t^(j alpha)``.
    """
    t = to_mpf(t)
    alpha = to_mpf(params.alpha)
    value = apply_L(table.psi[r], t, kernel, params, m)
    value += mpmath.fsum(dj * t ** (j * alpha) for j, dj in enumerate(table.d[r]))
    return value - t ** (r * alpha)
