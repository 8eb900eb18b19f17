"""Problem data, derived lattice parameters, solvability and the cordial operator.

The equation handled here is::

    y(t) = g(t) + int_0^t t^-beta (t-s)^(gamma-1) s^(beta-gamma) H(t, s) y(s) ds

on [0, 1], with rational ``0 < gamma <= 1`` and ``beta >= gamma``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath
from mpmath import mpf

from . import exprlang as ex
from .numerics import DomainError, beta, gauss_jacobi, to_mpf

DEFAULT_MARGIN = Fraction(1, 10**8)
DEFAULT_ORACLE_NODES = 120


class ConstraintError(ValueError):
    """Problem parameters outside the admissible class."""


@dataclass(frozen=True)
class RationalExp:
    p: int
    q: int

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ConstraintError("exponents must be positive rationals")
        if math.gcd(self.p, self.q) != 1:
            raise ConstraintError(f"{self.p}/{self.q} is not in lowest terms")

    @classmethod
    def parse(cls, text) -> "RationalExp":
        try:
            value = Fraction(str(text).strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConstraintError(f"not a rational number: {text!r}") from exc
        return cls(value.numerator, value.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __str__(self):
        return f"{self.p}/{self.q}"


@dataclass(frozen=True)
class ProblemSpec:
    """One instance of the equation.

    ``g`` is the forcing already divided by ``t**beta``. With ``manufacture``
    set, ``g`` is absent and is generated from ``exact_y``.
    """

    gamma: RationalExp
    beta: RationalExp
    H: ex.Expr
    g: ex.Expr | None = None
    exact_y: ex.Expr | None = None
    manufacture: bool = False
    alpha_den_override: int | None = None
    name: str = ""

    def __post_init__(self):
        gamma, beta_ = self.gamma.value, self.beta.value
        if not 0 < gamma <= 1:
            raise ConstraintError(f"gamma must lie in (0, 1], got {self.gamma}")
        if beta_ < gamma:
            raise ConstraintError(f"beta ({self.beta}) must be at least gamma ({self.gamma})")
        if self.manufacture:
            if self.exact_y is None:
                raise ConstraintError("manufactured forcing needs exact_y")
            if self.g is not None:
                raise ConstraintError("give either g or manufacture=true, not both")
        elif self.g is None:
            raise ConstraintError("the forcing g is missing")

    @classmethod
    def from_strings(cls, gamma, beta, H, g=None, exact_y=None, manufacture=False,
                     alpha_den_override=None, name="") -> "ProblemSpec":
        return cls(
            RationalExp.parse(gamma),
            RationalExp.parse(beta),
            ex.parse(H, ("t", "s")),
            ex.parse(g, ("t",)) if g is not None else None,
            ex.parse(exact_y, ("t",)) if exact_y is not None else None,
            manufacture,
            alpha_den_override,
            name,
        )


@dataclass(frozen=True)
class DerivedParams:
    delta: int
    theta1: int
    theta2: int
    sigma1: int
    sigma2: int

    @property
    def alpha(self) -> Fraction:
        return Fraction(1, self.delta)

    @property
    def gamma(self) -> Fraction:
        return self.sigma1 * self.alpha

    @property
    def beta(self) -> Fraction:
        return self.sigma2 * self.alpha


def derive_params(gamma: RationalExp, beta_: RationalExp, alpha_den_override: int | None = None) -> DerivedParams:
    """Common lattice ``alpha = 1/lcm(q1, q2)`` on which gamma and beta sit exactly."""
    g, b = gamma.value, beta_.value
    if g > 1:
        raise ConstraintError("gamma must not exceed 1")
    if b < g:
        raise ConstraintError("beta must be at least gamma")
    delta = math.lcm(gamma.q, beta_.q)
    if alpha_den_override is not None:
        if alpha_den_override % delta:
            raise ConstraintError(
                f"alpha denominator {alpha_den_override} is not a multiple of lcm(q1, q2) = {delta}"
            )
        delta = alpha_den_override
    theta1, theta2 = delta // gamma.q, delta // beta_.q
    return DerivedParams(delta, theta1, theta2, gamma.p * theta1, beta_.p * theta2)


@dataclass(frozen=True)
class SpectrumReport:
    """Outcome of the solvability scan.

    ``values`` holds ``(r, v(r))`` pairs for every evaluated lattice point: the
    leading run ``r = 0, 1, ...`` and the neighbourhood of the crossing of 1.
    """

    compact: bool
    h00: mpf
    checked_r_max: int
    violations: tuple = ()
    min_gap: mpf | None = None
    values: tuple = field(default=(), repr=False)

    @property
    def solvable(self) -> bool:
        return not self.violations


LEADING_VALUES = 16
MAX_LISTED_VIOLATIONS = 1000
_SEARCH_LIMIT = 2**256


def spectrum_value(h00, params: DerivedParams, r: int) -> mpf:
    """``h00 * B(gamma, 1 - gamma + beta + r alpha)``."""
    arg = 1 - params.gamma + params.beta + r * params.alpha
    # ln_gamma of a large argument loses absolute accuracy; pay it back in digits
    extra = max(0, len(str(arg.numerator // arg.denominator)) - 1)
    with mpmath.mp.extradps(extra + 5):
        value = to_mpf(h00) * beta(params.gamma, arg)
    return +value


def _first_below(f, level) -> int:
    """Smallest ``r >= 0`` with ``f(r) < level`` for a decreasing ``f``."""
    if f(0) < level:
        return 0
    lo, hi = 0, 1
    while not f(hi) < level:
        lo, hi = hi, 2 * hi
        if hi > _SEARCH_LIMIT:
            raise ArithmeticError("spectrum scan did not reach the stopping level")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid) < level:
            hi = mid
        else:
            lo = mid
    return hi


def check_solvability(h00, params: DerivedParams, margin=DEFAULT_MARGIN, trunc_tol=None) -> SpectrumReport:
    """Check ``h00 * B(gamma, 1 - gamma + beta + r alpha) != 1`` on the lattice r = 0, 1, ...

    B decreases strictly in its second argument, so the scan ends at the first
    ``r`` whose value has fallen below ``1 - margin`` in magnitude. That point
    and the crossing of ``1 + margin`` are located by bisection, so slowly
    decaying spectra (small gamma, large h00) cost only logarithmic work.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    margin = to_mpf(margin)
    h00 = to_mpf(h00)
    if trunc_tol is None:
        trunc_tol = mpf(10) ** (-mpmath.mp.dps / 2)
    if abs(h00) <= trunc_tol:
        return SpectrumReport(True, h00, 0, (), None, ())
    cache: dict[int, mpf] = {}

    def v(r: int) -> mpf:
        if r not in cache:
            cache[r] = spectrum_value(h00, params, r)
        return cache[r]

    r_max = _first_below(lambda r: abs(v(r)), 1 - margin)
    violations = []
    if h00 > 0:
        # v is decreasing, so violations form the run [r_lo, r_max)
        r_lo = _first_below(v, 1 + margin)
        violations = list(range(r_lo, min(r_max, r_lo + MAX_LISTED_VIOLATIONS)))
        if r_lo:
            v(r_lo - 1)
    for r in range(min(r_max, LEADING_VALUES - 1) + 1):
        v(r)
    values = tuple((r, cache[r]) for r in sorted(cache) if r <= r_max)
    min_gap = min(abs(1 - x) for _, x in values)
    return SpectrumReport(False, h00, r_max, tuple(violations), min_gap, values)


# ---------------------------------------------------------------------------
# Cordial operator by quadrature


def _substitution_power(params: DerivedParams) -> int:
    # u = v**q with q = 2*delta makes every lattice power u**(k alpha), and
    # half-lattice powers, polynomial in v.
    return 2 * params.delta


_substituted_cache: dict = {}
_substituted_lock = threading.Lock()


def substituted_rule(params: DerivedParams, m: int = DEFAULT_ORACLE_NODES) -> tuple:
    """Nodes ``u_k`` and weights ``W_k`` with ``sum W_k f(u_k)`` approximating
    ``int_0^1 (1-u)^(gamma-1) u^(beta-gamma) f(u) du``.

    The change ``u = v**q`` leaves the ``(1-v)^(gamma-1)`` endpoint factor to a
    Gauss-Jacobi weight and turns fractional powers of ``u`` into polynomials
    in ``v``.
    """
    q = _substitution_power(params)
    gam = params.gamma
    key = (m, q, gam, params.beta, mpmath.mp.prec)
    cached = _substituted_cache.get(key)
    if cached is not None:
        return cached
    rule = gauss_jacobi(m, gam - 1, q * (params.beta - gam) + q - 1)
    power = to_mpf(gam - 1)
    nodes, weights = [], []
    for v, w in zip(rule.nodes, rule.weights):
        # (1 - v**q) / (1 - v) = 1 + v + ... + v**(q-1)
        rho = mpmath.fsum(v**k for k in range(q))
        nodes.append(v**q)
        weights.append(w * q * (rho**power if gam != 1 else 1))
    out = (tuple(nodes), tuple(weights))
    with _substituted_lock:
        return _substituted_cache.setdefault(key, out)


def apply_K(y: Callable, t, H: Callable, params: DerivedParams, m: int = DEFAULT_ORACLE_NODES) -> mpf:
    """``(K y)(t)`` for the kernel ``H`` by Gauss-Jacobi quadrature.

    With ``s = t u`` the operator becomes ``int_0^1 (1-u)^(gamma-1)
    u^(beta-gamma) H(t, t u) y(t u) du``; see :func:`substituted_rule`.
    """
    t = to_mpf(t)
    if t <= 0:
        raise DomainError("the cordial operator is evaluated for t > 0")
    nodes, weights = substituted_rule(params, m)
    return mpmath.fsum(w * to_mpf(H(t, t * u)) * to_mpf(y(t * u)) for u, w in zip(nodes, weights))


class ManufacturedForcing:
    """``g(t) = y(t) - (K y)(t)`` for a chosen exact solution, memoised per ``t``."""

    def __init__(self, exact_y: Callable, H: Callable, params: DerivedParams, m: int = DEFAULT_ORACLE_NODES):
        self.exact_y = exact_y
        self.H = H
        self.params = params
        self.m = m
        self._memo: dict = {}
        self._lock = threading.Lock()

    def __call__(self, t) -> mpf:
        t = to_mpf(t)
        key = (t, mpmath.mp.prec)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if t == 0:
            # (K y)(0) = H(0, 0) y(0) B(gamma, beta - gamma + 1) for continuous y
            y0 = to_mpf(self.exact_y(t))
            p = self.params
            value = y0 - to_mpf(self.H(t, t)) * y0 * beta(p.gamma, p.beta - p.gamma + 1)
        else:
            value = to_mpf(self.exact_y(t)) - apply_K(self.exact_y, t, self.H, self.params, self.m)
        with self._lock:
            return self._memo.setdefault(key, value)


def manufacture_g(exact_y: Callable, H: Callable, params: DerivedParams, m: int = DEFAULT_ORACLE_NODES) -> ManufacturedForcing:
    return ManufacturedForcing(exact_y, H, params, m)
