"""Shifted fractional Legendre polynomials and polynomials in powers of t**alpha."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath
from mpmath import mpf

from .numerics import DomainError, tol, to_mpf


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class FracGrid:
    """Exponent lattice ``{k * alpha}`` with ``alpha = 1 / alpha_den``."""

    alpha_den: int

    def __post_init__(self):
        if self.alpha_den < 1:
            raise ValueError("alpha_den must be a positive integer")

    @property
    def alpha(self) -> Fraction:
        return Fraction(1, self.alpha_den)

    def index_of(self, exponent) -> int | None:
        """Lattice index ``k`` with ``exponent == k * alpha``, or None when off-grid."""
        k = Fraction(exponent) * self.alpha_den
        return int(k) if k.denominator == 1 and k >= 0 else None


def _trim(coeffs: list) -> tuple:
    threshold = tol(10)
    end = len(coeffs)
    while end and abs(coeffs[end - 1]) <= threshold:
        end -= 1
    return tuple(coeffs[:end])


@dataclass(frozen=True)
class FracPoly:
    """``sum_k coeffs[k] * t**(k * alpha)`` on a fixed :class:`FracGrid`.

    The zero polynomial has an empty coefficient tuple.
    """

    grid: FracGrid
    coeffs: tuple = ()

    @classmethod
    def from_coeffs(cls, grid: FracGrid, coeffs: Iterable) -> "FracPoly":
        return cls(grid, _trim([to_mpf(c) for c in coeffs]))

    @classmethod
    def monomial(cls, grid: FracGrid, k: int, scale=1) -> "FracPoly":
        return cls.from_coeffs(grid, [0] * k + [scale])

    @property
    def index_degree(self) -> int:
        """Largest lattice index with a nonzero coefficient (-1 for zero)."""
        return len(self.coeffs) - 1

    @property
    def degree(self) -> Fraction:
        return self.index_degree * self.grid.alpha

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, t) -> mpf:
        return fracpoly_eval(self, t)

    def scaled(self, factor) -> "FracPoly":
        return fracpoly_combine([(factor, self)])

    def __add__(self, other: "FracPoly") -> "FracPoly":
        return fracpoly_combine([(1, self), (1, other)])

    def __sub__(self, other: "FracPoly") -> "FracPoly":
        return fracpoly_combine([(1, self), (-1, other)])


def horner_in_v(coeffs: Sequence, v) -> mpf:
    acc = mpf(0)
    for c in reversed(coeffs):
        acc = acc * v + c
    return acc


def fracpoly_eval(p: FracPoly, t) -> mpf:
    """Horner evaluation in ``v = t**alpha``; at ``t = 0`` returns the constant term."""
    t = to_mpf(t)
    if t < 0 or t > 1:
        raise DomainError("fractional polynomials are evaluated on [0, 1]")
    if not p.coeffs:
        return mpf(0)
    if t == 0:
        return p.coeffs[0]
    v = t if p.grid.alpha_den == 1 else mpmath.root(t, p.grid.alpha_den)
    return horner_in_v(p.coeffs, v)


def fracpoly_combine(terms: Sequence[tuple]) -> FracPoly:
    """Linear combination ``sum scalar * poly`` of polynomials on one grid."""
    if not terms:
        raise ValueError("fracpoly_combine needs at least one term")
    grid = terms[0][1].grid
    if any(p.grid != grid for _, p in terms):
        raise GridMismatchError("cannot combine polynomials on different grids")
    size = max(len(p.coeffs) for _, p in terms)
    acc = [mpf(0)] * size
    for scalar, p in terms:
        scalar = to_mpf(scalar)
        if not scalar:
            continue
        for k, c in enumerate(p.coeffs):
            acc[k] += scalar * c
    return FracPoly(grid, _trim(acc))


# ---------------------------------------------------------------------------
# Fractional Legendre polynomials


@lru_cache(maxsize=None)
def flp_coefficient_row(i: int) -> tuple[int, ...]:
    """Exact integer row ``C[i][0..i]`` so that ``P_i(t) = sum_j C[i][j] t**(j*theta)``.

    Built with the ratio ``C[i][j+1] / C[i][j] = -(i+j+1)(i-j) / (j+1)**2``,
    which keeps every intermediate an integer.
    """
    if i < 0:
        raise ValueError("FLP index must be non-negative")
    row = [(-1) ** i]
    for j in range(i):
        num = row[-1] * -(i + j + 1) * (i - j)
        row.append(num // ((j + 1) ** 2))
    return tuple(row)


def flp_coefficients(i: int) -> list[mpf]:
    return [mpf(c) for c in flp_coefficient_row(i)]


@dataclass(frozen=True)
class FLPBasis:
    """Shifted fractional Legendre family ``P_{i,theta}`` for ``i <= order``."""

    theta: Fraction
    order: int

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")

    @property
    def coeff_table(self) -> list[list[mpf]]:
        return [flp_coefficients(i) for i in range(self.order + 1)]

    def C(self, i: int, j: int) -> int:
        return flp_coefficient_row(i)[j]

    def as_fracpoly(self, i: int, grid: FracGrid) -> FracPoly:
        step = self.theta * grid.alpha_den
        if step.denominator != 1:
            raise GridMismatchError("theta is not a multiple of the grid spacing")
        step = int(step)
        coeffs = [0] * (i * step + 1)
        for j, c in enumerate(flp_coefficient_row(i)):
            coeffs[j * step] = c
        return FracPoly.from_coeffs(grid, coeffs)


def shifted_legendre_values(n: int, u) -> list[mpf]:
    """``[P_0(u), ..., P_n(u)]`` for the shifted Legendre family on [0, 1]."""
    x = 2 * u - 1
    vals = [mpf(1)]
    if n >= 1:
        vals.append(x)
    for i in range(1, n):
        vals.append(((2 * i + 1) * x * vals[i] - i * vals[i - 1]) / (i + 1))
    return vals


def flp_eval(i: int, theta, t) -> mpf:
    """``P_{i,theta}(t)`` by the three-term recurrence in ``x = 2 t**theta - 1``."""
    t = to_mpf(t)
    if t < 0 or t > 1:
        raise DomainError("FLPs are defined on [0, 1]")
    theta = Fraction(theta)
    u = t ** to_mpf(theta) if t else mpf(0)
    return shifted_legendre_values(i, u)[i]
