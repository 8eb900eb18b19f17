"""Working-precision arithmetic, special functions, quadrature and dense solves.

Every real in the package is an ``mpmath.mpf``. Precision is the global
``mpmath.mp`` context; :class:`PrecisionConfig` pins it for the duration of a
solver run so that all values in one run share the same number of digits.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mp, mpf


class DomainError(ValueError):
    """Argument outside the domain of a special function or rule."""


class SingularSystemError(ArithmeticError):
    """Raised when elimination meets a numerically vanishing pivot."""


@dataclass(frozen=True)
class PrecisionConfig:
    digits: int = 50

    def __post_init__(self):
        if self.digits < 15:
            raise ValueError(f"working precision must be at least 15 digits, got {self.digits}")

    def activate(self):
        """Context manager setting ``mp.dps`` to this configuration."""
        return mp.workdps(self.digits)


def digits() -> int:
    return mp.dps


def tol(offset: float) -> mpf:
    """``10**(-digits + offset)`` at the current working precision."""
    return mpf(10) ** (offset - mp.dps)


def to_mpf(x) -> mpf:
    """Convert ints, Fractions, strings and floats to ``mpf`` without detours through float."""
    if isinstance(x, mpf):
        return x
    num = getattr(x, "numerator", None)
    den = getattr(x, "denominator", None)
    if num is not None and den is not None and not isinstance(x, float):
        return mpf(num) / den
    return mpf(x)


# ---------------------------------------------------------------------------
# Gamma and Beta

_bernoulli_cache: dict[int, list[mpf]] = {}


def _stirling_coefficients(prec: int, count: int) -> list[mpf]:
    coeffs = _bernoulli_cache.get(prec)
    if coeffs is None or len(coeffs) < count:
        coeffs = [
            mpmath.bernoulli(2 * k) / (2 * k * (2 * k - 1)) for k in range(1, count + 1)
        ]
        _bernoulli_cache[prec] = coeffs
    return coeffs


def ln_gamma(x) -> mpf:
    """Natural log of the Gamma function for positive real ``x``.

    The argument is shifted upward until Stirling's asymptotic series is
    accurate to the working precision, and the shift is undone with a single
    logarithm of the rising product.
    """
    x = to_mpf(x)
    if x <= 0:
        raise DomainError(f"ln_gamma requires x > 0, got {mpmath.nstr(x, 10)}")
    with mp.workprec(mp.prec + 20):
        threshold = max(mp.dps // 2, 20)
        shift = mpf(1)
        z = x
        while z < threshold:
            shift *= z
            z += 1
        z2 = z * z
        series = mpf(0)
        power = z
        # Terms decrease while 2k < 2*pi*z; the cap keeps us well inside that.
        coeffs = _stirling_coefficients(mp.prec, int(mp.dps * 0.6) + 10)
        eps = mpf(2) ** (-mp.prec)
        for c in coeffs:
            term = c / power
            series += term
            if abs(term) < eps:
                break
            power *= z2
        result = (z - mpf(0.5)) * mpmath.log(z) - z + mpmath.log(2 * mp.pi) / 2 + series
        result -= mpmath.log(shift)
    return +result


def gamma(x) -> mpf:
    """Gamma function; negative non-integers go through the reflection formula."""
    x = to_mpf(x)
    if x > 0:
        return mpmath.exp(ln_gamma(x))
    if x == mpmath.floor(x):
        raise DomainError(f"gamma has a pole at {mpmath.nstr(x, 10)}")
    return mp.pi / (mpmath.sin(mp.pi * x) * mpmath.exp(ln_gamma(1 - x)))


def beta(a, b) -> mpf:
    """Euler Beta function ``B(a, b)`` for positive ``a`` and ``b``."""
    a = to_mpf(a)
    b = to_mpf(b)
    if a <= 0 or b <= 0:
        raise DomainError("beta requires positive arguments")
    return mpmath.exp(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))


# ---------------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on [0, 1] for the weight ``(1 - u)**a * u**b``.

    ``kind`` is ``"legendre"`` (a = b = 0) or ``"jacobi"``.
    """

    nodes: tuple
    weights: tuple
    kind: str
    a: object = 0
    b: object = 0

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f) -> mpf:
        return mpmath.fsum(w * f(x) for x, w in zip(self.nodes, self.weights))


_rule_cache: dict[tuple, QuadratureRule] = {}
_rule_lock = threading.Lock()


def _jacobi_recurrence(m: int, a: mpf, b: mpf):
    """Monic recurrence coefficients on [0, 1] for the weight (1-u)^a u^b.

    Returns ``(alpha, beta)`` with ``p_{k+1} = (u - alpha_k) p_k - beta_k p_{k-1}``.
    The classical [-1, 1] coefficients (weight (1-x)^a (1+x)^b) are mapped by
    u = (1 + x) / 2.
    """
    alphas = []
    betas = [mpf(0)]
    for k in range(m):
        s = 2 * k + a + b
        if k == 0:
            ak = (b - a) / (a + b + 2)
        else:
            ak = (b * b - a * a) / (s * (s + 2))
        alphas.append((1 + ak) / 2)
        if k >= 1:
            if k == 1:
                bk = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
            else:
                bk = 4 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1) * (s - 1))
            betas.append(bk / 4)
    return alphas, betas


def _monic_and_derivative(x, m, alphas, betas):
    p_prev, p = mpf(0), mpf(1)
    dp_prev, dp = mpf(0), mpf(0)
    for k in range(m):
        p_next = (x - alphas[k]) * p - betas[k] * p_prev
        dp_next = p + (x - alphas[k]) * dp - betas[k] * dp_prev
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    return p, dp


def _build_jacobi_rule(m: int, a: mpf, b: mpf, kind: str) -> QuadratureRule:
    alphas, betas = _jacobi_recurrence(m, a, b)

    # Double-precision eigenvalues of the symmetric Jacobi matrix seed Newton.
    diag = np.array([float(v) for v in alphas])
    off = np.array([float(mpmath.sqrt(v)) for v in betas[1:m]])
    seeds = np.linalg.eigvalsh(np.diag(diag) + np.diag(off, 1) + np.diag(off, -1))

    stop = mpf(2) ** (-mp.prec + 8)
    nodes = []
    for seed in seeds:
        x = mpf(float(seed))
        for _ in range(60):
            p, dp = _monic_and_derivative(x, m, alphas, betas)
            step = p / dp
            x -= step
            if abs(step) <= stop * max(abs(x), mpf(2) ** -200):
                break
        nodes.append(x)
    nodes.sort()

    mu0 = beta(a + 1, b + 1)
    # Christoffel numbers from the orthonormal recurrence.
    weights = []
    for x in nodes:
        q_prev, q = mpf(0), 1 / mpmath.sqrt(mu0)
        total = q * q
        for k in range(m - 1):
            q_next = ((x - alphas[k]) * q - mpmath.sqrt(betas[k]) * q_prev) / mpmath.sqrt(betas[k + 1])
            q_prev, q = q, q_next
            total += q * q
        weights.append(1 / total)

    if any(not (0 < x < 1) for x in nodes):
        raise ArithmeticError("Gauss rule construction produced a node outside (0, 1)")
    return QuadratureRule(tuple(nodes), tuple(weights), kind, a, b)


def gauss_jacobi(m: int, a=0, b=0) -> QuadratureRule:
    """``m``-point Gauss rule on [0, 1] for the weight ``(1-u)**a * u**b``.

    Exact for polynomials of degree ``2m - 1`` against that weight. Rules are
    cached per ``(kind, m, a, b, precision)``.
    """
    if m < 1:
        raise ValueError(f"quadrature order must be positive, got {m}")
    a_exact, b_exact = a, b
    a, b = to_mpf(a), to_mpf(b)
    if a <= -1 or b <= -1:
        raise DomainError("Jacobi exponents must exceed -1")
    kind = "legendre" if a == 0 and b == 0 else "jacobi"
    key = (kind, m, str(a_exact), str(b_exact), mp.prec)
    rule = _rule_cache.get(key)
    if rule is None:
        with mp.workprec(mp.prec + 30):
            raw = _build_jacobi_rule(m, a, b, kind)
        rule = QuadratureRule(
            tuple(+x for x in raw.nodes), tuple(+w for w in raw.weights), kind, a_exact, b_exact
        )
        with _rule_lock:
            rule = _rule_cache.setdefault(key, rule)
    return rule


def gauss_legendre(m: int) -> QuadratureRule:
    """``m``-point Gauss-Legendre rule on [0, 1] (weights sum to 1)."""
    return gauss_jacobi(m, 0, 0)


# ---------------------------------------------------------------------------
# Dense linear algebra


def solve_dense(A: Sequence[Sequence], rhs: Sequence) -> list[mpf]:
    """Solve ``A x = rhs`` by Gaussian elimination with partial pivoting."""
    k = len(A)
    if any(len(row) != k for row in A) or len(rhs) != k:
        raise ValueError("solve_dense needs a square matrix and a matching right-hand side")
    if k == 0:
        return []
    M = [[to_mpf(v) for v in row] + [to_mpf(r)] for row, r in zip(A, rhs)]
    scale = max(max(abs(v) for v in row[:k]) for row in M)
    if scale == 0:
        raise SingularSystemError("zero matrix")
    threshold = tol(2) * scale
    for col in range(k):
        piv = max(range(col, k), key=lambda r: abs(M[r][col]))
        if abs(M[piv][col]) < threshold:
            raise SingularSystemError(f"vanishing pivot in column {col}")
        M[col], M[piv] = M[piv], M[col]
        pivot_row = M[col]
        for r in range(col + 1, k):
            factor = M[r][col] / pivot_row[col]
            if factor:
                row = M[r]
                for c in range(col, k + 1):
                    row[c] -= factor * pivot_row[c]
    x = [mpf(0)] * k
    for r in range(k - 1, -1, -1):
        acc = M[r][k] - mpmath.fsum(M[r][c] * x[c] for c in range(r + 1, k))
        x[r] = acc / M[r][r]
    return x
