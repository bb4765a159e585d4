"""Special functions, SPD matrix algebra and tail-box quadrature.

All routines are pure functions; matrices are numpy arrays wrapped in the
lightweight :class:`SpdMatrix` container which enforces symmetry and the
eigenvalue clipping policy used throughout the covariance estimators.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, stats

from .errors import (
    DomainError,
    NotPositiveSemidefiniteError,
    NumericError,
    SingularCovarianceError,
)

# Relative tolerance (times the trace) below which negative eigenvalues are
# clipped to zero; anything more negative is treated as a formula bug.
CLIP_RTOL = 1e-6


def std_normal_quantile(p: float) -> float:
    """Quantile of the standard Gaussian distribution."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"normal quantile requires p in (0,1), got {p}")
    return float(stats.norm.ppf(p))


def std_normal_cdf(x: float) -> float:
    return float(stats.norm.cdf(x))


def chi_square_quantile(p: float, df: int) -> float:
    """(1-alpha)-quantile of the chi-square distribution with df degrees."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"chi-square quantile requires p in (0,1), got {p}")
    if df < 1 or int(df) != df:
        raise DomainError(f"chi-square quantile requires integer df >= 1, got {df}")
    return float(stats.chi2.ppf(p, df))


def chi_square_cdf(x: float, df: int) -> float:
    if df < 1:
        raise DomainError(f"chi-square cdf requires df >= 1, got {df}")
    return float(stats.chi2.cdf(x, df))


def student_t_quantile(p: float, nu: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"Student-t quantile requires p in (0,1), got {p}")
    if nu <= 0.0:
        raise DomainError(f"Student-t quantile requires nu > 0, got {nu}")
    return float(stats.t.ppf(p, nu))


def student_t_cdf(x: float, nu: float) -> float:
    if nu <= 0.0:
        raise DomainError(f"Student-t cdf requires nu > 0, got {nu}")
    return float(stats.t.cdf(x, nu))


@dataclass(frozen=True)
class SpdMatrix:
    """Symmetric positive semidefinite matrix with clipping provenance.

    Construction symmetrizes the input and clips slightly negative
    eigenvalues (within CLIP_RTOL times the trace) up to zero; larger
    violations raise :class:`NotPositiveSemidefiniteError`.
    """

    entries: np.ndarray
    clip_magnitude: float = 0.0

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_array(cls, m, name: str = "matrix") -> "SpdMatrix":
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"{name} must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NumericError(f"{name} has non-finite entries")
        scale = np.max(np.abs(m)) or 1.0
        if np.max(np.abs(m - m.T)) > 1e-8 * scale:
            raise DomainError(f"{name} is not symmetric")
        sym = 0.5 * (m + m.T)
        w, v = np.linalg.eigh(sym)
        tol = CLIP_RTOL * max(abs(np.trace(sym)), np.finfo(float).tiny)
        if w[0] < -tol:
            raise NotPositiveSemidefiniteError(
                f"{name} has eigenvalue {w[0]:.3e} below -{tol:.3e}"
            )
        clip = float(max(0.0, -w[0]))
        if w[0] < 0.0:
            w = np.clip(w, 0.0, None)
            sym = (v * w) @ v.T
            sym = 0.5 * (sym + sym.T)
        return cls(entries=sym, clip_magnitude=clip)

    def sqrt(self) -> "SpdMatrix":
        """Principal symmetric square root."""
        w, v = np.linalg.eigh(self.entries)
        w = np.clip(w, 0.0, None)
        s = (v * np.sqrt(w)) @ v.T
        return SpdMatrix(entries=0.5 * (s + s.T))

    def quadratic_form(self, vec, name: str = "covariance") -> float:
        """v^T m^{-1} v through a Cholesky factorization."""
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.dim,):
            raise DomainError(
                f"vector of length {vec.shape} does not match dimension {self.dim}"
            )
        tr = abs(np.trace(self.entries)) or 1.0
        try:
            c, low = linalg.cho_factor(self.entries, lower=True)
        except linalg.LinAlgError as exc:
            raise SingularCovarianceError(f"singular {name} matrix") from exc
        if np.min(np.diag(c)) ** 2 <= 1e-10 * tr:
            raise SingularCovarianceError(f"singular {name} matrix")
        y = linalg.solve_triangular(c, vec, lower=low)
        return float(y @ y)

    def solve(self, rhs, name: str = "covariance") -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        try:
            c, low = linalg.cho_factor(self.entries, lower=True)
        except linalg.LinAlgError as exc:
            raise SingularCovarianceError(f"singular {name} matrix") from exc
        return linalg.cho_solve((c, low), rhs)


def spd_sqrt(m, name: str = "matrix") -> np.ndarray:
    """Principal square root of a PSD matrix given as an array."""
    return SpdMatrix.from_array(m, name).sqrt().entries


def spd_quadratic_form(m, v, name: str = "covariance") -> float:
    return SpdMatrix.from_array(m, name).quadratic_form(v, name)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on (0,1), weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.size < 2:
            raise DomainError("quadrature rule needs at least 2 nodes")
        if not (np.all(nodes > 0.0) and np.all(nodes < 1.0)):
            raise DomainError("quadrature nodes must lie in (0,1)")
        if np.any(np.diff(nodes) <= 0.0):
            raise DomainError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0.0) or abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError("quadrature weights must be positive and sum to 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def gauss_legendre(cls, n: int = 200) -> "QuadratureRule":
        x, w = np.polynomial.legendre.leggauss(n)
        return cls(nodes=0.5 * (x + 1.0), weights=0.5 * w)


_DEFAULT_RULE_CACHE: dict[int, QuadratureRule] = {}


def default_rule(n: int = 200) -> QuadratureRule:
    rule = _DEFAULT_RULE_CACHE.get(n)
    if rule is None:
        rule = QuadratureRule.gauss_legendre(n)
        _DEFAULT_RULE_CACHE[n] = rule
    return rule


def integrate_2d_tailbox(f, rule: QuadratureRule | None = None) -> float:
    """Tensor-rule integral of f over [1,inf)^2 via the x = 1/t transform.

    f must accept numpy array arguments of equal shape.
    """
    rule = rule or default_rule()
    s = rule.nodes
    grid_x, grid_y = np.meshgrid(1.0 / s, 1.0 / s, indexing="ij")
    vals = np.asarray(f(grid_x, grid_y), dtype=float)
    jac = np.outer(s, s) ** -2
    integrand = vals * jac
    if not np.all(np.isfinite(integrand)):
        i, j = np.argwhere(~np.isfinite(integrand))[0]
        raise NumericError(
            f"non-finite integrand at node (x={grid_x[i, j]!r}, y={grid_y[i, j]!r})"
        )
    return float(np.einsum("i,j,ij->", rule.weights, rule.weights, integrand))


def _quad(f, a, b, tol):
    # Kinked (min-type) integrands make quad grumble about roundoff even
    # when the returned value is accurate; keep the noise out of user runs.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=300)
    return val


def integrate_2d_tailbox_adaptive(
    f, weight_x: int = 0, weight_y: int = 0, tol: float = 1e-10
) -> float:
    """Adaptive iterated integral of f(x,y) x^{-weight_x} y^{-weight_y} on [1,inf)^2.

    Used by the theoretical covariance oracles, whose comonotone (min-type)
    integrands have a kink that defeats fixed tensor rules at 1e-6 accuracy.
    """

    def inner(s):
        return _quad(
            lambda t: f(1.0 / s, 1.0 / t) * t ** (weight_y - 2), 0.0, 1.0, tol
        ) * s ** (weight_x - 2)

    val = _quad(inner, 0.0, 1.0, tol * 10)
    if not np.isfinite(val):
        raise NumericError("non-finite adaptive tail-box integral")
    return float(val)


def integrate_1d_tail(f, tol: float = 1e-10) -> float:
    """Adaptive integral of f(x) over [1,inf) via the x = 1/t transform."""
    val = _quad(lambda t: f(1.0 / t) / t**2, 0.0, 1.0, tol)
    if not np.isfinite(val):
        raise NumericError("non-finite tail integral")
    return float(val)


def integrate_unit_log(f, tol: float = 1e-10) -> float:
    """Adaptive integral of f(u)/u over (0,1]."""
    val = _quad(lambda u: f(u) / u, 0.0, 1.0, tol)
    if not np.isfinite(val):
        raise NumericError("non-finite unit log-weight integral")
    return float(val)
