"""Seedable samplers for the benchmark dependence models and the Monte
Carlo harnesses for MSE, region coverage, interval coverage and test power.

Reproducibility contract: replication i of a run with master seed s draws
exclusively from a counter-based generator keyed by (s, i), and results are
reduced in replication order.  Outputs are therefore bit-identical for a
given (model, n, M, master_seed), regardless of the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .errors import DomainError, TailjointError
from .inference import (
    marginal_interval_laws,
    marginal_interval_qb,
    region_extreme_laws,
    region_extreme_qb,
    region_intermediate_laws,
    region_intermediate_qb,
)
from .equality_tests import test_equal_expectiles_laws, test_equal_expectiles_qb
from .marginal import estimate_margins
from .sample import MultivariateSample, effective_k

_PAIRWISE_CORRELATIONS = {
    2: {(0, 1): 0.8},
    3: {(0, 1): 0.8, (0, 2): 0.6, (1, 2): 0.4},
    4: {
        (0, 1): 0.8, (0, 2): 0.6, (0, 3): 0.4,
        (1, 2): 0.5, (1, 3): 0.4, (2, 3): 0.4,
    },
    5: {
        (0, 1): 0.8, (0, 2): 0.6, (0, 3): 0.4, (0, 4): 0.2,
        (1, 2): 0.5, (1, 3): 0.4, (1, 4): 0.3,
        (2, 3): 0.6, (2, 4): 0.4, (3, 4): 0.3,
    },
}

_MULTIVARIATE_KINDS = (
    "clayton_frechet",
    "gaussian_student",
    "gumbel_frechet",
    "multivariate_student",
)
_UNIVARIATE_KINDS = (
    "univariate_frechet",
    "univariate_pareto",
    "univariate_student",
)


def listed_correlation(d: int) -> np.ndarray:
    """The benchmark correlation matrix for dimension d in 2..5."""
    if d not in _PAIRWISE_CORRELATIONS:
        raise DomainError(f"no listed correlation matrix for d={d}")
    m = np.eye(d)
    for (j, ell), rho in _PAIRWISE_CORRELATIONS[d].items():
        m[j, ell] = m[ell, j] = rho
    return m


@dataclass(frozen=True)
class SimulationModel:
    """A benchmark data-generating process with per-margin tail indices."""

    kind: str
    d: int
    gammas: tuple[float, ...]
    theta: float = 10.0
    vartheta: float = 3.0

    def __post_init__(self):
        if self.kind not in _MULTIVARIATE_KINDS + _UNIVARIATE_KINDS:
            raise DomainError(f"unknown simulation model {self.kind!r}")
        if self.kind in _UNIVARIATE_KINDS and self.d != 1:
            raise DomainError(f"{self.kind} requires d=1")
        if self.kind in _MULTIVARIATE_KINDS and not 2 <= self.d <= 5:
            raise DomainError(f"{self.kind} requires d in 2..5")
        gammas = tuple(float(g) for g in self.gammas)
        if len(gammas) != self.d:
            raise DomainError(f"{len(gammas)} tail indices for d={self.d}")
        if any(not 0.0 < g < 1.0 for g in gammas):
            raise DomainError("tail indices must lie in (0,1)")
        if self.theta <= 0.0:
            raise DomainError("Clayton parameter must be positive")
        if self.vartheta < 1.0:
            raise DomainError("Gumbel parameter must be at least 1")
        if self.kind == "multivariate_student" and len(set(gammas)) != 1:
            raise DomainError(
                "the multivariate Student model has a single degrees-of-freedom "
                "parameter and cannot mix tail indices"
            )
        object.__setattr__(self, "gammas", gammas)

    @classmethod
    def clayton_frechet(cls, d: int, gamma=1.0 / 3.0, theta: float = 10.0):
        return cls("clayton_frechet", d, _expand(gamma, d), theta=theta)

    @classmethod
    def gaussian_student(cls, d: int, gamma=1.0 / 3.0):
        return cls("gaussian_student", d, _expand(gamma, d))

    @classmethod
    def gumbel_frechet(cls, d: int, gamma=1.0 / 3.0, vartheta: float = 3.0):
        return cls("gumbel_frechet", d, _expand(gamma, d), vartheta=vartheta)

    @classmethod
    def multivariate_student(cls, d: int, gamma=1.0 / 3.0):
        return cls("multivariate_student", d, _expand(gamma, d))

    @classmethod
    def univariate(cls, margin: str, gamma: float = 1.0 / 3.0):
        return cls(f"univariate_{margin}", 1, (gamma,))

    def margin_oracle(self, j: int) -> "MarginOracle":
        g = self.gammas[j]
        if self.kind in ("clayton_frechet", "gumbel_frechet", "univariate_frechet"):
            return MarginOracle("frechet", g)
        if self.kind == "univariate_pareto":
            return MarginOracle("pareto", g)
        return MarginOracle("student", g)


def _expand(gamma, d: int) -> tuple[float, ...]:
    if np.isscalar(gamma):
        return (float(gamma),) * d
    return tuple(float(g) for g in gamma)


def rng_stream(master_seed: int, stream_index: int) -> np.random.Generator:
    """Counter-based generator keyed by (master seed, replication index)."""
    key = np.array([master_seed, stream_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _positive_stable(alpha: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Positive alpha-stable variates with Laplace transform exp(-t^alpha)."""
    w = rng.uniform(0.0, np.pi, size=n)
    e = rng.exponential(size=n)
    return (
        np.sin(alpha * w) / np.sin(w) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * w) / e) ** ((1.0 - alpha) / alpha)
    )


def sample_model(
    model: SimulationModel, n: int, rng: np.random.Generator
) -> MultivariateSample:
    """Draw n observations from the model using the supplied generator."""
    if n < 4:
        raise DomainError("samplers require n >= 4")
    g = np.asarray(model.gammas)
    d = model.d
    kind = model.kind
    if kind == "clayton_frechet":
        frailty = rng.gamma(1.0 / model.theta, size=n)
        e = rng.exponential(size=(n, d))
        u = (1.0 + e / frailty[:, None]) ** (-1.0 / model.theta)
        x = (-np.log(u)) ** -g
    elif kind == "gumbel_frechet":
        frailty = _positive_stable(1.0 / model.vartheta, n, rng)
        e = rng.exponential(size=(n, d))
        u = np.exp(-((e / frailty[:, None]) ** (1.0 / model.vartheta)))
        x = (-np.log(u)) ** -g
    elif kind == "gaussian_student":
        chol = np.linalg.cholesky(listed_correlation(d))
        z = rng.standard_normal(size=(n, d)) @ chol.T
        u = stats.norm.cdf(z)
        x = np.column_stack(
            [stats.t.ppf(u[:, j], 1.0 / g[j]) for j in range(d)]
        )
    elif kind == "multivariate_student":
        nu = 1.0 / g[0]
        chol = np.linalg.cholesky(listed_correlation(d))
        z = rng.standard_normal(size=(n, d)) @ chol.T
        w = rng.chisquare(nu, size=n)
        x = z / np.sqrt(w / nu)[:, None]
    elif kind == "univariate_frechet":
        x = (-np.log(rng.random(size=(n, 1)))) ** -g
    elif kind == "univariate_pareto":
        x = (1.0 - rng.random(size=(n, 1))) ** -g
    else:  # univariate_student
        x = stats.t.ppf(rng.random(size=(n, 1)), 1.0 / g[0])
    labels = tuple(f"X{j + 1}" for j in range(d))
    return MultivariateSample(np.asarray(x, dtype=float), labels)


@dataclass(frozen=True)
class MarginOracle:
    """Closed-form marginal law used to compute true expectiles."""

    kind: str
    gamma: float

    def __post_init__(self):
        if self.kind not in ("frechet", "pareto", "student"):
            raise DomainError(f"unknown margin {self.kind!r}")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError("margin tail index must lie in (0,1)")

    def mean(self) -> float:
        if self.kind == "frechet":
            return float(special.gamma(1.0 - self.gamma))
        if self.kind == "pareto":
            return 1.0 / (1.0 - self.gamma)
        return 0.0

    def quantile(self, p: float) -> float:
        if self.kind == "frechet":
            return (-math.log(p)) ** -self.gamma
        if self.kind == "pareto":
            return (1.0 - p) ** -self.gamma
        return float(stats.t.ppf(p, 1.0 / self.gamma))

    def partial_mean(self, theta: float) -> float:
        """E(X - theta)_+, exact via truncated first moments."""
        if self.kind == "frechet":
            if theta <= 0.0:
                return self.mean() - theta
            a = theta ** (-1.0 / self.gamma)
            upper = float(
                special.gamma(1.0 - self.gamma) * special.gammainc(1.0 - self.gamma, a)
            )
            return upper - theta * float(-np.expm1(-a))
        if self.kind == "pareto":
            if theta <= 1.0:
                return self.mean() - theta
            return self.gamma / (1.0 - self.gamma) * theta ** (1.0 - 1.0 / self.gamma)
        nu = 1.0 / self.gamma
        upper = (nu + theta**2) / (nu - 1.0) * float(stats.t.pdf(theta, nu))
        return upper - theta * float(stats.t.sf(theta, nu))

    def true_expectile(self, tau: float) -> float:
        """Root of tau E(X-theta)_+ = (1-tau) E(theta-X)_+ to 1e-12."""
        if not 0.0 < tau < 1.0:
            raise DomainError(f"expectile level must be in (0,1), got {tau}")
        mu = self.mean()

        def h(theta):
            p = self.partial_mean(theta)
            return tau * p - (1.0 - tau) * (p - mu + theta)

        lo, hi = mu - 1.0, mu + 1.0
        while h(lo) <= 0.0:
            lo = mu - 2.0 * (mu - lo)
        while h(hi) >= 0.0:
            hi = mu + 2.0 * (hi - mu)
        return float(optimize.brentq(h, lo, hi, xtol=1e-13, rtol=8.9e-16))


def true_expectiles(model: SimulationModel, tau: float) -> np.ndarray:
    return np.array(
        [model.margin_oracle(j).true_expectile(tau) for j in range(model.d)]
    )


@dataclass(frozen=True)
class McReport:
    """Summary of one Monte Carlo experiment."""

    experiment: str
    model: str
    n: int
    d: int
    k: int
    tau: float
    tau_prime: float | None
    replications: int
    master_seed: int
    metrics: dict[str, float]
    failures: int
    elapsed_seconds: float

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("Monte Carlo requires at least one replication")

    @property
    def failure_rate(self) -> float:
        return self.failures / self.replications

    def to_json_dict(self) -> dict:
        out = {
            "experiment": self.experiment,
            "model": self.model,
            "n": self.n,
            "d": self.d,
            "k": self.k,
            "tau": self.tau,
            "tau_prime": self.tau_prime,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "failures": self.failures,
            "elapsed_seconds": self.elapsed_seconds,
        }
        out.update(sorted(self.metrics.items()))
        return out

    def csv_header(self) -> list[str]:
        return list(self.to_json_dict().keys())

    def csv_row(self) -> list:
        return list(self.to_json_dict().values())


def _run_replications(worker, M: int, workers: int):
    """Evaluate worker(i) for i in 0..M-1, reducing strictly in index order."""
    if workers <= 1:
        return [worker(i) for i in range(M)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, range(M)))


def _reduce(results):
    """Split per-replication outcomes into successes and a failure count."""
    ok = [r for r in results if r is not None]
    return ok, len(results) - len(ok)


def run_mc_mse(
    model: SimulationModel,
    n: int,
    tau: float,
    M: int,
    master_seed: int,
    workers: int = 1,
) -> McReport:
    """Relative MSE of both intermediate expectile estimators.

    Reported as sqrt(mean squared relative error) x 100, averaged across
    margins, one entry per estimator.
    """
    start = time.perf_counter()
    truth = true_expectiles(model, tau)

    def worker(i):
        try:
            sample = sample_model(model, n, rng_stream(master_seed, i))
            est = estimate_margins(sample, tau)
            return (
                np.mean((est.xi_laws / truth - 1.0) ** 2),
                np.mean((est.xi_qb / truth - 1.0) ** 2),
            )
        except TailjointError:
            return None

    ok, failures = _reduce(_run_replications(worker, M, workers))
    metrics = {}
    if ok:
        arr = np.array(ok)
        metrics["rmse_pct_laws"] = 100.0 * math.sqrt(float(arr[:, 0].mean()))
        metrics["rmse_pct_qb"] = 100.0 * math.sqrt(float(arr[:, 1].mean()))
    return McReport(
        experiment="mse",
        model=model.kind,
        n=n,
        d=model.d,
        k=effective_k(n, tau),
        tau=tau,
        tau_prime=None,
        replications=M,
        master_seed=master_seed,
        metrics=metrics,
        failures=failures,
        elapsed_seconds=time.perf_counter() - start,
    )


def _pivot_covers(region, truth) -> bool:
    """Coverage check through the studentized pivot of the central limit
    approximation that defines the region: the residual is estimate-over-truth
    (bias-corrected), studentized by the estimated shape matrix and compared
    with the chi-square radius.  On the log scale this coincides with set
    membership; on the linear scale it is the form whose nominal level the
    region is calibrated for.
    """
    truth = np.asarray(truth, dtype=float)
    if region.scale == "log":
        residual = np.log(region.center / truth) + region.bias_shift
    else:
        residual = region.center / truth - 1.0 + region.bias_shift
    form = region.shape.quadratic_form(residual, region.kind)
    return form <= region.radius**2


_REGION_BUILDERS = {
    ("laws", False): region_intermediate_laws,
    ("qb", False): region_intermediate_qb,
    ("laws", True): region_extreme_laws,
    ("qb", True): region_extreme_qb,
}


def run_mc_coverage(
    model: SimulationModel,
    n: int,
    tau: float,
    M: int,
    alpha: float,
    method: str,
    master_seed: int,
    tau_prime: float | None = None,
    naive: bool = False,
    workers: int = 1,
) -> McReport:
    """Non-coverage rate of the joint confidence region (intermediate when
    tau_prime is omitted, extreme otherwise)."""
    if method not in ("laws", "qb"):
        raise DomainError(f"unknown method {method!r}")
    start = time.perf_counter()
    extreme = tau_prime is not None
    truth = true_expectiles(model, tau_prime if extreme else tau)
    build = _REGION_BUILDERS[(method, extreme)]

    def worker(i):
        try:
            sample = sample_model(model, n, rng_stream(master_seed, i))
            if extreme:
                region = build(sample, tau, tau_prime, alpha, naive=naive)
            else:
                region = build(sample, tau, alpha, naive=naive)
            return 0.0 if _pivot_covers(region, truth) else 1.0
        except TailjointError:
            return None

    ok, failures = _reduce(_run_replications(worker, M, workers))
    metrics = {}
    if ok:
        metrics[f"noncoverage_pct_{method}" + ("_naive" if naive else "")] = (
            100.0 * float(np.mean(ok))
        )
    return McReport(
        experiment="coverage",
        model=model.kind,
        n=n,
        d=model.d,
        k=effective_k(n, tau),
        tau=tau,
        tau_prime=tau_prime,
        replications=M,
        master_seed=master_seed,
        metrics=metrics,
        failures=failures,
        elapsed_seconds=time.perf_counter() - start,
    )


def run_mc_interval_coverage(
    model: SimulationModel,
    n: int,
    tau: float,
    tau_prime: float,
    M: int,
    alpha: float,
    method: str,
    master_seed: int,
    naive: bool = False,
    workers: int = 1,
) -> McReport:
    """Non-coverage rate of the first-margin extreme expectile interval."""
    if method not in ("laws", "qb"):
        raise DomainError(f"unknown method {method!r}")
    start = time.perf_counter()
    truth = model.margin_oracle(0).true_expectile(tau_prime)
    build = marginal_interval_laws if method == "laws" else marginal_interval_qb

    def worker(i):
        try:
            sample = sample_model(model, n, rng_stream(master_seed, i))
            interval = build(sample, tau, tau_prime, 0, alpha, naive=naive)
            return 0.0 if interval.contains(truth) else 1.0
        except TailjointError:
            return None

    ok, failures = _reduce(_run_replications(worker, M, workers))
    metrics = {}
    if ok:
        metrics[f"noncoverage_pct_{method}" + ("_naive" if naive else "")] = (
            100.0 * float(np.mean(ok))
        )
    return McReport(
        experiment="interval_coverage",
        model=model.kind,
        n=n,
        d=model.d,
        k=effective_k(n, tau),
        tau=tau,
        tau_prime=tau_prime,
        replications=M,
        master_seed=master_seed,
        metrics=metrics,
        failures=failures,
        elapsed_seconds=time.perf_counter() - start,
    )


def run_mc_power(
    model: SimulationModel,
    n: int,
    tau: float,
    tau_prime: float,
    M: int,
    alpha: float,
    master_seed: int,
    methods: tuple[str, ...] = ("laws", "qb"),
    workers: int = 1,
) -> McReport:
    """Rejection rates of the expectile equality tests; both test variants
    can share each simulated sample."""
    for m in methods:
        if m not in ("laws", "qb"):
            raise DomainError(f"unknown method {m!r}")
    if model.d < 2:
        raise DomainError("equality testing requires d >= 2")
    start = time.perf_counter()
    testers = {
        "laws": test_equal_expectiles_laws,
        "qb": test_equal_expectiles_qb,
    }

    def worker(i):
        try:
            sample = sample_model(model, n, rng_stream(master_seed, i))
            return tuple(
                1.0 if testers[m](sample, tau, tau_prime, alpha).reject else 0.0
                for m in methods
            )
        except TailjointError:
            return None

    ok, failures = _reduce(_run_replications(worker, M, workers))
    metrics = {}
    if ok:
        arr = np.array(ok)
        for pos, m in enumerate(methods):
            metrics[f"rejection_pct_{m}"] = 100.0 * float(arr[:, pos].mean())
    return McReport(
        experiment="power",
        model=model.kind,
        n=n,
        d=model.d,
        k=effective_k(n, tau),
        tau=tau,
        tau_prime=tau_prime,
        replications=M,
        master_seed=master_seed,
        metrics=metrics,
        failures=failures,
        elapsed_seconds=time.perf_counter() - start,
    )
