"""Multivariate sample container, ranks, order statistics and CSV I/O."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IngestionError, LevelError


@dataclass(frozen=True)
class MultivariateSample:
    """An n x d panel of real observations with column labels.

    Dates, when present, are per-row metadata used by the weekly
    log-returns transform.
    """

    values: np.ndarray
    labels: tuple[str, ...]
    dates: tuple[dt.date, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DomainError("sample values must be a 2-D array")
        n, d = values.shape
        if n < 4:
            raise DomainError(f"sample needs at least 4 observations, got {n}")
        if d < 1:
            raise DomainError("sample needs at least one column")
        if not np.all(np.isfinite(values)):
            raise DomainError("sample values must all be finite")
        labels = tuple(str(lbl) for lbl in self.labels)
        if len(labels) != d:
            raise DomainError(f"{len(labels)} labels for {d} columns")
        if len(set(labels)) != d:
            raise DomainError("column labels must be unique")
        if self.dates is not None and len(self.dates) != n:
            raise DomainError("date metadata length must match observation count")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def scaled(self, c: float) -> "MultivariateSample":
        return MultivariateSample(self.values * c, self.labels, self.dates)

    def select(self, indices) -> "MultivariateSample":
        """Sub-sample of the given columns, preserving order."""
        indices = list(indices)
        return MultivariateSample(
            self.values[:, indices],
            tuple(self.labels[j] for j in indices),
            self.dates,
        )


def effective_k(n: int, tau: float) -> int:
    """floor(n(1-tau)) with a guard against floating-point droop."""
    return int(math.floor(n * (1.0 - tau) + 1e-9))


def tau_from_k(n: int, k: int) -> float:
    return 1.0 - k / n


@dataclass(frozen=True)
class TailLevelPair:
    """Intermediate level tau, extreme level tau_prime, and derived sizes."""

    tau: float
    tau_prime: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.tau < self.tau_prime < 1.0:
            raise LevelError(
                f"levels must satisfy 0 < tau < tau_prime < 1, "
                f"got tau={self.tau}, tau_prime={self.tau_prime}"
            )
        k = effective_k(self.n, self.tau)
        if not 2 <= k <= self.n - 1:
            raise LevelError(f"effective size k={k} outside [2, n-1] for n={self.n}")

    @property
    def k(self) -> int:
        return effective_k(self.n, self.tau)

    @property
    def log_dn(self) -> float:
        return math.log((1.0 - self.tau) / (1.0 - self.tau_prime))

    @classmethod
    def from_k(cls, n: int, k: int, tau_prime: float) -> "TailLevelPair":
        return cls(tau=tau_from_k(n, k), tau_prime=tau_prime, n=n)


def compute_ranks(sample: MultivariateSample) -> np.ndarray:
    """Per-column ranks, 1 = smallest, stable tie-breaking by input order."""
    values = sample.values
    ranks = np.empty(values.shape, dtype=np.int64)
    order = np.argsort(values, axis=0, kind="stable")
    rows = np.arange(1, sample.n + 1)
    for j in range(sample.d):
        ranks[order[:, j], j] = rows
    return ranks


def order_statistic(sample: MultivariateSample, j: int, i: int) -> float:
    """The i-th smallest value of column j (1-based i)."""
    if not 1 <= i <= sample.n:
        raise DomainError(f"order index {i} outside [1, {sample.n}]")
    return float(np.sort(sample.values[:, j])[i - 1])


def ingest_csv(path, has_date_column: bool = False) -> MultivariateSample:
    """Read a comma-separated file with a header row into a sample."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        rows = list(reader)
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    start = 1 if has_date_column else 0
    labels = tuple(h.strip() for h in header[start:])
    width = len(header)
    values = np.empty((len(rows), len(labels)), dtype=float)
    dates: list[dt.date] = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise IngestionError(
                f"{path}: row {i + 2} has {len(row)} cells, expected {width}"
            )
        if has_date_column:
            try:
                dates.append(dt.date.fromisoformat(row[0].strip()))
            except ValueError:
                raise IngestionError(
                    f"{path}: row {i + 2}, column 1: bad date {row[0]!r}"
                ) from None
        for c, cell in enumerate(row[start:]):
            text = cell.strip()
            if not text:
                raise IngestionError(
                    f"{path}: row {i + 2}, column {start + c + 1}: missing value"
                )
            try:
                values[i, c] = float(text)
            except ValueError:
                raise IngestionError(
                    f"{path}: row {i + 2}, column {start + c + 1}: "
                    f"unparsable number {text!r}"
                ) from None
            if not np.isfinite(values[i, c]):
                raise IngestionError(
                    f"{path}: row {i + 2}, column {start + c + 1}: non-finite value"
                )
    return MultivariateSample(
        values, labels, dates=tuple(dates) if has_date_column else None
    )


def emit_csv(sample: MultivariateSample, path) -> None:
    """Write a sample back to CSV with 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if sample.dates is not None:
            writer.writerow(("date",) + sample.labels)
            for date, row in zip(sample.dates, sample.values):
                writer.writerow([date.isoformat()] + [format(x, ".17g") for x in row])
        else:
            writer.writerow(sample.labels)
            for row in sample.values:
                writer.writerow([format(x, ".17g") for x in row])


def to_negative_weekly_log_returns(prices: MultivariateSample) -> MultivariateSample:
    """Resample to the last observation per ISO week, emit -log(P_t/P_{t-1}).

    Weeks with no observations are skipped; returns are then taken between
    consecutive observed weeks.
    """
    if prices.dates is None:
        raise DomainError("weekly returns require date metadata")
    dates = prices.dates
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise DomainError("dates must be strictly increasing")
    if np.any(prices.values <= 0.0):
        raise DomainError("all prices must be positive")
    week_last: dict[tuple[int, int], int] = {}
    for i, date in enumerate(dates):
        iso = date.isocalendar()
        week_last[(iso[0], iso[1])] = i
    idx = sorted(week_last.values())
    if len(idx) < 2:
        raise DomainError("need at least two observed weeks")
    levels = prices.values[idx]
    returns = -np.diff(np.log(levels), axis=0)
    return MultivariateSample(
        returns,
        prices.labels,
        dates=tuple(dates[i] for i in idx[1:]),
    )
