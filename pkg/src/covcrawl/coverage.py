"""Capture-recapture coverage estimation for discovered entity populations.

Frequency counts come either from an entity x source incidence matrix or from
per-iteration entity sets. Chao1 turns singleton/doubleton counts into a
lower-bound population estimate; the coverage ratio is observed / estimated.
"""
from __future__ import annotations

import csv
import enum
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar



class EstimateError(ValueError):
    pass


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyCounts:
    f: dict[int, int]
    kind: str = "source"

    def __post_init__(self):
        if any(k < 1 or v < 0 for k, v in self.f.items()):
            raise ValueError("frequency classes start at k=1 with non-negative counts")

    @property
    def s_obs(self) -> int:
        return sum(self.f.values())

    @property
    def f1(self) -> int:
        return self.f.get(1, 0)

    @property
    def f2(self) -> int:
        return self.f.get(2, 0)

    @classmethod
    def from_summary(cls, s_obs: int, f1: int, f2: int, kind: str = "source") -> "FrequencyCounts":
        """Counts with the given singletons/doubletons and the rest lumped at k=3."""
        rest = s_obs - f1 - f2
        if rest < 0:
            raise ValueError("f1 + f2 exceeds S_obs")
        f = {1: f1, 2: f2}
        if rest:
            f[3] = rest
        return cls(f, kind)


@dataclass
class IncidenceMatrix:
    matrix: np.ndarray  # entities x sources, 0/1
    entities: list[str]
    sources: list[str]

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.int8)
        if self.matrix.ndim != 2 or self.matrix.shape != (len(self.entities), len(self.sources)):
            raise ValueError("matrix shape does not match labels")
        if not np.isin(self.matrix, (0, 1)).all():
            raise ValueError("incidence cells must be 0 or 1")

    @classmethod
    def from_sets(cls, by_source: dict[str, Iterable[Hashable]]) -> "IncidenceMatrix":
        sources = sorted(by_source)
        entities = sorted({str(e) for s in sources for e in by_source[s]})
        row = {e: i for i, e in enumerate(entities)}
        W = np.zeros((len(entities), len(sources)), dtype=np.int8)
        for j, s in enumerate(sources):
            for e in by_source[s]:
                W[row[str(e)], j] = 1
        return cls(W, entities, sources)

    @classmethod
    def read_csv(cls, path: str | Path) -> "IncidenceMatrix":
        """Header row of source ids; an optional leading ``entity`` column holds labels."""
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty incidence file")
        header, body = rows[0], [r for r in rows[1:] if r]
        labelled = header and header[0].strip().lower() == "entity"
        sources = header[1:] if labelled else header
        entities, cells = [], []
        for i, r in enumerate(body, start=2):
            vals = r[1:] if labelled else r
            if len(vals) != len(sources):
                raise ValueError(f"{path}:{i}: expected {len(sources)} cells, got {len(vals)}")
            try:
                cells.append([int(v) for v in vals])
            except ValueError:
                raise ValueError(f"{path}:{i}: non-integer cell") from None
            entities.append(r[0] if labelled else f"e{i - 1}")
        return cls(np.array(cells, dtype=np.int8).reshape(len(cells), len(sources)), entities, sources)

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["entity", *self.sources])
            for label, row in zip(self.entities, self.matrix):
                w.writerow([label, *map(int, row)])


def frequency_counts(data: IncidenceMatrix | Sequence[Iterable[Hashable]]) -> FrequencyCounts:
    """f_k from row sums of an incidence matrix or membership across iterations."""
    if isinstance(data, IncidenceMatrix):
        occ = data.matrix.sum(axis=1)
        if len(occ) == 0:
            raise EstimateError("empty incidence matrix")
        if (occ == 0).any():
            raise EstimateError("entity row with no incidences")
        kind = "source"
    else:
        per_entity: Counter = Counter()
        for occasion in data:
            per_entity.update(set(occasion))
        if not per_entity:
            raise EstimateError("no entities observed")
        occ = np.array(list(per_entity.values()))
        kind = "iteration"
    values, counts = np.unique(occ, return_counts=True)
    return FrequencyCounts({int(k): int(c) for k, c in zip(values, counts)}, kind)


@dataclass(frozen=True)
class CoverageEstimate:
    s_obs: int
    s_hat: float
    f1: int
    f2: int
    ci_low: float | None = None
    ci_high: float | None = None

    @property
    def c_hat(self) -> float:
        return self.s_obs / self.s_hat

    def with_ci(self, low: float, high: float) -> "CoverageEstimate":
        return CoverageEstimate(self.s_obs, self.s_hat, self.f1, self.f2, low, high)


def chao1_value(s_obs: int, f1: int, f2: int) -> float:
    if f2 > 0:
        return s_obs + f1 * f1 / (2 * f2)
    return s_obs + f1 * (f1 - 1) / (2 * (f2 + 1))


def chao1(counts: FrequencyCounts) -> CoverageEstimate:
    """Chao1 with the bias-corrected form when there are no doubletons."""
    if counts.s_obs < 1:
        raise EstimateError("Chao1 undefined for an empty sample")
    return CoverageEstimate(counts.s_obs, chao1_value(counts.s_obs, counts.f1, counts.f2),
                            counts.f1, counts.f2)


def _chao1_columns(occ: np.ndarray) -> np.ndarray:
    """Vectorised Chao1 over columns of an occurrence-count matrix; NaN where empty."""
    s = (occ > 0).sum(axis=0).astype(float)
    f1 = (occ == 1).sum(axis=0).astype(float)
    f2 = (occ == 2).sum(axis=0).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        est = np.where(f2 > 0, s + f1 ** 2 / (2 * np.maximum(f2, 1)), s + f1 * (f1 - 1) / 2)
    est[s == 0] = np.nan
    return est


def bootstrap_replicates(incidence: IncidenceMatrix, replicates: int = 1000,
                         seed: int = 0) -> np.ndarray:
    """Chao1 on source-column resamples (with replacement); NaN for empty replicates."""
    W = incidence.matrix.astype(np.int32)
    m = W.shape[1]
    if m < 2:
        raise EstimateError("bootstrap needs at least two sources")
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, m, size=(replicates, m))
    mult = np.zeros((m, replicates), dtype=np.int32)
    np.add.at(mult, (draws, np.arange(replicates)[:, None]), 1)
    return _chao1_columns(W @ mult)


def bootstrap_ci(incidence: IncidenceMatrix, replicates: int = 1000, level: float = 0.95,
                 seed: int = 0) -> tuple[float, float]:
    est = bootstrap_replicates(incidence, replicates, seed)
    est = est[~np.isnan(est)]
    if est.size == 0:
        raise EstimateError("every bootstrap replicate was empty")
    tail = (1 - level) / 2 * 100
    lo, hi = np.percentile(est, [tail, 100 - tail])
    return float(lo), float(hi)


def estimate(incidence: IncidenceMatrix, replicates: int = 0, level: float = 0.95,
             seed: int = 0) -> CoverageEstimate:
    """Chao1 on source frequency counts, with a bootstrap CI when ``replicates > 0``."""
    est = chao1(frequency_counts(incidence))
    if replicates > 0 and incidence.matrix.shape[1] >= 2:
        est = est.with_ci(*bootstrap_ci(incidence, replicates, level, seed))
    return est


# -- stopping -------------------------------------------------------------------------

@dataclass(frozen=True)
class StoppingConfig:
    tau: float = 0.85
    delta: int = 0
    consecutive: int = 2

    def __post_init__(self):
        if not 0 < self.tau < 1 or self.delta < 0 or self.consecutive < 1:
            raise ValueError("invalid stopping configuration")


class StopDecision(str, enum.Enum):
    CONTINUE = "continue"
    STOP_COVERAGE = "stop_coverage"
    STOP_MARGINAL = "stop_marginal"


def should_stop(coverage: Sequence[float], discovered: Sequence[int] = (),
                config: StoppingConfig = StoppingConfig()) -> StopDecision:
    """Decide from the coverage-ratio history and cumulative discovery counts."""
    if not coverage and not discovered:
        raise ValueError("history must be nonempty")
    recent = list(coverage)[-config.consecutive:]
    if len(recent) == config.consecutive and all(c > config.tau for c in recent):
        return StopDecision.STOP_COVERAGE
    if len(discovered) >= 2 and discovered[-1] - discovered[-2] < config.delta:
        return StopDecision.STOP_MARGINAL
    return StopDecision.CONTINUE


def coverage_error(c_hat: float, c_true: float) -> float:
    return abs(c_hat - c_true)


# -- accumulation curve ------------------------------------------------------------------

@dataclass(frozen=True)
class AccumulationFit:
    s_max: float
    k: float
    rss: float
    at_upper_bound: bool = False

    def predict(self, n):
        n = np.asarray(n, dtype=float)
        return self.s_max * n / (self.k + n)


def _best_scale(n: np.ndarray, s: np.ndarray, k: float) -> tuple[float, float]:
    g = n / (k + n)
    s_max = float(g @ s / (g @ g))
    return s_max, float(np.sum((s - s_max * g) ** 2))


def fit_accumulation(points: Sequence[tuple[float, float]], grid_size: int = 200,
                     tol: float = 1e-10) -> AccumulationFit:
    """Least-squares Michaelis-Menten fit S(n) = S_max * n / (K + n).

    K is searched on a log grid over [n_min/100, 100 n_max] with the optimal
    S_max solved in closed form for each K, then refined by a bounded scalar
    search in log K around the best grid point.
    """
    if len(points) < 3:
        raise FitError("need at least three points")
    n = np.array([p[0] for p in points], dtype=float)
    s = np.array([p[1] for p in points], dtype=float)
    if np.any(np.diff(n) <= 0) or n[0] <= 0:
        raise FitError("n must be positive and strictly increasing")
    if np.any(np.diff(s) < 0):
        raise FitError("S must be non-decreasing")
    if np.all(s == 0):
        raise FitError("all observations are zero")

    lo, hi = math.log(n[0] / 100), math.log(100 * n[-1])
    grid = np.linspace(lo, hi, grid_size)
    rss = np.array([_best_scale(n, s, math.exp(x))[1] for x in grid])
    i = int(np.argmin(rss))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid_size - 1)]

    def f(x):
        return _best_scale(n, s, math.exp(x))[1]

    if b > a:
        x = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": tol}).x
    else:
        x = grid[i]
    best_x = min((x, grid[i]), key=f)
    s_max, best_rss = _best_scale(n, s, math.exp(best_x))
    at_bound = i >= grid_size - 2
    if at_bound:
        warnings.warn("accumulation data look linear; K sits at the search upper bound",
                      RuntimeWarning, stacklevel=2)
    return AccumulationFit(s_max, math.exp(best_x), best_rss, at_bound)


def linear_rss(points: Sequence[tuple[float, float]], intercept: bool = False) -> float:
    """RSS of the least-squares straight line (through the origin unless ``intercept``)."""
    n = np.array([p[0] for p in points], dtype=float)
    s = np.array([p[1] for p in points], dtype=float)
    X = np.column_stack([n, np.ones_like(n)]) if intercept else n[:, None]
    coef, *_ = np.linalg.lstsq(X, s, rcond=None)
    return float(np.sum((s - X @ coef) ** 2))
