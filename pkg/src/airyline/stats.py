"""Verification reports and the statistical helpers shared by the tests."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import InsufficientDataError

FORMAT_VERSION = 1


def _plain(x):
    """Convert numpy scalars/arrays (recursively) into JSON-ready Python values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class StatReport:
    """Outcome of one verification test.

    ``passed`` is a function of ``statistics`` and ``thresholds`` only; the
    ``checks`` map records each individual comparison that went into it.
    """

    test: str
    claim: str
    parameters: dict
    statistics: dict
    thresholds: dict
    passed: bool
    replicas: int
    seed: int | None = None
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    wall_clock: float | None = None

    def to_dict(self, include_time: bool = False) -> dict:
        d = asdict(self)
        if not include_time:
            d.pop("wall_clock")
        d["format_version"] = FORMAT_VERSION
        return _plain(d)

    def to_json(self, include_time: bool = False) -> str:
        return json.dumps(self.to_dict(include_time), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "StatReport":
        d = dict(d)
        d.pop("format_version", None)
        return cls(**d)

    def line(self) -> str:
        return f"{self.test}: {'PASS' if self.passed else 'FAIL'}"


def make_report(test, claim, parameters, statistics, checks, replicas, seed=None,
                thresholds=None, notes=None) -> StatReport:
    """Assemble a report whose verdict is the conjunction of ``checks``."""
    checks = {k: bool(v) for k, v in checks.items()}
    return StatReport(test, claim, parameters, statistics, thresholds or {},
                      all(checks.values()), int(replicas), seed, checks, list(notes or []))


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def require_replicas(n: int, minimum: int = 100, what: str = "test"):
    if n < minimum:
        raise InsufficientDataError(f"{what} needs at least {minimum} replicas, got {n}")


def survival(values, m):
    """Empirical ``P(X >= m)`` at each entry of ``m``."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    m = np.asarray(m, dtype=float)
    return 1.0 - np.searchsorted(v, m, side="left") / v.size


def tail_fit(values, power: float, lower_quantile: float = 0.5, min_tail: int = 10):
    """Fit ``log P(X >= m) ~ a + slope * m**power`` over the upper tail.

    The fit uses the order statistics between ``lower_quantile`` and the point
    where fewer than ``min_tail`` observations remain, so the noisy extreme
    order statistics do not dominate.  Returns ``(slope, intercept, n_points)``.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    n = v.size
    lo = int(math.floor(lower_quantile * n))
    hi = n - min_tail
    if hi - lo < 3:
        raise InsufficientDataError(f"tail fit needs more data ({n} values)")
    idx = np.arange(lo, hi)
    x = np.maximum(v[idx], 0.0) ** power
    y = np.log((n - idx) / n)
    if np.ptp(x) == 0:
        return 0.0, float(y.mean()), idx.size
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept), idx.size


def is_nonincreasing(seq, tol: float = 0.0) -> bool:
    seq = np.asarray(seq, dtype=float)
    return bool(np.all(np.diff(seq) <= tol))


def ks_two_sample(a, b, alternative: str = "two-sided"):
    r = sps.ks_2samp(np.asarray(a, float).ravel(), np.asarray(b, float).ravel(),
                     alternative=alternative)
    return float(r.statistic), float(r.pvalue)


def ks_distance(sample, cdf) -> float:
    """Kolmogorov distance between an empirical sample and a vectorised CDF."""
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def bonferroni(level: float, n_tests: int) -> float:
    return level / max(1, n_tests)


def mean_with_error(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
