"""Pairwise comparison pipeline with Vargha-Delaney effect sizes.

Normality is checked per sample (Shapiro-Wilk). Two normal samples go to
Levene's test (mean-centred) and then one-way ANOVA or Welch's t-test;
otherwise Kruskal-Wallis is used.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

ALPHA = 0.05
MAGNITUDE_BOUNDS = ((0.06, "none"), (0.14, "small"), (0.21, "medium"))
MAGNITUDE_ORDER = ("none", "small", "medium", "large")
SYMBOLS = {"lower": "<", "equal": "=", "higher": ">"}


def _sample(x: Sequence[float], name: str, min_size: int = 1) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64).ravel()
    if a.size < min_size:
        raise ValueError(f"{name} needs at least {min_size} values, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def vargha_delaney_a(x: Sequence[float], y: Sequence[float]) -> float:
    """P(X > Y) + 0.5 P(X = Y), from the rank sum of ``x`` in the pooled sample."""
    a = _sample(x, "sample_x")
    b = _sample(y, "sample_y")
    m, n = a.size, b.size
    ranks = sps.rankdata(np.concatenate([a, b]))
    r1 = float(ranks[:m].sum())
    return (r1 - m * (m + 1) / 2.0) / (m * n)


def magnitude(a: float) -> str:
    d = abs(a - 0.5)
    for bound, label in MAGNITUDE_BOUNDS:
        if d < bound:
            return label
    return "large"


def at_least(level: str, floor: str) -> bool:
    return MAGNITUDE_ORDER.index(level) >= MAGNITUDE_ORDER.index(floor)


@dataclass(frozen=True)
class StatReport:
    comparison: str
    normality_a: float
    normality_b: float
    variance_test: float | None
    chosen_test: str
    p_value: float
    significant: bool
    vd_a: float
    magnitude: str
    direction: str

    @property
    def symbol(self) -> str:
        return SYMBOLS[self.direction]

    def row(self) -> dict[str, object]:
        return {"comparison": self.comparison, "direction": self.symbol,
                "p_value": self.p_value, "significant": self.significant,
                "test": self.chosen_test, "A": self.vd_a, "magnitude": self.magnitude,
                "normality_a": self.normality_a, "normality_b": self.normality_b,
                "levene": self.variance_test}


def _shapiro(a: np.ndarray) -> float:
    # a constant sample carries no evidence against normality
    if np.ptp(a) == 0.0:
        return 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # near-zero range
        return float(sps.shapiro(a).pvalue)


def _degenerate(a: np.ndarray, b: np.ndarray) -> float | None:
    """p-value when both samples are constant (tests are undefined there)."""
    if np.ptp(a) == 0.0 and np.ptp(b) == 0.0:
        return 1.0 if a[0] == b[0] else 0.0
    return None


def compare(x: Sequence[float], y: Sequence[float], alpha: float = ALPHA,
            comparison: str = "x vs y") -> StatReport:
    """Run the test decision tree on two samples and report direction of ``x`` relative to ``y``."""
    a = _sample(x, "sample_x", 3)
    b = _sample(y, "sample_y", 3)
    pa, pb = _shapiro(a), _shapiro(b)
    levene_p = None
    if pa < alpha or pb < alpha:
        test = "Kruskal-Wallis"
        p = _degenerate(a, b)
        if p is None:
            p = float(sps.kruskal(a, b).pvalue) if np.ptp(np.concatenate([a, b])) > 0 else 1.0
    else:
        p = _degenerate(a, b)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lev = sps.levene(a, b, center="mean").pvalue
        levene_p = 1.0 if math.isnan(lev) else float(lev)
        if levene_p >= alpha:
            test = "ANOVA"
            if p is None:
                p = float(sps.f_oneway(a, b).pvalue)
        else:
            test = "Welch"
            if p is None:
                p = float(sps.ttest_ind(a, b, equal_var=False).pvalue)
    if math.isnan(p):
        p = 1.0
    significant = p < alpha
    vd = vargha_delaney_a(a, b)
    direction = "equal"
    if significant:
        ma, mb = float(np.median(a)), float(np.median(b))
        if ma != mb:
            direction = "higher" if ma > mb else "lower"
        elif vd != 0.5:
            direction = "higher" if vd > 0.5 else "lower"
    return StatReport(comparison, pa, pb, levene_p, test, p, significant, vd, magnitude(vd), direction)
