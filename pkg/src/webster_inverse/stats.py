"""Paired comparison of per-realisation errors of two reconstruction methods.

Differences are ``d_i = e_i(KLO) - e_i(SG)``, so negative values favour KLO.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special, stats

from .errors import PairingError, ParameterError

EXACT_WILCOXON_MAX_N = 25
TABLE_COLUMNS = (
    "delta", "metric", "mean_sg", "mean_klo", "ratio", "win_rate",
    "p_t", "p_wilcoxon", "cohen_d", "r_rb", "ci_lo", "ci_hi",
)  # fmt: skip


@dataclass
class TTest:
    t: float
    p: float
    ci95: tuple
    mean: float
    sd: float
    degenerate: bool = False


@dataclass
class WilcoxonResult:
    w_plus: float
    w_minus: float
    p: float
    n: int
    method: str
    degenerate: bool = False


def _as_diffs(d):
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise ParameterError("need at least two paired differences")
    if not np.all(np.isfinite(d)):
        raise ParameterError("paired differences must be finite")
    return d


def student_t_sf(t, df):
    """``P(T > t)`` for Student's t, through the regularised incomplete beta function."""
    x = df / (df + t * t)
    tail = 0.5 * special.betainc(0.5 * df, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


def paired_t(d):
    """One-sample t-test of ``mean(d) = 0`` with a two-sided p and a 95% CI."""
    d = _as_diffs(d)
    n = d.size
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0 or not np.isfinite(sd):
        return TTest(float("nan"), float("nan"), (mean, mean), mean, sd, degenerate=True)
    se = sd / math.sqrt(n)
    t = mean / se
    p = min(1.0, 2.0 * student_t_sf(abs(t), n - 1))
    q = float(stats.t.ppf(0.975, n - 1))
    return TTest(t, p, (mean - q * se, mean + q * se), mean, sd)


def signed_ranks(d):
    """Average ranks of ``|d|`` after dropping zeros; returns ``(ranks, signs)``."""
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    ranks = stats.rankdata(np.abs(d))
    return ranks, np.sign(d)


def _exact_upper_tail(ranks, w_plus):
    """``P(W+ >= w_plus)`` and ``P(W+ <= w_plus)`` over all ``2**n`` sign patterns.

    Average ranks are multiples of 1/2, so doubling makes them integers and
    the sign-pattern count follows from a subset-sum recursion.
    """
    r2 = np.rint(2 * ranks).astype(int)
    total = int(r2.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in r2:
        counts[r:] = counts[r:] + counts[: total + 1 - r].copy()
    probs = counts / counts.sum()
    w2 = int(round(2 * w_plus))
    return probs[w2:].sum(), probs[: w2 + 1].sum()


def wilcoxon(d, method="auto"):
    """Wilcoxon signed-rank test with Pratt zero-dropping and average ranks.

    ``method='auto'`` enumerates exactly for ``n < 25`` nonzero differences
    and uses the normal approximation (tie and continuity corrected)
    otherwise; ``'exact'`` or ``'normal'`` force one path.
    """
    d = np.asarray(d, dtype=float)
    ranks, signs = signed_ranks(d)
    n = ranks.size
    if n == 0:
        return WilcoxonResult(0.0, 0.0, float("nan"), 0, "none", degenerate=True)
    w_plus = float(ranks[signs > 0].sum())
    w_minus = float(ranks[signs < 0].sum())
    if method == "auto":
        method = "exact" if n < EXACT_WILCOXON_MAX_N else "normal"
    if method == "exact":
        upper, lower = _exact_upper_tail(ranks, w_plus)
        p = min(1.0, 2.0 * min(upper, lower))
    elif method == "normal":
        mu = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
        if var <= 0:
            return WilcoxonResult(w_plus, w_minus, float("nan"), n, method, degenerate=True)
        z = max(abs(w_plus - mu) - 0.5, 0.0) / math.sqrt(var)
        p = min(1.0, 2.0 * float(stats.norm.sf(z)))
    else:
        raise ParameterError(f"unknown method {method!r}")
    return WilcoxonResult(w_plus, w_minus, p, n, method)


def effect_sizes(d):
    """Cohen's ``d = mean/sd`` and the rank-biserial ``(W+ - W-)/(W+ + W-)``."""
    d = _as_diffs(d)
    sd = d.std(ddof=1)
    cohen = float(d.mean() / sd) if sd > 0 else float("nan")
    w = wilcoxon(d)
    total = w.w_plus + w.w_minus
    r_rb = (w.w_plus - w.w_minus) / total if total > 0 else float("nan")
    return cohen, r_rb


def win_rate(d):
    """Fraction of ``d < 0``, ties counted as one half."""
    d = np.asarray(d, dtype=float)
    return float((np.sum(d < 0) + 0.5 * np.sum(d == 0)) / d.size)


@dataclass
class StatReport:
    delta: float
    metric: str
    n: int
    mean_sg: float
    mean_klo: float
    ratio: float
    mean_diff: float
    ci_lo: float
    ci_hi: float
    t: float
    p_t: float
    w_plus: float
    w_minus: float
    p_wilcoxon: float
    cohen_d: float
    r_rb: float
    win_rate: float
    degenerate: bool = False

    def as_dict(self):
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(self).items()}


def compare(sg, klo, metric="", delta=0.0):
    """:class:`StatReport` for matched error arrays ``sg`` and ``klo``."""
    sg = np.asarray(sg, dtype=float)
    klo = np.asarray(klo, dtype=float)
    d = klo - sg
    n = d.size
    mean_sg, mean_klo = float(sg.mean()), float(klo.mean())
    ratio = mean_klo / mean_sg if mean_sg != 0 else float("nan")
    nan = float("nan")
    if n < 2:
        m = float(d.mean()) if n else nan
        return StatReport(delta, metric, n, mean_sg, mean_klo, ratio, m, nan, nan, nan, nan,
                          nan, nan, nan, nan, nan, win_rate(d) if n else nan, degenerate=True)  # fmt: skip
    tt = paired_t(d)
    w = wilcoxon(d)
    cohen, r_rb = effect_sizes(d)
    return StatReport(
        delta, metric, n, mean_sg, mean_klo, ratio, tt.mean, tt.ci95[0], tt.ci95[1], tt.t, tt.p,
        w.w_plus, w.w_minus, w.p, cohen, r_rb, win_rate(d), degenerate=tt.degenerate or w.degenerate,
    )


def summarize(records, metrics=("h1_rel", "l2_rel"), methods=("sg", "klo")):
    """One :class:`StatReport` per ``(delta, metric)`` from matched error records.

    Records are paired by realisation index; a realisation present for one
    method but not the other raises :class:`PairingError`.
    """
    sg_tag, klo_tag = methods
    groups = defaultdict(dict)
    for rec in records:
        if rec.method not in methods:
            raise ParameterError(f"unexpected method tag {rec.method!r}")
        slot = groups[rec.delta].setdefault(rec.realisation, {})
        if rec.method in slot:
            raise PairingError(f"duplicate {rec.method} record for realisation {rec.realisation}", index=rec.realisation)
        slot[rec.method] = rec
    reports = []
    for delta in sorted(groups):
        pairs = groups[delta]
        for idx in sorted(pairs):
            if len(pairs[idx]) != 2:
                raise PairingError(f"realisation {idx} at delta={delta} has no matching pair", index=idx)
        order = sorted(pairs)
        for metric in metrics:
            sg = [getattr(pairs[i][sg_tag], metric) for i in order]
            klo = [getattr(pairs[i][klo_tag], metric) for i in order]
            reports.append(compare(sg, klo, metric, delta))
    return reports


def table_rows(reports):
    """Rows for the summary CSV, columns :data:`TABLE_COLUMNS`."""
    return [[getattr(r, c) for c in TABLE_COLUMNS] for r in reports]
