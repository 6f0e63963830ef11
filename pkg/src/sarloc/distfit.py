"""Per-zone demand statistics: autocorrelation screening, count-distribution
fitting, goodness-of-fit testing, and empirical response models.

Monthly event counts are modeled either as Poisson or, when over-dispersed,
as Gamma-Poisson (negative binomial): the count is Poisson with a rate that
is itself Gamma(alpha, beta)-distributed, giving mean alpha*beta and variance
alpha*beta*(1+beta).  Both fits share the sample mean, so the fitted Poisson
rate always equals alpha*beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .ingest import EventRecord, StudyWindow

MARITIME_CAP = 4  # largest maritime response the fleet models support
AERO_CAP = 2

MIN_EXPECTED_PER_BIN = 5.0  # classic Pearson rule for merging sparse bins


@dataclass(frozen=True)
class MonthlySeries:
    """Ordered per-calendar-month event counts for one zone."""

    zone_id: str
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError(f"{self.zone_id}: negative monthly count")

    @property
    def mean(self) -> float:
        return float(np.mean(self.counts))

    @property
    def variance(self) -> float:
        """Unbiased sample variance (the moment estimator used by the fits)."""
        if len(self.counts) < 2:
            return 0.0
        return float(np.var(self.counts, ddof=1))


def monthly_series(
    zone_id: str,
    member_events: Sequence[EventRecord],
    window: StudyWindow,
) -> MonthlySeries:
    """Count a zone's events per calendar month, including empty months."""
    counts = [0] * window.n_months
    for e in member_events:
        counts[window.month_index(e.timestamp)] += 1
    return MonthlySeries(zone_id, tuple(counts))


def autocorrelation(series: "MonthlySeries | Sequence[float]", lag_k: int) -> float:
    """Sample autocorrelation at lag ``lag_k``.

    Defined as sum_{t>k} (y_t - ybar)(y_{t-k} - ybar) divided by the
    full-sample sum of squared deviations, so the value lies in [-1, 1].
    """
    y = np.asarray(getattr(series, "counts", series), dtype=float)
    n = len(y)
    if not 1 <= lag_k < n:
        raise ValueError(f"lag {lag_k} must satisfy 1 <= lag < {n}")
    centered = y - y.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        raise ValueError("autocorrelation undefined for a constant series")
    num = float(centered[lag_k:] @ centered[:-lag_k])
    return num / denom


# ------------------------- count distributions -------------------------


class DistributionKind(Enum):
    POISSON = "poisson"
    GAMMA_POISSON = "gamma_poisson"


@dataclass(frozen=True)
class CountDistribution:
    """A fitted monthly count model (Poisson or Gamma-Poisson mixture)."""

    kind: DistributionKind
    lam: float
    alpha: float | None = None
    beta: float | None = None
    gof_p_poisson: float | None = None
    gof_p_gamma_poisson: float | None = None
    degenerate: bool = False  # all-zero series, lam == 0

    def __post_init__(self) -> None:
        if self.lam < 0.0:
            raise ValueError("rate must be non-negative")
        if self.kind is DistributionKind.GAMMA_POISSON:
            if self.alpha is None or self.beta is None or self.alpha <= 0.0 or self.beta <= 0.0:
                raise ValueError("gamma-poisson requires alpha > 0 and beta > 0")

    @property
    def mean(self) -> float:
        return self.lam

    @property
    def variance(self) -> float:
        if self.kind is DistributionKind.POISSON:
            return self.lam
        return self.alpha * self.beta * (1.0 + self.beta)

    def pmf(self, k: int) -> float:
        if self.kind is DistributionKind.POISSON:
            return poisson_pmf(k, self.lam)
        return gamma_poisson_pmf(k, self.alpha, self.beta)

    @property
    def n_fitted_params(self) -> int:
        return 1 if self.kind is DistributionKind.POISSON else 2

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "lam": self.lam,
            "alpha": self.alpha,
            "beta": self.beta,
            "gof_p_poisson": self.gof_p_poisson,
            "gof_p_gamma_poisson": self.gof_p_gamma_poisson,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "CountDistribution":
        return cls(
            kind=DistributionKind(obj["kind"]),
            lam=float(obj["lam"]),
            alpha=None if obj.get("alpha") is None else float(obj["alpha"]),
            beta=None if obj.get("beta") is None else float(obj["beta"]),
            gof_p_poisson=obj.get("gof_p_poisson"),
            gof_p_gamma_poisson=obj.get("gof_p_gamma_poisson"),
            degenerate=bool(obj.get("degenerate", False)),
        )


class OverdispersionError(ValueError):
    """Raised when a Gamma-Poisson fit is requested for data whose sample
    variance does not exceed its mean."""


def fit_poisson(series: MonthlySeries) -> CountDistribution:
    """Maximum-likelihood Poisson fit: the rate is the sample mean."""
    if not series.counts:
        raise ValueError("cannot fit an empty series")
    lam = series.mean
    return CountDistribution(DistributionKind.POISSON, lam, degenerate=(lam == 0.0))


def fit_gamma_poisson(series: MonthlySeries) -> CountDistribution:
    """Method-of-moments Gamma-Poisson fit.

    beta = (s^2 - m) / m and alpha = m / beta, which pins alpha*beta to the
    sample mean by construction.  Requires over-dispersion (s^2 > m).
    """
    if not series.counts:
        raise ValueError("cannot fit an empty series")
    m = series.mean
    s2 = series.variance
    if m <= 0.0 or s2 <= m:
        raise OverdispersionError(
            f"{series.zone_id}: Gamma-Poisson not applicable (mean {m:.4f}, variance {s2:.4f})"
        )
    beta = (s2 - m) / m
    alpha = m / beta
    return CountDistribution(DistributionKind.GAMMA_POISSON, lam=m, alpha=alpha, beta=beta)


def poisson_pmf(k: int, lam: float) -> float:
    if k < 0:
        return 0.0
    if lam == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))


def gamma_poisson_pmf(k: int, alpha: float, beta: float) -> float:
    """Negative binomial pmf with mean alpha*beta, variance alpha*beta*(1+beta)."""
    if k < 0:
        return 0.0
    log_p = (
        math.lgamma(k + alpha)
        - math.lgamma(alpha)
        - math.lgamma(k + 1)
        + alpha * math.log(1.0 / (1.0 + beta))
        + k * math.log(beta / (1.0 + beta))
    )
    return math.exp(log_p)


# --------------------- chi-squared goodness of fit ---------------------


def _regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).

    Series expansion below the a+1 crossover, Lentz continued fraction above;
    the usual pair of complementary evaluations keeps both branches stable.
    """
    if a <= 0.0 or x < 0.0:
        raise ValueError("requires a > 0 and x >= 0")
    if x == 0.0:
        return 1.0
    log_prefix = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        # Lower series: P(a, x) = e^-x x^a / Gamma(a) * sum_n x^n / (a)_{n+1}
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(1000):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return 1.0 - total * math.exp(log_prefix)
    # Continued fraction for Q(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return max(0.0, min(1.0, math.exp(log_prefix) * h))


def chi2_sf(statistic: float, df: int) -> float:
    """Survival function of the chi-squared distribution with ``df`` dof."""
    if df < 1:
        raise ValueError("chi-squared needs at least one degree of freedom")
    if statistic <= 0.0:
        return 1.0
    return _regularized_gamma_q(df / 2.0, statistic / 2.0)


def pearson_statistic(observed: Sequence[float], expected: Sequence[float]) -> float:
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.shape != exp.shape:
        raise ValueError("observed and expected must have the same length")
    if np.any(exp <= 0.0):
        raise ValueError("expected bin counts must be positive")
    return float(np.sum((obs - exp) ** 2 / exp))


@dataclass(frozen=True)
class GofResult:
    statistic: float | None
    df: int | None
    p_value: float | None
    n_bins: int
    inconclusive: bool = False
    reason: str | None = None

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "n_bins": self.n_bins,
            "inconclusive": self.inconclusive,
            "reason": self.reason,
        }


def _merged_bins(counts: Sequence[int], dist: CountDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Histogram the counts 0,1,2,... and merge sparse bins.

    The rightmost bin is open-ended (it absorbs the model's tail mass); any
    bin whose expected count falls below MIN_EXPECTED_PER_BIN is merged into
    its right neighbour (the last bin merges leftward) until all survive.
    """
    n = len(counts)
    kmax = int(max(counts))
    observed = np.bincount(np.asarray(counts, dtype=int), minlength=kmax + 1).astype(float)
    pmf = np.array([dist.pmf(k) for k in range(kmax + 1)])
    expected = pmf * n
    expected[-1] += max(0.0, 1.0 - pmf.sum()) * n  # open-ended tail bin

    obs_bins = list(observed)
    exp_bins = list(expected)
    i = 0
    while i < len(exp_bins):
        if exp_bins[i] >= MIN_EXPECTED_PER_BIN or len(exp_bins) == 1:
            i += 1
            continue
        if i + 1 < len(exp_bins):
            exp_bins[i + 1] += exp_bins[i]
            obs_bins[i + 1] += obs_bins[i]
            del exp_bins[i], obs_bins[i]
            # The merged bin now sits at index i; recheck it next pass.
        else:
            exp_bins[i - 1] += exp_bins[i]
            obs_bins[i - 1] += obs_bins[i]
            del exp_bins[i], obs_bins[i]
            i -= 1
    return np.array(obs_bins), np.array(exp_bins)


def chisq_gof(series: MonthlySeries, dist: CountDistribution) -> GofResult:
    """Pearson chi-squared test of ``dist`` against the observed counts.

    Degrees of freedom are bins - 1 - (number of fitted parameters).  With
    fewer than two merged bins, or no degrees of freedom left, the test is
    inconclusive rather than failed.
    """
    observed, expected = _merged_bins(series.counts, dist)
    n_bins = len(observed)
    df = n_bins - 1 - dist.n_fitted_params
    if n_bins < 2 or df < 1:
        return GofResult(None, None, None, n_bins, inconclusive=True,
                         reason=f"only {n_bins} bins after merging")
    statistic = pearson_statistic(observed, expected)
    return GofResult(statistic, df, chi2_sf(statistic, df), n_bins)


def select_distribution(series: MonthlySeries) -> CountDistribution:
    """Fit Poisson always and Gamma-Poisson when over-dispersed; keep the
    Gamma-Poisson only if its goodness-of-fit p-value is strictly better."""
    poisson = fit_poisson(series)
    gof_poisson = chisq_gof(series, poisson)
    try:
        gp = fit_gamma_poisson(series)
    except OverdispersionError:
        gp = None
    gof_gp = chisq_gof(series, gp) if gp is not None else None

    p_pois = gof_poisson.p_value
    p_gp = gof_gp.p_value if gof_gp is not None else None
    use_gp = gp is not None and p_gp is not None and (p_pois is None or p_gp > p_pois)
    chosen = gp if use_gp else poisson
    return CountDistribution(
        kind=chosen.kind,
        lam=chosen.lam,
        alpha=chosen.alpha,
        beta=chosen.beta,
        gof_p_poisson=p_pois,
        gof_p_gamma_poisson=p_gp,
        degenerate=poisson.degenerate,
    )


# --------------------------- response models ---------------------------


class ResponseStrategy(Enum):
    AIRCRAFT_ONLY = "aircraft_only"
    MARITIME_ONLY = "maritime_only"
    MARITIME_AND_AIRCRAFT = "maritime_and_aircraft"
    NO_RESPONSE = "no_response"


def _strategy_of(maritime: int, aero: int) -> ResponseStrategy:
    if maritime > 0 and aero > 0:
        return ResponseStrategy.MARITIME_AND_AIRCRAFT
    if maritime > 0:
        return ResponseStrategy.MARITIME_ONLY
    if aero > 0:
        return ResponseStrategy.AIRCRAFT_ONLY
    return ResponseStrategy.NO_RESPONSE


@dataclass(frozen=True)
class ResponseModel:
    """Empirical response behaviour of one zone.

    ``strategy_pmf`` covers all four strategies including no-response;
    ``level_pmf`` gives the joint probability of each capped
    (maritime, aero) pair, with (0, 0) carrying the no-response mass.
    """

    strategy_pmf: Mapping[ResponseStrategy, float]
    level_pmf: Mapping[tuple[int, int], float]
    n_events: int

    def __post_init__(self) -> None:
        for pmf in (self.strategy_pmf, self.level_pmf):
            total = sum(pmf.values())
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"pmf sums to {total!r}, not 1")
        for (m, a), p in self.level_pmf.items():
            if not (0 <= m <= MARITIME_CAP and 0 <= a <= AERO_CAP):
                raise ValueError(f"level ({m},{a}) breaches caps ({MARITIME_CAP},{AERO_CAP})")
            if p < 0.0:
                raise ValueError("negative probability")
        # The joint levels must marginalize back onto the strategies.
        for strategy in ResponseStrategy:
            mass = sum(
                p for (m, a), p in self.level_pmf.items() if _strategy_of(m, a) is strategy
            )
            if abs(mass - self.strategy_pmf.get(strategy, 0.0)) > 1e-12:
                raise ValueError(f"level mass {mass} inconsistent with {strategy}")

    def responding_strategy_pmf(self) -> dict[ResponseStrategy, float] | None:
        """Strategy probabilities renormalized over events that got assets."""
        responding = {
            s: p for s, p in self.strategy_pmf.items() if s is not ResponseStrategy.NO_RESPONSE
        }
        total = sum(responding.values())
        if total <= 0.0:
            return None
        return {s: p / total for s, p in responding.items()}

    def to_json(self) -> dict:
        renorm = self.responding_strategy_pmf()
        return {
            "n_events": self.n_events,
            "strategy_pmf": {s.value: p for s, p in self.strategy_pmf.items()},
            "responding_strategy_pmf": None
            if renorm is None
            else {s.value: p for s, p in renorm.items()},
            "level_pmf": [
                {"maritime": m, "aero": a, "p": p} for (m, a), p in sorted(self.level_pmf.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ResponseModel":
        return cls(
            strategy_pmf={ResponseStrategy(k): float(v) for k, v in obj["strategy_pmf"].items()},
            level_pmf={
                (int(lv["maritime"]), int(lv["aero"])): float(lv["p"]) for lv in obj["level_pmf"]
            },
            n_events=int(obj["n_events"]),
        )


def fit_response_model(zone_events: Sequence[EventRecord]) -> ResponseModel:
    """Relative response frequencies for a zone, with sorties capped at the
    fleet-wide maxima (a six-boat historical response counts as four)."""
    if not zone_events:
        raise ValueError("cannot fit a response model to an empty zone")
    strategy_counts: dict[ResponseStrategy, int] = {s: 0 for s in ResponseStrategy}
    level_counts: dict[tuple[int, int], int] = {}
    for e in zone_events:
        m = min(e.maritime_sorties, MARITIME_CAP)
        a = min(e.aero_sorties, AERO_CAP)
        strategy_counts[_strategy_of(m, a)] += 1
        level_counts[(m, a)] = level_counts.get((m, a), 0) + 1
    n = len(zone_events)
    return ResponseModel(
        strategy_pmf={s: c / n for s, c in strategy_counts.items()},
        level_pmf={pair: c / n for pair, c in level_counts.items()},
        n_events=n,
    )


# ------------------------------ fit report ------------------------------


@dataclass(frozen=True)
class ZoneFitReport:
    """Everything the simulation needs to know about one zone."""

    zone_id: str
    acf_12: float | None
    acf_24: float | None
    distribution: CountDistribution
    response: ResponseModel

    def to_json(self) -> dict:
        return {
            "zone_id": self.zone_id,
            "acf_12": self.acf_12,
            "acf_24": self.acf_24,
            "distribution": self.distribution.to_json(),
            "response": self.response.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ZoneFitReport":
        return cls(
            zone_id=obj["zone_id"],
            acf_12=obj.get("acf_12"),
            acf_24=obj.get("acf_24"),
            distribution=CountDistribution.from_json(obj["distribution"]),
            response=ResponseModel.from_json(obj["response"]),
        )


def fit_zone(
    zone_id: str,
    member_events: Sequence[EventRecord],
    window: StudyWindow,
) -> ZoneFitReport:
    """Full screening and fitting pipeline for one zone's members."""
    series = monthly_series(zone_id, member_events, window)

    def _acf(lag: int) -> float | None:
        try:
            return autocorrelation(series, lag)
        except ValueError:
            return None

    return ZoneFitReport(
        zone_id=zone_id,
        acf_12=_acf(12),
        acf_24=_acf(24),
        distribution=select_distribution(series),
        response=fit_response_model(member_events),
    )
