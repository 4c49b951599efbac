"""
Synthetic Corpus Module
Deterministic generator of publication corpora with known structure, and the
brute-force oracles the tests check the fast code paths against
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, stats

from config import TRAJECTORY_LENGTH
from corpus import Publication
from errors import ConfigError, DegeneracyError
from ols import DesignMatrix
from pool import parallel_map

logger = logging.getLogger(__name__)


def _normalized(weights):
    weights = np.asarray(weights, dtype=float)
    return tuple(float(w) for w in weights / weights.sum())


# Fraction of lifetime citations arriving in each year 0..9
PRESETS = {
    # peak in the second year after publication
    'fast-peak': _normalized((0.06, 0.20, 0.19, 0.15, 0.11, 0.09, 0.07, 0.055, 0.045, 0.03)),
    # mathematics-like: citations collected very slowly
    'slow': _normalized((0.01, 0.03, 0.05, 0.08, 0.10, 0.12, 0.14, 0.15, 0.16, 0.16)),
    'instant': (1.0,) + (0.0,) * (TRAJECTORY_LENGTH - 1),
}


@dataclass(frozen=True)
class ScProfile:
    """
    Citation behaviour of one synthetic subject category.

    Lifetime counts are round(exp(N(m_j, sigma))) where m_j is the mean latent
    impact of the hosting journal, m_j ~ N(mu, journal_sigma). Journal IF is
    if_scale + if_spread * (rho * z_j + (1 - rho) * noise_j) with z_j the
    standardised journal impact, plus if_noise * N(0, 1) jitter drawn after
    every citation draw, floored at 5% of if_scale.
    """

    sc_id: str
    accrual: Tuple[float, ...] = PRESETS['fast-peak']
    mu: float = 2.5
    sigma: float = 1.0
    rho: float = 0.8
    n_journals: int = 20
    journal_sigma: float = 0.5
    if_scale: float = 2.0
    if_spread: float = 0.6
    if_noise: float = 0.0                          # extra per-journal IF jitter, unrelated to impact
    accrual_concentration: Optional[float] = 50.0  # Dirichlet perturbation per publication; None = exact
    allocation: str = 'multinomial'                # or 'rounded' (largest remainder)

    def validate(self):
        accrual = np.asarray(self.accrual, dtype=float)
        if accrual.shape != (TRAJECTORY_LENGTH,):
            raise ConfigError(f"{self.sc_id}: accrual profile needs {TRAJECTORY_LENGTH} fractions")
        if np.any(accrual < 0) or abs(accrual.sum() - 1.0) > 1e-12:
            raise ConfigError(f"{self.sc_id}: accrual fractions must be nonnegative and sum to 1")
        if not self.sigma > 0:
            raise ConfigError(f"{self.sc_id}: sigma must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"{self.sc_id}: rho must lie in [0, 1]")
        if (self.n_journals < 1 or self.journal_sigma < 0 or self.if_scale <= 0 or self.if_spread < 0
                or self.if_noise < 0):
            raise ConfigError(f"{self.sc_id}: invalid journal parameters")
        if self.accrual_concentration is not None and not self.accrual_concentration > 0:
            raise ConfigError(f"{self.sc_id}: accrual concentration must be positive")
        if self.allocation not in ('multinomial', 'rounded'):
            raise ConfigError(f"{self.sc_id}: unknown allocation '{self.allocation}'")
        return self


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    n_pubs: int
    profiles: Tuple[ScProfile, ...]
    years: Tuple[int, ...] = (2004, 2005, 2006)

    def validate(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError('seed must be a 64-bit unsigned integer')
        if self.n_pubs < 1 or not self.profiles or not self.years:
            raise ConfigError('generator needs publications, profiles and years')
        if len({p.sc_id for p in self.profiles}) != len(self.profiles):
            raise ConfigError('duplicate SC ids in generator profiles')
        for profile in self.profiles:
            profile.validate()
        return self


def preset_profile(name, sc_id, **overrides):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}', expected one of {sorted(PRESETS)}")
    return ScProfile(sc_id=sc_id, accrual=PRESETS[name], **overrides)


def default_profiles(n_sc, preset=None, **overrides):
    """SC01..SCnn alternating fast-peak and slow accrual unless a preset is forced"""
    names = [preset] if preset else ['fast-peak', 'slow']
    return tuple(preset_profile(names[i % len(names)], f'SC{i + 1:02d}', **overrides) for i in range(n_sc))


def _allocate_rounded(lifetime, shares):
    """Largest-remainder rounding of lifetime * shares; rows keep their totals"""
    raw = lifetime[:, None] * shares
    base = np.floor(raw).astype(np.int64)
    remainder = lifetime - base.sum(axis=1)
    order = np.argsort(-(raw - base), axis=1, kind='stable')
    position = np.empty_like(order)
    np.put_along_axis(position, order, np.arange(shares.shape[1])[None, :].repeat(len(shares), axis=0), axis=1)
    return base + (position < remainder[:, None])


def _generate_sc(task, n_pubs, years):
    profile, seed_sequence = task
    rng = np.random.Generator(np.random.PCG64(seed_sequence))
    accrual = np.asarray(profile.accrual, dtype=float)

    z = rng.standard_normal(profile.n_journals)
    noise = rng.standard_normal(profile.n_journals)
    journal_means = profile.mu + profile.journal_sigma * z
    impact_factors = profile.if_scale + profile.if_spread * (profile.rho * z + (1.0 - profile.rho) * noise)
    impact_factors = np.maximum(impact_factors, 0.05 * profile.if_scale)

    journals = rng.integers(profile.n_journals, size=n_pubs)
    pub_years = rng.choice(np.asarray(years), size=n_pubs)
    latent = rng.normal(journal_means[journals], profile.sigma)
    lifetime = np.rint(np.exp(latent)).astype(np.int64)

    shares = np.tile(accrual, (n_pubs, 1))
    if profile.accrual_concentration is not None:
        positive = accrual > 0
        shares = np.zeros((n_pubs, TRAJECTORY_LENGTH))
        shares[:, positive] = rng.dirichlet(profile.accrual_concentration * accrual[positive], size=n_pubs)
    shares = shares / shares.sum(axis=1, keepdims=True)

    if profile.allocation == 'multinomial':
        yearly = rng.multinomial(lifetime, shares)
    else:
        yearly = _allocate_rounded(lifetime, shares)
    trajectories = np.cumsum(yearly, axis=1)
    if profile.if_noise > 0:
        jitter = profile.if_noise * rng.standard_normal(profile.n_journals)
        impact_factors = np.maximum(impact_factors + jitter, 0.05 * profile.if_scale)

    return [
        Publication(
            id=f'{profile.sc_id}-{i:06d}',
            pub_year=int(pub_years[i]),
            journal_id=f'{profile.sc_id}-J{journals[i]:03d}',
            impact_factor=float(impact_factors[journals[i]]),
            sc_ids=(profile.sc_id,),
            citations=tuple(int(c) for c in trajectories[i]),
        )
        for i in range(n_pubs)
    ]


def generate_corpus(config: GeneratorConfig, workers=1):
    """Publications for every SC profile, one independent PCG64 stream per SC"""
    config.validate()
    streams = np.random.SeedSequence(config.seed).spawn(len(config.profiles))
    chunks = parallel_map(_generate_sc, list(zip(config.profiles, streams)), workers=workers,
                          n_pubs=config.n_pubs, years=tuple(config.years))
    publications = [pub for chunk in chunks for pub in chunk]
    logger.info(f"Generated {len(publications)} publications in {len(config.profiles)} SCs (seed={config.seed})")
    return publications


def generate_regression_design(n, coefficients=(0.1, 0.3, 1.1), seed=0, heteroskedastic=True, noise=0.5):
    """Draw (x, y_t, y_long) straight from the two-regressor model; noise sd grows with x when heteroskedastic"""
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.gamma(2.0, 0.5, size=n)
    y_t = rng.lognormal(0.0, 0.8, size=n)
    sd = noise * (0.5 + x) if heteroskedastic else np.full(n, noise)
    b0, b1, b2 = coefficients
    y_long = b0 + b1 * x + b2 * y_t + sd * rng.standard_normal(n)
    return DesignMatrix.build(y_long, x=x, y_t=y_t)


# Oracles: straightforward dense or brute-force reference computations

def oracle_fit(design, response=None):
    """Normal equations by explicit inversion of X'X"""
    X = design.matrix if isinstance(design, DesignMatrix) else np.asarray(design, dtype=float)
    y = design.response if response is None else np.asarray(response, dtype=float)
    xtx = X.T @ X
    try:
        return np.linalg.inv(xtx) @ (X.T @ y)
    except np.linalg.LinAlgError:
        raise DegeneracyError("singular X'X")


def oracle_hat_diagonal(X):
    return np.diag(X @ np.linalg.inv(X.T @ X) @ X.T)


def oracle_sandwich(X, residuals, hc3=True):
    """Dense (X'X)^-1 X' D X (X'X)^-1 with D an explicit n x n diagonal matrix"""
    X = np.asarray(X, dtype=float)
    bread = np.linalg.inv(X.T @ X)
    h = oracle_hat_diagonal(X)
    weights = residuals ** 2 / (1.0 - h) ** 2 if hc3 else residuals ** 2
    D = np.diag(weights)
    return bread @ X.T @ D @ X @ bread


def oracle_breusch_pagan(X, y):
    """Two-stage LM: OLS, then n * R^2 of e^2 on the same regressors"""
    b = oracle_fit(X, y)
    u2 = (y - X @ b) ** 2
    g = oracle_fit(X, u2)
    fitted = X @ g
    r2 = 1.0 - np.sum((u2 - fitted) ** 2) / np.sum((u2 - u2.mean()) ** 2)
    return len(y) * r2


def oracle_quantiles(records, q):
    """records: (c_t, pub_id, sc) of cited observations -> {(pub_id, sc): stratum}"""
    ordered = sorted(records)
    n = len(ordered)
    labels = {}
    for j in range(1, q + 1):
        low, high = -(-(j - 1) * n // q), -(-j * n // q)
        for c, pub_id, sc in ordered[low:high]:
            labels[(pub_id, sc)] = j
    return labels


def t_density(x, df):
    log_norm = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(log_norm - (df + 1) / 2 * math.log1p(x * x / df))


def chi2_density(x, df):
    if x <= 0:
        return 0.0
    return math.exp((df / 2 - 1) * math.log(x) - x / 2 - (df / 2) * math.log(2) - math.lgamma(df / 2))


def t_two_sided_quadrature(t, df):
    """2 * P(T > |t|) by integrating the density"""
    tail, _ = integrate.quad(t_density, abs(t), np.inf, args=(df,), epsabs=1e-14, epsrel=1e-12, limit=200)
    return 2.0 * tail


def chi2_sf_quadrature(x, df):
    tail, _ = integrate.quad(chi2_density, x, np.inf, args=(df,), epsabs=1e-14, epsrel=1e-12, limit=200)
    return tail


def lognormal_ks_statistic(counts, mu, sigma):
    """
    Kolmogorov-Smirnov distance between rounded counts and round(LogNormal(mu, sigma)):
    P(round(X) <= k) = P(X < k + 0.5)
    """
    counts = np.sort(np.asarray(counts))
    k = np.arange(0, counts[-1] + 1)
    empirical = np.searchsorted(counts, k, side='right') / len(counts)
    model = stats.lognorm.cdf(k + 0.5, s=sigma, scale=math.exp(mu))
    return float(np.max(np.abs(empirical - model)))
