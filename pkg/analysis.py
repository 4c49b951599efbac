"""
Analysis Module
Regression sweeps per SC x window x variant, macro-area summaries, uncited
publication regressions, citedness stratification and prediction-error curves
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config import ALLOWED_QUANTILES, LONG_WINDOW
from corpus import observations_frame
from errors import (BaselineUnavailableError, DegeneracyError, QuantileAssignmentError,
                    UnmappedSubjectCategoryError, ValidationError)
from inference import robust_summary
from ols import DesignMatrix, fit_ols
from pool import parallel_map
from transforms import BaselineTable, build_samples

logger = logging.getLogger(__name__)

ALL = 'ALL'
SIGNIFICANCE_FILTER = 0.1

RESULT_COLUMNS = ['subset', 'variant', 't', 'n',
                  'b0', 'se0', 'p0', 'stars0',
                  'b1', 'se1', 'p1', 'stars1',
                  'b2', 'se2', 'p2', 'stars2',
                  'r2', 'bp_stat', 'bp_p', 'skip_reason']
ERROR_COLUMNS = ['variant', 't', 'bin', 'n', 'median_E']


@dataclass(frozen=True)
class FitResult:
    """One regression of y_long on (x, y_t) or on x alone for a subset, variant and window"""

    subset: str
    variant: str
    t: int
    n: int = 0
    coefficients: Tuple[Optional[float], ...] = (None, None, None)
    std_errors: Tuple[Optional[float], ...] = (None, None, None)
    p_values: Tuple[Optional[float], ...] = (None, None, None)
    stars: Tuple[str, ...] = ('', '', '')
    r2: Optional[float] = None
    bp_stat: Optional[float] = None
    bp_p: Optional[float] = None
    skip_reason: str = ''
    # Not part of results.csv
    note: str = field(default='', compare=False)
    n_dropped: int = field(default=0, compare=False)

    @property
    def skipped(self):
        return bool(self.skip_reason)

    @property
    def sort_key(self):
        return (self.subset, self.variant, self.t)

    def to_row(self):
        row = {'subset': self.subset, 'variant': self.variant, 't': self.t, 'n': self.n}
        for j in range(3):
            row[f'b{j}'] = self.coefficients[j]
            row[f'se{j}'] = self.std_errors[j]
            row[f'p{j}'] = self.p_values[j]
            row[f'stars{j}'] = self.stars[j]
        row.update(r2=self.r2, bp_stat=self.bp_stat, bp_p=self.bp_p, skip_reason=self.skip_reason)
        return row

    @classmethod
    def from_row(cls, row):
        def number(value):
            return None if value is None or (isinstance(value, float) and math.isnan(value)) or value == '' \
                else float(value)

        def text(value):
            return '' if value is None or (isinstance(value, float) and math.isnan(value)) else str(value)

        return cls(
            subset=str(row['subset']),
            variant=str(row['variant']),
            t=int(row['t']),
            n=int(row['n']),
            coefficients=tuple(number(row[f'b{j}']) for j in range(3)),
            std_errors=tuple(number(row[f'se{j}']) for j in range(3)),
            p_values=tuple(number(row[f'p{j}']) for j in range(3)),
            stars=tuple(text(row[f'stars{j}']) for j in range(3)),
            r2=number(row['r2']),
            bp_stat=number(row['bp_stat']),
            bp_p=number(row['bp_p']),
            skip_reason=text(row['skip_reason']),
        )


@dataclass(frozen=True)
class MacroAreaSummary:
    """Per macro-area statistics; None marks an unavailable statistic"""

    area: str
    variant: str
    t: int
    n_sc: int
    n_if_significant: int
    if_min: Optional[float] = None
    if_max: Optional[float] = None
    if_mean: Optional[float] = None
    if_std: Optional[float] = None
    ec_min: Optional[float] = None
    ec_max: Optional[float] = None
    ec_mean: Optional[float] = None
    ec_std: Optional[float] = None
    r2_mean: Optional[float] = None
    r2_std: Optional[float] = None


@dataclass(frozen=True)
class StratumAssignment:
    """Quantile index 1..q of every cited observation at window t"""

    t: int
    q: int
    strata: pd.DataFrame            # columns pub_id, sc, stratum
    uncited: frozenset = frozenset()  # (pub_id, sc) keys with c_t = 0

    def sizes(self):
        counts = self.strata['stratum'].value_counts()
        return tuple(int(counts.get(j, 0)) for j in range(1, self.q + 1))


@dataclass(frozen=True)
class ErrorSummary:
    """Median relative prediction error per (variant, t, bin); bin 'ALL' is the overall row"""

    rows: pd.DataFrame

    def median(self, variant, t, bin_label):
        match = self.rows[(self.rows['variant'] == variant) & (self.rows['t'] == t)
                          & (self.rows['bin'] == str(bin_label))]
        if match.empty:
            raise KeyError((variant, t, bin_label))
        return float(match['median_E'].iloc[0])

    def bins(self, variant, t):
        subset = self.rows[(self.rows['variant'] == variant) & (self.rows['t'] == t)
                           & (self.rows['bin'] != ALL)]
        return subset['median_E'].to_numpy(dtype=float)


def _skipped(subset, variant, t, n, reason):
    logger.debug(f"Skipped {subset}/{variant}/t={t}: {reason}")
    return FitResult(subset=subset, variant=variant, t=t, n=n, skip_reason=reason)


def fit_samples(samples, subset, variant, t, if_only=False) -> FitResult:
    """Fit the two-regressor model (or the IF-only model) on a sample frame with HC3 inference"""
    n = len(samples)
    regressors = {'x': samples['x'].to_numpy()}
    if not if_only:
        regressors['y_t'] = samples['y_t'].to_numpy()
    try:
        design = DesignMatrix.build(samples['y_long'].to_numpy(), **regressors)
        if design.n <= design.p:
            return _skipped(subset, variant, t, n, f"insufficient data: {n} observations for {design.p} coefficients")
        fit = fit_ols(design)
        summary = robust_summary(fit, design)
    except DegeneracyError as e:
        return _skipped(subset, variant, t, n, str(e))

    notes = []
    if fit.degenerate:
        notes.append('constant response')
    flagged = [f'b{j}' for j, d in enumerate(summary.degenerate_se) if d]
    if flagged:
        notes.append(f"zero standard error on {', '.join(flagged)}")

    pad = 3 - fit.p
    return FitResult(
        subset=subset,
        variant=variant,
        t=t,
        n=n,
        coefficients=tuple(float(b) for b in summary.estimates) + (None,) * pad,
        std_errors=tuple(float(s) for s in summary.std_errors) + (None,) * pad,
        p_values=tuple(float(p) for p in summary.p_values) + (None,) * pad,
        stars=summary.stars + ('',) * pad,
        r2=fit.r_squared,
        bp_stat=summary.bp_statistic,
        bp_p=summary.bp_pvalue,
        note='; '.join(notes),
    )


def _as_frame(obs):
    return obs if isinstance(obs, pd.DataFrame) else observations_frame(obs)


def _sweep_sc(task, variants, t_range, long_window, if_regressor):
    sc, frame, table = task
    results = []
    for variant in variants:
        for t in t_range:
            samples = build_samples(frame, table, variant, t, long_window=long_window,
                                    if_regressor=if_regressor, drop_unavailable=True)
            if len(samples) == 0:
                try:
                    build_samples(frame, table, variant, t, long_window=long_window, if_regressor=if_regressor)
                    reason = 'no observations'
                except BaselineUnavailableError as e:
                    reason = str(e)
                results.append(_skipped(sc, variant, t, len(frame), reason))
                continue
            fit = fit_samples(samples, sc, variant, t)
            dropped = len(frame) - len(samples)
            if dropped:
                years = sorted(set(frame['year']) - set(samples['year']))
                note = f"dropped {dropped} observations without baselines (years {', '.join(map(str, years))})"
                fit = replace(fit, n_dropped=dropped, note='; '.join(filter(None, [note, fit.note])))
            results.append(fit)
    return results


def run_sc_sweep(groups, table, variants, t_range, long_window=LONG_WINDOW, if_regressor='rescaled',
                 workers=1) -> List[FitResult]:
    """One FitResult per (SC, variant, t); failures come back as skipped entries"""
    if isinstance(variants, str):
        variants = (variants,)
    tasks = []
    for sc in sorted(groups):
        frame = _as_frame(groups[sc])
        sc_table = BaselineTable(table.frame[table.frame['sc'] == sc])
        tasks.append((sc, frame, sc_table))
    logger.info(f"Sweeping {len(tasks)} SCs x {len(variants)} variants x {len(t_range)} windows")
    nested = parallel_map(_sweep_sc, tasks, workers=workers, variants=tuple(variants),
                          t_range=tuple(t_range), long_window=long_window, if_regressor=if_regressor)
    results = [result for chunk in nested for result in chunk]
    return sorted(results, key=lambda r: r.sort_key)


def _stats(values):
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return None, None, None, None
    std = float(np.std(values, ddof=1)) if len(values) >= 2 else None
    return float(values.min()), float(values.max()), float(values.mean()), std


def load_area_map(path) -> Dict[str, str]:
    """SC -> macro-area from a `sc,macro_area` CSV"""
    frame = pd.read_csv(path, dtype=str, comment='#', keep_default_na=False)
    if list(frame.columns[:2]) != ['sc', 'macro_area']:
        raise ValidationError(f"{path}: expected columns 'sc,macro_area'")
    return {row.sc.strip(): row.macro_area.strip() for row in frame.itertuples(index=False)}


def _check_mapped(fits, sc_to_area):
    missing = {f.subset for f in fits if f.subset not in sc_to_area}
    if missing:
        raise UnmappedSubjectCategoryError(missing)


def summarize_macro_areas(fits, sc_to_area) -> List[MacroAreaSummary]:
    """
    Per-area statistics of one (variant, t) sweep. IF-coefficient statistics
    consider only SCs with IF p-value < 0.1; early-citation and R^2 statistics
    consider every fitted SC.
    """
    fitted = [f for f in fits if not f.skipped]
    if len({f.t for f in fitted}) > 1:
        raise ValidationError('summary requires a single time window')
    if len({f.variant for f in fitted}) > 1:
        raise ValidationError('summary requires a single variant')
    _check_mapped(fitted, sc_to_area)

    by_area = {}
    for f in fitted:
        by_area.setdefault(sc_to_area[f.subset], []).append(f)

    summaries = []
    for area in sorted(by_area):
        members = by_area[area]
        qualifying = [f.coefficients[1] for f in members
                      if f.p_values[1] is not None and f.p_values[1] < SIGNIFICANCE_FILTER]
        if_min, if_max, if_mean, if_std = _stats(qualifying)
        ec_min, ec_max, ec_mean, ec_std = _stats([f.coefficients[2] for f in members])
        _, _, r2_mean, r2_std = _stats([f.r2 for f in members])
        summaries.append(MacroAreaSummary(
            area=area, variant=members[0].variant, t=members[0].t,
            n_sc=len(members), n_if_significant=len(qualifying),
            if_min=if_min, if_max=if_max, if_mean=if_mean, if_std=if_std,
            ec_min=ec_min, ec_max=ec_max, ec_mean=ec_mean, ec_std=ec_std,
            r2_mean=r2_mean, r2_std=r2_std,
        ))
    return summaries


def rank_sc_fits(fits, sc_to_area, size=10) -> pd.DataFrame:
    """Best and worst `size` SCs by R^2 for each variant"""
    fitted = [f for f in fits if not f.skipped]
    _check_mapped(fitted, sc_to_area)
    rows = []
    for variant in sorted({f.variant for f in fitted}):
        ranked = sorted((f for f in fitted if f.variant == variant), key=lambda f: (-f.r2, f.subset))
        best = ranked[:size]
        worst = [f for f in ranked[-size:] if f not in best] if len(ranked) > size else []
        for group, members in (('best', best), ('worst', worst)):
            for rank, f in enumerate(members, start=1):
                row = f.to_row()
                row.update(group=group, rank=rank, macro_area=sc_to_area[f.subset])
                rows.append(row)
    columns = ['variant', 'group', 'rank', 'subset', 'macro_area', 't', 'n',
               'b0', 'stars0', 'b1', 'stars1', 'b2', 'stars2', 'r2']
    return pd.DataFrame(rows, columns=columns)


def macro_area_dispersion(fits, sc_to_area) -> pd.DataFrame:
    """Mean IF and early-citation coefficients of every area, per variant"""
    fitted = [f for f in fits if not f.skipped]
    _check_mapped(fitted, sc_to_area)
    frame = pd.DataFrame([{'variant': f.variant, 't': f.t, 'macro_area': sc_to_area[f.subset],
                           'b1': f.coefficients[1], 'b2': f.coefficients[2]} for f in fitted],
                         columns=['variant', 't', 'macro_area', 'b1', 'b2'])
    grouped = frame.groupby(['variant', 't', 'macro_area'], sort=True)
    dispersion = grouped.agg(n_sc=('b1', 'size'), mean_b1=('b1', 'mean'), mean_b2=('b2', 'mean'))
    return dispersion.reset_index()


def uncited_regression(obs, table, variant, t, minimum=50, long_window=LONG_WINDOW,
                       if_regressor='rescaled', subset=ALL) -> FitResult:
    """IF-only regression of y_long on x over the observations with c_t = 0"""
    frame = _as_frame(obs)
    uncited = frame[frame[f'c{t}'] == 0]
    n = len(uncited)
    if n <= minimum:
        return _skipped(subset, variant, t, n, f"too few uncited observations ({n} <= {minimum})")
    samples = build_samples(uncited, table, variant, t, long_window=long_window, if_regressor=if_regressor,
                            need_early=False, drop_unavailable=True)
    if len(samples) <= minimum:
        return _skipped(subset, variant, t, len(samples),
                        f"too few uncited observations with baselines ({len(samples)} <= {minimum})")
    return fit_samples(samples, subset, variant, t, if_only=True)


def _uncited_keys(frame, t):
    return frozenset(zip(frame.loc[frame[f'c{t}'] == 0, 'pub_id'], frame.loc[frame[f'c{t}'] == 0, 'sc']))


def uncited_sweep(obs, table, variants, t_range, minimum=50, long_window=LONG_WINDOW,
                  if_regressor='rescaled') -> List[FitResult]:
    """Pooled IF-only regressions for every window; uncited sets must shrink as t grows"""
    frame = _as_frame(obs)
    windows = sorted(t_range)
    for earlier, later in zip(windows, windows[1:]):
        if not _uncited_keys(frame, later) <= _uncited_keys(frame, earlier):
            raise ValidationError(f"uncited set at t={later} is not contained in the set at t={earlier}")
    results = [uncited_regression(frame, table, variant, t, minimum, long_window, if_regressor)
               for variant in variants for t in windows]
    return sorted(results, key=lambda r: r.sort_key)


def uncited_sc_regressions(obs, table, variants, t, minimum=50, long_window=LONG_WINDOW,
                           if_regressor='rescaled') -> List[FitResult]:
    """Per-SC IF-only regressions on uncited observations at one window"""
    frame = _as_frame(obs)
    results = []
    for sc, members in frame.groupby('sc', sort=True):
        for variant in variants:
            results.append(uncited_regression(members, table, variant, t, minimum, long_window,
                                              if_regressor, subset=sc))
    return sorted(results, key=lambda r: r.sort_key)


def assign_citedness_quantiles(obs, t, q) -> StratumAssignment:
    """
    Rank cited observations by (c_t, pub_id, sc); stratum j ends at rank ceil(j * n / q).
    Uncited observations are left out of every stratum.
    """
    if q not in ALLOWED_QUANTILES:
        raise ValidationError(f"q must be one of {ALLOWED_QUANTILES}, got {q}")
    frame = _as_frame(obs)
    column = f'c{t}'
    cited = frame.loc[frame[column] >= 1, ['pub_id', 'sc', column]]
    n = len(cited)
    if n < q:
        raise QuantileAssignmentError(f"{n} cited observations at t={t}, need at least {q}")
    ordered = cited.sort_values([column, 'pub_id', 'sc'], kind='mergesort')
    ranks = np.arange(1, n + 1)
    strata = pd.DataFrame({
        'pub_id': ordered['pub_id'].to_numpy(),
        'sc': ordered['sc'].to_numpy(),
        'stratum': (ranks - 1) * q // n + 1,
    })
    uncited = frame.loc[frame[column] == 0]
    return StratumAssignment(t=t, q=q, strata=strata, uncited=frozenset(zip(uncited['pub_id'], uncited['sc'])))


def stratified_regressions(assignment, obs, table, variant, t, long_window=LONG_WINDOW,
                           if_regressor='rescaled') -> List[FitResult]:
    """One two-regressor fit per stratum (Q1..Qq) plus ALL over every observation, cited or not"""
    if assignment.t != t:
        raise ValidationError(f"assignment is for t={assignment.t}, not t={t}")
    frame = _as_frame(obs)
    samples = build_samples(frame, table, variant, t, long_window=long_window, if_regressor=if_regressor,
                            drop_unavailable=True)
    labelled = samples.merge(assignment.strata, on=['pub_id', 'sc'], how='left', sort=False)
    results = []
    for j in range(1, assignment.q + 1):
        members = labelled[labelled['stratum'] == j]
        results.append(fit_samples(members, f'Q{j}', variant, t))
    results.append(fit_samples(samples, ALL, variant, t))
    return results


def _strata_task(task, frame, table, q, long_window, if_regressor):
    variant, t = task
    try:
        assignment = assign_citedness_quantiles(frame, t, q)
    except QuantileAssignmentError as e:
        results = [_skipped(f'Q{j}', variant, t, 0, str(e)) for j in range(1, q + 1)]
        samples = build_samples(frame, table, variant, t, long_window=long_window,
                                if_regressor=if_regressor, drop_unavailable=True)
        return results + [fit_samples(samples, ALL, variant, t)]
    return stratified_regressions(assignment, frame, table, variant, t, long_window, if_regressor)


def strata_sweep(obs, table, variants, t_range, q=4, long_window=LONG_WINDOW, if_regressor='rescaled',
                 workers=1) -> List[FitResult]:
    """Q1..Qq and ALL for every (variant, t)"""
    frame = _as_frame(obs)
    tasks = [(variant, t) for variant in variants for t in t_range]
    nested = parallel_map(_strata_task, tasks, workers=workers, frame=frame, table=table, q=q,
                          long_window=long_window, if_regressor=if_regressor)
    return [result for chunk in nested for result in chunk]


def prediction_error(sample, fit) -> Optional[float]:
    """E = |y_long - (b0 + b1 x + b2 y_t)| / y_long; undefined (None) when y_long = 0"""
    if sample.y_long <= 0:
        return None
    b0, b1, b2 = fit.coefficients
    predicted = b0 + b1 * sample.x + (b2 * sample.y_t if b2 is not None else 0.0)
    return abs((sample.y_long - predicted) / sample.y_long)


def prediction_errors(samples, fit) -> np.ndarray:
    """Vectorised prediction_error; NaN where undefined"""
    b0, b1, b2 = fit.coefficients
    predicted = b0 + b1 * samples['x'].to_numpy()
    if b2 is not None:
        predicted = predicted + b2 * samples['y_t'].to_numpy()
    y = samples['y_long'].to_numpy(dtype=float)
    errors = np.full(len(y), np.nan)
    defined = y > 0
    errors[defined] = np.abs((y[defined] - predicted[defined]) / y[defined])
    return errors


def _median(values):
    values = values[~np.isnan(values)]
    return float(np.median(values)) if len(values) else float('nan')


def _error_task(task, frame, table, q, long_window, if_regressor, cited_only, fits):
    variant, t = task
    samples = build_samples(frame, table, variant, t, long_window=long_window, if_regressor=if_regressor,
                            drop_unavailable=True)
    cited = samples[samples['c_t'] >= 1].reset_index(drop=True)
    fit = (fits or {}).get((variant, t))
    if fit is None:
        fit = fit_samples(cited if cited_only else samples, ALL, variant, t)
    if fit.skipped:
        logger.warning(f"No error curve for {variant} t={t}: {fit.skip_reason}")
        return []

    errors = prediction_errors(cited, fit)
    rows = []
    # Too little variability in log counts at t = 0, 1 for quintiles: overall median only
    fallback = variant == 'log' and t < 2
    if not fallback:
        try:
            assignment = assign_citedness_quantiles(cited.rename(columns={'c_t': f'c{t}'}), t, q)
        except QuantileAssignmentError as e:
            logger.warning(f"Overall median only for {variant} t={t}: {e}")
            fallback = True
    if not fallback:
        labels = cited[['pub_id', 'sc']].merge(assignment.strata, on=['pub_id', 'sc'], how='left')['stratum']
        labels = labels.to_numpy()
        for j in range(1, q + 1):
            in_bin = errors[labels == j]
            rows.append({'variant': variant, 't': t, 'bin': str(j),
                         'n': int(np.count_nonzero(~np.isnan(in_bin))), 'median_E': _median(in_bin)})
    rows.append({'variant': variant, 't': t, 'bin': ALL,
                 'n': int(np.count_nonzero(~np.isnan(errors))), 'median_E': _median(errors)})
    return rows


def median_error_curves(obs, table, variants, t_range, q=None, fits=None, long_window=LONG_WINDOW,
                        if_regressor='rescaled', cited_only=False, workers=1) -> ErrorSummary:
    """
    Median E per (variant, t, citedness bin) over cited observations, plus the
    overall median. q defaults to deciles for rescaled and quintiles for log.
    `fits` optionally maps (variant, t) to the FitResult whose coefficients are used.
    """
    frame = _as_frame(obs)
    rows = []
    for variant in variants:
        bins = q if q is not None else (10 if variant == 'rescaled' else 5)
        chunks = parallel_map(_error_task, [(variant, t) for t in t_range], workers=workers, frame=frame,
                              table=table, q=bins, long_window=long_window, if_regressor=if_regressor,
                              cited_only=cited_only, fits=fits)
        rows.extend(row for chunk in chunks for row in chunk)
    return ErrorSummary(pd.DataFrame(rows, columns=ERROR_COLUMNS))
