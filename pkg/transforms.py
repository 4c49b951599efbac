"""
Transforms Module
Rescaling baselines per (year, SC) and the mapping of observations into model
space for the rescaled and log-transformed variants
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from config import LONG_WINDOW, TRAJECTORY_LENGTH
from errors import BaselineUnavailableError, ValidationError

logger = logging.getLogger(__name__)

KEY = ['year', 'sc']


@dataclass(frozen=True)
class RegressionSample:
    """One (publication, SC) observation in model space"""

    pub_id: str
    sc_id: str
    x: float
    y_t: float
    y_long: float
    variant: str
    t: int


class BaselineTable:
    """
    Rescaling denominators per (year, SC):
    cbar_t = mean of c_t over publications with c_t >= 1 (NaN when none is cited),
    ifbar = mean IF over the distinct journals of the group (NaN when unavailable)
    """

    def __init__(self, frame):
        self.frame = frame.sort_values(KEY).reset_index(drop=True)
        self._index = {(row.year, row.sc): i for i, row in enumerate(self.frame[KEY].itertuples(index=False))}

    def __len__(self):
        return len(self.frame)

    def __contains__(self, key):
        return key in self._index

    def _row(self, year, sc, t):
        try:
            return self.frame.iloc[self._index[(year, sc)]]
        except KeyError:
            raise BaselineUnavailableError(year, sc, t)

    def cbar(self, year, sc, t):
        value = self._row(year, sc, t)[f'cbar_{t}']
        if pd.isna(value):
            raise BaselineUnavailableError(year, sc, t)
        return float(value)

    def n_cited(self, year, sc, t):
        return int(self._row(year, sc, t)[f'n_cited_{t}'])

    def ifbar(self, year, sc):
        value = self._row(year, sc, 'IF')['ifbar']
        if pd.isna(value):
            raise BaselineUnavailableError(year, sc, 'IF')
        return float(value)

    def to_frame(self):
        """Long export layout: year,sc,t,cbar,n_cited,ifbar,n_journals"""
        parts = []
        for t in range(TRAJECTORY_LENGTH):
            part = self.frame[KEY + [f'cbar_{t}', f'n_cited_{t}', 'ifbar', 'n_journals']].copy()
            part.columns = KEY + ['cbar', 'n_cited', 'ifbar', 'n_journals']
            part.insert(2, 't', t)
            parts.append(part)
        export = pd.concat(parts, ignore_index=True)
        return export.sort_values(KEY + ['t'], kind='mergesort').reset_index(drop=True)


def compute_baselines(frame) -> BaselineTable:
    """Aggregate the observation frame into per-(year, SC) rescaling baselines"""
    if frame.empty:
        raise ValidationError('cannot compute baselines of an empty corpus')
    grouped = frame.groupby(KEY, sort=True)
    table = grouped.size().rename('n_obs').to_frame()
    for t in range(TRAJECTORY_LENGTH):
        column = f'c{t}'
        cited = frame[column].where(frame[column] >= 1)
        table[f'cbar_{t}'] = cited.groupby([frame['year'], frame['sc']]).mean()
        table[f'n_cited_{t}'] = cited.groupby([frame['year'], frame['sc']]).count()

    journal_if = frame.groupby(KEY + ['journal_id'], sort=True)['impact_factor'].mean()
    table['ifbar'] = journal_if.groupby(level=KEY).mean()
    table['n_journals'] = journal_if.groupby(level=KEY).count()
    table.loc[~(table['ifbar'] > 0), 'ifbar'] = np.nan

    n_unavailable = int(table[[f'cbar_{t}' for t in range(TRAJECTORY_LENGTH)]].isna().sum().sum())
    if n_unavailable:
        logger.info(f"{n_unavailable} (year, SC, t) cells have no cited publication")
    return BaselineTable(table.reset_index())


def to_rescaled_sample(pub, sc, table, t, long_window=LONG_WINDOW) -> RegressionSample:
    """y_t = c_t / cbar_t, x = IF / ifbar, y_long = c_9 / cbar_9"""
    year = pub.pub_year
    cbar_t = table.cbar(year, sc, t)
    cbar_long = table.cbar(year, sc, long_window)
    ifbar = table.ifbar(year, sc)
    return RegressionSample(
        pub_id=pub.id,
        sc_id=sc,
        x=pub.impact_factor / ifbar,
        y_t=pub.citations[t] / cbar_t,
        y_long=pub.citations[long_window] / cbar_long,
        variant='rescaled',
        t=t,
    )


def to_log_sample(pub, sc, table, t, long_window=LONG_WINDOW, if_regressor='rescaled') -> RegressionSample:
    """y_t = ln(1 + c_t), y_long = ln(1 + c_9); x as in the rescaled variant unless raw IF is asked for"""
    if if_regressor == 'raw':
        x = pub.impact_factor
    else:
        x = pub.impact_factor / table.ifbar(pub.pub_year, sc)
    return RegressionSample(
        pub_id=pub.id,
        sc_id=sc,
        x=x,
        y_t=math.log1p(pub.citations[t]),
        y_long=math.log1p(pub.citations[long_window]),
        variant='log',
        t=t,
    )


def _required_baselines(variant, t, long_window, need_early, if_regressor):
    required = {}
    if variant == 'rescaled':
        if need_early:
            required[f'cbar_{t}'] = t
        required[f'cbar_{long_window}'] = long_window
        required['ifbar'] = 'IF'
    elif if_regressor != 'raw':
        required['ifbar'] = 'IF'
    return required


def build_samples(frame, table, variant, t, long_window=LONG_WINDOW, if_regressor='rescaled',
                  need_early=True, drop_unavailable=False) -> pd.DataFrame:
    """
    Vectorised sample construction for every observation of `frame`.

    Returns the observation keys plus the raw counts c_t / c_long and the model
    variables x, y_t, y_long. Observations whose (year, SC) lacks a required
    baseline raise BaselineUnavailableError, or are dropped when
    drop_unavailable is set.
    """
    if variant not in ('rescaled', 'log'):
        raise ValidationError(f"unknown variant '{variant}'")
    required = _required_baselines(variant, t, long_window, need_early, if_regressor)
    columns = sorted(set(required) | {'ifbar'})
    merged = frame.merge(table.frame[KEY + columns], on=KEY, how='left', sort=False)

    if required:
        missing = merged[list(required)].isna().any(axis=1)
        if missing.any():
            if not drop_unavailable:
                first = merged.loc[missing].sort_values(KEY, kind='mergesort').iloc[0]
                which = next(name for name in required if pd.isna(first[name]))
                raise BaselineUnavailableError(first['year'], first['sc'], required[which])
            logger.debug(f"Dropping {int(missing.sum())} observations without baselines at t={t}")
            merged = merged.loc[~missing]

    samples = merged[['pub_id', 'sc', 'year', 'journal_id', 'impact_factor']].copy()
    samples['c_t'] = merged[f'c{t}'].to_numpy()
    samples['c_long'] = merged[f'c{long_window}'].to_numpy()
    if variant == 'rescaled':
        samples['x'] = merged['impact_factor'] / merged['ifbar']
        samples['y_t'] = merged[f'c{t}'] / merged[f'cbar_{t}'] if need_early else np.nan
        samples['y_long'] = merged[f'c{long_window}'] / merged[f'cbar_{long_window}']
    else:
        if if_regressor == 'raw':
            samples['x'] = merged['impact_factor'].astype('float64')
        else:
            samples['x'] = merged['impact_factor'] / merged['ifbar']
        samples['y_t'] = np.log1p(merged[f'c{t}'].astype('float64'))
        samples['y_long'] = np.log1p(merged[f'c{long_window}'].astype('float64'))
    samples['variant'] = variant
    samples['t'] = t
    return samples.reset_index(drop=True)


def uncited_shares(frame, t_range) -> pd.DataFrame:
    """Share of observations still uncited at each window"""
    rows = []
    n = len(frame)
    for t in t_range:
        n_uncited = int((frame[f'c{t}'] == 0).sum())
        rows.append({'t': t, 'n': n, 'n_uncited': n_uncited, 'share': n_uncited / n if n else float('nan')})
    return pd.DataFrame(rows, columns=['t', 'n', 'n_uncited', 'share'])
