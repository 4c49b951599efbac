"""
Reports Module
CSV emission with a metadata header block, aligned-text tables in the
published-table style (stars, n.a. and - markers), and Plotly figure specifications for plot data
"""

import json
import logging
import os

import pandas as pd
import plotly
import plotly.graph_objs as go

from analysis import ALL, RESULT_COLUMNS, FitResult
from config import __version__
from errors import ValidationError

logger = logging.getLogger(__name__)

NOT_AVAILABLE = 'n.a.'
NO_QUALIFYING = '-'


def metadata_lines(command, run_config, variants=None):
    """`# key=value` lines describing how an output file was produced"""
    variants = variants or run_config.variants
    meta = {
        'tool': f'citeforecast {__version__}',
        'command': command,
        'config_hash': run_config.config_hash(),
        'variant': ','.join(variants),
        'log_base': 'e',
        'covariance': 'HC3',
        'p_values': 'student-t df=n-p',
        'breusch_pagan': 'n*R2_aux',
        'tie_rule': '(c_t, pub_id, sc)',
        'strata_baselines': 'global',
        'ifbar_population': 'input-corpus journals',
        'log_if_regressor': run_config.log_if_regressor,
        'long_window': run_config.long_window,
    }
    return [f'# {key}={value}' for key, value in meta.items()]


def write_csv(frame, path, metadata=()):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        for line in metadata:
            f.write(line + '\n')
        frame.to_csv(f, index=False, lineterminator='\n')
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_text(text, path):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(text.rstrip('\n') + '\n')
    return path


def write_figure(fig, path):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(json.dumps(fig, cls=plotly.utils.PlotlyJSONEncoder, sort_keys=True))
        f.write('\n')
    return path


def read_csv(path):
    """Read a report CSV, skipping its metadata block"""
    return pd.read_csv(path, comment='#', keep_default_na=False, na_values=[''], float_precision='round_trip')


def results_frame(fits):
    return pd.DataFrame([f.to_row() for f in fits], columns=RESULT_COLUMNS)


def read_results(path):
    frame = read_csv(path)
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise ValidationError(f"{path}: not a results file (missing {', '.join(missing)})")
    return [FitResult.from_row(row) for row in frame.to_dict('records')]


def format_coefficient(value, star, digits=3):
    """1.127*** style"""
    if value is None:
        return ''
    return f'{value:.{digits}f}{star}'


def _number(value, digits):
    return '' if value is None else f'{value:.{digits}f}'


def render_results(fits, digits=3):
    """One line per (subset, variant, t)"""
    rows = []
    for f in fits:
        rows.append({
            'Subset': f.subset,
            'Model': f.variant,
            't': f.t,
            'Obs.': f.n,
            'Intercept': format_coefficient(f.coefficients[0], f.stars[0], digits),
            'Impact Factor coeff.': format_coefficient(f.coefficients[1], f.stars[1], digits),
            'Early citations coeff.': format_coefficient(f.coefficients[2], f.stars[2], digits),
            'R^2': _number(f.r2, digits),
            'Note': f.skip_reason or f.note,
        })
    table = pd.DataFrame(rows, columns=['Subset', 'Model', 't', 'Obs.', 'Intercept', 'Impact Factor coeff.',
                                        'Early citations coeff.', 'R^2', 'Note'])
    footer = 'Statistical significance: *p-value <0.1, **p-value <0.05, ***p-value <0.01.'
    return table.to_string(index=False) + '\n\n' + footer


def _csv_marked(value, n):
    if n == 0:
        return NO_QUALIFYING
    return NOT_AVAILABLE if value is None else value


def macro_area_frame(summaries):
    """Full-precision CSV rows; unavailable statistics carry the table markers"""
    rows = []
    for s in summaries:
        k = s.n_if_significant
        rows.append({
            'variant': s.variant, 't': s.t, 'macro_area': s.area, 'n_sc': s.n_sc, 'n_if_p_lt_0.1': k,
            'if_min': _csv_marked(s.if_min, k), 'if_max': _csv_marked(s.if_max, k),
            'if_mean': _csv_marked(s.if_mean, k), 'if_std': _csv_marked(s.if_std, k),
            'ec_min': s.ec_min, 'ec_max': s.ec_max, 'ec_mean': s.ec_mean,
            'ec_std': _csv_marked(s.ec_std, s.n_sc),
            'r2_mean': s.r2_mean, 'r2_std': _csv_marked(s.r2_std, s.n_sc),
        })
    columns = ['variant', 't', 'macro_area', 'n_sc', 'n_if_p_lt_0.1', 'if_min', 'if_max', 'if_mean', 'if_std',
               'ec_min', 'ec_max', 'ec_mean', 'ec_std', 'r2_mean', 'r2_std']
    return pd.DataFrame(rows, columns=columns)


def _marked(value, n, digits, is_std=False):
    if n == 0:
        return NO_QUALIFYING
    if value is None:
        return NOT_AVAILABLE if is_std else NO_QUALIFYING
    return f'{value:.{digits}f}'


def render_macro_areas(summaries, digits=2):
    """Tables 2-3 layout with n.a. for a single-SC stdev and - for no qualifying SC"""
    rows = []
    for s in summaries:
        k = s.n_if_significant
        if_range = NO_QUALIFYING if k == 0 else f'[{s.if_min:.{digits}f};{s.if_max:.{digits}f}]'
        rows.append({
            'Model': s.variant,
            'Macro-area': s.area,
            'SCs': s.n_sc,
            'With IF p-value < 0.1': k,
            'IF Min;Max': if_range,
            'IF Mean': _marked(s.if_mean, k, digits),
            'IF St. Dev.': _marked(s.if_std, k, digits, is_std=True),
            'EC Min;Max': f'[{s.ec_min:.{digits}f};{s.ec_max:.{digits}f}]',
            'EC Mean': _number(s.ec_mean, digits),
            'EC St. Dev.': NOT_AVAILABLE if s.ec_std is None else _number(s.ec_std, digits),
            'R^2 Mean': _number(s.r2_mean, digits),
            'R^2 St. Dev.': NOT_AVAILABLE if s.r2_std is None else _number(s.r2_std, digits),
        })
    note = 'IF coefficient statistics consider only SCs with IF coefficient p-values lower than 0.1.'
    return pd.DataFrame(rows).to_string(index=False) + '\n\n' + note


def render_uncited(fits, digits=3):
    """Per window, Obs. and the IF coefficient and R^2 of each model"""
    pooled = [f for f in fits if f.subset == ALL]
    frame = pd.DataFrame([{'t': f.t, 'variant': f.variant, 'n': f.n,
                           'coef': format_coefficient(f.coefficients[1], f.stars[1], digits) or f.skip_reason,
                           'r2': _number(f.r2, digits)} for f in pooled])
    if frame.empty:
        return 'No uncited regressions.'
    wide = frame.pivot(index='t', columns='variant', values=['coef', 'r2'])
    wide.columns = [f'{variant} {"IF coeff." if stat == "coef" else "R^2"}' for stat, variant in wide.columns]
    wide.insert(0, 'Obs.', frame.groupby('t')['n'].max())
    wide = wide[['Obs.'] + sorted(c for c in wide.columns if c != 'Obs.')]
    text = wide.reset_index().rename(columns={'t': 'Time window (years)'}).to_string(index=False)
    notes = [f'  t={f.t} {f.variant}: {f.note}' for f in pooled if f.note]
    if notes:
        text += '\n\nNotes:\n' + '\n'.join(notes)
    return text


def render_strata(fits, digits=3):
    """Set, window, Obs., IF coeff., early citations coeff., R^2"""
    rows = [{'Set': f.subset, 'Time window (years)': f.t, 'Model': f.variant, 'Obs.': f.n,
             'Impact Factor coeff.': format_coefficient(f.coefficients[1], f.stars[1], digits),
             'Early citations coeff.': format_coefficient(f.coefficients[2], f.stars[2], digits),
             'R^2': _number(f.r2, digits), 'Note': f.skip_reason or f.note} for f in fits]
    return pd.DataFrame(rows).to_string(index=False)


def error_curve_figure(summary):
    """Median E by citedness bin, one line per (model, window)"""
    fig = go.Figure()
    rows = summary.rows
    for (variant, t), group in rows[rows['bin'] != ALL].groupby(['variant', 't'], sort=True):
        fig.add_trace(go.Scatter(
            x=[int(b) for b in group['bin']],
            y=group['median_E'].tolist(),
            mode='lines+markers',
            name=f'{variant} t={t}',
            line=dict(width=2),
        ))
    fig.update_layout(
        title='Median impact prediction error by citedness bin',
        xaxis_title='Citedness bin (1 = least cited)',
        yaxis_title='Median E',
        hovermode='x unified',
    )
    return fig


def dispersion_figure(dispersion):
    """Mean IF coefficient vs mean early-citation coefficient per macro-area"""
    fig = go.Figure()
    for variant, group in dispersion.groupby('variant', sort=True):
        fig.add_trace(go.Scatter(
            x=group['mean_b2'].tolist(),
            y=group['mean_b1'].tolist(),
            text=group['macro_area'].tolist(),
            mode='markers+text',
            name=variant,
        ))
    fig.update_layout(
        title='Dispersion of macro-areas by average regression coefficients',
        xaxis_title='Average early citations coefficient',
        yaxis_title='Average impact factor coefficient',
    )
    return fig
