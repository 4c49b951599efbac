import json

import pandas as pd
import pytest

from analysis import ErrorSummary, FitResult, MacroAreaSummary
from errors import ValidationError
from reports import (error_curve_figure, format_coefficient, macro_area_frame, read_results, render_macro_areas,
                     render_results, results_frame, write_csv, write_figure)


def test_coefficients_carry_stars():
    assert format_coefficient(1.12712, '***') == '1.127***'
    assert format_coefficient(-0.0643, '*', digits=2) == '-0.06*'
    assert format_coefficient(None, '') == ''


def test_results_written_at_full_precision(tmp_path):
    fit = FitResult(subset='SC01', variant='log', t=3, n=120, coefficients=(0.1 + 0.2, 1.0 / 3.0, 2.0),
                    std_errors=(0.1, 0.2, 0.3), p_values=(0.5, 0.04, 0.0), stars=('', '**', '***'), r2=0.9,
                    bp_stat=1.5, bp_p=0.47)
    path = write_csv(results_frame([fit]), str(tmp_path / 'results.csv'), ['# tool=test'])
    assert read_results(path) == [fit]
    assert '0.30000000000000004' in open(path).read()
    assert '0.333***' not in render_results([fit])
    assert '0.333**' in render_results([fit])


@pytest.mark.parametrize('code', ['NA', 'N/A', 'NULL', 'nan', 'None'])
def test_subject_codes_that_look_missing_survive(tmp_path, code):
    fit = FitResult(subset=code, variant='rescaled', t=0, n=12, coefficients=(0.25, 1.5, 0.75),
                    std_errors=(0.1, 0.2, 0.3), p_values=(0.2, 0.001, 0.07), stars=('', '***', '*'), r2=0.6,
                    bp_stat=2.0, bp_p=0.37)
    path = write_csv(results_frame([fit]), str(tmp_path / 'results.csv'))
    assert read_results(path) == [fit]


def test_read_results_rejects_other_files(tmp_path):
    path = write_csv(pd.DataFrame({'a': [1]}), str(tmp_path / 'other.csv'))
    with pytest.raises(ValidationError, match='not a results file'):
        read_results(path)


def test_macro_area_markers():
    lonely = MacroAreaSummary(area='Psychology', variant='rescaled', t=3, n_sc=1, n_if_significant=1,
                              if_min=-0.11, if_max=-0.11, if_mean=-0.11, if_std=None,
                              ec_min=1.15, ec_max=1.15, ec_mean=1.15, r2_mean=0.82)
    silent = MacroAreaSummary(area='Law', variant='rescaled', t=3, n_sc=4, n_if_significant=0,
                              ec_min=1.02, ec_max=1.40, ec_mean=1.16, ec_std=0.17, r2_mean=0.80, r2_std=0.05)
    frame = macro_area_frame([lonely, silent])
    assert frame.loc[0, 'if_std'] == 'n.a.'
    assert frame.loc[0, 'ec_std'] == 'n.a.'
    assert frame.loc[1, 'if_mean'] == '-'
    assert frame.loc[1, 'ec_std'] == 0.17
    text = render_macro_areas([lonely, silent])
    assert '[-0.11;-0.11]' in text
    assert '[1.02;1.40]' in text


def test_error_curve_figure_is_plot_data(tmp_path):
    rows = pd.DataFrame({'variant': ['rescaled'] * 3, 't': [3] * 3, 'bin': ['1', '2', 'ALL'],
                         'n': [10, 10, 20], 'median_E': [0.5, 0.2, 0.3]})
    path = write_figure(error_curve_figure(ErrorSummary(rows)), str(tmp_path / 'curves.plotly.json'))
    with open(path) as f:
        figure = json.load(f)
    assert figure['data'][0]['x'] == [1, 2]
    assert figure['data'][0]['y'] == [0.5, 0.2]
