import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import analysis
from analysis import (ALL, FitResult, assign_citedness_quantiles, fit_samples, macro_area_dispersion,
                      median_error_curves, prediction_error, prediction_errors, rank_sc_fits, run_sc_sweep,
                      stratified_regressions, strata_sweep, summarize_macro_areas, uncited_regression,
                      uncited_sc_regressions, uncited_sweep)
from corpus import expand_by_sc, observations_frame
from errors import QuantileAssignmentError, UnmappedSubjectCategoryError, ValidationError
from reports import render_uncited
from synth import GeneratorConfig, default_profiles, generate_corpus, oracle_quantiles, preset_profile
from transforms import RegressionSample, build_samples, compute_baselines


def synthetic(seed, n_pubs, profiles):
    frame = observations_frame(expand_by_sc(generate_corpus(GeneratorConfig(seed=seed, n_pubs=n_pubs,
                                                                            profiles=profiles))))
    return frame, compute_baselines(frame)


@pytest.fixture(scope='module')
def fast_peak():
    return synthetic(21, 3000, (preset_profile('fast-peak', 'SC01'),))


@pytest.fixture(scope='module')
def two_sc():
    return synthetic(22, 600, default_profiles(2))


def fake_fit(subset, b1, p1, b2, r2, t=3, variant='rescaled'):
    return FitResult(subset=subset, variant=variant, t=t, n=200, coefficients=(0.1, b1, b2),
                     std_errors=(0.1, 0.1, 0.1), p_values=(0.5, p1, 0.001), stars=('', '', '***'), r2=r2)


def citation_frame(counts, t=3):
    return pd.DataFrame({'pub_id': [f'p{i:04d}' for i in range(len(counts))],
                         'sc': ['A'] * len(counts), f'c{t}': counts})


# Sweeps

def test_sweep_has_one_row_per_window_and_variant(two_sc):
    frame, table = two_sc
    groups = {sc: members for sc, members in frame.groupby('sc')}
    fits = run_sc_sweep(groups, table, ('rescaled', 'log'), range(0, 9))
    assert len(fits) == 2 * 2 * 9
    assert [f.sort_key for f in fits] == sorted(f.sort_key for f in fits)


def test_sweep_is_independent_of_worker_count(two_sc):
    frame, table = two_sc
    groups = {sc: members for sc, members in frame.groupby('sc')}
    serial = run_sc_sweep(groups, table, ('rescaled',), range(2, 5), workers=1)
    parallel = run_sc_sweep(groups, table, ('rescaled',), range(2, 5), workers=2)
    assert [f.to_row() for f in serial] == [f.to_row() for f in parallel]


def test_fast_peak_fit_pattern(fast_peak):
    frame, table = fast_peak
    fits = {(f.variant, f.t): f for f in run_sc_sweep({'SC01': frame}, table, ('rescaled',), range(0, 9))}
    r2 = [fits[('rescaled', t)].r2 for t in range(0, 9)]
    assert all(b >= a for a, b in zip(r2[2:], r2[3:]))
    assert r2[8] >= 0.98
    assert all(fits[('rescaled', t)].p_values[2] < 0.01 for t in range(2, 9))
    assert all(abs(fits[('rescaled', t)].coefficients[1]) < abs(fits[('rescaled', 0)].coefficients[1])
               for t in range(3, 9))


def two_year_frame(n_cited=290, n_late=10, seed=5):
    """SC A: n_cited 2004 publications cited from t=0, n_late 2005 publications first cited at t=1"""
    rng = np.random.default_rng(seed)
    first = np.concatenate([rng.integers(1, 5, n_cited), np.zeros(n_late, dtype=int)])
    steps = rng.integers(0, 4, size=(n_cited + n_late, 9))
    steps[n_cited:, 0] += 1
    counts = np.cumsum(np.column_stack([first, steps]), axis=1)
    n = n_cited + n_late
    frame = pd.DataFrame({
        'pub_id': [f'p{i:04d}' for i in range(n)], 'sc': 'A',
        'year': [2004] * n_cited + [2005] * n_late,
        'journal_id': [f'J{i % 10}' for i in range(n)],
        'impact_factor': [1.0 + (i % 10) for i in range(n)],
        **{f'c{t}': counts[:, t] for t in range(10)},
    })
    return frame, compute_baselines(frame)


def test_sweep_drops_only_years_without_baselines():
    frame, table = two_year_frame()
    fits = run_sc_sweep({'A': frame}, table, ('rescaled', 'log'), [0])
    rescaled, log = sorted(fits, key=lambda f: f.variant, reverse=True)
    assert not rescaled.skipped
    assert rescaled.n == 290
    assert rescaled.n_dropped == 10
    assert 'dropped 10 observations without baselines (years 2005)' in rescaled.note
    # The log variant only needs the IF baseline, which every year has
    assert (log.n, log.n_dropped, log.skipped) == (300, 0, False)


def test_sweep_skips_when_no_year_has_baselines():
    frame, table = two_year_frame()
    late = frame[frame['year'] == 2005].reset_index(drop=True)
    [fit] = run_sc_sweep({'A': late}, compute_baselines(late), ('rescaled',), [0])
    assert fit.skipped
    assert fit.skip_reason == 'baseline unavailable for year=2005, sc=A, t=0'
    assert fit.n == 10


def test_degenerate_subset_is_skipped_with_reason():
    samples = pd.DataFrame({'x': np.linspace(0.5, 1.5, 20), 'y_t': np.ones(20),
                            'y_long': np.linspace(0, 3, 20)})
    result = fit_samples(samples, 'Q1', 'rescaled', 3)
    assert result.skipped
    assert 'rank-deficient' in result.skip_reason
    assert result.coefficients == (None, None, None)


def test_tiny_subset_is_skipped():
    samples = pd.DataFrame({'x': [1.0, 2.0, 3.0], 'y_t': [1.0, 0.0, 2.0], 'y_long': [1.0, 2.0, 4.0]})
    assert 'insufficient data' in fit_samples(samples, 'A', 'log', 0).skip_reason


def test_fit_result_row_round_trip():
    fit = fake_fit('SC01', 0.2, 0.05, 1.1, 0.8)
    assert FitResult.from_row(fit.to_row()) == fit


# Macro-area summaries

def test_single_sc_area_has_unavailable_stdevs():
    summaries = summarize_macro_areas([fake_fit('SC01', 0.2, 0.05, 1.1, 0.8)], {'SC01': 'Mathematics'})
    assert len(summaries) == 1
    s = summaries[0]
    assert (s.n_sc, s.n_if_significant) == (1, 1)
    assert s.if_mean == pytest.approx(0.2)
    assert s.if_std is None and s.ec_std is None and s.r2_std is None


def test_summary_filters_if_coefficients_by_p_value():
    fits = [fake_fit('A1', 0.2, 0.05, 1.0, 0.8), fake_fit('A2', 0.4, 0.09, 1.2, 0.7),
            fake_fit('A3', 5.0, 0.1, 1.4, 0.9), fake_fit('B1', 0.1, 0.5, 0.9, 0.6)]
    area_map = {'A1': 'Alpha', 'A2': 'Alpha', 'A3': 'Alpha', 'B1': 'Beta'}
    alpha, beta = summarize_macro_areas(fits, area_map)
    assert (alpha.area, beta.area) == ('Alpha', 'Beta')
    assert alpha.n_sc == 3 and alpha.n_if_significant == 2
    assert (alpha.if_min, alpha.if_max) == (0.2, 0.4)
    assert alpha.if_mean == pytest.approx(0.3)
    assert alpha.if_std == pytest.approx(np.std([0.2, 0.4], ddof=1))
    assert alpha.ec_mean == pytest.approx(1.2)
    assert alpha.r2_mean == pytest.approx(0.8)
    assert beta.n_if_significant == 0 and beta.if_mean is None


def test_summary_requires_single_window_and_mapped_scs():
    fits = [fake_fit('A1', 0.2, 0.05, 1.0, 0.8, t=3), fake_fit('A2', 0.2, 0.05, 1.0, 0.8, t=4)]
    with pytest.raises(ValidationError, match='summary requires a single time window'):
        summarize_macro_areas(fits, {'A1': 'Alpha', 'A2': 'Alpha'})
    with pytest.raises(UnmappedSubjectCategoryError, match='A2'):
        summarize_macro_areas(fits[:1] + [fake_fit('A2', 0.2, 0.05, 1.0, 0.8)], {'A1': 'Alpha'})


def test_rank_and_dispersion():
    fits = [fake_fit(f'S{i}', 0.1 * i, 0.5, 1.0 + 0.1 * i, 0.5 + 0.04 * i) for i in range(6)]
    area_map = {f'S{i}': 'Even' if i % 2 == 0 else 'Odd' for i in range(6)}
    ranking = rank_sc_fits(fits, area_map, size=2)
    assert ranking[ranking['group'] == 'best']['subset'].tolist() == ['S5', 'S4']
    assert ranking[ranking['group'] == 'worst']['subset'].tolist() == ['S1', 'S0']
    dispersion = macro_area_dispersion(fits, area_map)
    even = dispersion[dispersion['macro_area'] == 'Even'].iloc[0]
    assert even['n_sc'] == 3
    assert even['mean_b1'] == pytest.approx(0.2)
    assert even['mean_b2'] == pytest.approx(1.2)


def test_load_area_map(tmp_path):
    path = tmp_path / 'areas.csv'
    path.write_text('# approximate\nsc,macro_area\n"Engineering, chemical",Engineering\nSC01,Mathematics\n')
    assert analysis.load_area_map(str(path)) == {'Engineering, chemical': 'Engineering', 'SC01': 'Mathematics'}


# Uncited publications

def test_uncited_sets_shrink_with_window(two_sc):
    frame, table = two_sc
    fits = uncited_sweep(frame, table, ('rescaled',), [0, 3, 8], minimum=5)
    n = {f.t: f.n for f in fits}
    assert n[0] >= n[3] >= n[8]


def test_uncited_subset_below_minimum_is_skipped(two_sc):
    frame, table = two_sc
    result = uncited_regression(frame, table, 'log', 8, minimum=10 ** 6)
    assert result.skipped and 'too few uncited' in result.skip_reason
    assert result.subset == ALL


def test_uncited_all_zero_long_term_is_degenerate():
    frame = pd.DataFrame({
        'pub_id': [f'p{i}' for i in range(60)], 'sc': 'A', 'year': 2004,
        'journal_id': [f'J{i % 6}' for i in range(60)],
        'impact_factor': [1.0 + (i % 6) for i in range(60)],
        **{f'c{t}': [0] * 30 + [5] * 30 for t in range(10)},
    })
    result = uncited_regression(frame, compute_baselines(frame), 'log', 3, minimum=10)
    assert not result.skipped
    assert result.r2 == 1.0
    assert result.coefficients[:2] == pytest.approx((0.0, 0.0), abs=1e-9)
    assert result.note == 'constant response'
    assert 'constant response' in render_uncited([result])


def test_per_sc_uncited_regressions(two_sc):
    frame, table = two_sc
    fits = uncited_sc_regressions(frame, table, ('rescaled', 'log'), 0, minimum=5)
    assert sorted({f.subset for f in fits}) == ['SC01', 'SC02']
    assert len(fits) == 4
    assert all(f.coefficients[2] is None for f in fits if not f.skipped)


def test_if_independent_uncited_outcomes_have_negligible_r2():
    profile = preset_profile('slow', 'SC01', rho=0.0)
    negligible = 0
    for seed in range(100):
        frame, table = synthetic(seed, 400, (profile,))
        result = uncited_regression(frame, table, 'rescaled', 0, minimum=50)
        negligible += (not result.skipped) and result.r2 < 0.05
    assert negligible >= 95


# Stratification

def test_eight_distinct_values_split_evenly():
    assignment = assign_citedness_quantiles(citation_frame(list(range(1, 9))), 3, 4)
    assert assignment.sizes() == (2, 2, 2, 2)


def test_tied_values_match_oracle():
    counts = [1, 1, 1, 1, 2, 3, 4, 5]
    frame = citation_frame(counts)
    assignment = assign_citedness_quantiles(frame, 3, 4)
    expected = oracle_quantiles([(c, p, 'A') for c, p in zip(counts, frame['pub_id'])], 4)
    got = {(row.pub_id, row.sc): row.stratum for row in assignment.strata.itertuples(index=False)}
    assert got == expected


@pytest.mark.parametrize('q', [1, 3, 8, 0])
def test_unsupported_quantile_counts_rejected(q):
    with pytest.raises(ValidationError, match='q must be one of'):
        assign_citedness_quantiles(citation_frame(list(range(1, 21))), 3, q)


def test_quantiles_match_oracle_on_seeded_instances():
    rng = np.random.default_rng(2016)
    for _ in range(1000):
        q = int(rng.choice([4, 5, 10]))
        n = int(rng.integers(q, 60))
        high = int(rng.choice([3, 10, 1000]))
        counts = rng.integers(0, high, size=n + int(rng.integers(0, 10)))
        counts[:q] = np.maximum(counts[:q], 1)
        frame = citation_frame(counts.tolist())
        frame = frame.sample(frac=1.0, random_state=int(rng.integers(1 << 31)))
        assignment = assign_citedness_quantiles(frame, 3, q)
        cited = frame[frame['c3'] >= 1]
        expected = oracle_quantiles(list(zip(cited['c3'], cited['pub_id'], cited['sc'])), q)
        got = dict(zip(zip(assignment.strata['pub_id'], assignment.strata['sc']), assignment.strata['stratum']))
        assert got == expected
        assert not set(got) & assignment.uncited


@settings(max_examples=100, deadline=None)
@given(counts=st.lists(st.integers(min_value=0, max_value=20), min_size=12, max_size=80),
       q=st.sampled_from([4, 5, 10]))
def test_uncited_never_assigned(counts, q):
    frame = citation_frame(counts)
    n_cited = sum(c >= 1 for c in counts)
    if n_cited < q:
        with pytest.raises(QuantileAssignmentError):
            assign_citedness_quantiles(frame, 3, q)
        return
    assignment = assign_citedness_quantiles(frame, 3, q)
    assert len(assignment.strata) == n_cited
    assert len(assignment.uncited) == len(counts) - n_cited
    sizes = assignment.sizes()
    assert sum(sizes) == n_cited
    assert max(sizes) - min(sizes) <= 1


def test_strata_rows_reconcile(two_sc):
    frame, table = two_sc
    assignment = assign_citedness_quantiles(frame, 3, 4)
    fits = stratified_regressions(assignment, frame, table, 'rescaled', 3)
    assert [f.subset for f in fits] == ['Q1', 'Q2', 'Q3', 'Q4', ALL]
    assert fits[-1].n >= sum(f.n for f in fits[:-1])
    with pytest.raises(ValidationError):
        stratified_regressions(assignment, frame, table, 'rescaled', 4)


def test_strata_sweep_cardinality(two_sc):
    frame, table = two_sc
    fits = strata_sweep(frame, table, ('rescaled', 'log'), range(0, 9), q=4)
    assert len(fits) == 2 * 45


# Prediction errors

def test_prediction_error_definition():
    fit = fake_fit('A', 0.5, 0.1, 2.0, 0.9)
    sample = RegressionSample('p', 'A', x=1.0, y_t=2.0, y_long=5.0, variant='rescaled', t=3)
    # prediction 0.1 + 0.5 + 4.0 = 4.6
    assert prediction_error(sample, fit) == pytest.approx(0.4 / 5.0)
    assert prediction_error(RegressionSample('p', 'A', 1.0, 2.0, 0.0, 'rescaled', 3), fit) is None
    frame = pd.DataFrame({'x': [1.0, 1.0], 'y_t': [2.0, 2.0], 'y_long': [5.0, 0.0]})
    errors = prediction_errors(frame, fit)
    assert errors[0] == pytest.approx(0.08) and np.isnan(errors[1])


def test_log_variant_early_windows_fall_back_to_overall_median(two_sc):
    frame, table = two_sc
    summary = median_error_curves(frame, table, ('log',), [0, 1, 3])
    rows = summary.rows
    assert rows[rows['t'] == 0]['bin'].tolist() == [ALL]
    assert rows[rows['t'] == 1]['bin'].tolist() == [ALL]
    assert rows[rows['t'] == 3]['bin'].tolist() == ['1', '2', '3', '4', '5', ALL]


def test_median_error_decreases_with_citedness():
    # exact accrual shares: only multinomial noise, which shrinks with the citation count
    profile = preset_profile('fast-peak', 'SC01', mu=4.0, accrual_concentration=None)
    frame, table = synthetic(23, 20000, (profile,))
    summary = median_error_curves(frame, table, ('rescaled', 'log'), [3, 8])
    deciles = summary.bins('rescaled', 3)
    quintiles = summary.bins('log', 3)
    assert len(deciles) == 10 and len(quintiles) == 5
    assert int(np.sum(np.diff(deciles) < 0)) >= 8
    assert int(np.sum(np.diff(quintiles) < 0)) == 4
    assert summary.median('rescaled', 8, ALL) < summary.median('rescaled', 3, ALL)


def test_error_curves_accept_supplied_fits(two_sc):
    frame, table = two_sc
    samples = build_samples(frame, table, 'rescaled', 3, drop_unavailable=True)
    fit = fit_samples(samples, ALL, 'rescaled', 3)
    supplied = median_error_curves(frame, table, ('rescaled',), [3], fits={('rescaled', 3): fit})
    default = median_error_curves(frame, table, ('rescaled',), [3])
    pd.testing.assert_frame_equal(supplied.rows, default.rows)
    cited_only = median_error_curves(frame, table, ('rescaled',), [3], cited_only=True)
    assert cited_only.rows['n'].tolist() == default.rows['n'].tolist()
