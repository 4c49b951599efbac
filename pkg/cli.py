"""
Command-line front end: subcommands, configuration and report emission
"""

import argparse
import logging
import os
from dataclasses import dataclass

import pandas as pd

import analysis
import reports
from config import VARIANTS, build_run_config
from corpus import expand_by_sc, filter_sc_min_count, ingest_corpus, observations_frame, serialize_publications
from errors import ValidationError
from synth import GeneratorConfig, PRESETS, default_profiles, generate_corpus
from transforms import compute_baselines, uncited_shares

logger = logging.getLogger(__name__)


@dataclass
class LoadedCorpus:
    report: object
    frame: pd.DataFrame        # every observation with an IF
    groups: dict               # SC -> observation frame, SCs above the threshold
    table: object


def load_corpus(config):
    if not config.inputs:
        raise ValidationError('no input corpus given (use --input)')
    publications, report = ingest_corpus(config.inputs)
    observations = expand_by_sc(publications)
    if not observations:
        raise ValidationError('corpus has no usable observations')
    frame = observations_frame(observations)
    table = compute_baselines(frame)
    retained = filter_sc_min_count(observations, config.sc_threshold)
    groups = {sc: frame[frame['sc'] == sc].reset_index(drop=True) for sc in sorted(retained)}
    return LoadedCorpus(report=report, frame=frame, groups=groups, table=table)


def _out(config, name):
    return os.path.join(config.out_dir, name)


def _skip_frame(fits, dropped=()):
    rows = [{'subset': f.subset, 'variant': f.variant, 't': f.t, 'reason': f.skip_reason}
            for f in fits if f.skipped]
    rows += [{'subset': f.subset, 'variant': f.variant, 't': f.t,
              'reason': f'dropped {f.n_dropped} observations without baselines'}
             for f in fits if f.n_dropped and not f.skipped]
    rows += [{'subset': sc, 'variant': '', 't': '', 'reason': f'below SC threshold ({count} observations)'}
             for sc, count in dropped]
    return pd.DataFrame(rows, columns=['subset', 'variant', 't', 'reason'])


def cmd_fit(config):
    """
    Per-SC regressions for every window and variant.

    Writes results.csv (subset,variant,t,n,b0,se0,p0,stars0,b1,se1,p1,stars1,
    b2,se2,p2,stars2,r2,bp_stat,bp_p,skip_reason), results.txt, baselines.csv
    (year,sc,t,cbar,n_cited,ifbar,n_journals), skipped.csv and ingest_report.csv.
    """
    loaded = load_corpus(config)
    fits = analysis.run_sc_sweep(loaded.groups, loaded.table, config.variants, config.t_range,
                                 long_window=config.long_window, if_regressor=config.log_if_regressor,
                                 workers=config.workers)
    meta = reports.metadata_lines('fit', config)
    dropped = sorted((sc, n) for sc, n in loaded.report.sc_counts.items() if sc not in loaded.groups)
    return [
        reports.write_csv(reports.results_frame(fits), _out(config, 'results.csv'), meta),
        reports.write_text(reports.render_results(fits, config.digits), _out(config, 'results.txt')),
        reports.write_csv(loaded.table.to_frame(), _out(config, 'baselines.csv'), meta),
        reports.write_csv(_skip_frame(fits, dropped), _out(config, 'skipped.csv'), meta),
        reports.write_csv(pd.DataFrame(loaded.report.as_rows(loaded.groups)), _out(config, 'ingest_report.csv'),
                          meta),
    ]


def cmd_summarize(config):
    """
    Macro-area statistics of a single-window fit run.

    Reads results.csv (--input) and the SC,macro_area map (--area-map). Writes
    macro_areas.csv (variant,t,macro_area,n_sc,n_if_p_lt_0.1,if_min,if_max,
    if_mean,if_std,ec_min,ec_max,ec_mean,ec_std,r2_mean,r2_std), macro_areas.txt,
    sc_ranking.csv, dispersion.csv and dispersion.plotly.json.
    """
    if len(config.inputs) != 1:
        raise ValidationError('summarize expects exactly one results file (--input)')
    fits = [f for f in reports.read_results(config.inputs[0])
            if f.variant in config.variants and config.t_min <= f.t <= config.t_max]
    if len({f.t for f in fits}) > 1:
        raise ValidationError('summary requires a single time window')
    area_map = analysis.load_area_map(config.area_map)

    summaries = []
    for variant in config.variants:
        summaries.extend(analysis.summarize_macro_areas([f for f in fits if f.variant == variant], area_map))
    ranking = analysis.rank_sc_fits(fits, area_map, config.rank_size)
    dispersion = analysis.macro_area_dispersion(fits, area_map)

    meta = reports.metadata_lines('summarize', config)
    return [
        reports.write_csv(reports.macro_area_frame(summaries), _out(config, 'macro_areas.csv'), meta),
        reports.write_text(reports.render_macro_areas(summaries, min(config.digits, 2)),
                           _out(config, 'macro_areas.txt')),
        reports.write_csv(ranking, _out(config, 'sc_ranking.csv'), meta),
        reports.write_csv(dispersion, _out(config, 'dispersion.csv'), meta),
        reports.write_figure(reports.dispersion_figure(dispersion), _out(config, 'dispersion.plotly.json')),
    ]


def cmd_uncited(config):
    """
    IF-only regressions on publications uncited at each window.

    Writes uncited.csv (results columns; subset ALL pooled per window, SC codes
    at the --uncited-sc-window), uncited.txt (IF coefficient and R^2 per window) and
    uncited_shares.csv (t,n,n_uncited,share).
    """
    loaded = load_corpus(config)
    pooled = analysis.uncited_sweep(loaded.frame, loaded.table, config.variants, config.t_range,
                                    minimum=config.uncited_threshold, long_window=config.long_window,
                                    if_regressor=config.log_if_regressor)
    per_sc = analysis.uncited_sc_regressions(loaded.frame, loaded.table, config.variants,
                                             config.uncited_sc_window, minimum=config.uncited_threshold,
                                             long_window=config.long_window,
                                             if_regressor=config.log_if_regressor)
    meta = reports.metadata_lines('uncited', config)
    return [
        reports.write_csv(reports.results_frame(pooled + per_sc), _out(config, 'uncited.csv'), meta),
        reports.write_text(reports.render_uncited(pooled, config.digits), _out(config, 'uncited.txt')),
        reports.write_csv(uncited_shares(loaded.frame, config.t_range), _out(config, 'uncited_shares.csv'), meta),
    ]


def cmd_strata(config):
    """
    Citedness-quantile regressions (uncited observations excluded from Q1..Qq).

    Writes strata.csv (results columns; subsets Q1..Qq and ALL) and strata.txt.
    """
    loaded = load_corpus(config)
    fits = analysis.strata_sweep(loaded.frame, loaded.table, config.variants, config.t_range,
                                 q=config.strata_quantiles, long_window=config.long_window,
                                 if_regressor=config.log_if_regressor, workers=config.workers)
    meta = reports.metadata_lines('strata', config)
    return [
        reports.write_csv(reports.results_frame(fits), _out(config, 'strata.csv'), meta),
        reports.write_text(reports.render_strata(fits, config.digits), _out(config, 'strata.txt')),
    ]


def cmd_errors(config):
    """
    Median prediction error by citedness bin.

    Writes error_curves.csv (variant,t,bin,n,median_E; bin ALL is the overall
    median) and error_curves.plotly.json.
    """
    loaded = load_corpus(config)
    summary = analysis.median_error_curves(loaded.frame, loaded.table, config.variants, config.t_range,
                                           q=config.error_quantiles, long_window=config.long_window,
                                           if_regressor=config.log_if_regressor,
                                           cited_only=config.errors_cited_only, workers=config.workers)
    meta = reports.metadata_lines('errors', config)
    return [
        reports.write_csv(summary.rows, _out(config, 'error_curves.csv'), meta),
        reports.write_figure(reports.error_curve_figure(summary), _out(config, 'error_curves.plotly.json')),
    ]


def cmd_synth(config):
    """
    Synthetic corpus with known structure.

    Writes corpus.csv in the corpus schema
    (pub_id,year,journal_id,if,sc,c0,...,c9).
    """
    generator = GeneratorConfig(
        seed=config.seed,
        n_pubs=config.synth_pubs,
        profiles=default_profiles(config.synth_scs, config.synth_preset),
    )
    publications = generate_corpus(generator, workers=config.workers)
    path = _out(config, 'corpus.csv')
    os.makedirs(config.out_dir, exist_ok=True)
    serialize_publications(publications, path)
    logger.info(f"Wrote {len(publications)} publications to {path}")
    return [path]


COMMANDS = {
    'fit': cmd_fit,
    'summarize': cmd_summarize,
    'uncited': cmd_uncited,
    'strata': cmd_strata,
    'errors': cmd_errors,
    'synth': cmd_synth,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', dest='config_file', help='KEY=value config file (flags override it)')
    common.add_argument('--input', action='append', dest='inputs', help='corpus CSV (repeatable)')
    common.add_argument('--variant', choices=['rescaled', 'log', 'both'])
    common.add_argument('--t-min', type=int)
    common.add_argument('--t-max', type=int)
    common.add_argument('--long-window', type=int)
    common.add_argument('--sc-threshold', type=int, help='keep SCs with more than this many observations')
    common.add_argument('--uncited-threshold', type=int, help='minimum uncited subset size (exclusive)')
    common.add_argument('--uncited-sc-window', type=int)
    common.add_argument('--quantiles', type=int, choices=[4, 5, 10])
    common.add_argument('--area-map')
    common.add_argument('--out', dest='out_dir')
    common.add_argument('--seed', type=int)
    common.add_argument('--workers', type=int)
    common.add_argument('--digits', type=int, help='rounding of text tables; CSVs keep full precision')
    common.add_argument('--log-if', dest='log_if_regressor', choices=['rescaled', 'raw'])
    common.add_argument('--cited-only', dest='errors_cited_only', action='store_true', default=None)
    common.add_argument('--rank-size', type=int)
    common.add_argument('--preset', dest='synth_preset', choices=sorted(PRESETS))
    common.add_argument('--pubs', dest='synth_pubs', type=int, help='synthetic publications per SC')
    common.add_argument('--scs', dest='synth_scs', type=int, help='number of synthetic SCs')
    common.add_argument('--log-level')

    parser = argparse.ArgumentParser(
        prog='citeforecast',
        description='Predict long-term citation impact from early citations and journal impact factor')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, command in COMMANDS.items():
        doc = (command.__doc__ or name).strip()
        subparsers.add_parser(name, parents=[common], help=doc.splitlines()[0], description=doc,
                              formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def config_from_args(args):
    flags = {
        name: getattr(args, name)
        for name in ('t_min', 't_max', 'long_window', 'sc_threshold', 'uncited_threshold', 'uncited_sc_window',
                     'area_map', 'out_dir', 'seed', 'workers', 'digits', 'log_if_regressor',
                     'errors_cited_only', 'rank_size', 'synth_preset', 'synth_pubs', 'synth_scs')
    }
    if args.inputs:
        flags['inputs'] = tuple(args.inputs)
    if args.variant:
        flags['variants'] = VARIANTS if args.variant == 'both' else (args.variant,)
    if args.quantiles is not None:
        key = 'error_quantiles' if args.command == 'errors' else 'strata_quantiles'
        flags[key] = args.quantiles
    return build_run_config(args.config_file, **flags)


def execute(args):
    """Run the subcommand of parsed arguments and return the written paths"""
    config = config_from_args(args)
    logger.info(f"Running {args.command} (config {config.config_hash()})")
    return COMMANDS[args.command](config)


def run(argv=None):
    """Parse arguments, run one subcommand and return the written paths"""
    return execute(build_parser().parse_args(argv))
