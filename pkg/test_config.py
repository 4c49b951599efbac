import pytest

from config import ALLOWED_QUANTILES, Config, RunConfig, build_run_config, load_config_file
from errors import ConfigError


def test_defaults_are_valid():
    assert Config.validate_config()
    config = Config.defaults()
    assert config.t_range == range(0, 9)
    assert config.long_window == 9
    assert config.sc_threshold == 100
    assert config.uncited_threshold == 50


def test_error_quantiles_default_by_variant():
    config = RunConfig()
    assert config.quantiles_for_errors('rescaled') == 10
    assert config.quantiles_for_errors('log') == 5
    assert RunConfig(error_quantiles=4).quantiles_for_errors('log') == 4


def test_config_file_then_flags(tmp_path):
    path = tmp_path / 'run.env'
    path.write_text('T_MIN=2\nT_MAX=6\nCITEFORECAST_SC_THRESHOLD=20\nVARIANTS=log\n')
    config = build_run_config(str(path), t_max=4, workers=None)
    assert (config.t_min, config.t_max) == (2, 4)
    assert config.sc_threshold == 20
    assert config.variants == ('log',)
    assert config.workers == Config.WORKERS


def test_unknown_config_key_rejected(tmp_path):
    path = tmp_path / 'run.env'
    path.write_text('T_MINIMUM=2\n')
    with pytest.raises(ConfigError, match='unknown config key'):
        load_config_file(str(path))


def test_non_integer_value_rejected(tmp_path):
    path = tmp_path / 'run.env'
    path.write_text('SEED=abc\n')
    with pytest.raises(ConfigError):
        load_config_file(str(path))


@pytest.mark.parametrize('overrides', [
    dict(sc_threshold=0),
    dict(uncited_threshold=0),
    dict(t_min=3, t_max=2),
    dict(t_max=9),
    dict(long_window=10),
    dict(strata_quantiles=3),
    dict(variants=('sqrt',)),
    dict(workers=0),
    dict(log_if_regressor='log'),
])
def test_invalid_settings_rejected(overrides):
    with pytest.raises(ConfigError):
        RunConfig(**overrides).validate()


def test_config_hash_ignores_execution_settings():
    base = RunConfig(inputs=('corpus.csv',))
    assert base.config_hash() == RunConfig(inputs=('corpus.csv',), workers=4, out_dir='elsewhere',
                                           digits=1).config_hash()
    assert base.config_hash() != RunConfig(inputs=('corpus.csv',), sc_threshold=50).config_hash()
    assert sorted(ALLOWED_QUANTILES) == [4, 5, 10]
