"""
Unit tests for Configuration components.
"""
import logging
import pytest

from config.settings import Settings
from config.solver_settings import (
    CV_SETTINGS, INFERENCE_SETTINGS, LASSO_SETTINGS, MLE_SETTINGS, PROJECTION_SETTINGS, SIMULATION_SETTINGS,
)
from config.logging_config import JsonFormatter, get_logger, set_level


class TestConfiguration:
    """Test suite for configuration components."""

    def test_settings_defaults(self):
        settings = Settings()
        assert settings.DEFAULT_SEED == 20240101
        assert settings.DEFAULT_ALPHA == 0.05
        assert settings.DEFAULT_THRESHOLD == 0.5
        assert settings.DEFAULT_JOBS == 1

    def test_environment_override(self):
        with pytest.MonkeyPatch.context() as m:
            m.setenv("LIVE_LOG", "warning")
            m.setenv("LIVE_DEFAULT_SEED", "7")
            settings = Settings()
            assert settings.LOG == "WARNING"
            assert settings.DEFAULT_SEED == 7

    def test_log_level_validation(self):
        with pytest.raises(ValueError):
            Settings(LOG="INVALID")

    @pytest.mark.parametrize("field", ["DEFAULT_ALPHA", "DEFAULT_THRESHOLD"])
    @pytest.mark.parametrize("value", [0.0, 1.0, 1.5])
    def test_probability_fields_validated(self, field, value):
        with pytest.raises(ValueError):
            Settings(**{field: value})

    def test_jobs_and_seed_validated(self):
        with pytest.raises(ValueError):
            Settings(DEFAULT_JOBS=0)
        with pytest.raises(ValueError):
            Settings(DEFAULT_SEED=2 ** 64)

    def test_solver_defaults(self):
        assert LASSO_SETTINGS['tol'] == 1e-7
        assert LASSO_SETTINGS['max_iter'] == 100_000
        assert CV_SETTINGS['n_folds'] == 10 and CV_SETTINGS['grid_size'] == 50
        assert CV_SETTINGS['rule'] == 'min'
        assert MLE_SETTINGS['separation_threshold'] == 30.0
        assert PROJECTION_SETTINGS['mu_floor'] == 1e-4 and PROJECTION_SETTINGS['mu_ceiling'] == 1e3
        assert PROJECTION_SETTINGS['relaxation_factor'] == 1.25 and PROJECTION_SETTINGS['max_relaxations'] == 5
        assert INFERENCE_SETTINGS['weight_floor'] == 1e-4
        assert SIMULATION_SETTINGS['n_reps'] == 200

    def test_logging_configuration(self):
        logger = get_logger('projection')
        assert logger.name == 'live.projection'
        assert get_logger('unknown') is get_logger('system')
        set_level('WARNING')
        try:
            assert logger.level == logging.WARNING
        finally:
            set_level('DEBUG')

    def test_json_formatter(self):
        import json
        record = logging.LogRecord('live.cli', logging.INFO, __file__, 10, 'hello %s', ('world',), None)
        payload = json.loads(JsonFormatter().format(record))
        assert payload['message'] == 'hello world'
        assert payload['level'] == 'INFO'
