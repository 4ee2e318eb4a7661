"""
Tests for the Monte-Carlo designs, the replication runner, presets and aggregation.
"""
import math

import numpy as np
import pytest

from core.exceptions import ConfigError, DomainError
from core.numerics import RngStream, cholesky
from core.types import Method
from simulation.designs import (
    Decay, ExactSparse, ExactSparseAdversarial, ExactSparseWithIntercept, Loading1, Loading2, Loading3,
    gen_beta, gen_dataset, gen_loading, make_ar_covariance, true_probability,
)
from simulation.metrics import TABLE_COLUMNS, aggregate
from simulation.presets import list_presets, preset_config
from simulation.runner import (
    MethodOutcome, ReplicationResult, load_config, prepare_experiment, run_replication, run_simulation,
)

SMALL_CONFIG = {
    'name': 'small',
    'n': 120,
    'p': 13,
    'beta_spec': {'kind': 'exact_sparse'},
    'loading_spec': {'kind': 'loading1', 'r': 0.04},
    'n_reps': 4,
    'master_seed': 99,
    'lambda': 0.05,
}


def _outcome(prob, lower=None, upper=None, reject=None, error=None):
    return MethodOutcome(linear_estimate=0.0, probability=prob, ci_lower=lower, ci_upper=upper, reject=reject,
                         runtime_seconds=0.5, error=error)


class TestDesigns:
    """Covariance, regression vectors, loadings and datasets."""

    def test_ar_covariance(self):
        np.testing.assert_allclose(make_ar_covariance(1), [[0.5]])
        np.testing.assert_allclose(make_ar_covariance(2, 0.5), [[0.5, 0.25], [0.25, 0.5]])
        sigma = make_ar_covariance(6, -0.75)
        assert np.all(np.diag(sigma) == 0.75)
        assert sigma[0, 1] < 0 < sigma[0, 2]
        cholesky(sigma)

    def test_ar_covariance_domain(self):
        with pytest.raises(DomainError):
            make_ar_covariance(3, 1.0)
        with pytest.raises(DomainError):
            make_ar_covariance(0)

    def test_exact_sparse_beta(self):
        beta = gen_beta(ExactSparse(), 501)
        assert beta[0] == 0.0
        assert beta[1] == pytest.approx(0.05)
        assert beta[10] == pytest.approx(0.5)
        assert np.all(beta[11:] == 0.0)

    def test_decay_and_variants(self):
        assert gen_beta(Decay(exponent=2.0), 501)[2] == pytest.approx(0.25)
        adversarial = gen_beta(ExactSparseAdversarial(), 501)
        assert adversarial[8] == adversarial[9] == 0.01
        assert gen_beta(ExactSparseWithIntercept(b1=-1.0), 501)[0] == -1.0

    def test_loading_drawn_once(self):
        stream = RngStream(5, 2 ** 63)
        a = gen_loading(Loading1(r=1.0), 501, stream)
        b = gen_loading(Loading1(r=1.0), 501, stream)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.values[0] == 1.0

    def test_loading_shrinkage_is_exact(self):
        stream = RngStream(5, 2 ** 63)
        basis = gen_loading(Loading1(r=1.0), 501, stream).values
        shrunk = gen_loading(Loading1(r=1.0 / 25.0), 501, stream).values
        np.testing.assert_array_equal(shrunk[:11], basis[:11])
        np.testing.assert_array_equal(shrunk[11:], basis[11:] * (1.0 / 25.0))

    def test_loading2_and_loading3(self):
        stream = RngStream(5, 2 ** 63)
        assert not np.array_equal(
            gen_loading(Loading2(r=1.0), 30, stream).values, gen_loading(Loading1(r=1.0), 30, stream).values
        )
        third = gen_loading(Loading3(), 30, stream).values
        assert third[8] == third[9] == 10.0

    def test_null_model_is_balanced(self):
        beta = np.zeros(5)
        data = gen_dataset(10_000, beta, cholesky(make_ar_covariance(4)), RngStream(1, 0))
        assert abs(data.y.mean() - 0.5) <= 0.02
        assert np.all(data.x[:, 0] == 1.0)

    def test_design_covariance(self):
        p = 20
        sigma = make_ar_covariance(p - 1)
        data = gen_dataset(20_000, np.zeros(p), cholesky(sigma), RngStream(2, 0))
        sample = np.cov(data.x[:, 1:], rowvar=False)
        assert np.max(np.abs(sample - sigma)) <= 0.05

    def test_same_stream_same_dataset(self):
        chol = cholesky(make_ar_covariance(4))
        beta = gen_beta(ExactSparse(), 5)
        a = gen_dataset(50, beta, chol, RngStream(3, 1))
        b = gen_dataset(50, beta, chol, RngStream(3, 1))
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.y, b.y)

    def test_true_probability(self):
        loading = gen_loading(Loading1(r=1.0), 21, RngStream(1, 2 ** 63))
        beta = gen_beta(ExactSparse(), 21)
        assert true_probability(beta, loading) == pytest.approx(1.0 / (1.0 + math.exp(-loading.values @ beta)))


class TestAggregate:
    """Table metrics."""

    def test_symmetric_errors(self):
        truth = 0.6
        results = [
            ReplicationResult(0, truth, {'LiVE': _outcome(truth + 0.1, 0.0, 1.0, True)}),
            ReplicationResult(1, truth, {'LiVE': _outcome(truth - 0.1, 0.0, 1.0, False)}),
        ]
        row = aggregate(results, truth).for_method(Method.LIVE)
        assert row.bias == pytest.approx(0.0, abs=1e-15)
        assert row.se == pytest.approx(0.1)
        assert row.rmse == pytest.approx(0.1)
        assert row.cov == 1.0 and row.len == 1.0
        assert row.err == 0.5
        assert list(row.table_row()) == TABLE_COLUMNS

    def test_rmse_identity(self):
        rng = np.random.default_rng(0)
        results = [ReplicationResult(i, 0.3, {'LiVE': _outcome(float(p))}) for i, p in enumerate(rng.random(17))]
        row = aggregate(results, 0.3).rows[0]
        assert row.rmse ** 2 == pytest.approx(row.bias ** 2 + row.se ** 2, rel=1e-12)

    def test_failures_and_missing_fields_are_counted(self):
        results = [
            ReplicationResult(0, 0.5, {'PluginLasso': _outcome(0.4)}),
            ReplicationResult(1, 0.5, {'PluginLasso': _outcome(None, error='boom')}),
        ]
        row = aggregate(results, 0.5).rows[0]
        assert row.n_reps == 1 and row.n_failed == 1
        assert row.n_without_ci == 1 and row.n_without_test == 1
        assert math.isnan(row.cov) and math.isnan(row.err)

    def test_empty_results(self):
        with pytest.raises(DomainError):
            aggregate([], 0.5)


class TestConfigAndPresets:

    def test_load_config(self):
        config = load_config(SMALL_CONFIG)
        assert config.lambda_ == 0.05
        assert config.methods == (Method.LIVE, Method.PLUGIN_LASSO, Method.POST_SELECTION)
        assert config.snapshot()['lambda'] == 0.05
        assert load_config(config.snapshot()) == config

    def test_methods_accept_cli_names(self):
        config = load_config(dict(SMALL_CONFIG, methods=['live', 'postsel', 'live']))
        assert config.methods == (Method.LIVE, Method.POST_SELECTION)

    @pytest.mark.parametrize("patch, field_name", [
        ({'bogus': 1}, 'bogus'),
        ({'n': 5}, 'n'),
        ({'alpha': 1.5}, 'alpha'),
        ({'schema_version': 2}, 'schema_version'),
        ({'cv_rule': 'median'}, 'cv_rule'),
    ])
    def test_invalid_config_names_field(self, patch, field_name):
        with pytest.raises(ConfigError) as info:
            load_config(dict(SMALL_CONFIG, **patch))
        assert any(key.startswith(field_name) for key in info.value.field_errors)

    def test_presets(self):
        names = list_presets()
        assert 'table1-loading1-r25-n400' in names
        assert 'tableb3-loading3-n400' in names
        assert 'table3-decay2-r25-n400' in names
        payload = preset_config('table1-loading2-r1-n200', p=31)
        config = load_config(payload)
        assert (config.n, config.p) == (200, 31)
        assert config.loading_spec.kind == 'loading2'
        for name in names:
            load_config(preset_config(name))

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_config('table9')


class TestRunner:
    """Replications and the resumable loop."""

    def test_replication_records_every_method(self):
        config = load_config(SMALL_CONFIG)
        result = run_replication(config, 0)
        assert set(result.outcomes) == {'LiVE', 'PluginLasso', 'PostSelection'}
        live = result.outcomes['LiVE']
        assert live.error is None
        assert live.runtime_seconds > 0.0
        assert live.ci_lower <= live.probability <= live.ci_upper
        assert result.outcomes['PluginLasso'].ci_lower is None

    def test_loading_and_truth_fixed_across_replications(self):
        config = load_config(SMALL_CONFIG)
        experiment = prepare_experiment(config)
        again = prepare_experiment(config)
        np.testing.assert_array_equal(experiment.loading.values, again.loading.values)
        a = run_replication(config, 0, experiment)
        b = run_replication(config, 1, experiment)
        assert a.truth == b.truth == experiment.truth
        assert a.outcomes['LiVE'].probability != b.outcomes['LiVE'].probability

    def test_replication_is_reproducible(self):
        config = load_config(SMALL_CONFIG)
        a = run_replication(config, 2)
        b = run_replication(config, 2)
        for name in a.outcomes:
            assert a.outcomes[name].probability == b.outcomes[name].probability
            assert a.outcomes[name].ci_lower == b.outcomes[name].ci_lower

    def test_rep_index_range(self):
        with pytest.raises(DomainError):
            run_replication(load_config(SMALL_CONFIG), 4)

    def test_results_do_not_depend_on_jobs(self):
        config = load_config(SMALL_CONFIG)
        serial, summary_1 = run_simulation(config, jobs=1)
        parallel, summary_2 = run_simulation(config, jobs=2)
        for a, b in zip(serial, parallel):
            assert a.rep_index == b.rep_index
            for name in a.outcomes:
                assert a.outcomes[name].probability == b.outcomes[name].probability
                assert a.outcomes[name].reject == b.outcomes[name].reject
        for r1, r2 in zip(summary_1.rows, summary_2.rows):
            assert (r1.cov, r1.err, r1.len, r1.bias, r1.se) == (r2.cov, r2.err, r2.len, r2.bias, r2.se)

    def test_resume_skips_completed(self, tmp_out):
        config = load_config(SMALL_CONFIG)
        first, _ = run_simulation(config, out_dir=tmp_out)
        files = sorted((tmp_out / 'replications').glob('rep_*.json'))
        assert len(files) == config.n_reps
        files[1].unlink()
        resumed, summary = run_simulation(config, out_dir=tmp_out)
        assert len(list((tmp_out / 'replications').glob('rep_*.json'))) == config.n_reps
        assert [r.outcomes['LiVE'].probability for r in resumed] == [r.outcomes['LiVE'].probability for r in first]
        assert summary.truth == first[0].truth

    def test_invalid_jobs(self):
        with pytest.raises(DomainError):
            run_simulation(load_config(SMALL_CONFIG), jobs=0)
