"""
Tests for the numerical health checks and the run manifest.
"""
import json

import numpy as np
import pytest

from core.exceptions import DomainError
from estimation.logistic_lasso import LassoOptions, fit_logistic_lasso
from estimation.projection import projection_direction
from monitoring.diagnostics import (
    FitDiagnostics, cone_ratio, taylor_remainder_ratio, variance_bracket_ratio, xu_sup_norm,
)
from utils.run_manifest import RunManifest


class TestDiagnostics:
    """Checks on fitted models and projection directions."""

    def test_taylor_bound_holds(self):
        rng = np.random.default_rng(12)
        a = rng.uniform(-5.0, 5.0, 10_000)
        d = rng.uniform(-3.0, 3.0, 10_000)
        d = np.where(np.abs(d) < 1e-3, 1e-3, d)
        ratio = taylor_remainder_ratio(a + d, a)
        assert np.all(ratio <= 1.0)
        assert taylor_remainder_ratio(0.3, 0.3) == 0.0

    def test_cone_ratio(self):
        beta = np.array([0.0, 1.0, 0.0, 0.0])
        assert cone_ratio(np.array([0.0, 0.5, 0.25, 0.0]), beta) == pytest.approx(0.5)
        assert cone_ratio(beta, beta) == 0.0
        assert cone_ratio(np.array([0.0, 1.0, 0.1, 0.0]), beta) == float('inf')
        with pytest.raises(DomainError):
            cone_ratio(np.zeros(3), beta)

    def test_full_report_on_sparse_design(self, sparse_design):
        data, x_star, beta = sparse_design['data'], sparse_design['loading'], sparse_design['beta']
        model = fit_logistic_lasso(data, 0.05)
        direction = projection_direction(data, x_star)
        report = FitDiagnostics(data).run(model, x_star, direction, beta)
        assert set(report.checks) == {'kkt', 'cone', 'certificate', 'variance_bracket', 'xu_inf'}
        assert report.checks['kkt']['ok']
        assert report.checks['certificate']['ok']
        assert report.checks['certificate']['value']['linf_residual'] == pytest.approx(
            direction.linf_residual, abs=1e-12)
        assert report.checks['xu_inf']['value'] == pytest.approx(xu_sup_norm(data, direction.u_hat))
        assert report.to_dict()['ok'] == report.ok

    def test_variance_bracket_on_sparse_design(self, sparse_design):
        data, x_star = sparse_design['data'], sparse_design['loading']
        diagnostics = FitDiagnostics(data)
        direction = projection_direction(data, x_star, gram=diagnostics.gram)
        ratio = variance_bracket_ratio(diagnostics.gram, direction.u_hat, x_star)
        assert 0.1 <= ratio <= 10.0
        assert diagnostics.check_variance_bracket(x_star, direction)['ok']

    def test_unconverged_fit_raises_alert(self, sparse_design):
        data = sparse_design['data']
        model = fit_logistic_lasso(data, 0.01, opts=LassoOptions(max_iter=3))
        check = FitDiagnostics(data).check_kkt(model)
        assert not check['ok']
        assert check['alerts']


class TestRunManifest:

    def test_phases_accumulate(self):
        manifest = RunManifest(command='fit', config={'lambda_': 0.1}, master_seed=1)
        with manifest.phase('fit'):
            pass
        with manifest.phase('fit'):
            pass
        assert set(manifest.phases) == {'fit'}
        assert manifest.phases['fit'] >= 0.0

    def test_reproducible_fields_exclude_timings(self):
        manifest = RunManifest(command='infer', config={'alpha': 0.05}, master_seed=3)
        fields = manifest.reproducible_fields()
        assert set(fields) == {'command', 'config', 'master_seed', 'artifact_version'}
        assert 'wall_seconds' in manifest.to_dict()

    def test_write(self, tmp_out):
        manifest = RunManifest(command='simulate', master_seed=5)
        path = manifest.write(tmp_out)
        payload = json.loads(path.read_text())
        assert payload['command'] == 'simulate'
        assert payload['master_seed'] == 5
        assert payload['wall_seconds'] >= 0.0
