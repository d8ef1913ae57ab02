"""
Функция ухода на кокасательном расслоении надстройки:
  * sigma_u растёт как e^{kt}, sigma_s убывает, sigma_0 сохраняется вдоль потока;
  * двойственность базисов ковекторов и касательных векторов;
  * символ m лежит в [-1, 1];
  * скобка {G0, Re p}: замкнутая форма против центральной разности;
  * G0 однородна степени delta вдали от нулевого сечения;
  * выборочная проверка свойств (i), (ii) и выбор T1.
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError
from pytest import approx

from app.models import CotangentSample, EscapeParams
from app.services.escape_service import EscapeService
from app.services.orbit_service import OrbitService


# -- Helpers --

def split():
    return EscapeService.splitting(OrbitService.validate_cat_map(2, 1, 1, 1))


def sample_point(theta: float = 0.4) -> CotangentSample:
    return CotangentSample.build((0.1, 0.2), theta, (3.0, -1.0), 2.0)


class TestThetaFlow:

    def test_adapted_norms_along_flow(self):
        data = split()
        alpha = sample_point()
        t = 2.7
        s0, su, ss = EscapeService.adapted_norms(alpha, data)
        f0, fu, fs = EscapeService.adapted_norms(EscapeService.theta_flow(alpha, t, data), data)
        assert f0 == approx(s0, rel=1e-12)
        assert fu == approx(su * math.exp(data.flow_rate * t), rel=1e-9)
        assert fs == approx(ss * math.exp(-data.flow_rate * t), rel=1e-9)

    def test_backward_flow(self):
        data = split()
        alpha = sample_point(theta=0.9)
        _, su, _ = EscapeService.adapted_norms(alpha, data)
        _, fu, _ = EscapeService.adapted_norms(EscapeService.theta_flow(alpha, -1.6, data), data)
        assert fu == approx(su * math.exp(-1.6 * data.flow_rate), rel=1e-9)

    def test_zero_time(self):
        alpha = sample_point()
        assert EscapeService.theta_flow(alpha, 0, split()) is alpha


class TestSplitting:

    def test_dual_pairing(self):
        pairing = EscapeService.dual_pairing(split())
        assert np.max(np.abs(pairing - np.eye(3))) <= 1e-12

    def test_flow_rate(self):
        assert split().flow_rate == approx(math.log((3 + math.sqrt(5)) / 2))


class TestSymbol:

    def test_range(self):
        data = split()
        params = EscapeParams()
        for alpha in EscapeService.sample_cotangent(data, 64, 1.5, seed=3):
            assert -1.0 <= EscapeService.m_symbol(alpha, params, data) <= 1.0

    def test_params_order(self):
        with pytest.raises(ValidationError):
            EscapeParams(T0=5, T1=4)
        with pytest.raises(ValidationError):
            EscapeParams(gamma=0.2, gamma1=0.3)


class TestBracket:

    def test_finite_difference_matches_closed_form(self):
        data = split()
        params = EscapeParams()
        for alpha in EscapeService.sample_cotangent(data, 8, 10.0, seed=1):
            value = EscapeService.bracket_along_flow(alpha, params, data)
            assert abs(value.finite_difference - value.closed_form) <= 1e-4 * max(1.0, abs(value.closed_form))

    def test_dt_range(self):
        with pytest.raises(ValueError):
            EscapeService.bracket_along_flow(sample_point(), EscapeParams(), split(), dt=0.5)


class TestSampling:

    def test_deterministic(self):
        data = split()
        first = EscapeService.sample_cotangent(data, 32, 10.0, seed=7)
        second = EscapeService.sample_cotangent(data, 32, 10.0, seed=7)
        assert first == second
        assert len(first) == 32

    def test_jap_range(self):
        for alpha in EscapeService.sample_cotangent(split(), 64, 10.0):
            assert 10.0 * (1 - 1e-12) <= alpha.jap <= 1e4 * (1 + 1e-12)


class TestHomogeneity:

    @pytest.mark.parametrize('theta', [0.1, 0.4, 0.85])
    def test_homogeneous_at_infinity(self, theta):
        params, data = EscapeParams(), split()
        near = CotangentSample.build((0.1, 0.2), theta, (30.0, -10.0), 20.0)
        far = CotangentSample.build((0.1, 0.2), theta, (3e4, -1e4), 2e4)
        g_near = EscapeService.escape_G0(near, params, data)
        g_far = EscapeService.escape_G0(far, params, data)
        assert g_far == approx(1e3 ** params.delta * g_near, rel=0.02)


class TestPropertyScan:

    def test_no_violations(self):
        report = EscapeService.property_scan(EscapeParams(), split(), 256, 10.0, threads=2)
        assert report.samples == 256
        assert report.violations_i == 0
        assert report.violations_ii == 0
        assert report.fitted_c > 0
        assert report.checked_i + report.checked_ii > 0

    def test_find_T1(self):
        params = EscapeParams()
        T1 = EscapeService.find_T1(params, split(), directions=64)
        assert T1 > params.T0
        steps = (T1 - params.T0) / 0.25
        assert steps == approx(round(steps))
