"""
Дзета-функции надстройки cat map против точных формул:
  * exp(log zeta) = 1 - e^{-z} и замкнутая форма дзета-функции Рюэля;
  * формула следов: сумма по орбитам = сумма по резонансам 2 pi i j;
  * det_m * exp(Q_z) восстанавливает 1 - e^{-lam};
  * множители Вейерштрасса, опорная точка-резонанс, порядок определителя;
  * циклическое разложение равно ровно 1 - w;
  * |1 - E_p(w)| <= |w|^{p+1} в единичном круге;
  * удвоение горизонта сдвигает значение не больше оценки хвоста;
  * политика расходящегося хвоста (strict / non-strict).
"""
import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError
from pytest import approx

from app.models import RegDetInput, WeightedPoint
from app.services.orbit_service import OrbitService
from app.services.zeta_service import ZetaService
from app.utils.exceptions import AnchorIsResonance, DivergentTail


# -- Helpers --

def cat_catalog(horizon: float = 30.0, roof: float = 1.0, potential: float = 0.0):
    model = OrbitService.make_suspension(2, 1, 1, 1, roof=roof, potential_const=potential)
    return OrbitService.enumerate_suspension_orbits(model, horizon)


def ruelle_closed_form(z: complex) -> complex:
    lam = (3 + math.sqrt(5)) / 2
    w = cmath.exp(-z)
    return cmath.log(1 - lam * w) + cmath.log(1 - w / lam) - 2 * cmath.log(1 - w)


class TestLogZetaDirect:

    @pytest.mark.parametrize('z', [2, 3, 2 + 5j])
    def test_matches_closed_form(self, z):
        series = ZetaService.log_zeta_direct(cat_catalog(), z)
        assert abs(cmath.exp(series.value) - (1 - cmath.exp(-z))) <= 1e-12
        assert series.tail_kind == 'rigorous'
        assert series.tail_bound < 1e-12

    def test_potential_shifts_argument(self):
        series = ZetaService.log_zeta_direct(cat_catalog(potential=0.5), 2.5)
        assert cmath.exp(series.value) == approx(ZetaService.closed_form_cat_zeta(2.5, 0.5), abs=1e-12)

    def test_divergent_non_strict(self):
        series = ZetaService.log_zeta_direct(cat_catalog(horizon=5), -0.5)
        assert series.tail_bound == math.inf
        assert series.tail_kind == 'none'

    def test_divergent_strict(self):
        with pytest.raises(DivergentTail):
            ZetaService.log_zeta_direct(cat_catalog(horizon=5), -0.5, strict=True)


class TestTailBound:

    @pytest.mark.parametrize('z', [0.5 + 1j, 2, 1.2 - 3j])
    def test_doubling_horizon_stays_within_tail(self, z):
        short = ZetaService.log_zeta_direct(cat_catalog(horizon=20), z)
        long = ZetaService.log_zeta_direct(cat_catalog(horizon=40), z)
        assert math.isfinite(short.tail_bound)
        assert abs(long.value - short.value) <= short.tail_bound + 1e-12


class TestRuelleZeta:

    def test_matches_closed_form(self):
        series = ZetaService.log_ruelle_zeta_direct(cat_catalog(), 3.0)
        assert series.value == approx(ruelle_closed_form(3.0), abs=1e-12)

    def test_abscissa_is_entropy(self):
        catalog = cat_catalog(horizon=5)
        assert ZetaService.abscissa(catalog, 'ruelle') == approx(math.log((3 + math.sqrt(5)) / 2))
        with pytest.raises(DivergentTail):
            ZetaService.log_ruelle_zeta_direct(catalog, 0.9, strict=True)


class TestTraceFormula:

    def test_orbit_side_equals_spectral_side(self):
        moment = ZetaService.trace_moment(cat_catalog(), 1.0, 4)
        spectral = ZetaService.spectral_trace_sum(1.0, 4, 500)
        assert abs(moment.value - spectral.value) <= 1e-8 + moment.tail_bound + spectral.tail_bound

    def test_moment_order_must_be_positive(self):
        with pytest.raises(ValueError):
            ZetaService.trace_moment(cat_catalog(horizon=3), 1.0, 0)

    def test_spectral_sum_needs_m_two(self):
        with pytest.raises(ValueError):
            ZetaService.spectral_trace_sum(1.0, 1, 10)


class TestWeierstrassFactor:

    def test_known_value(self):
        assert ZetaService.weierstrass_factor(0.3, 3) == approx(0.99733, abs=1e-5)

    def test_log_consistent(self):
        assert ZetaService.log_weierstrass_factor(0.3, 3) == approx(cmath.log(ZetaService.weierstrass_factor(0.3, 3)),
                                                                   abs=1e-14)

    def test_zero_at_one(self):
        assert ZetaService.weierstrass_factor(1.0, 3) == 0

    @pytest.mark.parametrize('order', [1, 2, 4])
    def test_bound_on_unit_disk(self, order):
        rng = np.random.default_rng(order)
        radius = rng.uniform(0.05, 1.0, 2000)
        angle = rng.uniform(0.0, 2 * math.pi, 2000)
        for r, phi in zip(radius, angle):
            w = complex(cmath.rect(r, phi))
            assert abs(ZetaService.weierstrass_factor(w, order) - 1) <= abs(w) ** (order + 1) * (1 + 1e-9)


class TestRegularizedDet:

    def test_vanishes_on_resonance(self):
        data = RegDetInput(resonances=(WeightedPoint(value=1j),), det_order=4, anchor=10)
        assert ZetaService.regularized_det(data, 1j).value == 0

    def test_anchor_is_resonance(self):
        data = RegDetInput(resonances=(WeightedPoint(value=10),), det_order=4, anchor=10)
        with pytest.raises(AnchorIsResonance):
            ZetaService.regularized_det(data, 1.0)

    def test_order_must_exceed_dimension(self):
        with pytest.raises(ValidationError):
            RegDetInput(det_order=3)

    @pytest.mark.parametrize('lam', [1, 1 + 3j, -0.5 + 6j])
    def test_factorization_reconstructs_zeta(self, lam):
        catalog = cat_catalog()
        data = ZetaService.regdet_input(catalog, det_order=4, anchor=10, resonance_k=200)
        series = ZetaService.zeta_via_detm(catalog, data, lam)
        assert abs(series.value - (1 - cmath.exp(-lam))) <= 1e-4


class TestCycleExpansion:

    def test_cat_is_one_minus_w(self):
        coefficients = ZetaService.cycle_expansion(cat_catalog(horizon=12))
        assert coefficients[:2] == [Fraction(1), Fraction(-1)]
        assert all(c == 0 for c in coefficients[2:])
        assert len(coefficients) == 13

    def test_evaluator(self):
        zeta = ZetaService.zeta_evaluator(cat_catalog(horizon=12))
        assert zeta(2.0) == approx(1 - math.exp(-2.0), abs=1e-15)

    def test_requires_lattice(self):
        model = OrbitService.validate_generators([(2.0, 0.0, 0.0, 0.5)])
        with pytest.raises(ValueError):
            ZetaService.cycle_expansion(OrbitService.enumerate_geodesic_orbits(model, 3.0))


class TestEvaluate:

    def test_modes(self):
        catalog = cat_catalog()
        assert ZetaService.evaluate(catalog, 2.0, 'direct')[0] == 'log_zeta'
        quantity, series = ZetaService.evaluate(catalog, 1.0, 'trace', m=4)
        assert quantity == 'trace_moment'
        assert series.value == approx(ZetaService.trace_moment(catalog, 1.0, 4).value)

    def test_detm_needs_data(self):
        with pytest.raises(ValueError):
            ZetaService.evaluate(cat_catalog(horizon=3), 2.0, 'detm')

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            ZetaService.evaluate(cat_catalog(horizon=3), 2.0, 'fredholm')

    def test_cat_resonances(self):
        points = ZetaService.cat_resonances(2, roof=2.0)
        assert [p.value for p in points] == [approx(complex(0, math.pi * k)) for k in range(-2, 3)]
