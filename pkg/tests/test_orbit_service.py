"""
Модели потоков и перечисление орбит:
  * проверки cat map (определитель 1, гиперболичность), log растяжения;
  * N_k = |tr(A^k) - 2| и обращение Мёбиуса для примитивных орбит;
  * каталог надстройки: сортировка, кратности, целые определители, горизонт;
  * слова фуксовой группы: обращение, несократимость, корни, длины геодезических.
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError
from pytest import approx

from app.models import PeriodicOrbit
from app.services.orbit_service import OrbitService
from app.utils.exceptions import (DeterminantNotOne, EmptyGeneratorList, InconsistentCounts,
                                  NonUnimodularGenerator, NotHyperbolic, Overflow)


# -- Helpers --

def cat_map():
    return OrbitService.validate_cat_map(2, 1, 1, 1)


def entries(catalog):
    return [(o.length, o.primitive_length, o.multiplicity, o.det_integer) for o in catalog.orbits]


def lattice_fixed_points(matrix: tuple[int, int, int, int], k: int) -> int:
    """ Перебор x in (1/D)Z^2 из [0, 1)^2 с (A^k - I)x = 0 mod 1, D = |det(A^k - I)| """
    a, b, c, d = matrix
    power = np.linalg.matrix_power(np.array([[a, b], [c, d]], dtype=np.int64), k) - np.eye(2, dtype=np.int64)
    m = [[int(v) for v in row] for row in power]
    D = abs(m[0][0] * m[1][1] - m[0][1] * m[1][0])
    j = np.arange(D, dtype=np.int64)
    count = 0
    for i in range(D):
        first = (m[0][0] * i + m[0][1] * j) % D == 0
        second = (m[1][0] * i + m[1][1] * j) % D == 0
        count += int(np.count_nonzero(first & second))
    return count


class TestValidateCatMap:

    def test_golden_cat_map(self):
        m = cat_map()
        assert m.trace == 3
        assert m.expansion_log == approx(math.log((3 + math.sqrt(5)) / 2), rel=1e-15)

    def test_negative_trace(self):
        m = OrbitService.validate_cat_map(-2, -1, -1, -1)
        assert m.trace == -3
        assert m.expansion_log == approx(cat_map().expansion_log, rel=1e-15)

    def test_determinant_not_one(self):
        with pytest.raises(DeterminantNotOne):
            OrbitService.validate_cat_map(2, 1, 1, 2)

    def test_parabolic_rejected(self):
        with pytest.raises(NotHyperbolic):
            OrbitService.validate_cat_map(1, 1, 0, 1)


class TestFixedPointCount:

    def test_first_counts(self):
        assert [OrbitService.fixed_point_count(cat_map(), k) for k in range(1, 5)] == [1, 5, 16, 45]

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            OrbitService.fixed_point_count(cat_map(), 0)

    def test_overflow(self):
        with pytest.raises(Overflow):
            OrbitService.fixed_point_count(cat_map(), 50)

    @pytest.mark.parametrize('matrix', [(2, 1, 1, 1), (1, 1, 1, 2), (-2, -1, -1, -1), (3, 1, 2, 1), (2, 3, 1, 2)])
    @pytest.mark.parametrize('k', range(1, 7))
    def test_matches_lattice_count(self, matrix, k):
        model = OrbitService.validate_cat_map(*matrix)
        assert OrbitService.fixed_point_count(model, k) == lattice_fixed_points(matrix, k)


class TestPrimitiveOrbitCounts:

    def test_moebius_inversion(self):
        assert OrbitService.primitive_orbit_counts([1, 5, 16, 45]) == [1, 2, 5, 10]

    def test_inconsistent_counts(self):
        with pytest.raises(InconsistentCounts):
            OrbitService.primitive_orbit_counts([1, 4])

    def test_negative_count(self):
        with pytest.raises(InconsistentCounts):
            OrbitService.primitive_orbit_counts([-1])


class TestSuspensionCatalog:

    def test_horizon_two(self):
        model = OrbitService.make_suspension(2, 1, 1, 1)
        catalog = OrbitService.enumerate_suspension_orbits(model, 2.0)
        assert entries(catalog) == [(1.0, 1.0, 1, 1), (2.0, 1.0, 1, 5), (2.0, 2.0, 2, 5)]
        assert catalog.total_orbits == 4
        assert catalog.complete_flag
        assert catalog.level_spacing == approx(1.0)

    def test_roof_two(self):
        model = OrbitService.make_suspension(2, 1, 1, 1, roof=2.0)
        catalog = OrbitService.enumerate_suspension_orbits(model, 2.0)
        assert entries(catalog) == [(2.0, 2.0, 1, 1)]

    def test_level_counts_sum_to_fixed_points(self):
        model = OrbitService.make_suspension(2, 1, 1, 1)
        catalog = OrbitService.enumerate_suspension_orbits(model, 10.0)
        for k in range(1, 11):
            level = [o for o in catalog.orbits if o.length == approx(k)]
            total = sum(o.multiplicity * o.primitive_length for o in level)
            assert total == approx(OrbitService.fixed_point_count(model.map, k))

    def test_potential_integral(self):
        model = OrbitService.make_suspension(2, 1, 1, 1, roof=1.0, potential_const=0.5)
        catalog = OrbitService.enumerate_suspension_orbits(model, 3.0)
        assert all(o.potential_integral == approx(0.5 * o.length) for o in catalog.orbits)

    def test_sorted_by_length(self):
        catalog = OrbitService.enumerate_suspension_orbits(OrbitService.make_suspension(2, 1, 1, 1), 12.0)
        keys = [o.sort_key() for o in catalog.orbits]
        assert keys == sorted(keys)

    def test_non_positive_horizon(self):
        with pytest.raises(ValueError):
            OrbitService.enumerate_suspension_orbits(OrbitService.make_suspension(2, 1, 1, 1), 0.0)


class TestMergeOrbits:

    def test_duplicates_are_merged_once(self):
        catalog = OrbitService.enumerate_suspension_orbits(OrbitService.make_suspension(2, 1, 1, 1), 6.0)
        once = OrbitService.merge_orbits(catalog.orbits + catalog.orbits)
        assert [o.multiplicity for o in once] == [2 * o.multiplicity for o in catalog.orbits]
        assert OrbitService.merge_orbits(once) == once

    def test_catalogs_are_fixed_points(self):
        suspension = OrbitService.enumerate_suspension_orbits(OrbitService.make_suspension(2, 1, 1, 1), 6.0)
        model = OrbitService.validate_generators([(2.0, 0.0, 0.0, 0.5)], max_word_len=3)
        geodesic = OrbitService.enumerate_geodesic_orbits(model, 5.0)
        for catalog in (suspension, geodesic):
            assert OrbitService.merge_orbits(catalog.orbits) == catalog.orbits


class TestPeriodicOrbit:

    def test_length_must_be_multiple(self):
        with pytest.raises(ValidationError):
            PeriodicOrbit(length=2.5, primitive_length=1.0, log_det_factor=1.0)

    def test_log_det_must_be_non_negative(self):
        with pytest.raises(ValidationError):
            PeriodicOrbit(length=1.0, primitive_length=1.0, log_det_factor=-0.1)


class TestWords:

    def test_invert_word(self):
        assert OrbitService.invert_word('abA') == 'aBA'

    def test_reduced(self):
        assert OrbitService.is_reduced('abA')
        assert not OrbitService.is_reduced('aAb')
        assert not OrbitService.is_cyclically_reduced('abA')

    def test_canonical_rotation(self):
        assert OrbitService.canonical_rotation('ba') == 'ab'

    def test_primitive_root(self):
        assert OrbitService.primitive_root('abab') == ('ab', 2)
        assert OrbitService.primitive_root('aab') == ('aab', 1)

    def test_translation_length(self):
        assert OrbitService.translation_length(2.5) == approx(2 * math.log(2))
        assert OrbitService.translation_length(2.0) is None

    def test_geodesic_log_det(self):
        T = 1.7
        assert OrbitService.geodesic_log_det(T) == approx(math.log(4 * math.sinh(T / 2) ** 2))


class TestGeodesicCatalog:

    def test_single_hyperbolic_generator(self):
        model = OrbitService.validate_generators([(2.0, 0.0, 0.0, 0.5)], max_word_len=2)
        catalog = OrbitService.enumerate_geodesic_orbits(model, 3.0)
        ell = 2 * math.log(2)
        assert [(o.length, o.primitive_length, o.multiplicity) for o in catalog.orbits] == [
            (approx(ell), approx(ell), 2), (approx(2 * ell), approx(ell), 2)]
        assert catalog.metadata['classes_found'] == 2
        assert not catalog.complete_flag

    def test_word_orbit_power(self):
        model = OrbitService.validate_generators([(2.0, 0.0, 0.0, 0.5)])
        orbit = OrbitService.geodesic_orbit_for_word(model, 'aaa')
        assert orbit.repetition == 3
        assert orbit.primitive_length == approx(2 * math.log(2))

    def test_parabolic_word(self):
        model = OrbitService.validate_generators([(1.0, 1.0, 0.0, 1.0)])
        with pytest.raises(NotHyperbolic):
            OrbitService.geodesic_orbit_for_word(model, 'a')

    def test_empty_generators(self):
        with pytest.raises(EmptyGeneratorList):
            OrbitService.validate_generators([])

    def test_non_unimodular_generator(self):
        with pytest.raises(NonUnimodularGenerator):
            OrbitService.validate_generators([(2.0, 0.0, 0.0, 1.0)])
