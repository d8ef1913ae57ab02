import logging
import math
import string
from typing import Iterable, Optional

import numpy as np

from app.models import FuchsianModel, HyperbolicToralMap, OrbitCatalog, PeriodicOrbit, SuspensionModel
from app.utils.exceptions import (DeterminantNotOne, EmptyGeneratorList, InconsistentCounts,
                                  NonUnimodularGenerator, NotHyperbolic, Overflow)


logger = logging.getLogger(__name__)

INT64_MAX = 2 ** 63 - 1

# Относительный допуск при слиянии орбит с одинаковыми инвариантами
MERGE_RTOL = 1e-9

# Порог |tr| - 2, ниже которого слово считается параболическим
PARABOLIC_GUARD = 1e-9

Matrix = tuple[tuple[int, int], tuple[int, int]]


def _mat_mul(x: Matrix, y: Matrix) -> Matrix:
    return ((x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]),
            (x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]))


def _mat_pow(m: Matrix, k: int) -> Matrix:
    """ Целочисленная степень матрицы 2x2 (возведение в квадрат) """
    result: Matrix = ((1, 0), (0, 1))
    base = m
    while k > 0:
        if k & 1:
            result = _mat_mul(result, base)
        base = _mat_mul(base, base)
        k >>= 1
    return result


def _divisors(k: int) -> list[int]:
    return [d for d in range(1, k + 1) if k % d == 0]


class OrbitService:

    ''' Проверка матрицы автоморфизма тора '''
    @staticmethod
    def validate_cat_map(a: int, b: int, c: int, d: int) -> HyperbolicToralMap:
        a, b, c, d = int(a), int(b), int(c), int(d)
        det = a * d - b * c
        if det != 1:
            raise DeterminantNotOne(f'Определитель матрицы ({a},{b},{c},{d}) равен {det}, а не 1')

        trace = a + d
        if abs(trace) <= 2:
            raise NotHyperbolic(f'Матрица ({a},{b},{c},{d}) не гиперболическая: |tr| = {abs(trace)} <= 2')

        expansion_log = math.log((abs(trace) + math.sqrt(trace * trace - 4)) / 2)
        return HyperbolicToralMap(a=a, b=b, c=c, d=d, trace=trace, expansion_log=expansion_log)


    @staticmethod
    def make_suspension(a: int, b: int, c: int, d: int, roof: float = 1.0,
                        potential_const: float = 0.0) -> SuspensionModel:
        """ Надстройка проверенного автоморфизма тора с постоянной крышей """
        return SuspensionModel(map=OrbitService.validate_cat_map(a, b, c, d), roof=roof,
                               potential_const=potential_const)


    @staticmethod
    def matrix_power(cat_map: HyperbolicToralMap, k: int) -> Matrix:
        """ A^k для целого k (отрицательные степени через обратную матрицу) """
        if k >= 0:
            return _mat_pow(cat_map.matrix, k)
        return _mat_pow(cat_map.inverse, -k)


    ''' Число неподвижных точек A^k на торе: |tr(A^k) - 2| '''
    @staticmethod
    def fixed_point_count(cat_map: HyperbolicToralMap, k: int) -> int:
        if k < 1:
            raise ValueError('k должно быть >= 1')

        power = _mat_pow(cat_map.matrix, k)
        trace = power[0][0] + power[1][1]
        if abs(trace) > INT64_MAX:
            raise Overflow(f'След A^{k} выходит за пределы 64-битного целого, уменьшите горизонт')
        return abs(trace - 2)


    ''' Обращение Мёбиуса: sum_{d|p} d * M_d = N_p '''
    @staticmethod
    def primitive_orbit_counts(counts: Iterable[int]) -> list[int]:
        counts = list(counts)
        primitive: list[int] = []

        for p, n_p in enumerate(counts, start=1):
            if int(n_p) != n_p or n_p < 0:
                raise InconsistentCounts(f'N_{p} = {n_p} не является неотрицательным целым')
            rest = int(n_p) - sum(d * primitive[d - 1] for d in _divisors(p) if d < p)
            if rest < 0 or rest % p:
                raise InconsistentCounts(f'Число примитивных орбит периода {p} не целое неотрицательное: {rest}/{p}')
            primitive.append(rest // p)

        return primitive


    @staticmethod
    def merge_orbits(orbits: Iterable[PeriodicOrbit]) -> tuple[PeriodicOrbit, ...]:
        """
        Сортировка по (T, T#, log|det|) и слияние записей с совпадающими
        инвариантами (относительный допуск 1e-9) в одну запись с кратностью.
        """
        ordered = sorted(orbits, key=lambda o: o.sort_key())
        merged: list[PeriodicOrbit] = []

        for orbit in ordered:
            if merged and OrbitService._same_invariants(merged[-1], orbit):
                last = merged[-1]
                merged[-1] = last.model_copy(update={'multiplicity': last.multiplicity + orbit.multiplicity})
            else:
                merged.append(orbit)

        return tuple(merged)


    @staticmethod
    def _same_invariants(x: PeriodicOrbit, y: PeriodicOrbit) -> bool:
        return all(math.isclose(p, q, rel_tol=MERGE_RTOL, abs_tol=MERGE_RTOL)
                   for p, q in ((x.length, y.length), (x.primitive_length, y.primitive_length),
                                (x.log_det_factor, y.log_det_factor),
                                (x.potential_integral, y.potential_integral)))


    ''' Каталог орбит надстройки с постоянной крышей '''
    @staticmethod
    def enumerate_suspension_orbits(model: SuspensionModel, horizon_T: float) -> OrbitCatalog:
        if horizon_T <= 0:
            raise ValueError('Горизонт должен быть положительным')

        r = model.roof
        c = model.potential_const
        levels = int(math.floor(horizon_T / r + 1e-9))
        logger.info(f'Перечисление орбит надстройки {model.model_id}: горизонт {horizon_T}, уровней {levels}')

        counts = [OrbitService.fixed_point_count(model.map, k) for k in range(1, levels + 1)]
        primitive = OrbitService.primitive_orbit_counts(counts)

        orbits = []
        for k in range(1, levels + 1):
            for p in _divisors(k):
                if primitive[p - 1] == 0:
                    continue
                orbits.append(PeriodicOrbit(length=k * r,
                                            primitive_length=p * r,
                                            potential_integral=c * k * r,
                                            log_det_factor=math.log(counts[k - 1]),
                                            multiplicity=primitive[p - 1],
                                            det_integer=counts[k - 1]))

        h_top = model.map.expansion_log / r
        catalog = OrbitCatalog(model_id=model.model_id,
                               orbits=tuple(sorted(orbits, key=lambda o: o.sort_key())),
                               horizon_T=horizon_T,
                               complete_flag=True,
                               topological_entropy_estimate=h_top,
                               level_spacing=r,
                               potential_const=c,
                               weight_growth=h_top,
                               metadata={'levels': levels})
        logger.info(f'Каталог {model.model_id}: {len(catalog.orbits)} записей, {catalog.total_orbits} орбит')
        return catalog


    ''' Проверка генераторов фуксовой группы '''
    @staticmethod
    def validate_generators(generators, max_word_len: int = 6, certify_complete: bool = False,
                            potential_const: float = 0.0) -> FuchsianModel:
        if not generators:
            raise EmptyGeneratorList('Не задано ни одного генератора')
        if len(generators) > len(string.ascii_lowercase):
            raise ValueError('Слишком много генераторов')
        for g in generators:
            a, b, c, d = g
            if abs(a * d - b * c - 1.0) > 1e-12:
                raise NonUnimodularGenerator(f'Определитель генератора {tuple(g)} равен {a * d - b * c}')
        return FuchsianModel(generators=tuple(tuple(float(v) for v in g) for g in generators),
                             max_word_len=max_word_len, certify_complete=certify_complete,
                             potential_const=potential_const)


    @staticmethod
    def invert_word(word: str) -> str:
        """ Обратное слово: порядок букв обращается, регистр меняется """
        return word[::-1].swapcase()


    @staticmethod
    def is_reduced(word: str) -> bool:
        return all(x != y.swapcase() for x, y in zip(word, word[1:]))


    @staticmethod
    def is_cyclically_reduced(word: str) -> bool:
        return OrbitService.is_reduced(word) and (len(word) < 2 or word[0] != word[-1].swapcase())


    @staticmethod
    def canonical_rotation(word: str) -> str:
        """ Лексикографически минимальный циклический сдвиг """
        return min(word[i:] + word[:i] for i in range(len(word))) if word else word


    @staticmethod
    def primitive_root(word: str) -> tuple[str, int]:
        """ Представление w = u^j с минимальным u """
        n = len(word)
        for p in _divisors(n):
            if word[:p] * (n // p) == word:
                return word[:p], n // p
        return word, 1


    @staticmethod
    def word_matrix(model: FuchsianModel, word: str) -> np.ndarray:
        """ Произведение генераторов вдоль слова (заглавная буква: обратный генератор) """
        product = np.eye(2)
        for letter in word:
            index = string.ascii_lowercase.index(letter.lower())
            a, b, c, d = model.generators[index]
            g = np.array([[a, b], [c, d]]) if letter.islower() else np.array([[d, -b], [-c, a]])
            product = product @ g
        return product


    @staticmethod
    def translation_length(trace: float) -> Optional[float]:
        """ 2*arccosh(|t|/2) через логарифм; None для |t| <= 2 + 1e-9 """
        t = abs(trace)
        if t - 2.0 < PARABOLIC_GUARD:
            return None
        half = t / 2.0
        return 2.0 * math.log(half + math.sqrt((half - 1.0) * (half + 1.0)))


    @staticmethod
    def word_length(model: FuchsianModel, word: str) -> Optional[float]:
        m = OrbitService.word_matrix(model, word)
        return OrbitService.translation_length(float(np.trace(m)))


    @staticmethod
    def geodesic_log_det(length: float) -> float:
        """ log(4 sinh^2(T/2)) = T + 2 log(1 - e^{-T}) """
        return length + 2.0 * math.log1p(-math.exp(-length))


    ''' Орбита, соответствующая одному слову (с учётом собственной степени) '''
    @staticmethod
    def geodesic_orbit_for_word(model: FuchsianModel, word: str) -> PeriodicOrbit:
        if not OrbitService.is_cyclically_reduced(word):
            raise ValueError(f'Слово {word} не является циклически несократимым')

        root, power = OrbitService.primitive_root(word)
        primitive_length = OrbitService.word_length(model, root)
        if primitive_length is None:
            raise NotHyperbolic(f'Слово {root} задаёт параболический или эллиптический элемент')

        length = power * primitive_length
        return PeriodicOrbit(length=length,
                             primitive_length=primitive_length,
                             potential_integral=model.potential_const * length,
                             log_det_factor=OrbitService.geodesic_log_det(length))


    @staticmethod
    def reduced_words(letters: str, max_len: int) -> list[str]:
        """ Все несократимые слова длины 1..max_len в алфавите letters + обратные """
        alphabet = letters + letters.upper()
        words: list[str] = []
        frontier = ['']
        for _ in range(max_len):
            frontier = [w + x for w in frontier for x in alphabet if not w or w[-1] != x.swapcase()]
            words.extend(frontier)
        return words


    ''' Каталог замкнутых геодезических по словам ограниченной длины '''
    @staticmethod
    def enumerate_geodesic_orbits(model: FuchsianModel, horizon_T: float) -> OrbitCatalog:
        if horizon_T <= 0:
            raise ValueError('Горизонт должен быть положительным')
        if not model.generators:
            raise EmptyGeneratorList('Не задано ни одного генератора')

        letters = string.ascii_lowercase[:len(model.generators)]
        logger.info(f'Перечисление геодезических: {len(letters)} генераторов, длина слов <= {model.max_word_len}')

        classes = {OrbitService.canonical_rotation(w)
                   for w in OrbitService.reduced_words(letters, model.max_word_len)
                   if OrbitService.is_cyclically_reduced(w)}

        orbits = []
        parabolic = 0
        primitive_classes = 0
        for word in sorted(classes):
            if OrbitService.primitive_root(word)[1] > 1:
                # Собственные степени порождаются повторениями корня
                continue
            ell = OrbitService.word_length(model, word)
            if ell is None:
                parabolic += 1
                continue
            primitive_classes += 1
            j = 1
            while j * ell <= horizon_T:
                orbits.append(PeriodicOrbit(length=j * ell,
                                            primitive_length=ell,
                                            potential_integral=model.potential_const * j * ell,
                                            log_det_factor=OrbitService.geodesic_log_det(j * ell)))
                j += 1

        if parabolic:
            logger.warning(f'Пропущено {parabolic} параболических или эллиптических классов')

        catalog = OrbitCatalog(model_id=model.model_id,
                               orbits=OrbitService.merge_orbits(orbits),
                               horizon_T=horizon_T,
                               complete_flag=model.certify_complete,
                               topological_entropy_estimate=1.0,
                               potential_const=model.potential_const,
                               weight_growth=1.0,
                               metadata={'word_length_horizon': model.max_word_len,
                                         'classes_found': primitive_classes,
                                         'parabolic_skipped': parabolic})
        if not model.certify_complete:
            logger.warning(f'Каталог {model.model_id} не сертифицирован как полный: хвосты рядов не оцениваются')
        return catalog
