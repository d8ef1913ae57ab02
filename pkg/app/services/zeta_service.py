import cmath
import logging
import math
from fractions import Fraction
from typing import Callable, Literal, Optional, Sequence

import numpy as np
from scipy import integrate

from app.models import OrbitCatalog, RegDetInput, SeriesValue, TraceMoment, WeightedPoint
from app.models.zeta import TailKind
from app.utils.exceptions import AnchorIsResonance, DivergentTail
from app.utils.numerics import complex_fsum, linear_fit, log_space_term


logger = logging.getLogger(__name__)

Weighting = Literal['det', 'ruelle']

# Остаток геометрического ряда считается пренебрежимым на этом уровне
TAIL_REL_EPS = 1e-17
TAIL_MAX_TERMS = 1_000_000


class ZetaService:

    @staticmethod
    def _orbit_moment(catalog: OrbitCatalog, z: complex, power: int, weighting: Weighting = 'det') -> complex:
        """
        sum mult * T# * e^{intV} * T^power * e^{-zT} / |det(I - P)| в лог-масштабе,
        по возрастанию длины; для weighting='ruelle' без потенциала и определителя.
        """
        z = complex(z)
        terms = []
        for orbit in catalog.orbits:
            log_modulus = (math.log(orbit.multiplicity) + math.log(orbit.primitive_length)
                           + power * math.log(orbit.length) - z.real * orbit.length)
            if weighting == 'det':
                log_modulus += orbit.potential_integral - orbit.log_det_factor
            terms.append(log_space_term(log_modulus, -z.imag * orbit.length))
        return complex_fsum(terms)


    @staticmethod
    def abscissa(catalog: OrbitCatalog, weighting: Weighting = 'det') -> float:
        """ Абсцисса сходимости ряда по орбитам """
        h = catalog.topological_entropy_estimate
        if weighting == 'ruelle':
            return h
        return catalog.potential_const + h - catalog.weight_growth


    @staticmethod
    def _lattice_tail(q: float, first: int, power: int, scale: float) -> float:
        """ sum_{k >= first} scale * k^power * q^k при 0 < q < 1 с мажорантой остатка """
        if q >= 1.0:
            return math.inf
        total = 0.0
        k = first
        while k - first < TAIL_MAX_TERMS:
            term = scale * k ** power * q ** k
            total += term
            ratio = q * max(1.0, ((k + 1) / k) ** power)
            if ratio < 1.0:
                remainder = term * ratio / (1.0 - ratio)
                if remainder <= TAIL_REL_EPS * total or term == 0.0:
                    return total + remainder
            k += 1
        return math.inf


    @staticmethod
    def _tail(catalog: OrbitCatalog, z: complex, power: int, weighting: Weighting) -> tuple[float, TailKind]:
        sigma = complex(z).real
        h = catalog.topological_entropy_estimate
        c = catalog.potential_const

        if catalog.is_lattice:
            r = catalog.level_spacing
            first = int(math.floor(catalog.horizon_T / r + 1e-9)) + 1
            if weighting == 'det':
                # На уровне k сумма mult * T# / |det| равна r (sum_{p|k} p * M_p = N_k)
                q = math.exp((c - sigma) * r)
                return ZetaService._lattice_tail(q, first, power, r ** (power + 1)), 'rigorous'
            # N_k <= e^{h k r} + 3
            tail = (ZetaService._lattice_tail(math.exp((h - sigma) * r), first, -1, 1.0)
                    + 3.0 * ZetaService._lattice_tail(math.exp(-sigma * r), first, -1, 1.0))
            return tail, 'rigorous'

        if catalog.complete_flag:
            # Асимптотика числа орбит e^{hT}/T, применяемая при T >= 1
            if weighting == 'det':
                rate, p = h + c - sigma - catalog.weight_growth, power
            else:
                rate, p = h - sigma, -1
            lower = max(catalog.horizon_T, 1.0)
            tail, _ = integrate.quad(lambda t: t ** p * math.exp(rate * t), lower, np.inf)
            return float(tail), 'estimate'

        return math.inf, 'none'


    @staticmethod
    def _series(catalog: OrbitCatalog, z: complex, value: complex, power: int, weighting: Weighting,
                scale: float, strict: bool, name: str) -> SeriesValue:
        sigma = complex(z).real
        edge = ZetaService.abscissa(catalog, weighting)
        if sigma <= edge:
            message = f'{name}: Re z = {sigma:g} не превышает абсциссу сходимости {edge:g}'
            if strict:
                raise DivergentTail(message)
            logger.warning(message)
            return SeriesValue(value=value, tail_bound=math.inf, tail_kind='none')

        tail, kind = ZetaService._tail(catalog, z, power, weighting)
        if kind == 'none':
            logger.debug(f'{name}: каталог {catalog.model_id} не полный, хвост не оценивается')
        return SeriesValue(value=value, tail_bound=tail * scale, tail_kind=kind)


    ''' log zeta_{X,V}(z) прямым суммированием по орбитам '''
    @staticmethod
    def log_zeta_direct(catalog: OrbitCatalog, z: complex, strict: bool = False) -> SeriesValue:
        value = -ZetaService._orbit_moment(catalog, z, -1)
        return ZetaService._series(catalog, z, value, -1, 'det', 1.0, strict, 'log_zeta_direct')


    ''' log zeta_R(z) без веса определителя '''
    @staticmethod
    def log_ruelle_zeta_direct(catalog: OrbitCatalog, z: complex, strict: bool = False) -> SeriesValue:
        value = -ZetaService._orbit_moment(catalog, z, -1, weighting='ruelle')
        return ZetaService._series(catalog, z, value, -1, 'ruelle', 1.0, strict, 'log_ruelle_zeta_direct')


    ''' Tr((z - P)^(-m)) по формуле следов '''
    @staticmethod
    def trace_moment(catalog: OrbitCatalog, z: complex, m: int, strict: bool = False) -> TraceMoment:
        if m < 1:
            raise ValueError('Порядок момента должен быть >= 1')
        scale = 1.0 / math.factorial(m - 1)
        value = ZetaService._orbit_moment(catalog, z, m - 1) * scale
        series = ZetaService._series(catalog, z, value, m - 1, 'det', scale, strict, 'trace_moment')
        return TraceMoment(order=m, at=complex(z), value=series.value, tail_bound=series.tail_bound)


    @staticmethod
    def q_polynomial(catalog: OrbitCatalog, z: complex, m: int, strict: bool = False) -> list[SeriesValue]:
        """
        Коэффициенты Q_z в базисе (z - lam)^l, l = 0..m-1:
        c_l = -sum T# e^{intV} T^{l-1} e^{-zT} / |det| / l!, причём c_0 = log zeta(z).
        """
        coefficients = []
        for ell in range(m):
            scale = 1.0 / math.factorial(ell)
            if ell == 0:
                coefficients.append(ZetaService.log_zeta_direct(catalog, z, strict))
                continue
            value = -ZetaService._orbit_moment(catalog, z, ell - 1) * scale
            coefficients.append(ZetaService._series(catalog, z, value, ell - 1, 'det', scale, strict, 'q_polynomial'))
        return coefficients


    @staticmethod
    def q_value(coefficients: list[SeriesValue], z: complex, lam):
        """ Q_z(lam) = sum c_l (z - lam)^l; lam может быть массивом """
        shift = complex(z) - np.asarray(lam, dtype=complex)
        total = np.zeros_like(shift)
        for c in reversed(coefficients):
            total = total * shift + c.value
        return complex(total) if np.ndim(total) == 0 else total


    ''' Множитель Вейерштрасса E(w, k) = (1 - w) exp(sum_{l=1}^{k} w^l / l) '''
    @staticmethod
    def weierstrass_factor(w: complex, order: int) -> complex:
        w = complex(w)
        polynomial = sum(w ** ell / ell for ell in range(1, order + 1))
        return (1 - w) * cmath.exp(polynomial)


    @staticmethod
    def log_weierstrass_factor(w: complex, order: int) -> complex:
        """ log E(w, k): при |w| <= 1/2 через ряд -sum_{l>k} w^l / l без потерь точности """
        w = complex(w)
        if w == 1:
            return complex(-math.inf, 0.0)
        if abs(w) <= 0.5:
            terms = []
            power = w ** (order + 1)
            ell = order + 1
            while abs(power) / ell > 1e-17 * max(1e-300, abs(w) ** (order + 1)) and ell < order + 80:
                terms.append(-power / ell)
                power *= w
                ell += 1
            return complex_fsum(terms)
        return cmath.log(1 - w) + sum(w ** ell / ell for ell in range(1, order + 1))


    @staticmethod
    def log_weierstrass_array(w: np.ndarray, order: int) -> np.ndarray:
        """ Векторная версия log E(w, k) (главная ветвь; важна вещественная часть) """
        w = np.asarray(w, dtype=complex)
        small = np.abs(w) <= 0.5

        series = np.zeros_like(w)
        power = np.where(small, w, 0) ** (order + 1)
        for ell in range(order + 1, order + 60):
            series -= power / ell
            power = power * np.where(small, w, 0)

        with np.errstate(divide='ignore', invalid='ignore'):
            direct = np.log(1 - w)
            for ell in range(1, order + 1):
                direct = direct + w ** ell / ell
        return np.where(small, series, direct)


    @staticmethod
    def _check_anchor(data: RegDetInput) -> None:
        for res in data.resonances:
            if abs(res.value - data.anchor) < 1e-12:
                raise AnchorIsResonance(f'Опорная точка z = {data.anchor} совпадает с резонансом')


    @staticmethod
    def _detm_log_tail(data: RegDetInput, lam: complex) -> float:
        """
        Оценка sum_{|lam_k| > R} 2 |w_k|^m по эмпирическому закону N(r) ~ C r^rho,
        подогнанному по самому списку резонансов.
        """
        if not data.resonances:
            return 0.0

        z = data.anchor
        m = data.det_order
        a = abs(lam - z)
        if a == 0.0:
            return 0.0

        moduli = sorted(abs(res.value) for res in data.resonances for _ in range(res.multiplicity))
        R = data.truncation_radius or moduli[-1]
        if R - abs(z) < 2.0 * a:
            return math.inf

        radii, counts = np.unique(np.asarray(moduli), return_counts=True)
        cumulative = np.cumsum(counts)
        positive = radii > 0
        if positive.sum() < 2:
            return math.inf

        rho, log_c, _ = linear_fit(np.log(radii[positive]), np.log(cumulative[positive]))
        if rho >= m or rho <= 0:
            return math.inf
        C = math.exp(log_c)

        def density(r: float) -> float:
            return 2.0 * (a / (r - abs(z))) ** m * C * rho * r ** (rho - 1.0)

        tail, _ = integrate.quad(density, R, np.inf)
        return float(tail)


    ''' Регуляризованный определитель det_m через множители Вейерштрасса '''
    @staticmethod
    def regularized_det(data: RegDetInput, lam: complex) -> SeriesValue:
        ZetaService._check_anchor(data)
        lam = complex(lam)
        z = data.anchor
        order = data.det_order - 1

        logs = []
        for res in data.resonances:
            w = (lam - z) / (res.value - z)
            if w == 1:
                return SeriesValue(value=0j, tail_bound=0.0, tail_kind='empirical')
            logs.append(res.multiplicity * ZetaService.log_weierstrass_factor(w, order))

        value = cmath.exp(complex_fsum(logs))
        log_tail = ZetaService._detm_log_tail(data, lam)
        tail = abs(value) * math.expm1(log_tail) if math.isfinite(log_tail) else math.inf
        return SeriesValue(value=value, tail_bound=tail, tail_kind='empirical')


    ''' zeta(lam) = det_m(...) * exp(Q_z(lam)) '''
    @staticmethod
    def zeta_via_detm(catalog: OrbitCatalog, data: RegDetInput, lam: complex, strict: bool = False) -> SeriesValue:
        det = ZetaService.regularized_det(data, lam)
        coefficients = ZetaService.q_polynomial(catalog, data.anchor, data.det_order, strict)

        q = ZetaService.q_value(coefficients, data.anchor, lam)
        factor = cmath.exp(q)
        value = det.value * factor

        shift = abs(data.anchor - lam)
        q_tail = sum(c.tail_bound * shift ** ell for ell, c in enumerate(coefficients))
        if math.isfinite(det.tail_bound) and math.isfinite(q_tail):
            tail = abs(factor) * det.tail_bound + abs(value) * math.expm1(q_tail)
        else:
            tail = math.inf
        return SeriesValue(value=value, tail_bound=tail, tail_kind='empirical')


    @staticmethod
    def log_abs_zeta_via_detm(catalog: OrbitCatalog, data: RegDetInput) -> Callable[[np.ndarray], np.ndarray]:
        """ Векторный вычислитель log|zeta(lam)| через det_m, для оценки порядка роста """
        ZetaService._check_anchor(data)
        coefficients = ZetaService.q_polynomial(catalog, data.anchor, data.det_order)
        values = np.array([res.value for res in data.resonances], dtype=complex)
        weights = np.array([res.multiplicity for res in data.resonances], dtype=float)
        z = data.anchor
        order = data.det_order - 1

        def log_abs(lam):
            lam = np.asarray(lam, dtype=complex)
            w = (lam[..., None] - z) / (values - z)
            logs = ZetaService.log_weierstrass_array(w, order).real @ weights
            return logs + np.real(ZetaService.q_value(coefficients, z, lam))

        return log_abs


    ''' Точная дзета-функция надстройки cat map: 1 - e^{-(z - c) r} '''
    @staticmethod
    def closed_form_cat_zeta(z, potential_const: float = 0.0, roof: float = 1.0):
        result = 1.0 - np.exp(-(np.asarray(z, dtype=complex) - potential_const) * roof)
        return complex(result) if np.ndim(result) == 0 else result


    @staticmethod
    def spectral_trace_sum(z: complex, m: int, horizon_j: int, potential_const: float = 0.0,
                           roof: float = 1.0) -> SeriesValue:
        """
        Спектральная сторона формулы следов для надстройки cat map:
        sum_{|j| <= J} (z - c - 2 pi i j / r)^{-m}, m >= 2, с оценкой хвоста.
        """
        if m < 2:
            raise ValueError('Спектральная сумма сходится только при m >= 2')
        shifted = complex(z) - potential_const
        terms = [(shifted - 2j * math.pi * j / roof) ** (-m) for j in range(-horizon_j, horizon_j + 1)]
        gap = 2 * math.pi * horizon_j / roof - abs(shifted)
        if gap <= 0:
            return SeriesValue(value=complex_fsum(terms), tail_bound=math.inf, tail_kind='none')
        tail = 2.0 * roof / (2 * math.pi * (m - 1)) * gap ** (1 - m)
        return SeriesValue(value=complex_fsum(terms), tail_bound=tail)


    ''' Циклическое разложение: точные коэффициенты zeta по w = e^{-(z - c) r} '''
    @staticmethod
    def cycle_expansion(catalog: OrbitCatalog) -> list[Fraction]:
        if catalog.level_spacing is None or any(o.det_integer is None for o in catalog.orbits):
            raise ValueError('Циклическое разложение требует решёточного каталога с целыми определителями')

        r = catalog.level_spacing
        levels = int(math.floor(catalog.horizon_T / r + 1e-9))
        b = [Fraction(0)] * (levels + 1)
        for orbit in catalog.orbits:
            k = int(round(orbit.length / r))
            p = int(round(orbit.primitive_length / r))
            b[k] -= Fraction(orbit.multiplicity * p, k * orbit.det_integer)

        coefficients = [Fraction(1)]
        for n in range(1, levels + 1):
            acc = sum((k * b[k] * coefficients[n - k] for k in range(1, n + 1)), Fraction(0))
            coefficients.append(acc / n)
        return coefficients


    @staticmethod
    def zeta_evaluator(catalog: OrbitCatalog) -> Callable:
        """ Усечённая дзета-функция как многочлен по w (схема Горнера), векторная """
        coefficients = [float(c) for c in ZetaService.cycle_expansion(catalog)]
        r = catalog.level_spacing
        c = catalog.potential_const
        logger.info(f'Циклическое разложение {catalog.model_id}: {len(coefficients)} коэффициентов')

        def zeta(z):
            w = np.exp(-(np.asarray(z, dtype=complex) - c) * r)
            total = np.zeros_like(w)
            for a in reversed(coefficients):
                total = total * w + a
            return complex(total) if np.ndim(total) == 0 else total

        return zeta


    @staticmethod
    def cat_resonances(k_max: int, potential_const: float = 0.0, roof: float = 1.0) -> tuple[WeightedPoint, ...]:
        """ Резонансы надстройки cat map: c + 2 pi i k / r, |k| <= k_max, простые """
        return tuple(WeightedPoint(value=complex(potential_const, 2 * math.pi * k / roof))
                     for k in range(-k_max, k_max + 1))


    ''' Вычисление в одном из режимов: direct, ruelle, trace, detm '''
    @staticmethod
    def evaluate(catalog: OrbitCatalog, z: complex, mode: str = 'direct', m: int = 4, strict: bool = False,
                 data: Optional[RegDetInput] = None) -> tuple[str, SeriesValue]:
        if mode == 'direct':
            return 'log_zeta', ZetaService.log_zeta_direct(catalog, z, strict)
        if mode == 'ruelle':
            return 'log_ruelle_zeta', ZetaService.log_ruelle_zeta_direct(catalog, z, strict)
        if mode == 'trace':
            moment = ZetaService.trace_moment(catalog, z, m, strict)
            kind = 'rigorous' if catalog.is_lattice else 'estimate'
            return 'trace_moment', SeriesValue(value=moment.value, tail_bound=moment.tail_bound,
                                               tail_kind=kind if math.isfinite(moment.tail_bound) else 'none')
        if mode == 'detm':
            if data is None:
                raise ValueError('Для режима detm нужен список резонансов')
            return 'zeta', ZetaService.zeta_via_detm(catalog, data, z, strict)
        raise ValueError(f'Неизвестный режим: {mode}')


    @staticmethod
    def regdet_input(catalog: OrbitCatalog, det_order: int = 4, anchor: complex = 10.0,
                     resonances: Optional[Sequence[WeightedPoint]] = None, resonance_k: int = 200) -> RegDetInput:
        """ Вход det_m; без явного списка берутся точные резонансы надстройки """
        if resonances is None:
            resonances = ZetaService.cat_resonances(resonance_k, catalog.potential_const, catalog.level_spacing or 1.0)
        return RegDetInput(resonances=tuple(resonances), det_order=det_order, anchor=complex(anchor))
