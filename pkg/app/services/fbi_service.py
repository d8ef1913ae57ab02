import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import special

from app.models import DecayFit, FbiGrid, GevreySignal, Jump, WavefrontReport, WindowSpec
from app.models.fbi import FbiVariant
from app.utils.exceptions import EmptyFitRange, QuadratureNotConverged
from app.utils.numerics import gevrey_step, linear_fit


logger = logging.getLogger(__name__)

# Сходимость трапеций: относительное изменение при делении шага пополам
REFINE_TOL = 1e-9
MAX_REFINEMENTS = 6

# Гауссово окно обрезается на GAUSS_WIDTHS ширинах
GAUSS_WIDTHS = 10.0

XI_CHUNK = 256
X_CHUNK = 512

# Диапазон подгонки убывания: выше шума округления, внутри асимптотики
UNDERFLOW_FLOOR = 1e-280
RELATIVE_FLOOR = 1e-11
FIT_CEILING = 1e-3

# |Tu| на краю частотного окна выше этого порога: точка особая
EDGE_SINGULAR = 1e-3
CLUSTER_FLOOR = 1e-3


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    if nodes.size == 1:
        return np.ones(1)
    steps = np.diff(nodes)
    weights = np.zeros_like(nodes)
    weights[:-1] += steps / 2
    weights[1:] += steps / 2
    return weights


def _gaussian_rate(xi, h: float, variant: FbiVariant):
    """ Параметр a гауссова ядра exp(-a (x - x')^2) """
    if variant == 'gabor':
        return np.full_like(np.asarray(xi, dtype=complex), math.pi)
    if variant == 'scaled_phase':
        return np.sqrt(1.0 + np.asarray(xi, dtype=complex) ** 2) / (2.0 * h)
    return np.full_like(np.asarray(xi, dtype=complex), 1.0 / (2.0 * h))


def _prefactor(h: float, variant: FbiVariant) -> float:
    return 1.0 if variant == 'gabor' else (2.0 * math.pi * h) ** -1.5


def _outer_phase(x, xi, h: float, variant: FbiVariant):
    """ Множитель exp(i x xi / h) плоского варианта (у Габора его нет) """
    if variant == 'gabor':
        return np.ones(np.broadcast_shapes(np.shape(x), np.shape(xi)), dtype=complex)
    return np.exp(1j * x * xi / h)


class FbiService:

    ''' Сигнал с коэффициентами Фурье exp(-c|l|^(1/s)) и единичными фазами '''
    @staticmethod
    def make_gevrey_signal(s: float, c: float, L: int, phases: Optional[Sequence[complex]] = None,
                           window: Optional[WindowSpec] = None, jumps: Iterable[Jump] = (),
                           shift: float = 0.0) -> GevreySignal:
        if L < 0:
            raise ValueError('L должно быть неотрицательным')
        ells = np.arange(-L, L + 1)
        amplitudes = np.exp(-c * np.abs(ells) ** (1.0 / s))
        if phases is None:
            modes = tuple(complex(a) for a in amplitudes)
        else:
            if len(phases) != 2 * L + 1:
                raise ValueError(f'Нужно {2 * L + 1} фаз, передано {len(phases)}')
            modes = tuple(complex(a * p / abs(p)) for a, p in zip(amplitudes, phases))

        # Для s > 2 окно берётся более гладким, чем сам сигнал
        window = window or WindowSpec(gevrey=3.0 if s <= 2 else s + 2.0)
        return GevreySignal(s=s, c=c, modes=modes, window=window, jumps=tuple(jumps), shift=shift)


    @staticmethod
    def make_mode_signal(ell0: int, c: float = 1e-9, window: Optional[WindowSpec] = None,
                         shift: float = 0.0) -> GevreySignal:
        """ Одна мода exp(i l0 x) с амплитудой exp(-c|l0|) """
        L = abs(ell0)
        modes = [0j] * (2 * L + 1)
        modes[ell0 + L] = complex(math.exp(-c * L))
        return GevreySignal(s=1.0, c=c, modes=tuple(modes), window=window or WindowSpec(), shift=shift)


    @staticmethod
    def make_grid(h: float, x_min: float, x_max: float, xi_min: float, xi_max: float, xi_step: float,
                  variant: FbiVariant = 'flat') -> FbiGrid:
        """ Равномерная сетка: шаг по x не больше sqrt(h)/8, по xi ровно xi_step """
        if x_max <= x_min or xi_max < xi_min or xi_step <= 0:
            raise ValueError('Некорректные границы сетки')
        x_count = int(math.ceil((x_max - x_min) / (math.sqrt(h) / 8))) + 1
        xi_count = int(round((xi_max - xi_min) / xi_step)) + 1
        return FbiGrid(h=h,
                       x_nodes=tuple(float(v) for v in np.linspace(x_min, x_max, x_count)),
                       xi_nodes=tuple(float(v) for v in xi_min + xi_step * np.arange(xi_count)),
                       variant=variant)


    @staticmethod
    def window_values(window: WindowSpec, x) -> np.ndarray:
        edge = window.half_width + window.ramp
        return gevrey_step((edge - np.abs(np.asarray(x, dtype=float))) / window.ramp, sigma=window.gevrey)


    @staticmethod
    def _smooth_values(signal: GevreySignal, x) -> np.ndarray:
        """ W(y) * sum a_l exp(i l y), y = x - shift; считается блоками по x """
        y = np.asarray(x, dtype=float) - signal.shift
        ells = np.arange(-signal.order, signal.order + 1)
        modes = np.array(signal.modes, dtype=complex)
        values = np.zeros(y.shape, dtype=complex)
        flat = y.ravel()
        out = values.ravel()
        for start in range(0, flat.size, X_CHUNK):
            chunk = flat[start:start + X_CHUNK]
            out[start:start + X_CHUNK] = np.exp(1j * np.outer(chunk, ells)) @ modes
        return values * FbiService.window_values(signal.window, y)


    ''' Значения сигнала вместе со скачками (H(0) = 1/2) '''
    @staticmethod
    def evaluate(signal: GevreySignal, x) -> np.ndarray:
        y = np.asarray(x, dtype=float) - signal.shift
        values = FbiService._smooth_values(signal, x)
        for jump in signal.jumps:
            values = values + jump.height * np.heaviside(y - jump.x0, 0.5)
        return values


    @staticmethod
    def _nodes(signal: GevreySignal, x_lo: float, x_hi: float, a_min: float, a_max: float,
               k_max: float, halvings: int) -> np.ndarray:
        """ Равномерные узлы трапеций внутри носителя окна и гауссова хвоста """
        width = 1.0 / math.sqrt(2.0 * a_min)
        support_lo, support_hi = signal.window.support
        lo = max(x_lo - GAUSS_WIDTHS * width, signal.shift + support_lo)
        hi = min(x_hi + GAUSS_WIDTHS * width, signal.shift + support_hi)
        if lo >= hi:
            return np.empty(0)
        step = math.pi / (signal.order + k_max + 8.0 * math.sqrt(2.0 * a_max)) / 2 ** halvings
        count = int(math.ceil((hi - lo) / step)) + 1
        return np.linspace(lo, hi, count)


    @staticmethod
    def _kernel_sum(x: np.ndarray, xi: np.ndarray, h: float, variant: FbiVariant,
                    nodes: np.ndarray, weighted: np.ndarray) -> np.ndarray:
        """ sum_j exp(-a (x - x'_j)^2) exp(-i x'_j xi / h) u_j w_j для блока xi """
        phases = np.exp(-1j * np.outer(nodes, xi) / h)
        if variant == 'scaled_phase':
            rates = _gaussian_rate(xi, h, variant).real
            result = np.empty((x.size, xi.size), dtype=complex)
            diff2 = (x[:, None] - nodes[None, :]) ** 2
            for b, a in enumerate(rates):
                result[:, b] = np.exp(-a * diff2) @ (weighted * phases[:, b])
            return result
        a = float(_gaussian_rate(0.0, h, variant).real)
        kernel = np.exp(-a * (x[:, None] - nodes[None, :]) ** 2)
        return (kernel * weighted[None, :]) @ phases


    @staticmethod
    def _smooth_pass(signal: GevreySignal, grid: FbiGrid, halvings: int, threads: int = 1):
        x = np.array(grid.x_nodes)
        xi = np.array(grid.xi_nodes)
        rates = _gaussian_rate(xi, grid.h, grid.variant).real
        nodes = FbiService._nodes(signal, float(x.min()), float(x.max()), float(rates.min()), float(rates.max()),
                                  float(np.abs(xi).max()) / grid.h, halvings)
        if nodes.size < 2:
            return np.zeros((x.size, xi.size), dtype=complex), nodes

        weighted = FbiService._smooth_values(signal, nodes) * _trapezoid_weights(nodes)
        chunks = [xi[i:i + XI_CHUNK] for i in range(0, xi.size, XI_CHUNK)]

        def block(chunk: np.ndarray) -> np.ndarray:
            return FbiService._kernel_sum(x, chunk, grid.h, grid.variant, nodes, weighted)

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            sums = np.concatenate(list(pool.map(block, chunks)), axis=1)

        values = _prefactor(grid.h, grid.variant) * _outer_phase(x[:, None], xi[None, :], grid.h, grid.variant) * sums
        return values, nodes


    @staticmethod
    def _smooth_transform(signal: GevreySignal, grid: FbiGrid, threads: int = 1):
        """ Гладкая часть Tu с делением шага пополам до относительного изменения REFINE_TOL """
        previous, _ = FbiService._smooth_pass(signal, grid, 0, threads)
        for halvings in range(1, MAX_REFINEMENTS + 1):
            values, nodes = FbiService._smooth_pass(signal, grid, halvings, threads)
            change = float(np.max(np.abs(values - previous))) if values.size else 0.0
            if change <= REFINE_TOL * max(float(np.max(np.abs(values))), 1e-300):
                logger.debug(f'Квадратура FBI сошлась: {nodes.size} узлов, изменение {change:.3g}')
                return values, nodes
            previous = values
        raise QuadratureNotConverged(f'Квадратура FBI не сошлась за {MAX_REFINEMENTS} делений шага')


    @staticmethod
    def _jump_part(signal: GevreySignal, grid: FbiGrid) -> np.ndarray:
        """
        Вклад скачков height * H(x' - x0) в замкнутой форме через функцию Фаддеевой:
        int_{t0}^inf exp(-t^2 - i beta t) dt, t0 = sqrt(a)(x0 - x), beta = (xi/h)/sqrt(a).
        """
        x = np.array(grid.x_nodes)[:, None]
        xi = np.array(grid.xi_nodes)[None, :]
        result = np.zeros((x.shape[0], xi.shape[1]), dtype=complex)
        if not signal.jumps:
            return result

        a = _gaussian_rate(xi, grid.h, grid.variant).real
        root = np.sqrt(a)
        beta = (xi / grid.h) / root
        for jump in signal.jumps:
            t0 = root * (jump.x0 + signal.shift - x)
            t0, b = np.broadcast_arrays(t0, beta)
            damping = np.exp(-t0 ** 2 - 1j * b * t0)
            right = t0 >= 0
            integral = np.empty(t0.shape, dtype=complex)
            integral[right] = 0.5 * math.sqrt(math.pi) * damping[right] * special.wofz(-b[right] / 2 + 1j * t0[right])
            left = ~right
            integral[left] = (math.sqrt(math.pi) * np.exp(-b[left] ** 2 / 4)
                              - 0.5 * math.sqrt(math.pi) * damping[left] * special.wofz(b[left] / 2 - 1j * t0[left]))
            result += jump.height * integral / root

        if grid.variant == 'gabor':
            return np.exp(-1j * x * xi / grid.h) * result
        return _prefactor(grid.h, grid.variant) * result


    ''' FBI-преобразование сигнала на сетке (x, xi); строки по x, столбцы по xi '''
    @staticmethod
    def fbi_transform(signal: GevreySignal, grid: FbiGrid, threads: int = 1) -> np.ndarray:
        logger.info(f'FBI ({grid.variant}, h = {grid.h:g}): сетка {len(grid.x_nodes)}x{len(grid.xi_nodes)}, '
                    f'L = {signal.order}, скачков {len(signal.jumps)}')
        values, _ = FbiService._smooth_transform(signal, grid, threads)
        values = values + FbiService._jump_part(signal, grid)
        if not np.all(np.isfinite(values)):
            raise QuadratureNotConverged('FBI-преобразование дало нечисловые значения')
        return values


    @staticmethod
    def transform_at(signal: GevreySignal, x: complex, xi: complex, h: float, variant: FbiVariant = 'flat') -> complex:
        """
        Tu в комплексной точке (x, xi), только гладкая часть. Окно интегрирования
        расширено на |Im x| и сдвиг максимума exp(x' Im xi / h).
        """
        if signal.jumps:
            raise ValueError('Комплексные аргументы поддерживаются только для сигналов без скачков')
        x = complex(x)
        xi = complex(xi)
        a = complex(_gaussian_rate(xi, h, variant))
        if a.real <= 0:
            raise ValueError('Re a(xi) должно быть положительным')
        reach = abs(x.imag) + abs(xi.imag) / (2.0 * a.real * h)

        previous: Optional[complex] = None
        for halvings in range(MAX_REFINEMENTS + 1):
            nodes = FbiService._nodes(signal, x.real - reach, x.real + reach, a.real, abs(a), abs(xi) / h, halvings)
            if nodes.size < 2:
                return 0j
            weighted = FbiService._smooth_values(signal, nodes) * _trapezoid_weights(nodes)
            total = np.sum(np.exp(-a * (x - nodes) ** 2 - 1j * nodes * xi / h) * weighted)
            value = complex(_prefactor(h, variant) * _outer_phase(x, xi, h, variant) * total)
            if previous is not None and abs(value - previous) <= REFINE_TOL * max(abs(value), 1e-300):
                return value
            previous = value
        raise QuadratureNotConverged(f'Квадратура Tu({x}, {xi}) не сошлась')


    ''' Замкнутая форма для чистой моды exp(i l0 x') без окна '''
    @staticmethod
    def gaussian_oracle(ell0: int, x, xi, h: float, variant: FbiVariant = 'flat') -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if variant == 'gabor':
            k = xi / h - ell0
            return np.exp(1j * x * (ell0 - xi / h)) * np.exp(-k ** 2 / (4.0 * math.pi))
        if variant == 'scaled_phase':
            jap = np.sqrt(1.0 + xi ** 2)
            return ((2.0 * math.pi * h) ** -1.5 * np.sqrt(2.0 * math.pi * h / jap)
                    * np.exp(1j * ell0 * x) * np.exp(-(xi - h * ell0) ** 2 / (2.0 * h * jap)))
        return np.exp(1j * ell0 * x) * np.exp(-(xi - h * ell0) ** 2 / (2.0 * h)) / (2.0 * math.pi * h)


    ''' Подгонка log sup_x |Tu| против <xi/h>^p, по умолчанию p = 1/s '''
    @staticmethod
    def decay_fit(values: np.ndarray, grid: FbiGrid, s: float, exponent: Optional[float] = None) -> DecayFit:
        magnitudes = np.abs(np.asarray(values))
        sup = magnitudes.max(axis=0)
        xi = np.array(grid.xi_nodes)
        frequency = np.sqrt(1.0 + (xi / grid.h) ** 2)

        floor = max(UNDERFLOW_FLOOR, RELATIVE_FLOOR * float(sup.max(initial=0.0)))
        mask = (sup >= floor) & (sup <= FIT_CEILING) & (sup > 0)
        if int(mask.sum()) < 3:
            raise EmptyFitRange(f'В диапазоне [{floor:.3g}, {FIT_CEILING:g}] меньше трёх точек для подгонки')

        power = exponent if exponent is not None else 1.0 / s
        slope, intercept, r_squared = linear_fit(frequency[mask] ** power, np.log(sup[mask]))
        if slope >= 0:
            logger.warning(f'Наклон подгонки убывания неотрицателен: {slope:.4g}')
        return DecayFit(slope=slope, intercept=intercept, r_squared=r_squared,
                        xi_range=(float(xi[mask].min()), float(xi[mask].max())),
                        exponent=power, points=int(mask.sum()), decaying=slope < 0)


    @staticmethod
    def select_exponent(values: np.ndarray, grid: FbiGrid, candidates: Sequence[float] = (1.0, 0.5, 1.0 / 3.0)) -> dict[float, DecayFit]:
        """ Подгонки для каждого кандидата показателя; лучший по r^2 """
        fits = {p: FbiService.decay_fit(values, grid, 1.0, exponent=p) for p in candidates}
        best = max(fits, key=lambda p: fits[p].r_squared)
        logger.info(f'Лучший показатель убывания {best:.4g} (r^2 = {fits[best].r_squared:.6f})')
        return fits


    @staticmethod
    def _local_rates(values: np.ndarray, grid: FbiGrid, sign: int):
        """
        Скорость убывания -d log|Tu| / d<xi/h> в верхней половине частот данного знака.
        NaN: значения ушли под порог шума (точка регулярна); 0: |Tu| велико на краю.
        """
        xi = np.array(grid.xi_nodes)
        side = sign * xi > 0
        rates = np.full(values.shape[0], np.nan)
        if not side.any():
            return rates, side
        top = float(np.abs(xi[side]).max())
        band = side & (np.abs(xi) >= top / 2)
        if int(band.sum()) < 3:
            return rates, band

        edge_column = int(np.flatnonzero(side)[np.argmax(np.abs(xi[side]))])
        frequency = np.sqrt(1.0 + (xi[band] / grid.h) ** 2)
        magnitudes = np.abs(values)
        floor = max(UNDERFLOW_FLOOR, RELATIVE_FLOOR * float(magnitudes.max(initial=0.0)))

        for i in range(values.shape[0]):
            if magnitudes[i, edge_column] > EDGE_SINGULAR:
                rates[i] = 0.0
                continue
            row = magnitudes[i, band]
            valid = row >= floor
            if int(valid.sum()) < 3:
                continue
            slope, _, _ = linear_fit(frequency[valid], np.log(row[valid]))
            rates[i] = -slope
        return rates, band


    ''' Поиск волнового фронта: клетки с медленным локальным убыванием '''
    @staticmethod
    def wavefront_scan(signal: GevreySignal, grid: FbiGrid, threshold: float = 0.5, threads: int = 1) -> WavefrontReport:
        values = FbiService.fbi_transform(signal, grid, threads)
        reference = None
        if signal.jumps:
            # Глобальная скорость берётся по гладкой части сигнала
            reference = FbiService.fbi_transform(signal.model_copy(update={'jumps': ()}), grid, threads)
        return FbiService.wavefront_from_values(values, grid, threshold, reference)


    @staticmethod
    def wavefront_from_values(values: np.ndarray, grid: FbiGrid, threshold: float = 0.5,
                              reference: Optional[np.ndarray] = None) -> WavefrontReport:
        """ То же по готовой таблице Tu; без reference глобальная скорость берётся по ней самой """
        values = np.asarray(values)
        reference = values if reference is None else np.asarray(reference)

        reference_rates = np.concatenate([FbiService._local_rates(reference, grid, sign)[0] for sign in (1, -1)])
        reference_rates = reference_rates[np.isfinite(reference_rates) & (reference_rates > 0)]
        if reference_rates.size == 0:
            raise EmptyFitRange('Нет гладкой области для оценки глобальной скорости убывания')
        global_rate = float(np.percentile(reference_rates, 90))

        x = np.array(grid.x_nodes)
        xi = np.array(grid.xi_nodes)
        cells: list[tuple[float, float]] = []
        clusters: dict[int, tuple[float, ...]] = {}
        for sign in (1, -1):
            rates, band = FbiService._local_rates(values, grid, sign)
            detected = np.isfinite(rates) & (rates < threshold * global_rate)
            fiber = xi[sign * xi > 0]
            for i in np.flatnonzero(detected):
                cells.extend((float(x[i]), float(q)) for q in fiber)
            clusters[sign] = FbiService._clusters(np.abs(values[:, band]).mean(axis=1) if band.any() else np.zeros(x.size),
                                                  detected, x)

        report = WavefrontReport(cells=tuple(sorted(cells)),
                                 clusters_positive=clusters[1],
                                 clusters_negative=clusters[-1],
                                 global_rate=global_rate,
                                 threshold=threshold)
        logger.info(f'Волновой фронт: {len(report.cells)} клеток, кластеры xi>0 {report.clusters_positive}, '
                    f'xi<0 {report.clusters_negative}, глобальная скорость {global_rate:.4g}')
        return report


    @staticmethod
    def _clusters(level: np.ndarray, detected: np.ndarray, x: np.ndarray) -> tuple[float, ...]:
        """ Строгие локальные максимумы среднего |Tu| по полосе частот среди найденных точек """
        if not detected.any():
            return ()
        peak = float(level[detected].max())
        centers = []
        for i in np.flatnonzero(detected):
            left = i == 0 or level[i] > level[i - 1]
            right = i == level.size - 1 or level[i] > level[i + 1]
            if left and right and level[i] >= CLUSTER_FLOOR * peak:
                centers.append(float(x[i]))
        return tuple(centers)


    ''' Невязка восстановления u по S(Tu) с оптимальным скаляром kappa(h) '''
    @staticmethod
    def inversion_residual(signal: GevreySignal, grid: FbiGrid, threads: int = 1) -> float:
        if signal.jumps:
            raise ValueError('Невязка обращения считается только для сигналов без скачков')

        values, nodes = FbiService._smooth_transform(signal, grid, threads)
        if nodes.size < 2:
            return 0.0
        weights = _trapezoid_weights(nodes)
        u = FbiService._smooth_values(signal, nodes)
        norm_u = math.sqrt(float(np.sum(weights * np.abs(u) ** 2)))
        if norm_u == 0.0:
            return 0.0

        x = np.array(grid.x_nodes)
        xi = np.array(grid.xi_nodes)
        h = grid.h
        # Сопряжённое ядро: conj(P e^{i x xi/h}) exp(-a (x - x')^2) exp(i x' xi / h)
        measure = _trapezoid_weights(x)[:, None] * _trapezoid_weights(xi)[None, :]
        inner = values * measure * _prefactor(h, grid.variant) * np.conj(_outer_phase(x[:, None], xi[None, :], h, grid.variant))

        v = np.zeros(nodes.size, dtype=complex)
        for start in range(0, xi.size, XI_CHUNK):
            block = slice(start, start + XI_CHUNK)
            phases = np.exp(1j * np.outer(nodes, xi[block]) / h)
            if grid.variant == 'scaled_phase':
                diff2 = (x[:, None] - nodes[None, :]) ** 2
                for b, a in enumerate(_gaussian_rate(xi[block], h, grid.variant).real):
                    v += phases[:, b] * (np.exp(-a * diff2).T @ inner[:, start + b])
            else:
                a = float(_gaussian_rate(0.0, h, grid.variant).real)
                kernel = np.exp(-a * (x[:, None] - nodes[None, :]) ** 2)
                v += np.sum((kernel.T @ inner[:, block]) * phases, axis=1)

        kappa = np.vdot(v, weights * u) / np.vdot(v, weights * v)
        residual = math.sqrt(float(np.sum(weights * np.abs(kappa * v - u) ** 2))) / norm_u
        logger.info(f'Невязка обращения при h = {h:g}: {residual:.4g} (kappa = {kappa:.4g})')
        return residual
