import cmath
import logging
import math
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import optimize

from app.config import settings
from app.models import Box, OrderFit, Resonance
from app.models.resonances import PointAtInfinity
from app.utils.exceptions import (MaxDepthExceeded, NonIntegerWinding, UnderflowOnCircle, ZeroNearBoundary,
                                  ZeroNotConverged, ZInSet)
from app.utils.numerics import central_difference, gauss_legendre, linear_fit


logger = logging.getLogger(__name__)

# Смещённые доли разбиения: разрезы не проходят через симметричные точки
SPLIT_RATIOS = (0.5 + 0.0317, 0.5 - 0.0417, 0.5 + 0.0711, 0.5 - 0.0913)

TERMINAL_DIAMETER = 1e-6
WINDING_TOL = 1e-3
NEWTON_STEPS = 50
MAX_REFINEMENTS = 6
COUNT_RETRIES = 3
OFFSET_GRID = 400


class ResonanceService:

    @staticmethod
    def _contour(box: Box, panel_length: float, quad_points: int) -> tuple[np.ndarray, np.ndarray]:
        """ Узлы и комплексные веса составной формулы Гаусса–Лежандра по границе (против часовой) """
        x, w = gauss_legendre(quad_points)
        corners = [complex(box.re_min, box.im_min), complex(box.re_max, box.im_min),
                   complex(box.re_max, box.im_max), complex(box.re_min, box.im_max)]
        nodes, weights = [], []
        for start, end in zip(corners, corners[1:] + corners[:1]):
            panels = max(1, math.ceil(abs(end - start) / panel_length - 1e-12))
            edges = start + (end - start) * np.linspace(0.0, 1.0, panels + 1)
            for a, b in zip(edges[:-1], edges[1:]):
                nodes.append((a + b) / 2 + (b - a) / 2 * x)
                weights.append((b - a) / 2 * w)
        return np.concatenate(nodes), np.concatenate(weights)


    ''' Число нулей в прямоугольнике по принципу аргумента '''
    @staticmethod
    def argument_principle_count(f: Callable, box: Box, quad_points: Optional[int] = None,
                                 guard: Optional[float] = None) -> int:
        quad_points = quad_points or settings.QUAD_POINTS
        guard = settings.BOUNDARY_GUARD if guard is None else guard
        min_side = min(box.width, box.height)
        distance_guard = max(guard * min_side, 1e-12)

        panel = min_side / 2
        previous = None
        integral = 0j
        for _ in range(MAX_REFINEMENTS + 1):
            nodes, weights = ResonanceService._contour(box, panel, quad_points)
            values = np.asarray(f(nodes), dtype=complex)
            derivatives = np.asarray(central_difference(f, nodes), dtype=complex)

            with np.errstate(divide='ignore', invalid='ignore'):
                distance = np.abs(values / derivatives)
            if np.nanmin(distance) < distance_guard or not np.all(np.isfinite(values)):
                raise ZeroNearBoundary(f'Нуль слишком близко к границе {box.model_dump()}')

            integral = complex(np.sum(derivatives / values * weights)) / (2j * math.pi)
            if previous is not None and abs(integral - previous) < 1e-6:
                break
            previous = integral
            panel /= 2

        winding = round(integral.real)
        if abs(integral - winding) > WINDING_TOL:
            raise NonIntegerWinding(f'Интеграл {integral} далёк от целого на {box.model_dump()}')
        return int(winding)


    @staticmethod
    def _newton(f: Callable, z0: complex, multiplicity: int = 1) -> Optional[complex]:
        z = complex(z0)
        for _ in range(NEWTON_STEPS):
            fz = complex(f(z))
            if fz == 0:
                return z
            dfz = complex(central_difference(f, z))
            if dfz == 0 or not cmath.isfinite(dfz):
                return None
            step = multiplicity * fz / dfz
            z -= step
            if not cmath.isfinite(z):
                return None
            if abs(step) <= 1e-15 * (1 + abs(z)):
                break
        return z


    @staticmethod
    def _split(box: Box, ratio: float) -> list[Box]:
        """ Деление длинной стороны пополам (вытянутый бокс) или на 2x2 """
        re_cut = box.re_min + ratio * box.width
        im_cut = box.im_min + ratio * box.height
        if box.width > 2 * box.height:
            return [Box(re_min=box.re_min, re_max=re_cut, im_min=box.im_min, im_max=box.im_max),
                    Box(re_min=re_cut, re_max=box.re_max, im_min=box.im_min, im_max=box.im_max)]
        if box.height > 2 * box.width:
            return [Box(re_min=box.re_min, re_max=box.re_max, im_min=box.im_min, im_max=im_cut),
                    Box(re_min=box.re_min, re_max=box.re_max, im_min=im_cut, im_max=box.im_max)]
        return [Box(re_min=box.re_min, re_max=re_cut, im_min=box.im_min, im_max=im_cut),
                Box(re_min=re_cut, re_max=box.re_max, im_min=box.im_min, im_max=im_cut),
                Box(re_min=box.re_min, re_max=re_cut, im_min=im_cut, im_max=box.im_max),
                Box(re_min=re_cut, re_max=box.re_max, im_min=im_cut, im_max=box.im_max)]


    @staticmethod
    def _split_counts(f: Callable, box: Box, quad_points: int) -> list[tuple[Box, int]]:
        for ratio in SPLIT_RATIOS:
            children = ResonanceService._split(box, ratio)
            try:
                return [(child, ResonanceService.argument_principle_count(f, child, quad_points))
                        for child in children]
            except (ZeroNearBoundary, NonIntegerWinding) as e:
                logger.debug(f'Разрез с долей {ratio} отклонён: {e.detail}')
        raise ZeroNearBoundary(f'Не удалось разрезать {box.model_dump()} вдали от нулей')


    @staticmethod
    def _consistent_children(f: Callable, box: Box, count: int, quad_points: int) -> tuple[list[tuple[Box, int]], int]:
        """ Разбиение, у которого сумма чисел нулей частей равна числу нулей бокса; узлы удваиваются """
        for _ in range(COUNT_RETRIES + 1):
            children = ResonanceService._split_counts(f, box, quad_points)
            total = sum(c for _, c in children)
            if total == count:
                return children, quad_points
            logger.warning(f'Число нулей не аддитивно: {count} в боксе, {total} в частях, '
                           f'узлов на панель {quad_points}')
            quad_points *= 2
        raise ZeroNotConverged(f'Счёт нулей в частях {box.model_dump()} не сошёлся к {count} '
                               f'за {COUNT_RETRIES} удвоений квадратуры')


    @staticmethod
    def _explore(f: Callable, box: Box, count: int, depth: int, tol: float, max_depth: int,
                 quad_points: int, found: list[Resonance]) -> None:
        if count <= 0:
            return
        if depth > max_depth:
            raise MaxDepthExceeded(f'Превышена глубина разбиения {max_depth}')

        if count == 1:
            z = ResonanceService._newton(f, box.center)
            if z is not None and box.contains(z):
                residual = abs(complex(f(z)))
                if residual <= tol:
                    found.append(Resonance(value=z, multiplicity=1, residual=residual))
                    return

        if box.diameter < TERMINAL_DIAMETER:
            z = ResonanceService._newton(f, box.center, multiplicity=count)
            if z is None or not box.contains(z):
                z = box.center
            residual = abs(complex(f(z)))
            if residual > tol:
                raise ZeroNotConverged(f'Невязка {residual:.3e} в точке {z} больше допуска {tol:g}')
            found.append(Resonance(value=z, multiplicity=count, residual=residual))
            return

        children, quad_points = ResonanceService._consistent_children(f, box, count, quad_points)
        for child, child_count in children:
            ResonanceService._explore(f, child, child_count, depth + 1, tol, max_depth, quad_points, found)


    ''' Поиск всех нулей в прямоугольнике '''
    @staticmethod
    def locate_zeros(f: Callable, box: Box, tol: Optional[float] = None, max_depth: Optional[int] = None,
                     quad_points: Optional[int] = None) -> list[Resonance]:
        tol = tol or settings.ZERO_TOL
        max_depth = max_depth or settings.MAX_DEPTH
        quad_points = quad_points or settings.QUAD_POINTS

        count = ResonanceService.argument_principle_count(f, box, quad_points)
        logger.info(f'В боксе {box.model_dump()} найдено {count} нулей по принципу аргумента')

        found: list[Resonance] = []
        ResonanceService._explore(f, box, count, 0, tol, max_depth, quad_points, found)
        return sorted(found, key=lambda r: (r.value.real, r.value.imag))


    ''' N(R): число резонансов с |lam| <= R с учётом кратности '''
    @staticmethod
    def counting_function(resonances: Iterable[Resonance], R: float) -> int:
        return sum(res.multiplicity for res in resonances if abs(res.value) <= R)


    @staticmethod
    def log_modulus_of(f: Callable) -> Callable:
        """ log|f| для обычного вычислителя """
        def log_abs(z):
            with np.errstate(divide='ignore'):
                return np.log(np.abs(f(z)))
        return log_abs


    @staticmethod
    def circle_max(log_abs: Callable, R: float, samples: int = 512) -> float:
        """ max log|f| на окружности: равномерная сетка и уточнение около дискретного максимума """
        theta = 2 * math.pi * np.arange(samples) / samples
        values = np.asarray(log_abs(R * np.exp(1j * theta)), dtype=float)
        i = int(np.nanargmax(values))
        step = 2 * math.pi / samples
        result = optimize.minimize_scalar(lambda t: -float(log_abs(R * cmath.exp(1j * t))),
                                          bounds=(theta[i] - step, theta[i] + step), method='bounded',
                                          options={'xatol': 1e-10})
        return max(float(values[i]), -float(result.fun))


    @staticmethod
    def _offset_sse(offset: float, log_r: np.ndarray, log_max: np.ndarray) -> float:
        y = np.log(log_max - offset)
        slope, intercept, _ = linear_fit(log_r, y)
        return float(np.sum((y - slope * log_r - intercept) ** 2))


    ''' Порядок роста: наклон log(log M(R) - a) по log R '''
    @staticmethod
    def order_estimate(f: Callable, radii: Iterable[float], log_modulus: bool = False,
                       samples: int = 512) -> OrderFit:
        log_abs = f if log_modulus else ResonanceService.log_modulus_of(f)
        radii = sorted(float(r) for r in radii)

        kept_r, kept_m = [], []
        for R in radii:
            M = ResonanceService.circle_max(log_abs, R, samples)
            if M <= 0 or not math.isfinite(M):
                logger.warning(f'UnderflowOnCircle: max log|f| = {M:g} на окружности R = {R:g}, радиус исключён')
                continue
            kept_r.append(R)
            kept_m.append(M)
        if len(kept_r) < 2:
            raise UnderflowOnCircle('Меньше двух окружностей с max|f| > 1')

        log_r = np.log(kept_r)
        log_max = np.asarray(kept_m)
        low, span = float(log_max.min()), float(np.ptp(log_max)) or max(1.0, abs(float(log_max.min())))
        upper = low - 1e-9 * max(1.0, abs(low))
        grid = np.linspace(low - 2.0 * span, upper, OFFSET_GRID)
        sse = [ResonanceService._offset_sse(a, log_r, log_max) for a in grid]
        best = int(np.argmin(sse))
        bracket = (grid[max(best - 1, 0)], grid[min(best + 1, OFFSET_GRID - 1)])
        refined = optimize.minimize_scalar(ResonanceService._offset_sse, bounds=bracket, method='bounded',
                                           args=(log_r, log_max), options={'xatol': 1e-12 * max(1.0, span)})
        offset = float(refined.x) if refined.fun <= sse[best] else float(grid[best])

        y = np.log(log_max - offset)
        rho, _, r_squared = linear_fit(log_r, y)
        logger.info(f'Оценка порядка: rho = {rho:.4f}, r^2 = {r_squared:.6f}, сдвиг {offset:.4g}')
        return OrderFit(rho=rho, radii=tuple(kept_r), log_log_max=tuple(float(v) for v in y),
                        r_squared=r_squared, log_offset=offset)


    @staticmethod
    def _to_disc(points, z: complex) -> np.ndarray:
        """ w -> 1/(z - w); бесконечность переходит в 0 """
        mapped = []
        for w in points:
            if isinstance(w, PointAtInfinity) or cmath.isinf(complex(w)):
                mapped.append(0j)
                continue
            w = complex(w)
            if abs(z - w) < 1e-12:
                raise ZInSet(f'Точка z = {z} принадлежит множеству')
            mapped.append(1.0 / (z - w))
        return np.asarray(mapped, dtype=complex)


    ''' Хаусдорфово расстояние в метрике d_z '''
    @staticmethod
    def hausdorff_dz(A, B, z: complex) -> float:
        z = complex(z)
        a = ResonanceService._to_disc(A, z)
        b = ResonanceService._to_disc(B, z)
        if a.size == 0 and b.size == 0:
            return 0.0
        if a.size == 0 or b.size == 0:
            return math.inf
        distances = np.abs(a[:, None] - b[None, :])
        return float(max(distances.min(axis=1).max(), distances.min(axis=0).max()))
