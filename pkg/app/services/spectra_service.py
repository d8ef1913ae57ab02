import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from app.config import settings
from app.models import POINT_AT_INFINITY, HyperbolicToralMap, ModeOrbit, SectorOperator, SpectrumResult, StabilityRow
from app.services.resonance_service import ResonanceService
from app.utils.exceptions import DimensionTooLarge, EigensolveFailed


logger = logging.getLogger(__name__)

FOUR_PI2 = 4.0 * math.pi ** 2

# Обход орбиты прекращается, когда |m|^2 вырос в ORBIT_ESCAPE раз
ORBIT_ESCAPE = 10 ** 8

# Собственные значения с |Re| > DISCARD_FACTOR * 4pi^2 max|m|^2 eps считаются артефактами
DISCARD_FACTOR = 10.0

MIN_GRID = 16


def _transpose_step(cat_map: HyperbolicToralMap, m: tuple[int, int], forward: bool) -> tuple[int, int]:
    """ m -> A^T m или (A^T)^{-1} m в целых числах """
    a, b, c, d = cat_map.a, cat_map.b, cat_map.c, cat_map.d
    if forward:
        return a * m[0] + c * m[1], b * m[0] + d * m[1]
    return d * m[0] - c * m[1], -b * m[0] + a * m[1]


def _norm2(m: tuple[int, int]) -> int:
    return m[0] * m[0] + m[1] * m[1]


class SpectraService:

    ''' Представители A^T-орбит, пересекающих {0 < |m| <= max_norm} '''
    @staticmethod
    def mode_orbits(cat_map: HyperbolicToralMap, max_norm: float, window: int = 6) -> list[ModeOrbit]:
        bound = int(math.floor(max_norm))
        limit = max_norm * max_norm
        assigned: set[tuple[int, int]] = set()
        orbits = []

        for m1 in range(-bound, bound + 1):
            for m2 in range(-bound, bound + 1):
                m = (m1, m2)
                if m == (0, 0) or _norm2(m) > limit or m in assigned:
                    continue

                visited = [m]
                for forward in (True, False):
                    current = m
                    while _norm2(current) <= ORBIT_ESCAPE * _norm2(m):
                        current = _transpose_step(cat_map, current, forward)
                        visited.append(current)
                assigned.update(visited)

                representative = min(visited, key=lambda v: (_norm2(v), v))
                orbits.append(SpectraService._orbit_window(cat_map, representative, window))

        orbits.sort(key=lambda o: (o.min_norm, o.seed_mode))
        logger.info(f'Найдено {len(orbits)} орбит мод с |m| <= {max_norm:g}')
        return orbits


    @staticmethod
    def _orbit_window(cat_map: HyperbolicToralMap, seed: tuple[int, int], window: int) -> ModeOrbit:
        backward = [seed]
        forward = [seed]
        for _ in range(window):
            backward.append(_transpose_step(cat_map, backward[-1], False))
            forward.append(_transpose_step(cat_map, forward[-1], True))
        modes = tuple(reversed(backward[1:])) + tuple(forward)
        return ModeOrbit(seed_mode=seed, window=window, modes=modes, norms=tuple(_norm2(m) for m in modes))


    ''' Точный спектр тривиального сектора: 2 pi i k - 4 pi^2 k^2 eps '''
    @staticmethod
    def trivial_sector_spectrum(eps: float, k_max: int) -> list[complex]:
        if eps < 0:
            raise ValueError('eps должно быть неотрицательным')
        return [complex(-FOUR_PI2 * k * k * eps, 2.0 * math.pi * k) for k in range(-k_max, k_max + 1)]


    @staticmethod
    def _cell_average(orbit: ModeOrbit, K: int, nodes: np.ndarray, ds: float) -> np.ndarray:
        """
        Среднее |m(s)|^2 по двойственной ячейке [s - ds/2, s + ds/2]; мода m_k
        занимает [k - 1/2, k + 1/2), концы прямой продолжают крайние моды.
        """
        norms = np.array(orbit.norms[orbit.window - K: orbit.window + K + 1], dtype=float)
        knots = np.concatenate([[-K - 1.0], np.arange(-K, K) + 0.5, [K + 1.0]])
        primitive = np.concatenate([[0.0], np.cumsum(norms * np.diff(knots))])
        upper = np.interp(nodes + ds / 2, knots, primitive)
        lower = np.interp(nodes - ds / 2, knots, primitive)
        return (upper - lower) / ds


    ''' Трёхдиагональная дискретизация d/ds + eps (d^2/ds^2 - 4 pi^2 |m(s)|^2) '''
    @staticmethod
    def build_sector_operator(orbit: ModeOrbit, eps: float, grid_per_cell: int = 32,
                              K: Optional[int] = None) -> SectorOperator:
        if eps <= 0:
            raise ValueError('eps должно быть положительным')
        if grid_per_cell < MIN_GRID:
            raise ValueError(f'grid_per_cell должно быть не меньше {MIN_GRID}')
        K = orbit.window if K is None else K
        if not 0 <= K <= orbit.window:
            raise ValueError(f'K = {K} выходит за окно орбиты {orbit.window}')

        # Шаг меньше 2 eps: иначе поддиагональ меняет знак
        grid = grid_per_cell
        while 1.0 / grid >= 2.0 * eps:
            grid *= 2
        if grid != grid_per_cell:
            logger.info(f'Сетка сектора {orbit.sector_id} увеличена до {grid} узлов на ячейку (eps = {eps:g})')

        dimension = grid * (2 * K + 2) - 1
        if dimension > settings.MAX_DIMENSION:
            raise DimensionTooLarge(f'Размерность {dimension} превышает {settings.MAX_DIMENSION}')

        ds = 1.0 / grid
        nodes = -K - 1.0 + ds * np.arange(1, dimension + 1)
        potential = FOUR_PI2 * eps * SpectraService._cell_average(orbit, K, nodes, ds)

        diffusion = eps / ds ** 2
        drift = 1.0 / (2.0 * ds)
        return SectorOperator(sector_id=orbit.sector_id,
                              eps=eps,
                              K=K,
                              grid_per_cell=grid,
                              ds=ds,
                              dimension=dimension,
                              main=tuple(float(v) for v in -2.0 * diffusion - potential),
                              upper=(diffusion + drift,) * (dimension - 1),
                              lower=(diffusion - drift,) * (dimension - 1),
                              max_norm=max(orbit.norms[orbit.window - K: orbit.window + K + 1]))


    @staticmethod
    def gershgorin_abscissa(op: SectorOperator) -> float:
        """ max_j (a_jj + |a_j,j+1| + |a_j,j-1|): граница сверху для Re спектра """
        main = np.array(op.main)
        radius = np.zeros_like(main)
        radius[:-1] += np.abs(op.upper)
        radius[1:] += np.abs(op.lower)
        return float(np.max(main + radius))


    ''' Спектр сектора, упорядоченный по убыванию Re '''
    @staticmethod
    def sector_spectrum(op: SectorOperator) -> SpectrumResult:
        if op.dimension > settings.MAX_DIMENSION:
            raise DimensionTooLarge(f'Размерность {op.dimension} превышает {settings.MAX_DIMENSION}')

        main = np.array(op.main)
        upper = np.array(op.upper)
        lower = np.array(op.lower)
        try:
            if op.dimension == 1:
                eigenvalues = main.astype(complex)
            elif np.all(upper * lower > 0):
                # Диагональное подобие переводит матрицу в симметричную
                eigenvalues = linalg.eigvalsh_tridiagonal(main, np.sqrt(upper * lower)).astype(complex)
            else:
                dense = np.diag(main) + np.diag(upper, 1) + np.diag(lower, -1)
                eigenvalues = linalg.eigvals(dense)
        except (linalg.LinAlgError, ValueError) as e:
            raise EigensolveFailed(f'Сектор {op.sector_id}: {e}') from e

        if not np.all(np.isfinite(eigenvalues)):
            raise EigensolveFailed(f'Сектор {op.sector_id}: нечисловые собственные значения')

        limit = DISCARD_FACTOR * FOUR_PI2 * op.max_norm * op.eps
        kept = eigenvalues[np.abs(eigenvalues.real) <= limit]
        discarded = int(eigenvalues.size - kept.size)
        if discarded:
            logger.debug(f'Сектор {op.sector_id}: отброшено {discarded} собственных значений с |Re| > {limit:.4g}')

        ordered = sorted((complex(v) for v in kept), key=lambda v: (-v.real, v.imag))
        return SpectrumResult(sector_id=op.sector_id, eigenvalues=tuple(ordered), K=op.K, ds=op.ds, discarded=discarded)


    ''' Порядок сходимости ведущего собственного значения по сгущающимся сеткам '''
    @staticmethod
    def grid_convergence_order(orbit: ModeOrbit, eps: float, grids: Sequence[int] = (16, 32, 64),
                               K: Optional[int] = None) -> tuple[float, list[complex]]:
        if len(grids) != 3:
            raise ValueError('Нужны ровно три сетки')
        leading = []
        steps = []
        for grid in grids:
            op = SpectraService.build_sector_operator(orbit, eps, grid, K)
            leading.append(SpectraService.sector_spectrum(op).eigenvalues[0])
            steps.append(op.ds)

        coarse = abs(leading[0] - leading[1])
        fine = abs(leading[1] - leading[2])
        if fine == 0.0 or coarse == 0.0:
            return math.inf, leading
        return math.log(coarse / fine) / math.log(steps[0] / steps[1]), leading


    ''' Спектр X + eps*Laplace в круге |z| <= disk_R по всем вносящим вклад секторам '''
    @staticmethod
    def disk_spectrum(cat_map: HyperbolicToralMap, eps: float, disk_R: float, K: int = 6,
                      grid_per_cell: int = 32, threads: int = 1) -> tuple[list[complex], list[SpectrumResult]]:
        k_max = int(math.floor(disk_R / (2.0 * math.pi))) + 1
        inside = [v for v in SpectraService.trivial_sector_spectrum(eps, k_max) if abs(v) <= disk_R]

        # Спектр сектора лежит левее -1/(4 eps) - 4 pi^2 eps min|m|^2
        budget = (disk_R - 1.0 / (4.0 * eps)) / (FOUR_PI2 * eps)
        orbits = []
        if budget >= 1.0:
            orbits = [o for o in SpectraService.mode_orbits(cat_map, math.sqrt(budget), window=K)
                      if o.min_norm <= budget]

        def solve(orbit: ModeOrbit) -> SpectrumResult:
            return SpectraService.sector_spectrum(SpectraService.build_sector_operator(orbit, eps, grid_per_cell, K))

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            spectra = list(pool.map(solve, orbits))

        for result in spectra:
            inside.extend(v for v in result.eigenvalues if abs(v) <= disk_R)
        logger.info(f'eps = {eps:g}: {len(orbits)} нетривиальных секторов, {len(inside)} собственных значений в круге')
        return inside, spectra


    ''' Таблица (eps, d_zH) сходимости спектров к резонансам Рюэля '''
    @staticmethod
    def stochastic_stability_experiment(cat_map: HyperbolicToralMap, eps_list: Sequence[float], z: float,
                                        disk_R: float, K: int = 6, grid_per_cell: int = 32, power: float = 4.0,
                                        threads: int = 1) -> list[StabilityRow]:
        eps_list = list(eps_list)
        if any(e <= 0 for e in eps_list):
            raise ValueError('Все eps должны быть положительными')
        if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
            raise ValueError('Список eps должен строго убывать')

        k_max = int(math.floor(disk_R / (2.0 * math.pi)))
        resonances = [complex(0.0, 2.0 * math.pi * k) for k in range(-k_max, k_max + 1)
                      if 2.0 * math.pi * abs(k) <= disk_R]
        resonances.append(POINT_AT_INFINITY)

        rows = []
        for eps in eps_list:
            eigenvalues, sectors = SpectraService.disk_spectrum(cat_map, eps, disk_R, K, grid_per_cell, threads)
            distance = ResonanceService.hausdorff_dz(resonances, [*eigenvalues, POINT_AT_INFINITY], z)
            rows.append(StabilityRow(eps=eps, d_zH=distance, n_eigs_in_disk=len(eigenvalues),
                                     rescaled=distance * abs(math.log(eps)) ** (1.0 / power),
                                     sectors=tuple(sectors)))
            logger.info(f'eps = {eps:g}: d_zH = {distance:.6g}')
        return rows
