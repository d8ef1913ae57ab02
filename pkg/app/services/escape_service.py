import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.stats import qmc

from app.models import BracketValue, CotangentSample, EscapeParams, HyperbolicToralMap, ScanReport, SplittingData
from app.utils.exceptions import QuadratureNotConverged
from app.utils.numerics import gevrey_step


logger = logging.getLogger(__name__)

QUAD_REL_TOL = 1e-8
MAX_DOUBLINGS = 10
START_NODES = 33
FIXED_NODES = 4097
TINY = 1e-300


def _sign_normalized(v: np.ndarray) -> np.ndarray:
    """ Единичная длина, первая ненулевая координата положительна """
    v = v / np.linalg.norm(v)
    for component in v:
        if abs(component) > 1e-14:
            return v if component > 0 else -v
    return v


class EscapeService:

    ''' Расщепление E0 + Eu + Es и двойственный базис ковекторов '''
    @staticmethod
    def splitting(cat_map: HyperbolicToralMap, roof: float = 1.0) -> SplittingData:
        A = np.array(cat_map.matrix, dtype=float)
        eigenvalues, vectors = np.linalg.eig(A)
        order = np.argsort(np.abs(eigenvalues))
        e_s = _sign_normalized(np.real(vectors[:, order[0]]))
        e_u = _sign_normalized(np.real(vectors[:, order[1]]))

        # Ковектор E_u* зануляет E0 + E_u, ковектор E_s* зануляет E0 + E_s
        u_xi = _sign_normalized(np.array([-e_u[1], e_u[0]]))
        s_xi = _sign_normalized(np.array([-e_s[1], e_s[0]]))

        return SplittingData(u_covector=(float(u_xi[0]), float(u_xi[1]), 0.0),
                             s_covector=(float(s_xi[0]), float(s_xi[1]), 0.0),
                             expansion_log=cat_map.expansion_log,
                             e_u=(float(e_u[0]), float(e_u[1])),
                             e_s=(float(e_s[0]), float(e_s[1])),
                             matrix=cat_map.matrix,
                             roof=roof)


    @staticmethod
    def dual_pairing(split: SplittingData) -> np.ndarray:
        """
        Матрица спаривания ковекторов (E0*, Eu*, Es*) с касательным базисом
        (X, e_s, e_u), нормированным двойственно; должна быть единичной.
        """
        covectors = np.array([split.zero_covector, split.u_covector, split.s_covector])
        e_s = np.array([*split.e_s, 0.0])
        e_u = np.array([*split.e_u, 0.0])
        tangents = np.column_stack([[0.0, 0.0, 1.0],
                                    e_s / (covectors[1] @ e_s),
                                    e_u / (covectors[2] @ e_u)])
        return covectors @ tangents


    @staticmethod
    def _crossings(theta: float, t: float, roof: float) -> int:
        return int(math.floor((theta + t) / roof))


    @staticmethod
    def _power(split: SplittingData, n: int) -> np.ndarray:
        """ A^n в целых числах (отрицательные степени через обратную матрицу) """
        (a, b), (c, d) = split.matrix
        base = ((a, b), (c, d)) if n >= 0 else ((d, -b), (-c, a))
        return np.linalg.matrix_power(np.array(base, dtype=np.int64), abs(n)).astype(float)


    ''' Поток Theta_t на кокасательном расслоении надстройки '''
    @staticmethod
    def theta_flow(alpha: CotangentSample, t: float, split: SplittingData) -> CotangentSample:
        if t == 0:
            return alpha
        n = EscapeService._crossings(alpha.theta, t, split.roof)
        theta = alpha.theta + t - n * split.roof
        x = EscapeService._power(split, n) @ np.array(alpha.x)
        # xi -> (A^T)^{-n} xi = (A^{-n})^T xi
        xi = EscapeService._power(split, -n).T @ np.array(alpha.xi)
        return CotangentSample.build(x, theta, xi, alpha.eta)


    @staticmethod
    def tangent_push(theta: float, v: tuple[float, float, float], t: float, split: SplittingData) -> np.ndarray:
        """ d phi_t: (v_x, v_theta) -> (A^n v_x, v_theta) """
        n = EscapeService._crossings(theta, t, split.roof)
        v = np.asarray(v, dtype=float)
        return np.concatenate([EscapeService._power(split, n) @ v[:2], v[2:]])


    @staticmethod
    def adapted_norms(alpha: CotangentSample, split: SplittingData) -> tuple[float, float, float]:
        """
        (sigma_0, sigma_u, sigma_s): коэффициенты xi по (E_u*, E_s*), перенормированные
        множителем Lambda^{+-theta/r}, так что вдоль потока sigma_u растёт как e^{kt}.
        """
        basis = np.column_stack([split.u_covector[:2], split.s_covector[:2]])
        cu, cs = np.linalg.solve(basis, np.array(alpha.xi))
        phase = split.expansion_log * alpha.theta / split.roof
        return abs(alpha.eta), abs(cu) * math.exp(phase), abs(cs) * math.exp(-phase)


    @staticmethod
    def _evolve(sigma: tuple[float, float, float], t, split: SplittingData):
        kappa = split.flow_rate
        t = np.asarray(t, dtype=float)
        return (np.full_like(t, sigma[0]), sigma[1] * np.exp(kappa * t), sigma[2] * np.exp(-kappa * t))


    @staticmethod
    def _symbol(s0, su, ss, params: EscapeParams):
        """ m = rho(|sigma|) * (w_s - w_u), гладкие веса в конических координатах """
        s0, su, ss = (np.asarray(v, dtype=float) for v in (s0, su, ss))
        norm = np.sqrt(s0 ** 2 + su ** 2 + ss ** 2)
        width = params.gamma - params.gamma1

        with np.errstate(over='ignore'):
            a_u = (s0 + ss) / np.maximum(su, TINY)
            a_s = (s0 + su) / np.maximum(ss, TINY)
        w_u = 1.0 - gevrey_step((a_u - params.gamma1) / width)
        w_s = 1.0 - gevrey_step((a_s - params.gamma1) / width)

        half = params.m_radius / 2
        rho = gevrey_step((norm - half) / half)
        return rho * (w_s - w_u), norm


    @staticmethod
    def _cutoff(norm, params: EscapeParams):
        """ chi: 0 ниже cutoff_radius, 1 выше 2*cutoff_radius """
        return gevrey_step((np.asarray(norm, dtype=float) - params.cutoff_radius) / params.cutoff_radius)


    @staticmethod
    def _profile(sigma, t, params: EscapeParams, split: SplittingData):
        """ F(t) = m(Theta_t alpha) * |Theta_t alpha|^delta """
        s0, su, ss = EscapeService._evolve(sigma, t, split)
        m, norm = EscapeService._symbol(s0, su, ss, params)
        return m * norm ** params.delta


    ''' Символ m со значениями в [-1, 1] '''
    @staticmethod
    def m_symbol(alpha: CotangentSample, params: EscapeParams, split: SplittingData) -> float:
        s0, su, ss = EscapeService.adapted_norms(alpha, split)
        m, _ = EscapeService._symbol(s0, su, ss, params)
        return float(m)


    @staticmethod
    def _panels(alpha: CotangentSample, params: EscapeParams, split: SplittingData) -> np.ndarray:
        """ Границы панелей окна [-T0, T1], разрезанного в моменты пересечения крыши """
        first = math.ceil((alpha.theta - params.T0) / split.roof)
        last = math.floor((alpha.theta + params.T1) / split.roof)
        crossings = [k * split.roof - alpha.theta for k in range(first, last + 1)]
        inner = [c for c in crossings if -params.T0 + 1e-12 < c < params.T1 - 1e-12]
        return np.array([-params.T0, *inner, params.T1])


    @staticmethod
    def _window_integral(alpha: CotangentSample, params: EscapeParams, split: SplittingData) -> float:
        sigma = EscapeService.adapted_norms(alpha, split)
        edges = EscapeService._panels(alpha, params, split)
        scale = max(math.sqrt(sum(s * s for s in sigma)) ** params.delta, TINY)

        nodes = START_NODES
        previous: Optional[float] = None
        for _ in range(MAX_DOUBLINGS):
            t = edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * np.linspace(0.0, 1.0, nodes)
            values = EscapeService._profile(sigma, t, params, split)
            total = float(np.sum(integrate.simpson(values, x=t, axis=-1)))
            if previous is not None and abs(total - previous) <= QUAD_REL_TOL * max(abs(total), scale):
                return total
            previous = total
            nodes = 2 * nodes - 1
        raise QuadratureNotConverged(f'Квадратура G0 не сошлась за {MAX_DOUBLINGS} удвоений')


    ''' Функция ухода G0 = int_{-T0}^{T1} m |Theta_t alpha|^delta dt - A chi |eta|^delta '''
    @staticmethod
    def escape_G0(alpha: CotangentSample, params: EscapeParams, split: SplittingData) -> float:
        integral = EscapeService._window_integral(alpha, params, split)
        s0, su, ss = EscapeService.adapted_norms(alpha, split)
        norm = math.sqrt(s0 * s0 + su * su + ss * ss)
        return integral - params.A_const * float(EscapeService._cutoff(norm, params)) * s0 ** params.delta


    @staticmethod
    def _g0_fixed(alpha: CotangentSample, params: EscapeParams, split: SplittingData) -> float:
        """ G0 на фиксированной сетке Симпсона (для конечной разности) """
        sigma = EscapeService.adapted_norms(alpha, split)
        t = np.linspace(-params.T0, params.T1, FIXED_NODES)
        integral = float(integrate.simpson(EscapeService._profile(sigma, t, params, split), x=t))
        norm = math.sqrt(sum(s * s for s in sigma))
        return integral - params.A_const * float(EscapeService._cutoff(norm, params)) * sigma[0] ** params.delta


    ''' Скобка {G0, Re p}: замкнутая форма и центральная разность вдоль потока '''
    @staticmethod
    def bracket_along_flow(alpha: CotangentSample, params: EscapeParams, split: SplittingData,
                           dt: float = 1e-3) -> BracketValue:
        if not 0 < dt <= 0.1:
            raise ValueError('dt должен лежать в (0, 0.1]')

        closed = EscapeService.bracket_closed_form(alpha, params, split)
        forward = EscapeService._g0_fixed(EscapeService.theta_flow(alpha, dt, split), params, split)
        backward = EscapeService._g0_fixed(EscapeService.theta_flow(alpha, -dt, split), params, split)
        return BracketValue(closed_form=closed, finite_difference=(forward - backward) / (2 * dt))


    @staticmethod
    def bracket_closed_form(alpha: CotangentSample, params: EscapeParams, split: SplittingData) -> float:
        sigma = EscapeService.adapted_norms(alpha, split)
        ends = EscapeService._profile(sigma, np.array([params.T1, -params.T0]), params, split)
        value = float(ends[0] - ends[1])

        s0, su, ss = sigma
        norm = math.sqrt(s0 * s0 + su * su + ss * ss)
        if norm > 0 and s0 > 0:
            step = 1e-6 * params.cutoff_radius
            chi_prime = float(EscapeService._cutoff(norm + step, params) - EscapeService._cutoff(norm - step, params)) / (2 * step)
            norm_rate = split.flow_rate * (su * su - ss * ss) / norm
            value -= params.A_const * s0 ** params.delta * chi_prime * norm_rate
        return value


    @staticmethod
    def in_cone_s(alpha: CotangentSample, params: EscapeParams, split: SplittingData) -> bool:
        s0, su, ss = EscapeService.adapted_norms(alpha, split)
        return s0 + su <= params.cone_s * ss


    @staticmethod
    def in_cone_0(alpha: CotangentSample, params: EscapeParams, split: SplittingData) -> bool:
        s0, su, ss = EscapeService.adapted_norms(alpha, split)
        return su + ss <= params.cone_0 * s0


    @staticmethod
    def sample_cotangent(split: SplittingData, count: int, radius_min: float, seed: int = 0) -> list[CotangentSample]:
        """
        Квазислучайная выборка (Соболь со скремблированием): x, theta, направление
        на сфере и <alpha> логарифмически равномерно в [R, 10^3 R].
        """
        sampler = qmc.Sobol(d=6, scramble=True, seed=seed)
        points = sampler.random_base2(max(0, math.ceil(math.log2(max(count, 1)))))[:count]

        samples = []
        for p in points:
            z = 2.0 * p[3] - 1.0
            phi = 2.0 * math.pi * p[4]
            ring = math.sqrt(max(0.0, 1.0 - z * z))
            direction = np.array([ring * math.cos(phi), ring * math.sin(phi), z])
            jap = radius_min * 10.0 ** (3.0 * p[5])
            size = math.sqrt(jap * jap - 1.0)
            covector = size * direction
            samples.append(CotangentSample.build((p[0], p[1]), p[2] * split.roof, covector[:2], covector[2]))
        return samples


    ''' Проверка свойств (i) и (ii) функции ухода по выборке '''
    @staticmethod
    def property_scan(params: EscapeParams, split: SplittingData, sample_count: int, radius_min: float,
                      seed: int = 0, threads: int = 1) -> ScanReport:
        samples = EscapeService.sample_cotangent(split, sample_count, radius_min, seed)
        logger.info(f'Проверка функции ухода: {len(samples)} точек, <alpha> в [{radius_min:g}, {1e3 * radius_min:g}]')

        def margins(alpha: CotangentSample) -> tuple[Optional[float], Optional[float]]:
            weight = alpha.jap ** params.delta
            margin_i = None
            margin_ii = None
            if not EscapeService.in_cone_s(alpha, params, split):
                margin_i = -EscapeService.escape_G0(alpha, params, split) / weight
            if not EscapeService.in_cone_0(alpha, params, split):
                margin_ii = -EscapeService.bracket_closed_form(alpha, params, split) / weight
            return margin_i, margin_ii

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            results = list(pool.map(margins, samples))

        first = np.array([m for m, _ in results if m is not None])
        second = np.array([m for _, m in results if m is not None])
        violations_i = int(np.sum(first <= 0))
        violations_ii = int(np.sum(second <= 0))

        percentiles = [float(np.percentile(v, 1)) for v in (first, second) if v.size]
        report = ScanReport(samples=len(samples),
                            violations_i=violations_i,
                            violations_ii=violations_ii,
                            worst_margin_i=float(first.min()) if first.size else math.inf,
                            worst_margin_ii=float(second.min()) if second.size else math.inf,
                            fitted_c=min(percentiles) if percentiles else math.inf,
                            checked_i=int(first.size),
                            checked_ii=int(second.size))
        if violations_i or violations_ii:
            logger.warning(f'Нарушения свойств функции ухода: (i) {violations_i}, (ii) {violations_ii}')
        return report


    ''' Наименьшее T1 на сетке с шагом 0.25, удовлетворяющее условию выбора окна '''
    @staticmethod
    def find_T1(params: EscapeParams, split: SplittingData, directions: int = 256, seed: int = 0,
                horizon: float = 10.0, T_max: float = 50.0) -> float:
        sampler = qmc.Sobol(d=3, scramble=True, seed=seed)
        points = sampler.random_base2(max(0, math.ceil(math.log2(directions))))[:directions]
        past = np.linspace(-params.T0, 0.0, 257)
        future = np.linspace(params.T0, params.T0 + horizon, 401)

        worst_integral = 0.0
        contraction = 0.0
        for p in points:
            z = 2.0 * p[1] - 1.0
            phi = 2.0 * math.pi * p[2]
            ring = math.sqrt(max(0.0, 1.0 - z * z))
            alpha = CotangentSample.build((0.0, 0.0), p[0] * split.roof, (ring * math.cos(phi), ring * math.sin(phi)), z)
            sigma = EscapeService.adapted_norms(alpha, split)
            norm = math.sqrt(sum(s * s for s in sigma))

            s0, su, ss = EscapeService._evolve(sigma, past, split)
            ratio = (np.sqrt(s0 ** 2 + su ** 2 + ss ** 2) / norm) ** params.delta
            worst_integral = max(worst_integral, float(integrate.simpson(ratio, x=past)))

            if sigma[1] > params.cone_0s * (sigma[0] + sigma[2]):
                s0, su, ss = EscapeService._evolve(sigma, future, split)
                contraction = max(contraction, float(np.max(norm / np.sqrt(s0 ** 2 + su ** 2 + ss ** 2))))

        c1 = contraction or 1.0
        T1 = params.T0 + 0.25
        while T1 <= T_max:
            if (T1 - params.T0) / (2.0 * c1 ** params.delta) > worst_integral:
                logger.info(f'Найдено T1 = {T1:g} (интеграл {worst_integral:.4g}, C1 = {c1:.4g})')
                return T1
            T1 += 0.25
        raise QuadratureNotConverged(f'Условие выбора T1 не выполнено до T1 = {T_max:g}')

