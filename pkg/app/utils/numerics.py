import math
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy import stats


def complex_fsum(values: Iterable[complex]) -> complex:
    """ Компенсированное суммирование комплексных слагаемых (порядок сохраняется) """
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def log_space_term(log_modulus: float, phase: float) -> complex:
    """ exp(log_modulus + i*phase) без переполнения промежуточных величин """
    if log_modulus < -745.0:
        return 0j
    r = math.exp(log_modulus)
    return complex(r * math.cos(phase), r * math.sin(phase))


def gevrey_step(t, sigma: float = 2.0):
    """
    Гладкая ступенька класса Жевре sigma: 0 при t <= 0, 1 при t >= 1.
    Строится из exp(-t^(-1/(sigma-1))).
    """
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    power = 1.0 / (sigma - 1.0)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        left = np.where(t > 0, np.exp(-np.power(np.where(t > 0, t, 1.0), -power)), 0.0)
        right = np.where(t < 1, np.exp(-np.power(np.where(t < 1, 1.0 - t, 1.0), -power)), 0.0)
        step = left / (left + right)
    return np.where(t >= 1.0, 1.0, np.where(t <= 0.0, 0.0, step))


@lru_cache(maxsize=32)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """ Узлы и веса Гаусса–Лежандра на [-1, 1] """
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


def central_difference(f: Callable, z: np.ndarray) -> np.ndarray:
    """ Комплексная центральная разность с шагом 1e-6*(1+|z|) """
    step = 1e-6 * (1.0 + np.abs(z))
    return (f(z + step) - f(z - step)) / (2.0 * step)


def linear_fit(x, y) -> tuple[float, float, float]:
    """ Наименьшие квадраты y = slope*x + intercept; возвращает (slope, intercept, r^2) """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    result = stats.linregress(x, y)
    if np.ptp(y) == 0.0:
        return float(result.slope), float(result.intercept), 1.0
    r_squared = float(result.rvalue) ** 2
    return float(result.slope), float(result.intercept), min(max(r_squared, 0.0), 1.0)
