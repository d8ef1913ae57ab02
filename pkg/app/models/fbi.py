import math
from typing import Literal

from pydantic import Field, field_validator, model_validator

from app.models.base import DomainModel


FbiVariant = Literal['flat', 'scaled_phase', 'gabor']


''' Гладкое окно: плоская часть полуширины half_width, спуск ширины ramp '''
class WindowSpec(DomainModel):
    half_width: float = Field(2 * math.pi, gt=0)
    ramp: float = Field(2.0, gt=0)
    gevrey: float = Field(3.0, gt=1)

    @property
    def support(self) -> tuple[float, float]:
        edge = self.half_width + self.ramp
        return -edge, edge


''' Скачок высоты height в точке x0 '''
class Jump(DomainModel):
    x0: float
    height: float = 1.0


''' Тестовый сигнал с коэффициентами Фурье exp(-c|l|^(1/s)) '''
class GevreySignal(DomainModel):
    s: float = Field(ge=1)
    c: float = Field(gt=0)
    modes: tuple[complex, ...]
    window: WindowSpec = WindowSpec()
    jumps: tuple[Jump, ...] = ()
    shift: float = 0.0

    @model_validator(mode='after')
    def check_modes(self):
        if len(self.modes) % 2 != 1:
            raise ValueError('Число мод должно быть нечётным: l = -L..L')
        L = self.order
        for i, a in enumerate(self.modes):
            ell = i - L
            if abs(a) > math.exp(-self.c * abs(ell) ** (1.0 / self.s)) * (1 + 1e-12):
                raise ValueError(f'|a_{ell}| превышает exp(-c|l|^(1/s))')
        return self

    @property
    def order(self) -> int:
        return (len(self.modes) - 1) // 2

    def coefficient(self, ell: int) -> complex:
        L = self.order
        if abs(ell) > L:
            return 0j
        return self.modes[ell + L]


''' Сетка (x, xi) и параметр h '''
class FbiGrid(DomainModel):
    h: float = Field(gt=0, le=1)
    x_nodes: tuple[float, ...]
    xi_nodes: tuple[float, ...]
    variant: FbiVariant = 'flat'

    @field_validator('x_nodes', 'xi_nodes')
    @classmethod
    def validate_nodes(cls, v):
        if not v:
            raise ValueError('Пустая сетка')
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError('Узлы сетки должны строго возрастать')
        return v

    @model_validator(mode='after')
    def check_spacing(self):
        x = self.x_nodes
        if len(x) > 1 and max(b - a for a, b in zip(x, x[1:])) > math.sqrt(self.h) / 8 + 1e-15:
            raise ValueError('Шаг по x должен быть не больше sqrt(h)/8')
        return self


''' Линейная подгонка убывания log sup|Tu| '''
class DecayFit(DomainModel):
    slope: float
    intercept: float
    r_squared: float = Field(ge=0, le=1)
    xi_range: tuple[float, float]
    exponent: float = 1.0
    points: int = 0
    # Ложь при неотрицательном наклоне: убывания нет, подгонка непригодна
    decaying: bool = True


''' Найденные особые клетки (x, xi) '''
class WavefrontReport(DomainModel):
    cells: tuple[tuple[float, float], ...] = ()
    # Центры кластеров особых точек по x для xi > 0 и xi < 0
    clusters_positive: tuple[float, ...] = ()
    clusters_negative: tuple[float, ...] = ()
    global_rate: float = 0.0
    threshold: float = 0.5
