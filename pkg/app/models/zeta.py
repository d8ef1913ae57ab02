import math
from typing import Literal

from pydantic import Field, model_validator

from app.models.base import DomainModel


# Вид оценки хвоста ряда
TailKind = Literal['rigorous', 'estimate', 'empirical', 'none']


''' Значение ряда с оценкой отброшенного хвоста '''
class SeriesValue(DomainModel):
    value: complex
    tail_bound: float = Field(ge=0)
    tail_kind: TailKind = 'rigorous'

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.tail_bound)


''' Tr((z - P)^(-m)) по формуле следов '''
class TraceMoment(DomainModel):
    order: int = Field(ge=1)
    at: complex
    value: complex
    tail_bound: float = Field(ge=0)


''' Резонанс с кратностью во входе регуляризованного определителя '''
class WeightedPoint(DomainModel):
    value: complex
    multiplicity: int = Field(1, ge=1)


''' Вход det_m: список резонансов, порядок, опорная точка z '''
class RegDetInput(DomainModel):
    resonances: tuple[WeightedPoint, ...] = ()
    det_order: int = 4
    anchor: complex = 10 + 0j
    truncation_radius: float = Field(0.0, ge=0)
    # Размерность многообразия n и индекс Жевре s модели
    dimension: int = 3
    gevrey_index: float = 1.0

    @model_validator(mode='after')
    def check_schatten(self):
        if self.det_order <= self.dimension * self.gevrey_index:
            raise ValueError(f'Порядок определителя должен превышать n*s = {self.dimension * self.gevrey_index:g}')
        return self
