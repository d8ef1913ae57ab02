from typing import Union

from pydantic import Field, model_validator

from app.models.base import DomainModel


''' Метка бесконечно удалённой точки в множествах спектра '''
class PointAtInfinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return 'POINT_AT_INFINITY'


POINT_AT_INFINITY = PointAtInfinity()

SpectralPoint = Union[complex, PointAtInfinity]


''' Прямоугольник в комплексной плоскости '''
class Box(DomainModel):
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @model_validator(mode='after')
    def check_bounds(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError('Границы прямоугольника должны быть упорядочены')
        return self

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def center(self) -> complex:
        return complex((self.re_min + self.re_max) / 2, (self.im_min + self.im_max) / 2)

    @property
    def diameter(self) -> float:
        return (self.width ** 2 + self.height ** 2) ** 0.5

    def contains(self, z: complex) -> bool:
        return self.re_min <= z.real <= self.re_max and self.im_min <= z.imag <= self.im_max

    @classmethod
    def parse(cls, text: str) -> 'Box':
        """ Разбор строки 're_min,re_max,im_min,im_max' """
        parts = [float(p) for p in text.split(',')]
        if len(parts) != 4:
            raise ValueError(f'Ожидалось 4 числа: {text}')
        return cls(re_min=parts[0], re_max=parts[1], im_min=parts[2], im_max=parts[3])


''' Найденный резонанс (нуль детерминанта) '''
class Resonance(DomainModel):
    value: complex
    multiplicity: int = Field(1, ge=1)
    residual: float = Field(0.0, ge=0)


''' Оценка порядка роста целой функции '''
class OrderFit(DomainModel):
    rho: float
    radii: tuple[float, ...]
    log_log_max: tuple[float, ...]
    r_squared: float = Field(ge=0, le=1)
    # Сдвиг a в log(log M - a), подобранный для инвариантности к f -> c*f
    log_offset: float = 0.0
