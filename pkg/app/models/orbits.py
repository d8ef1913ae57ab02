import math
from typing import Optional, Union

from pydantic import Field, field_validator, model_validator

from app.models.base import DomainModel


''' Периодическая орбита и её инварианты '''
class PeriodicOrbit(DomainModel):
    length: float = Field(gt=0)
    primitive_length: float = Field(gt=0)
    potential_integral: float = 0.0
    log_det_factor: float
    multiplicity: int = Field(1, ge=1)
    # |det(I - P)| как целое число (для алгебраических моделей)
    det_integer: Optional[int] = None

    @model_validator(mode='after')
    def check_invariants(self):
        ratio = self.length / self.primitive_length
        if ratio < 1.0 - 1e-9 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError('Длина должна быть целым кратным примитивной длины')
        if not math.isfinite(self.log_det_factor) or self.log_det_factor < 0.0:
            raise ValueError('log|det(I - P)| должен быть конечным и неотрицательным')
        return self

    @property
    def repetition(self) -> int:
        return int(round(self.length / self.primitive_length))

    def sort_key(self) -> tuple[float, float, float]:
        return self.length, self.primitive_length, self.log_det_factor


''' Каталог орбит с метаданными усечения '''
class OrbitCatalog(DomainModel):
    model_id: str
    orbits: tuple[PeriodicOrbit, ...] = ()
    horizon_T: float = Field(ge=0)
    complete_flag: bool
    topological_entropy_estimate: float = Field(ge=0)
    # Шаг решётки длин (крыша надстройки); None для нерешёточных каталогов
    level_spacing: Optional[float] = None
    potential_const: float = 0.0
    # Скорость роста log|det(I - P)| на единицу длины
    weight_growth: float = 0.0
    metadata: dict[str, Union[bool, int, float, str]] = {}

    @field_validator('orbits')
    @classmethod
    def validate_orbits(cls, v):
        keys = [o.sort_key() for o in v]
        if keys != sorted(keys):
            raise ValueError('Орбиты должны быть отсортированы по длине')
        if len(set(keys)) != len(keys):
            raise ValueError('Повторяющиеся инварианты: используйте кратность')
        return v

    @property
    def is_lattice(self) -> bool:
        return self.level_spacing is not None and self.complete_flag

    @property
    def total_orbits(self) -> int:
        return sum(o.multiplicity for o in self.orbits)
