import math
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

from app.models import EscapeParams, Jump
from app.schemas.catalog import CatalogSchemas, ResonanceSchemas



''' Параметры надстройки cat map '''
class CatModelSchemas(BaseModel):
    a: int = 2
    b: int = 1
    c: int = 1
    d: int = 1
    roof: float = Field(1.0, gt=0)
    potential: float = 0.0



''' Запрос каталога орбит надстройки '''
class SuspensionRequestSchemas(CatModelSchemas):
    horizon: float = Field(30.0, gt=0)



''' Запрос каталога замкнутых геодезических '''
class GeodesicRequestSchemas(BaseModel):
    generators: list[tuple[float, float, float, float]]
    max_word_len: int = Field(6, ge=1)
    certify_complete: bool = False
    potential: float = 0.0
    horizon: float = Field(5.0, gt=0)



''' Значение дзета-функции в точке '''
class ZetaRequestSchemas(BaseModel):
    catalog: CatalogSchemas
    z_re: float
    z_im: float = 0.0
    mode: Literal['direct', 'ruelle', 'trace', 'detm'] = 'direct'
    m: int = Field(4, ge=1)
    strict: bool = False
    anchor: float = 10.0
    resonances: list[ResonanceSchemas] = []



''' Ответ: значение с оценкой хвоста '''
class SeriesResponseSchemas(BaseModel):
    quantity: str
    value_re: float
    value_im: float
    tail_bound: Optional[float]
    tail_kind: str

    @field_validator('tail_bound')
    @classmethod
    def finite_tail(cls, v):
        return v if v is not None and math.isfinite(v) else None



''' Поиск нулей в прямоугольнике '''
class ZerosRequestSchemas(BaseModel):
    catalog: CatalogSchemas
    box: str = '-1,1,-30,30'
    tol: Optional[float] = None



''' Подсчёт резонансов в круге '''
class CountRequestSchemas(BaseModel):
    resonances: list[ResonanceSchemas]
    R: float = Field(ge=0)



''' Оценка порядка роста через det_m модели cat map '''
class OrderRequestSchemas(CatModelSchemas):
    radii: list[float] = [5, 7.5, 10, 15, 20, 30, 40, 50]
    det_order: int = 4
    anchor: float = 10.0
    resonance_k: int = Field(200, ge=1)
    horizon: float = Field(30.0, gt=0)



''' Проверка функции ухода '''
class EscapeRequestSchemas(CatModelSchemas):
    params: EscapeParams = EscapeParams()
    samples: int = Field(1024, ge=1, le=100_000)
    radius_min: float = Field(10.0, gt=1)
    seed: int = Field(0, ge=0)



''' FBI-эксперимент на одномерном сигнале '''
class FbiRequestSchemas(BaseModel):
    s: float = Field(1.0, ge=1)
    c: float = Field(1.0, gt=0)
    L: int = Field(64, ge=0)
    h: float = Field(0.05, gt=0, le=1)
    variant: Literal['flat', 'scaled_phase', 'gabor'] = 'flat'
    x_min: float = -1.0
    x_max: float = 1.0
    xi_min: float = 0.0
    xi_max: float = 2.0
    xi_step: float = Field(0.01, gt=0)
    jumps: list[Jump] = []
    threshold: float = Field(0.5, gt=0, lt=1)



''' Эксперимент стохастической устойчивости '''
class SpectraRequestSchemas(CatModelSchemas):
    eps_list: list[float] = [0.1, 0.01, 0.001, 0.0001]
    z: float = 10.0
    disk_R: float = Field(15.0, gt=0)
    K: int = Field(6, ge=1)
    grid_per_cell: int = Field(32, ge=16)
