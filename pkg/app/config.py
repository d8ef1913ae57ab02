import math
from pathlib import Path
from typing import Literal, Optional

from dotenv import dotenv_values, find_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.models.escape import EscapeParams
from app.utils.exceptions import ConfigParse, IoError


class Settings(BaseSettings):
    # Логирование
    LOG_FILE: str = 'app.log'
    LOG_LEVEL: str = 'DEBUG'

    # Параллелизм и формат вывода
    THREADS: int = 1
    OUTPUT_SCHEMA_VERSION: int = 1

    # Численные допуски по умолчанию
    ZERO_TOL: float = 1e-10
    MAX_DEPTH: int = 40
    BOUNDARY_GUARD: float = 1e-3
    QUAD_POINTS: int = 16
    MAX_DIMENSION: int = 10_000

    # Автоматическое подставление данных из .env файла
    model_config = SettingsConfigDict(env_file=find_dotenv(), env_prefix='RLAB_', extra='ignore')


try:
    settings = Settings()
except ValidationError as e:
    print(f'Ошибка загрузки переменных окружения: {e}')
    exit(1)


''' Секции файла запуска (ключи вида SECTION__FIELD) '''
class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class ModelSection(_Section):
    kind: Literal['cat', 'fuchsian'] = 'cat'
    a: int = 2
    b: int = 1
    c: int = 1
    d: int = 1
    roof: float = 1.0
    potential: float = 0.0
    generators: Optional[tuple[tuple[float, float, float, float], ...]] = None
    max_word_len: int = 6
    certify_complete: bool = False

    ''' Генераторы задаются построчно: a,b,c,d;a,b,c,d '''
    @field_validator('generators', mode='before')
    @classmethod
    def parse_generators(cls, v):
        if v is None or not isinstance(v, str):
            return v
        rows = []
        for chunk in v.split(';'):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = [p.strip() for p in chunk.split(',')]
            if len(parts) != 4:
                raise ValueError(f'Генератор должен содержать 4 числа: {chunk}')
            rows.append(tuple(float(p) for p in parts))
        return tuple(rows)


class NumericsSection(_Section):
    horizon: float = 30.0
    tol: float = 1e-10
    quad_points: int = 16
    max_depth: int = 40
    det_order: int = 4
    anchor: float = 10.0
    resonance_k: int = 200
    grid_per_cell: int = 32
    window_k: int = 6
    strict_tails: bool = False


class ExperimentSection(_Section):
    # Резонансы и порядок роста
    box: str = '-1,1,-30,30'
    radii: str = '5,7.5,10,15,20,30,40,50'
    count_radius: float = 20.0

    # Функция ухода
    samples: int = 10_000
    radius_min: float = 10.0

    # FBI-преобразование
    s: float = 1.0
    c: float = 1.0
    modes: int = 64
    h: float = 0.05
    variant: Literal['flat', 'scaled_phase', 'gabor'] = 'flat'
    xi_max: float = 2.0
    xi_step: float = 0.01
    jumps: str = ''
    threshold: float = 0.5

    # Стохастическая устойчивость
    eps_list: str = '0.1,0.01,0.001,0.0001'
    z: float = 10.0
    disk_r: float = 15.0

    @staticmethod
    def floats(text: str) -> list[float]:
        """ Разбор списка чисел через запятую """
        return [float(p) for p in text.split(',') if p.strip()]


''' Параметры функции ухода G0 (имена полей EscapeParams в нижнем регистре) '''
class EscapeSection(_Section):
    delta: float = 1.0
    t0: float = 2.0
    t1: float = 5.0
    a_const: float = 40.0
    gamma: float = 0.5
    gamma1: float = 0.25
    cutoff_radius: float = 1.0
    m_radius: float = 2.0
    cone_s: float = 1.0
    cone_0: float = 1.0
    cone_0s: float = 1.0

    @model_validator(mode='after')
    def check_params(self):
        try:
            self.params()
        except ValidationError as e:
            raise ValueError(f'Некорректные параметры функции ухода: {e}')
        return self

    def params(self) -> EscapeParams:
        return EscapeParams(delta=self.delta, T0=self.t0, T1=self.t1, A_const=self.a_const,
                            gamma=self.gamma, gamma1=self.gamma1, cutoff_radius=self.cutoff_radius,
                            m_radius=self.m_radius, cone_s=self.cone_s, cone_0=self.cone_0,
                            cone_0s=self.cone_0s)


class RunConfig(_Section):
    model: ModelSection = ModelSection()
    numerics: NumericsSection = NumericsSection()
    experiment: ExperimentSection = ExperimentSection()
    escape: EscapeSection = EscapeSection()
    seed: int = 0

    @field_validator('seed')
    @classmethod
    def validate_seed(cls, v: int) -> int:
        if v < 0:
            raise ValueError('seed должен быть неотрицательным')
        return v


_SECTIONS = ('model', 'numerics', 'experiment', 'escape')


def parse_run_config(raw: dict) -> RunConfig:
    """ Сборка RunConfig из плоского словаря ключ/значение """
    tree: dict = {name: {} for name in _SECTIONS}
    for key, value in raw.items():
        if value is None:
            raise ConfigParse(f'Строка без значения: {key}')
        name = key.strip().lower()
        if name == 'seed':
            tree['seed'] = value
            continue
        section, sep, field = name.partition('__')
        if not sep or section not in _SECTIONS or not field:
            raise ConfigParse(f'Неизвестный ключ конфигурации: {key}')
        tree[section][field] = value
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as e:
        raise ConfigParse(str(e)) from e


def load_run_config(path: Optional[str]) -> RunConfig:
    """ Чтение файла конфигурации запуска (формат key=value) """
    if path is None:
        return RunConfig()
    file = Path(path)
    if not file.is_file():
        raise IoError(f'Файл конфигурации не найден: {path}')
    return parse_run_config(dotenv_values(file))


def finite_or_none(value: float) -> Optional[float]:
    """ JSON не умеет inf/nan: заменяем на null """
    return value if math.isfinite(value) else None
