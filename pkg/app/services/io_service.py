import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from pydantic import BaseModel, TypeAdapter, ValidationError

from app.models import FbiGrid, OrbitCatalog, PeriodicOrbit, Resonance
from app.models.fbi import FbiVariant
from app.schemas.catalog import CATALOG_CSV_FIELDS, CatalogEntrySchemas, CatalogSchemas, ResonanceSchemas
from app.utils.exceptions import IoError


logger = logging.getLogger(__name__)

FBI_CSV_FIELDS = ('x', 'xi', 're', 'im', 'abs')

_resonance_list = TypeAdapter(list[ResonanceSchemas])


def _existing(path: str) -> Path:
    file = Path(path)
    if not file.is_file():
        raise IoError(f'Файл не найден: {path}')
    return file


def _clean(value: Any) -> Any:
    """ Приведение к JSON: модели -> dict, complex -> {re, im}, inf/nan -> None """
    if isinstance(value, BaseModel):
        return _clean(value.model_dump())
    if isinstance(value, np.generic):
        return _clean(value.item())
    if isinstance(value, complex):
        return {'re': _clean(value.real), 'im': _clean(value.imag)}
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    return value


class IoService:

    ''' Документ, пригодный для JSON (общий для CLI и HTTP) '''
    @staticmethod
    def document(value: Any) -> Any:
        return _clean(value)


    ''' Детерминированная сериализация: сортированные ключи, отступ 2 '''
    @staticmethod
    def dumps(document: Any) -> str:
        return json.dumps(_clean(document), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)


    @staticmethod
    def write_text(text: str, path: str) -> None:
        try:
            Path(path).write_text(text, encoding='utf-8')
        except OSError as e:
            raise IoError(f'Не удалось записать {path}: {e}') from e
        logger.info(f'Записан файл {path}')


    ''' Каталог орбит: JSON '''
    @staticmethod
    def catalog_to_json(catalog: OrbitCatalog) -> dict:
        return CatalogSchemas.from_catalog(catalog).model_dump()


    @staticmethod
    def read_catalog(path: str) -> OrbitCatalog:
        file = _existing(path)
        if file.suffix.lower() == '.csv':
            return IoService.read_catalog_csv(path)
        try:
            return CatalogSchemas.model_validate_json(file.read_text(encoding='utf-8')).to_catalog()
        except (ValidationError, ValueError) as e:
            raise IoError(f'Некорректный каталог {path}: {e}') from e


    ''' Каталог орбит: CSV (T, T_prim, intV, log_det, mult) '''
    @staticmethod
    def catalog_to_csv(catalog: OrbitCatalog, path: str) -> None:
        try:
            with open(path, 'w', newline='', encoding='utf-8') as f:
                writer = csv.DictWriter(f, fieldnames=CATALOG_CSV_FIELDS)
                writer.writeheader()
                for orbit in catalog.orbits:
                    writer.writerow({'T': repr(orbit.length), 'T_prim': repr(orbit.primitive_length),
                                     'intV': repr(orbit.potential_integral), 'log_det': repr(orbit.log_det_factor),
                                     'mult': orbit.multiplicity})
        except OSError as e:
            raise IoError(f'Не удалось записать {path}: {e}') from e


    @staticmethod
    def read_catalog_csv(path: str) -> OrbitCatalog:
        """ CSV не несёт метаданных: каталог помечается неполным, горизонт = max T """
        file = _existing(path)
        try:
            with open(file, newline='', encoding='utf-8') as f:
                rows = list(csv.DictReader(f))
            orbits: list[PeriodicOrbit] = [CatalogEntrySchemas(**row).to_orbit() for row in rows]
            return OrbitCatalog(model_id=file.stem,
                                orbits=tuple(orbits),
                                horizon_T=max((o.length for o in orbits), default=0.0),
                                complete_flag=False,
                                topological_entropy_estimate=0.0)
        except (ValidationError, ValueError, TypeError) as e:
            raise IoError(f'Некорректный CSV-каталог {path}: {e}') from e


    ''' Список резонансов: JSON [{re, im, mult}] '''
    @staticmethod
    def resonances_to_json(resonances: Iterable[Resonance]) -> list[dict]:
        return [ResonanceSchemas.from_resonance(r).model_dump() for r in resonances]


    @staticmethod
    def read_resonances(path: str) -> list[ResonanceSchemas]:
        file = _existing(path)
        try:
            return _resonance_list.validate_json(file.read_text(encoding='utf-8'))
        except ValidationError as e:
            raise IoError(f'Некорректный список резонансов {path}: {e}') from e


    ''' Таблица FBI: строки (x, xi, re, im, abs) '''
    @staticmethod
    def fbi_to_csv(values: np.ndarray, grid: FbiGrid, path: str) -> None:
        try:
            with open(path, 'w', newline='', encoding='utf-8') as f:
                writer = csv.DictWriter(f, fieldnames=FBI_CSV_FIELDS)
                writer.writeheader()
                for i, x in enumerate(grid.x_nodes):
                    for j, xi in enumerate(grid.xi_nodes):
                        v = complex(values[i, j])
                        writer.writerow({'x': repr(x), 'xi': repr(xi), 're': repr(v.real),
                                         'im': repr(v.imag), 'abs': repr(abs(v))})
        except OSError as e:
            raise IoError(f'Не удалось записать {path}: {e}') from e


    @staticmethod
    def read_fbi_csv(path: str, h: float, variant: FbiVariant = 'flat') -> tuple[np.ndarray, FbiGrid]:
        """ Восстановление массива Tu и сетки из строк (x, xi, re, im, abs) """
        file = _existing(path)
        try:
            with open(file, newline='', encoding='utf-8') as f:
                rows = list(csv.DictReader(f))
            xs = sorted({float(r['x']) for r in rows})
            xis = sorted({float(r['xi']) for r in rows})
            x_index = {x: i for i, x in enumerate(xs)}
            xi_index = {xi: j for j, xi in enumerate(xis)}
            values = np.full((len(xs), len(xis)), np.nan, dtype=complex)
            for r in rows:
                values[x_index[float(r['x'])], xi_index[float(r['xi'])]] = complex(float(r['re']), float(r['im']))
            grid = FbiGrid(h=h, x_nodes=tuple(xs), xi_nodes=tuple(xis), variant=variant)
        except (KeyError, ValueError, ValidationError) as e:
            raise IoError(f'Некорректная таблица FBI {path}: {e}') from e
        if np.isnan(values.real).any():
            raise IoError(f'Таблица FBI {path} не покрывает прямоугольную сетку')
        return values, grid


    @staticmethod
    def rows_to_csv(rows: list[dict], fields: Iterable[str], path: str) -> None:
        try:
            with open(path, 'w', newline='', encoding='utf-8') as f:
                writer = csv.DictWriter(f, fieldnames=list(fields))
                writer.writeheader()
                writer.writerows(rows)
        except OSError as e:
            raise IoError(f'Не удалось записать {path}: {e}') from e
