from typing import Optional

from fastapi import Depends, Query

from app.config import Settings, settings
from app.services.fbi_service import FbiService
from app.services.orbit_service import OrbitService
from app.schemas.lab import CatModelSchemas, FbiRequestSchemas
from app.models import FbiGrid, GevreySignal, SuspensionModel


def get_settings() -> Settings:
    """ Текущие настройки приложения (переопределяются в тестах) """
    return settings


def get_threads(
        threads: Optional[int] = Query(None, ge=1, le=64),
        current: Settings = Depends(get_settings)
) -> int:
    """
    Число потоков для параллельных частей расчёта.
    Приоритет: параметр запроса -> RLAB_THREADS
    """
    return threads or current.THREADS


def build_suspension(model: CatModelSchemas) -> SuspensionModel:
    """ Проверенная надстройка по параметрам запроса """
    return OrbitService.make_suspension(model.a, model.b, model.c, model.d, model.roof, model.potential)


def build_fbi_case(request: FbiRequestSchemas) -> tuple[GevreySignal, FbiGrid]:
    """ Сигнал и сетка FBI-эксперимента по параметрам запроса """
    signal = FbiService.make_gevrey_signal(request.s, request.c, request.L, jumps=request.jumps)
    grid = FbiService.make_grid(request.h, request.x_min, request.x_max, request.xi_min, request.xi_max,
                                request.xi_step, request.variant)
    return signal, grid
