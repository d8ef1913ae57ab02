import logging

from fastapi import APIRouter, Depends

from app.schemas.lab import FbiRequestSchemas
from app.services.fbi_service import FbiService
from app.services.io_service import IoService
from app.utils.dependencies import build_fbi_case, get_threads
from app.utils.exceptions import ResonanceLabError, to_http_error


logger = logging.getLogger(__name__)

router = APIRouter(tags=["FBI-преобразование"])


@router.post('/decay-fit')
def decay_fit(request: FbiRequestSchemas, threads: int = Depends(get_threads)):
    """
    Подгонка убывания sup_x |Tu| для показателя 1/s и для кандидатов 1, 1/2, 1/3.
    Выбранный показатель - с наибольшим r^2.
    """
    try:
        signal, grid = build_fbi_case(request)
        values = FbiService.fbi_transform(signal, grid, threads)
        fit = FbiService.decay_fit(values, grid, request.s)
        candidates = FbiService.select_exponent(values, grid)
        best = max(candidates, key=lambda p: candidates[p].r_squared)
        return IoService.document({'fit': fit,
                                   'candidates': [candidates[p] for p in sorted(candidates, reverse=True)],
                                   'selected_exponent': best})
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка подгонки убывания FBI: {e}")
        raise to_http_error(e)


@router.post('/wavefront')
def wavefront(request: FbiRequestSchemas, threads: int = Depends(get_threads)):
    """ Клетки волнового фронта и центры кластеров по x """
    try:
        signal, grid = build_fbi_case(request)
        return IoService.document(FbiService.wavefront_scan(signal, grid, request.threshold, threads))
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка поиска волнового фронта: {e}")
        raise to_http_error(e)


@router.post('/inversion')
def inversion(request: FbiRequestSchemas, threads: int = Depends(get_threads)):
    """ Относительная невязка восстановления сигнала по его FBI-образу """
    try:
        signal, grid = build_fbi_case(request)
        return {'h': request.h, 'residual': FbiService.inversion_residual(signal, grid, threads)}
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка вычисления невязки обращения: {e}")
        raise to_http_error(e)
