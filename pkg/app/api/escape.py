import logging

from fastapi import APIRouter, Depends, Query

from app.schemas.lab import EscapeRequestSchemas
from app.services.escape_service import EscapeService
from app.services.io_service import IoService
from app.services.orbit_service import OrbitService
from app.utils.dependencies import get_threads
from app.utils.exceptions import ResonanceLabError, to_http_error


logger = logging.getLogger(__name__)

router = APIRouter(tags=["Функция ухода"])


@router.post('/scan')
def property_scan(request: EscapeRequestSchemas, threads: int = Depends(get_threads)):
    """ Выборочная проверка свойств функции ухода G0 """
    try:
        cat_map = OrbitService.validate_cat_map(request.a, request.b, request.c, request.d)
        split = EscapeService.splitting(cat_map, request.roof)
        report = EscapeService.property_scan(request.params, split, request.samples, request.radius_min,
                                             request.seed, threads)
        return IoService.document(report)
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка проверки функции ухода: {e}")
        raise to_http_error(e)


@router.get('/pairing')
def dual_pairing(
        a: int = 2, b: int = 1, c: int = 1, d: int = 1,
        roof: float = Query(1.0, gt=0)
):
    """ Спаривание двойственного базиса с касательным расщеплением """
    try:
        split = EscapeService.splitting(OrbitService.validate_cat_map(a, b, c, d), roof)
        return {'pairing': IoService.document(EscapeService.dual_pairing(split))}
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка вычисления спаривания: {e}")
        raise to_http_error(e)
