import logging

from fastapi import APIRouter

from app.models import Box
from app.schemas.catalog import ResonanceSchemas
from app.schemas.lab import CountRequestSchemas, OrderRequestSchemas, ZerosRequestSchemas
from app.services.io_service import IoService
from app.services.orbit_service import OrbitService
from app.services.resonance_service import ResonanceService
from app.services.zeta_service import ZetaService
from app.utils.dependencies import build_suspension
from app.utils.exceptions import ResonanceLabError, to_http_error


logger = logging.getLogger(__name__)

router = APIRouter(tags=["Резонансы"])


@router.post('/zeros', response_model=list[ResonanceSchemas])
def locate_zeros(request: ZerosRequestSchemas):
    """ Нули усечённой дзета-функции решёточного каталога в прямоугольнике """
    try:
        catalog = request.catalog.to_catalog()
        box = Box.parse(request.box)
        zeros = ResonanceService.locate_zeros(ZetaService.zeta_evaluator(catalog), box, request.tol)
        logger.info(f"Найдено {len(zeros)} нулей в {request.box}")
        return [ResonanceSchemas.from_resonance(r) for r in zeros]
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка поиска нулей: {e}")
        raise to_http_error(e)


@router.post('/count')
def count_resonances(request: CountRequestSchemas):
    """ N(R) с учётом кратности """
    resonances = [r.to_resonance() for r in request.resonances]
    return {'R': request.R, 'count': ResonanceService.counting_function(resonances, request.R)}


@router.post('/order')
def order_estimate(request: OrderRequestSchemas):
    """ Порядок роста дзета-функции надстройки через представление det_m """
    try:
        catalog = OrbitService.enumerate_suspension_orbits(build_suspension(request), request.horizon)
        data = ZetaService.regdet_input(catalog, request.det_order, request.anchor,
                                        resonance_k=request.resonance_k)
        fit = ResonanceService.order_estimate(ZetaService.log_abs_zeta_via_detm(catalog, data), request.radii,
                                              log_modulus=True)
        return IoService.document(fit)
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка оценки порядка: {e}")
        raise to_http_error(e)
