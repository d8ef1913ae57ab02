import logging

from fastapi import APIRouter, Query

from app.schemas.lab import SeriesResponseSchemas, ZetaRequestSchemas
from app.services.zeta_service import ZetaService
from app.utils.exceptions import ResonanceLabError, to_http_error


logger = logging.getLogger(__name__)

router = APIRouter(tags=["Дзета-функции"])


@router.post('/evaluate', response_model=SeriesResponseSchemas)
def evaluate_zeta(request: ZetaRequestSchemas):
    """ Значение дзета-функции (или момента следа) с оценкой хвоста """
    try:
        catalog = request.catalog.to_catalog()
        z = complex(request.z_re, request.z_im)
        logger.info(f"Вычисление {request.mode} в z = {z} по каталогу {catalog.model_id}")

        data = None
        if request.mode == 'detm':
            points = [r.to_weighted_point() for r in request.resonances] or None
            data = ZetaService.regdet_input(catalog, request.m, request.anchor, points)

        quantity, series = ZetaService.evaluate(catalog, z, request.mode, request.m, request.strict, data)
        return SeriesResponseSchemas(quantity=quantity, value_re=series.value.real, value_im=series.value.imag,
                                     tail_bound=series.tail_bound, tail_kind=series.tail_kind)
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка вычисления дзета-функции: {e}")
        raise to_http_error(e)


@router.get('/spectral-trace', response_model=SeriesResponseSchemas)
def spectral_trace(
        z_re: float = 1.0,
        z_im: float = 0.0,
        m: int = Query(4, ge=2),
        horizon_j: int = Query(500, ge=1, le=1_000_000),
        potential: float = 0.0,
        roof: float = Query(1.0, gt=0)
):
    """ Спектральная сторона формулы следов для надстройки cat map """
    try:
        series = ZetaService.spectral_trace_sum(complex(z_re, z_im), m, horizon_j, potential, roof)
        return SeriesResponseSchemas(quantity='spectral_trace', value_re=series.value.real,
                                     value_im=series.value.imag, tail_bound=series.tail_bound,
                                     tail_kind=series.tail_kind)
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка спектральной суммы: {e}")
        raise to_http_error(e)
