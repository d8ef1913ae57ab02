import logging

from fastapi import APIRouter, Depends, Query

from app.schemas.lab import SpectraRequestSchemas
from app.services.io_service import IoService
from app.services.orbit_service import OrbitService
from app.services.spectra_service import SpectraService
from app.utils.dependencies import get_threads
from app.utils.exceptions import ResonanceLabError, to_http_error


logger = logging.getLogger(__name__)

router = APIRouter(tags=["Стохастическая устойчивость"])


@router.post('/stability')
def stability(request: SpectraRequestSchemas, threads: int = Depends(get_threads)):
    """ Таблица (eps, d_zH, число собственных значений в круге) """
    try:
        cat_map = OrbitService.validate_cat_map(request.a, request.b, request.c, request.d)
        rows = SpectraService.stochastic_stability_experiment(cat_map, request.eps_list, request.z, request.disk_R,
                                                              request.K, request.grid_per_cell, threads=threads)
        return IoService.document(rows)
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка эксперимента устойчивости: {e}")
        raise to_http_error(e)


@router.get('/trivial')
def trivial_sector(eps: float = Query(0.1, ge=0), k_max: int = Query(5, ge=0, le=10_000)):
    """ Точный спектр тривиального сектора """
    try:
        return IoService.document(SpectraService.trivial_sector_spectrum(eps, k_max))
    except ValueError as e:
        logger.error(f"Ошибка спектра тривиального сектора: {e}")
        raise to_http_error(e)
