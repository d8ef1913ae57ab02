import logging

from fastapi import APIRouter, Query

from app.schemas.lab import GeodesicRequestSchemas, SuspensionRequestSchemas
from app.services.io_service import IoService
from app.services.orbit_service import OrbitService
from app.utils.dependencies import build_suspension
from app.utils.exceptions import ResonanceLabError, to_http_error


logger = logging.getLogger(__name__)

router = APIRouter(tags=["Периодические орбиты"])


@router.post('/suspension')
def suspension_catalog(request: SuspensionRequestSchemas):
    """ Каталог орбит надстройки cat map до горизонта """
    try:
        logger.info(f"Каталог надстройки ({request.a},{request.b},{request.c},{request.d}), горизонт {request.horizon}")
        catalog = OrbitService.enumerate_suspension_orbits(build_suspension(request), request.horizon)
        return IoService.catalog_to_json(catalog)
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка перечисления орбит надстройки: {e}")
        raise to_http_error(e)


@router.post('/geodesic')
def geodesic_catalog(request: GeodesicRequestSchemas):
    """ Каталог замкнутых геодезических по словам в генераторах """
    try:
        model = OrbitService.validate_generators(request.generators, request.max_word_len,
                                                 request.certify_complete, request.potential)
        catalog = OrbitService.enumerate_geodesic_orbits(model, request.horizon)
        return IoService.catalog_to_json(catalog)
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка перечисления геодезических: {e}")
        raise to_http_error(e)


@router.get('/fixed-points')
def fixed_points(
        a: int = 2, b: int = 1, c: int = 1, d: int = 1,
        k: int = Query(1, ge=1)
):
    """ Число неподвижных точек A^k """
    try:
        cat_map = OrbitService.validate_cat_map(a, b, c, d)
        return {'k': k, 'count': OrbitService.fixed_point_count(cat_map, k)}
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка подсчёта неподвижных точек: {e}")
        raise to_http_error(e)


@router.post('/primitive-counts')
def primitive_counts(counts: list[int]):
    """ Числа примитивных орбит по числам неподвижных точек """
    try:
        return {'counts': counts, 'primitive': OrbitService.primitive_orbit_counts(counts)}
    except (ResonanceLabError, ValueError) as e:
        logger.error(f"Ошибка обращения Мёбиуса: {e}")
        raise to_http_error(e)
