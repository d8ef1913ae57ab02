from fastapi import FastAPI

from app import __version__
from app.api import escape, fbi, orbits, resonances, spectra, zeta
from app.utils.log import setup_logging


setup_logging()


''' Создание приложения FastAPI '''
app = FastAPI(
    docs_url='/',
    title='Resonance Lab API',
    description='Динамические детерминанты, резонансы Рюэля-Поллико, функции ухода, '
                'FBI-диагностика и стохастическая устойчивость для модельных потоков Аносова',
    version=__version__
)



''' Подключение роутеров '''
app.include_router(orbits.router, prefix="/orbits")
app.include_router(zeta.router, prefix="/zeta")
app.include_router(resonances.router, prefix="/resonances")
app.include_router(escape.router, prefix="/escape")
app.include_router(fbi.router, prefix="/fbi")
app.include_router(spectra.router, prefix="/spectra")
