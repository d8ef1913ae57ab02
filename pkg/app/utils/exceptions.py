from fastapi import HTTPException, status


class ResonanceLabError(Exception):
    """ Базовая ошибка: машинный код, HTTP-статус и описание """
    code = 'ResonanceLabError'
    status_code = status.HTTP_400_BAD_REQUEST
    exit_code = 1

    def __init__(self, detail: str = ''):
        super().__init__(detail or self.code)
        self.detail = detail or self.code

    def to_payload(self) -> dict:
        return {'error': self.code, 'detail': self.detail}

    def to_http(self) -> HTTPException:
        return HTTPException(status_code=self.status_code, detail=self.to_payload())


''' Модели потоков и перечисление орбит '''
class DeterminantNotOne(ResonanceLabError):
    code = 'DeterminantNotOne'


class NotHyperbolic(ResonanceLabError):
    code = 'NotHyperbolic'


class Overflow(ResonanceLabError):
    code = 'Overflow'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class InconsistentCounts(ResonanceLabError):
    code = 'InconsistentCounts'


class NonUnimodularGenerator(ResonanceLabError):
    code = 'NonUnimodularGenerator'


class EmptyGeneratorList(ResonanceLabError):
    code = 'EmptyGeneratorList'


''' Дзета-функции и определители '''
class DivergentTail(ResonanceLabError):
    code = 'DivergentTail'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class AnchorIsResonance(ResonanceLabError):
    code = 'AnchorIsResonance'


''' Поиск нулей '''
class ZeroNearBoundary(ResonanceLabError):
    code = 'ZeroNearBoundary'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class NonIntegerWinding(ResonanceLabError):
    code = 'NonIntegerWinding'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class MaxDepthExceeded(ResonanceLabError):
    code = 'MaxDepthExceeded'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class ZeroNotConverged(ResonanceLabError):
    code = 'ZeroNotConverged'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class UnderflowOnCircle(ResonanceLabError):
    code = 'UnderflowOnCircle'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class ZInSet(ResonanceLabError):
    code = 'ZInSet'


''' Квадратуры, подгонки, спектры '''
class QuadratureNotConverged(ResonanceLabError):
    code = 'QuadratureNotConverged'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class EmptyFitRange(ResonanceLabError):
    code = 'EmptyFitRange'
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class DimensionTooLarge(ResonanceLabError):
    code = 'DimensionTooLarge'
    status_code = status.HTTP_413_REQUEST_ENTITY_TOO_LARGE


class EigensolveFailed(ResonanceLabError):
    code = 'EigensolveFailed'
    status_code = status.HTTP_500_INTERNAL_SERVER_ERROR


''' Конфигурация и ввод-вывод '''
class ConfigParse(ResonanceLabError):
    code = 'ConfigParse'
    exit_code = 2


class IoError(ResonanceLabError):
    code = 'IoError'
    status_code = status.HTTP_404_NOT_FOUND
    exit_code = 3


def to_http_error(error: Exception) -> HTTPException:
    """ Доменная ошибка -> её HTTP-статус; ошибки валидации входа -> 422 """
    if isinstance(error, ResonanceLabError):
        return error.to_http()
    return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
                         detail={'error': 'ValueError', 'detail': str(error)})
