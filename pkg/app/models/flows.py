import math

from pydantic import Field, field_validator, model_validator

from app.models.base import DomainModel


''' Гиперболический автоморфизм тора (cat map) '''
class HyperbolicToralMap(DomainModel):
    a: int
    b: int
    c: int
    d: int
    trace: int
    expansion_log: float

    @model_validator(mode='after')
    def check_invariants(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError('Определитель матрицы должен быть равен 1')
        if self.trace != self.a + self.d:
            raise ValueError('След не совпадает с a + d')
        if abs(self.trace) <= 2:
            raise ValueError('Матрица не гиперболическая: |tr| <= 2')
        expected = math.log((abs(self.trace) + math.sqrt(self.trace ** 2 - 4)) / 2)
        if abs(expected - self.expansion_log) > 1e-12 * max(1.0, expected):
            raise ValueError('expansion_log не согласован со следом')
        return self

    @property
    def matrix(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.a, self.b), (self.c, self.d)

    @property
    def inverse(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.d, -self.b), (-self.c, self.a)

    @property
    def expansion(self) -> float:
        return math.exp(self.expansion_log)


''' Надстройка с постоянной крышей r и постоянным потенциалом c '''
class SuspensionModel(DomainModel):
    map: HyperbolicToralMap
    roof: float = Field(1.0, gt=0)
    potential_const: float = 0.0

    @property
    def model_id(self) -> str:
        m = self.map
        return f'cat({m.a},{m.b},{m.c},{m.d})/roof={self.roof!r}/V={self.potential_const!r}'


''' Фуксова группа, заданная генераторами из SL(2, R) '''
class FuchsianModel(DomainModel):
    generators: tuple[tuple[float, float, float, float], ...]
    max_word_len: int = Field(6, ge=1)
    orientation_note: str = 'слово w и обратное к нему дают две ориентированные геодезические'
    certify_complete: bool = False
    potential_const: float = 0.0

    @field_validator('generators')
    @classmethod
    def validate_generators(cls, v):
        for g in v:
            a, b, c, d = g
            if abs(a * d - b * c - 1.0) > 1e-12:
                raise ValueError(f'Генератор {g} не лежит в SL(2, R)')
        return v

    @property
    def model_id(self) -> str:
        return f'fuchsian(n_gen={len(self.generators)}, max_word_len={self.max_word_len})'
