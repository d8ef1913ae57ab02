import math

from pydantic import Field, model_validator

from app.models.base import DomainModel


''' Точка кокасательного расслоения надстройки: (x, theta; xi, eta) '''
class CotangentSample(DomainModel):
    x: tuple[float, float]
    theta: float
    xi: tuple[float, float]
    eta: float
    jap: float

    @model_validator(mode='after')
    def check_jap(self):
        expected = math.sqrt(1.0 + self.xi[0] ** 2 + self.xi[1] ** 2 + self.eta ** 2)
        if abs(expected - self.jap) > 1e-14 * expected:
            raise ValueError('jap не согласован с (xi, eta)')
        return self

    @classmethod
    def build(cls, x, theta: float, xi, eta: float) -> 'CotangentSample':
        xi = (float(xi[0]), float(xi[1]))
        return cls(x=(float(x[0]) % 1.0, float(x[1]) % 1.0), theta=float(theta), xi=xi, eta=float(eta),
                   jap=math.sqrt(1.0 + xi[0] ** 2 + xi[1] ** 2 + float(eta) ** 2))

    @property
    def covector(self) -> tuple[float, float, float]:
        return self.xi[0], self.xi[1], self.eta

    @property
    def covector_norm(self) -> float:
        return math.sqrt(self.xi[0] ** 2 + self.xi[1] ** 2 + self.eta ** 2)


''' Двойственный базис E0* + Eu* + Es* и касательное расщепление '''
class SplittingData(DomainModel):
    u_covector: tuple[float, float, float]
    s_covector: tuple[float, float, float]
    zero_covector: tuple[float, float, float] = (0.0, 0.0, 1.0)
    expansion_log: float = Field(gt=0)
    # Касательные собственные векторы A (растягивающий и сжимающий)
    e_u: tuple[float, float]
    e_s: tuple[float, float]
    matrix: tuple[tuple[int, int], tuple[int, int]]
    roof: float = Field(1.0, gt=0)

    @property
    def flow_rate(self) -> float:
        """ Скорость растяжения вдоль потока: expansion_log / roof """
        return self.expansion_log / self.roof


''' Параметры функции ухода G0 '''
class EscapeParams(DomainModel):
    delta: float = Field(1.0, gt=0, le=1)
    T0: float = Field(2.0, gt=0)
    T1: float = 5.0
    A_const: float = Field(40.0, ge=0)
    gamma: float = Field(0.5, gt=0)
    gamma1: float = Field(0.25, gt=0)
    cutoff_radius: float = Field(1.0, gt=0)
    # Радиус, начиная с которого m полностью включается
    m_radius: float = Field(2.0, gt=0)
    # Апертуры конических окрестностей для проверки свойств (i) и (ii)
    cone_s: float = Field(1.0, gt=0)
    cone_0: float = Field(1.0, gt=0)
    cone_0s: float = Field(1.0, gt=0)

    @model_validator(mode='after')
    def check_order(self):
        if self.T1 <= self.T0:
            raise ValueError('Требуется T1 > T0 > 0')
        if self.gamma1 >= self.gamma:
            raise ValueError('Требуется gamma1 < gamma')
        return self


''' Значение скобки вдоль потока двумя способами '''
class BracketValue(DomainModel):
    closed_form: float
    finite_difference: float


''' Итог выборочной проверки свойств функции ухода '''
class ScanReport(DomainModel):
    samples: int
    violations_i: int
    violations_ii: int
    worst_margin_i: float
    worst_margin_ii: float
    fitted_c: float
    checked_i: int
    checked_ii: int
