from pydantic import Field, model_validator

from app.models.base import DomainModel


''' Орбита моды Фурье под действием A^T '''
class ModeOrbit(DomainModel):
    seed_mode: tuple[int, int]
    window: int = Field(ge=0)
    modes: tuple[tuple[int, int], ...]
    norms: tuple[int, ...]

    @model_validator(mode='after')
    def check_modes(self):
        if self.seed_mode == (0, 0):
            raise ValueError('Нулевая мода относится к тривиальному сектору')
        if len(self.modes) != 2 * self.window + 1 or len(self.norms) != len(self.modes):
            raise ValueError('Ожидалось 2K+1 мод')
        if len(set(self.modes)) != len(self.modes):
            raise ValueError('Моды орбиты должны быть различны')
        center = self.norms[self.window]
        if any(n < center for n in self.norms):
            raise ValueError('Представитель орбиты должен иметь минимальную норму')
        return self

    @property
    def min_norm(self) -> int:
        return self.norms[self.window]

    @property
    def sector_id(self) -> str:
        return f'{self.seed_mode[0]},{self.seed_mode[1]}'


''' Трёхдиагональная дискретизация X + eps*Laplace в секторе '''
class SectorOperator(DomainModel):
    sector_id: str
    eps: float = Field(gt=0)
    K: int
    grid_per_cell: int
    ds: float
    dimension: int
    main: tuple[float, ...]
    upper: tuple[float, ...]
    lower: tuple[float, ...]
    max_norm: int

    @model_validator(mode='after')
    def check_shape(self):
        if len(self.main) != self.dimension or len(self.upper) != self.dimension - 1 \
                or len(self.lower) != self.dimension - 1:
            raise ValueError('Размеры диагоналей не согласованы')
        return self


''' Спектр сектора и отчёт об усечении '''
class SpectrumResult(DomainModel):
    sector_id: str
    eigenvalues: tuple[complex, ...]
    K: int
    ds: float
    discarded: int = 0

    @model_validator(mode='after')
    def check_sorted(self):
        re = [e.real for e in self.eigenvalues]
        if any(b > a for a, b in zip(re, re[1:])):
            raise ValueError('Собственные значения должны быть упорядочены по убыванию Re')
        return self


''' Строка таблицы стохастической устойчивости '''
class StabilityRow(DomainModel):
    eps: float
    d_zH: float
    n_eigs_in_disk: int
    rescaled: float
    # Спектры нетривиальных секторов этого eps; в документы не выводятся
    sectors: tuple[SpectrumResult, ...] = Field((), exclude=True)
