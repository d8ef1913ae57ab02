from typing import Optional, Union

from pydantic import BaseModel, Field

from app.models import OrbitCatalog, PeriodicOrbit, Resonance, WeightedPoint


# Колонки CSV-экспорта каталога
CATALOG_CSV_FIELDS = ('T', 'T_prim', 'intV', 'log_det', 'mult')


''' Запись каталога в файловом формате '''
class CatalogEntrySchemas(BaseModel):
    T: float
    T_prim: float
    intV: float = 0.0
    log_det: float
    mult: int = Field(1, ge=1)
    det: Optional[int] = None

    @classmethod
    def from_orbit(cls, orbit: PeriodicOrbit) -> 'CatalogEntrySchemas':
        return cls(T=orbit.length, T_prim=orbit.primitive_length, intV=orbit.potential_integral,
                   log_det=orbit.log_det_factor, mult=orbit.multiplicity, det=orbit.det_integer)

    def to_orbit(self) -> PeriodicOrbit:
        return PeriodicOrbit(length=self.T, primitive_length=self.T_prim, potential_integral=self.intV,
                             log_det_factor=self.log_det, multiplicity=self.mult, det_integer=self.det)



''' Каталог орбит (JSON) '''
class CatalogSchemas(BaseModel):
    model_id: str
    horizon_T: float
    complete: bool
    h_top: float = 0.0
    level_spacing: Optional[float] = None
    potential: float = 0.0
    weight_growth: float = 0.0
    metadata: dict[str, Union[bool, int, float, str]] = {}
    entries: list[CatalogEntrySchemas] = []

    @classmethod
    def from_catalog(cls, catalog: OrbitCatalog) -> 'CatalogSchemas':
        return cls(model_id=catalog.model_id,
                   horizon_T=catalog.horizon_T,
                   complete=catalog.complete_flag,
                   h_top=catalog.topological_entropy_estimate,
                   level_spacing=catalog.level_spacing,
                   potential=catalog.potential_const,
                   weight_growth=catalog.weight_growth,
                   metadata=dict(catalog.metadata),
                   entries=[CatalogEntrySchemas.from_orbit(o) for o in catalog.orbits])

    def to_catalog(self) -> OrbitCatalog:
        return OrbitCatalog(model_id=self.model_id,
                            orbits=tuple(e.to_orbit() for e in self.entries),
                            horizon_T=self.horizon_T,
                            complete_flag=self.complete,
                            topological_entropy_estimate=self.h_top,
                            level_spacing=self.level_spacing,
                            potential_const=self.potential,
                            weight_growth=self.weight_growth,
                            metadata=self.metadata)



''' Резонанс в файловом формате {re, im, mult} '''
class ResonanceSchemas(BaseModel):
    re: float
    im: float
    mult: int = Field(1, ge=1)

    @classmethod
    def from_resonance(cls, resonance: Resonance) -> 'ResonanceSchemas':
        return cls(re=resonance.value.real, im=resonance.value.imag, mult=resonance.multiplicity)

    def to_resonance(self) -> Resonance:
        return Resonance(value=complex(self.re, self.im), multiplicity=self.mult)

    def to_weighted_point(self) -> WeightedPoint:
        return WeightedPoint(value=complex(self.re, self.im), multiplicity=self.mult)
