from app.models.escape import BracketValue, CotangentSample, EscapeParams, ScanReport, SplittingData
from app.models.fbi import DecayFit, FbiGrid, GevreySignal, Jump, WavefrontReport, WindowSpec
from app.models.flows import FuchsianModel, HyperbolicToralMap, SuspensionModel
from app.models.orbits import OrbitCatalog, PeriodicOrbit
from app.models.resonances import POINT_AT_INFINITY, Box, OrderFit, Resonance
from app.models.spectra import ModeOrbit, SectorOperator, SpectrumResult, StabilityRow
from app.models.zeta import RegDetInput, SeriesValue, TraceMoment, WeightedPoint

__all__ = [
    'BracketValue', 'CotangentSample', 'EscapeParams', 'ScanReport', 'SplittingData',
    'DecayFit', 'FbiGrid', 'GevreySignal', 'Jump', 'WavefrontReport', 'WindowSpec',
    'FuchsianModel', 'HyperbolicToralMap', 'SuspensionModel',
    'OrbitCatalog', 'PeriodicOrbit',
    'POINT_AT_INFINITY', 'Box', 'OrderFit', 'Resonance',
    'ModeOrbit', 'SectorOperator', 'SpectrumResult', 'StabilityRow',
    'RegDetInput', 'SeriesValue', 'TraceMoment', 'WeightedPoint',
]
