"""
Файловые форматы:
  * каталог орбит JSON читается обратно без потерь;
  * CSV-каталог не несёт метаданных и помечается неполным;
  * таблица FBI должна покрывать прямоугольную сетку;
  * детерминированный JSON: сортированные ключи, inf -> null, complex -> {re, im}.
"""
import json

import numpy as np
import pytest

from app.models import Resonance
from app.services.fbi_service import FbiService
from app.services.io_service import IoService
from app.services.orbit_service import OrbitService
from app.utils.exceptions import IoError


# -- Helpers --

def cat_catalog():
    model = OrbitService.make_suspension(2, 1, 1, 1)
    return OrbitService.enumerate_suspension_orbits(model, 4.0)


class TestCatalogFiles:

    def test_json_catalog(self, tmp_path):
        catalog = cat_catalog()
        path = str(tmp_path / 'catalog.json')
        IoService.write_text(IoService.dumps(IoService.catalog_to_json(catalog)), path)
        assert IoService.read_catalog(path) == catalog

    def test_csv_catalog(self, tmp_path):
        catalog = cat_catalog()
        path = str(tmp_path / 'catalog.csv')
        IoService.catalog_to_csv(catalog, path)
        restored = IoService.read_catalog(path)
        assert restored.complete_flag is False
        assert restored.horizon_T == max(o.length for o in catalog.orbits)
        assert [o.multiplicity for o in restored.orbits] == [o.multiplicity for o in catalog.orbits]
        assert all(o.det_integer is None for o in restored.orbits)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError) as e:
            IoService.read_catalog(str(tmp_path / 'absent.json'))
        assert e.value.exit_code == 3

    def test_broken_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"model_id": 1}', encoding='utf-8')
        with pytest.raises(IoError):
            IoService.read_catalog(str(path))


class TestResonanceFiles:

    def test_read_resonances(self, tmp_path):
        path = tmp_path / 'res.json'
        resonances = [Resonance(value=1j, multiplicity=2), Resonance(value=-0.5 + 0j)]
        path.write_text(json.dumps(IoService.resonances_to_json(resonances)), encoding='utf-8')
        restored = [r.to_resonance() for r in IoService.read_resonances(str(path))]
        assert restored == resonances


class TestFbiTable:

    def test_table(self, tmp_path):
        grid = FbiService.make_grid(0.05, -0.1, 0.1, 0.4, 0.6, 0.1)
        values = FbiService.fbi_transform(FbiService.make_mode_signal(10), grid)
        path = str(tmp_path / 'table.csv')
        IoService.fbi_to_csv(values, grid, path)
        restored, restored_grid = IoService.read_fbi_csv(path, 0.05)
        assert restored_grid.x_nodes == grid.x_nodes
        assert restored_grid.xi_nodes == grid.xi_nodes
        assert np.array_equal(restored, values)

    def test_non_rectangular(self, tmp_path):
        path = tmp_path / 'table.csv'
        path.write_text('x,xi,re,im,abs\n0.0,0.1,1.0,0.0,1.0\n0.0,0.2,1.0,0.0,1.0\n0.01,0.1,1.0,0.0,1.0\n',
                        encoding='utf-8')
        with pytest.raises(IoError):
            IoService.read_fbi_csv(str(path), 0.05)


class TestDumps:

    def test_deterministic(self):
        text = IoService.dumps({'b': float('inf'), 'a': 1 + 2j, 'c': np.float64(0.5)})
        assert json.loads(text) == {'a': {'re': 1.0, 'im': 2.0}, 'b': None, 'c': 0.5}
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')

    def test_models(self):
        document = IoService.document({'resonance': Resonance(value=2j)})
        assert document == {'resonance': {'value': {'re': 0.0, 'im': 2.0}, 'multiplicity': 1, 'residual': 0.0}}
