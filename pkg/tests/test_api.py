"""
HTTP-интерфейс:
  * роутеры орбит, дзета-функций, резонансов, функции ухода, FBI и спектров;
  * доменные ошибки отдаются с их статусом и телом {error, detail};
  * некорректные входные данные отдаются как 422.
"""
import math

import pytest
from fastapi.testclient import TestClient
from pytest import approx

from app.main import app


# -- Helpers --

@pytest.fixture(scope='module')
def client():
    return TestClient(app)


def cat_catalog(client, horizon: float = 30.0) -> dict:
    response = client.post('/orbits/suspension', json={'horizon': horizon})
    assert response.status_code == 200
    return response.json()


class TestOrbits:

    def test_fixed_points(self, client):
        assert client.get('/orbits/fixed-points', params={'k': 2}).json() == {'k': 2, 'count': 5}

    def test_suspension(self, client):
        catalog = cat_catalog(client, 2.0)
        assert len(catalog['entries']) == 3
        assert catalog['complete'] is True

    def test_not_hyperbolic(self, client):
        response = client.post('/orbits/suspension', json={'a': 1, 'b': 1, 'c': 0, 'd': 1})
        assert response.status_code == 400
        assert response.json()['detail']['error'] == 'NotHyperbolic'

    def test_primitive_counts(self, client):
        response = client.post('/orbits/primitive-counts', json=[1, 5, 16, 45])
        assert response.json()['primitive'] == [1, 2, 5, 10]

    def test_inconsistent_counts(self, client):
        response = client.post('/orbits/primitive-counts', json=[1, 4])
        assert response.status_code == 400
        assert response.json()['detail']['error'] == 'InconsistentCounts'

    def test_geodesic(self, client):
        response = client.post('/orbits/geodesic', json={'generators': [[2.0, 0.0, 0.0, 0.5]],
                                                         'max_word_len': 2, 'horizon': 3.0})
        assert response.status_code == 200
        assert response.json()['complete'] is False


class TestZeta:

    def test_evaluate(self, client):
        response = client.post('/zeta/evaluate', json={'catalog': cat_catalog(client), 'z_re': 2.0})
        body = response.json()
        assert body['quantity'] == 'log_zeta'
        assert body['value_re'] == approx(math.log(1 - math.exp(-2)), abs=1e-12)
        assert body['tail_kind'] == 'rigorous'

    def test_strict_divergent(self, client):
        response = client.post('/zeta/evaluate', json={'catalog': cat_catalog(client, 5.0), 'z_re': -0.5,
                                                       'strict': True})
        assert response.status_code == 422
        assert response.json()['detail']['error'] == 'DivergentTail'

    def test_spectral_trace(self, client):
        response = client.get('/zeta/spectral-trace', params={'z_re': 1.0, 'm': 4})
        assert response.status_code == 200
        assert response.json()['tail_bound'] < 1e-8

    def test_spectral_trace_order(self, client):
        assert client.get('/zeta/spectral-trace', params={'m': 1}).status_code == 422


class TestResonances:

    def test_count(self, client):
        resonances = [{'re': 0.0, 'im': 2 * math.pi * k} for k in range(-3, 4)]
        response = client.post('/resonances/count', json={'resonances': resonances, 'R': 13})
        assert response.json() == {'R': 13.0, 'count': 5}

    def test_zeros(self, client):
        response = client.post('/resonances/zeros', json={'catalog': cat_catalog(client), 'box': '-1,1,-10,10'})
        assert response.status_code == 200
        assert sorted(round(r['im'] / (2 * math.pi)) for r in response.json()) == [-1, 0, 1]


class TestEscape:

    def test_pairing(self, client):
        pairing = client.get('/escape/pairing').json()['pairing']
        for i in range(3):
            for j in range(3):
                assert pairing[i][j] == approx(1.0 if i == j else 0.0, abs=1e-12)


class TestFbi:

    def test_inversion_rejects_jumps(self, client):
        response = client.post('/fbi/inversion', json={'jumps': [{'x0': 0.0}], 'L': 4})
        assert response.status_code == 422
        assert response.json()['detail']['error'] == 'ValueError'


class TestSpectra:

    def test_trivial(self, client):
        values = client.get('/spectra/trivial', params={'eps': 0.01, 'k_max': 1}).json()
        assert values[1] == {'re': 0.0, 'im': 0.0}
        assert values[2]['re'] == approx(-4 * math.pi ** 2 * 0.01)
        assert values[2]['im'] == approx(2 * math.pi)

    def test_trivial_negative_eps(self, client):
        assert client.get('/spectra/trivial', params={'eps': -1}).status_code == 422
