"""
FBI-преобразование и волновой фронт:
  * три варианта ядра против замкнутой формы для чистой моды;
  * линейность, сдвиг T[u(. - a)](x, xi) = Tu(x - a, xi) без фазового множителя;
  * модуляция e^{i l x} сдвигает максимум |Tu| по xi на h*l;
  * подгонка убывания log sup|Tu| для s = 1 и s = 2, выбор показателя;
  * растущий ряд помечается как неубывающий;
  * клетки волнового фронта около скачков и пустой фронт гладкого сигнала;
  * невязка восстановления убывает вместе с h.
"""
import math

import numpy as np
import pytest

from app.models import FbiGrid, GevreySignal, Jump
from app.services.fbi_service import FbiService
from app.utils.exceptions import EmptyFitRange


# -- Helpers --

H = 0.05


def oracle_case(variant: str):
    grid = FbiService.make_grid(H, -1.0, 1.0, 0.2, 0.8, 0.05, variant)
    x = np.array(grid.x_nodes)[:, None]
    xi = np.array(grid.xi_nodes)[None, :]
    return grid, x, xi


def zero_signal() -> GevreySignal:
    return GevreySignal(s=1, c=1, modes=(0j,))


def split_parity(signal: GevreySignal) -> tuple[GevreySignal, GevreySignal]:
    L = signal.order
    even = tuple(a if (i - L) % 2 == 0 else 0j for i, a in enumerate(signal.modes))
    odd = tuple(a if (i - L) % 2 else 0j for i, a in enumerate(signal.modes))
    return signal.model_copy(update={'modes': even}), signal.model_copy(update={'modes': odd})


def jump_grid() -> FbiGrid:
    return FbiService.make_grid(H, -1.0, 1.0, -2.0, 2.0, 0.01)


def inversion_grid(h: float) -> FbiGrid:
    return FbiService.make_grid(h, -9.0, 9.0, -2.0, 2.0, 0.01)


class TestTransform:

    @pytest.mark.parametrize('variant', ['flat', 'scaled_phase', 'gabor'])
    def test_mode_oracle(self, variant):
        grid, x, xi = oracle_case(variant)
        values = FbiService.fbi_transform(FbiService.make_mode_signal(10), grid)
        expected = FbiService.gaussian_oracle(10, x, xi, H, variant)
        assert np.max(np.abs(values - expected)) <= 1e-6

    def test_zero_signal(self):
        grid, _, _ = oracle_case('flat')
        values = FbiService.fbi_transform(zero_signal(), grid)
        assert np.all(values == 0)
        with pytest.raises(EmptyFitRange):
            FbiService.decay_fit(values, grid, 1.0)

    def test_additivity(self):
        grid, _, _ = oracle_case('flat')
        signal = FbiService.make_gevrey_signal(1.0, 1.0, 8)
        even, odd = split_parity(signal)
        whole = FbiService.fbi_transform(signal, grid)
        parts = FbiService.fbi_transform(even, grid) + FbiService.fbi_transform(odd, grid)
        scale = float(np.max(np.abs(whole)))
        assert np.max(np.abs(whole - parts)) <= 1e-8 * scale

    def test_translation(self):
        shift = 0.5
        signal = FbiService.make_gevrey_signal(1.0, 1.0, 8)
        moved = signal.model_copy(update={'shift': shift})
        xi_nodes = tuple(0.1 * k for k in range(1, 11))
        moved_grid = FbiGrid(h=H, x_nodes=tuple(-0.5 + 0.025 * k for k in range(41)), xi_nodes=xi_nodes)
        base_grid = FbiGrid(h=H, x_nodes=tuple(-1.0 + 0.025 * k for k in range(41)), xi_nodes=xi_nodes)
        left = FbiService.fbi_transform(moved, moved_grid)
        right = FbiService.fbi_transform(signal, base_grid)
        scale = float(np.max(np.abs(right)))
        assert np.max(np.abs(left - right)) <= 1e-8 * scale

    def test_threads_do_not_change_values(self):
        grid, _, _ = oracle_case('scaled_phase')
        signal = FbiService.make_gevrey_signal(1.0, 1.0, 8)
        single = FbiService.fbi_transform(signal, grid)
        pooled = FbiService.fbi_transform(signal, grid, threads=4)
        assert np.array_equal(single, pooled)

    def test_transform_at_matches_grid(self):
        signal = FbiService.make_mode_signal(10)
        value = FbiService.transform_at(signal, 0.2, 0.5, H)
        expected = complex(FbiService.gaussian_oracle(10, 0.2, 0.5, H))
        assert abs(value - expected) <= 1e-6

    def test_transform_at_rejects_jumps(self):
        signal = FbiService.make_gevrey_signal(1.0, 1.0, 4, jumps=(Jump(x0=0.3),))
        with pytest.raises(ValueError):
            FbiService.transform_at(signal, 0.0, 1.0, H)

    @pytest.mark.parametrize('l0, l1', [(2, 8), (2, -1)])
    def test_modulation_shifts_concentration(self, l0, l1):
        grid = FbiService.make_grid(H, -0.5, 0.5, -0.2, 0.8, 0.01)
        xi = np.array(grid.xi_nodes)
        peaks = [xi[np.argmax(np.abs(FbiService.fbi_transform(FbiService.make_mode_signal(ell), grid)).max(axis=0))]
                 for ell in (l0, l1)]
        assert abs((peaks[1] - peaks[0]) - (l1 - l0) * H) <= 0.01 + 1e-12


class TestDecayFit:

    def test_analytic_signal(self):
        grid = FbiService.make_grid(H, -1.0, 1.0, 0.0, 2.0, 0.01)
        values = FbiService.fbi_transform(FbiService.make_gevrey_signal(1.0, 1.0, 64), grid)
        fit = FbiService.decay_fit(values, grid, 1.0)
        assert fit.slope < 0
        assert fit.decaying
        assert fit.r_squared >= 0.99
        assert fit.exponent == 1.0

    def test_growth_is_flagged(self):
        grid = FbiService.make_grid(H, -0.5, 0.5, 0.0, 1.0, 0.01)
        frequency = np.sqrt(1.0 + (np.array(grid.xi_nodes) / H) ** 2)
        values = np.tile(1e-6 * np.exp(0.01 * frequency), (len(grid.x_nodes), 1))
        fit = FbiService.decay_fit(values, grid, 1.0)
        assert fit.slope > 0
        assert fit.decaying is False

    def test_gevrey_two(self):
        grid = FbiService.make_grid(H, -1.0, 1.0, 0.0, 4.0, 0.02)
        values = FbiService.fbi_transform(FbiService.make_gevrey_signal(2.0, 3.0, 100), grid)
        fit = FbiService.decay_fit(values, grid, 2.0)
        assert fit.exponent == 0.5
        assert fit.slope < 0
        assert fit.r_squared >= 0.99

    def test_select_exponent(self):
        grid = FbiService.make_grid(H, -1.0, 1.0, 0.0, 2.0, 0.01)
        values = FbiService.fbi_transform(FbiService.make_gevrey_signal(1.0, 1.0, 64), grid)
        fits = FbiService.select_exponent(values, grid)
        assert set(fits) == {1.0, 0.5, 1.0 / 3.0}
        assert max(fits, key=lambda p: fits[p].r_squared) == 1.0


class TestWavefront:

    def test_single_jump(self):
        signal = FbiService.make_gevrey_signal(1.0, 1.0, 8, jumps=(Jump(x0=0.3),))
        report = FbiService.wavefront_scan(signal, jump_grid())
        assert report.cells
        for clusters in (report.clusters_positive, report.clusters_negative):
            assert any(abs(x - 0.3) <= math.sqrt(H) for x in clusters)

    def test_smooth_signal(self):
        report = FbiService.wavefront_scan(FbiService.make_gevrey_signal(1.0, 1.0, 8), jump_grid())
        assert report.cells == ()
        assert report.global_rate > 0

    def test_two_jumps(self):
        signal = FbiService.make_gevrey_signal(1.0, 1.0, 8, jumps=(Jump(x0=-0.4), Jump(x0=0.4, height=-1.0)))
        report = FbiService.wavefront_scan(signal, jump_grid())
        for x0 in (-0.4, 0.4):
            assert any(abs(x - x0) <= math.sqrt(H) for x in report.clusters_positive)


class TestInversion:

    def test_residual_decreases_with_h(self):
        signal = FbiService.make_mode_signal(10)
        residuals = [FbiService.inversion_residual(signal, inversion_grid(h)) for h in (0.2, 0.1, 0.05)]
        assert residuals[0] > residuals[1] > residuals[2]
        assert residuals[2] <= 0.05

    def test_zero_signal(self):
        assert FbiService.inversion_residual(zero_signal(), inversion_grid(0.2)) == 0.0

    def test_rejects_jumps(self):
        signal = FbiService.make_gevrey_signal(1.0, 1.0, 4, jumps=(Jump(x0=0.0),))
        with pytest.raises(ValueError):
            FbiService.inversion_residual(signal, inversion_grid(0.2))
