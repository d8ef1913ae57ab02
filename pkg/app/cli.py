import functools
import logging
import math
from pathlib import Path
from typing import Any, Callable, Optional

import click
import numpy as np

from app import __version__
from app.config import RunConfig, load_run_config, settings
from app.models import Box, FbiGrid, GevreySignal, Jump, OrbitCatalog
from app.schemas.catalog import ResonanceSchemas
from app.services.escape_service import EscapeService
from app.services.fbi_service import FbiService
from app.services.io_service import IoService
from app.services.orbit_service import OrbitService
from app.services.resonance_service import ResonanceService
from app.services.spectra_service import FOUR_PI2, SpectraService
from app.services.zeta_service import ZetaService
from app.utils.exceptions import ResonanceLabError
from app.utils.log import setup_logging


logger = logging.getLogger(__name__)

# Имена вариантов FBI в командной строке
VARIANTS = {'flat': 'flat', 'scaled': 'scaled_phase', 'scaled_phase': 'scaled_phase', 'gabor': 'gabor'}

# Число точек для сравнения скобки с конечной разностью
BRACKET_SAMPLES = 16

# Допуски проверок (абсолютные)
TRACE_TOL = 1e-8
DETM_TOL = 1e-4
SECTOR_SLACK = 0.05


class Run:
    """ Один запуск подкоманды: имя, разрешённая конфигурация, путь вывода, потоки """

    def __init__(self, command: str, config: RunConfig, out_path: Optional[str], threads: int):
        self.command = command
        self.config = config
        self.out_path = out_path
        self.threads = threads

    @property
    def table_path(self) -> Optional[str]:
        """ --out с расширением .csv получает таблицу; конверт JSON тогда печатается """
        if self.out_path and Path(self.out_path).suffix.lower() == '.csv':
            return self.out_path
        return None

    def envelope(self, result: Any) -> dict:
        return {'schema_version': settings.OUTPUT_SCHEMA_VERSION,
                'tool_version': __version__,
                'command': self.command,
                'config': self.config.model_dump(),
                'result': result}

    def emit(self, result: Any) -> None:
        text = IoService.dumps(self.envelope(result)) + '\n'
        if self.out_path and not self.table_path:
            IoService.write_text(text, self.out_path)
        else:
            click.echo(text, nl=False)


def lab_command(command: Callable) -> Callable:
    ''' Общие флаги, конверт результата и отображение ошибок на код выхода '''
    @click.option('--seed', type=click.IntRange(min=0), default=None, help='Зерно выборок (перекрывает SEED)')
    @click.option('--threads', type=click.IntRange(1, 64), default=None, help='Число потоков')
    @click.option('--out', 'out_path', type=click.Path(dir_okay=False), default=None, help='Файл результата')
    @click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                  help='Файл конфигурации key=value')
    @functools.wraps(command)
    def wrapper(config_path, out_path, threads, seed, **options):
        ctx = click.get_current_context()
        name = ctx.info_name
        try:
            config = load_run_config(config_path)
            if seed is not None:
                config = config.model_copy(update={'seed': seed})
            run = Run(name, config, out_path, threads or settings.THREADS)
            logger.info(f"Запуск команды {name}, конфигурация {config_path or 'по умолчанию'}")
            run.emit(command(run, **options))
        except ResonanceLabError as e:
            logger.error(f"Команда {name} завершилась ошибкой {e.code}: {e.detail}")
            click.echo(IoService.dumps(e.to_payload()))
            ctx.exit(e.exit_code)
        except ValueError as e:
            logger.error(f"Команда {name}: некорректные данные: {e}")
            click.echo(IoService.dumps({'error': 'ValueError', 'detail': str(e)}))
            ctx.exit(1)
    return wrapper


def parse_complex(ctx, param, value):
    """ '2', '2+5j', '1+3i' -> complex """
    if value is None:
        return None
    values = value if isinstance(value, tuple) else (value,)
    try:
        parsed = tuple(complex(v.replace(' ', '').replace('i', 'j')) for v in values)
    except ValueError:
        raise click.BadParameter(f'не комплексное число: {value}')
    return parsed if isinstance(value, tuple) else parsed[0]


def parse_jumps(text: str) -> tuple[Jump, ...]:
    """ 'x0[:height],x0[:height]' -> скачки сигнала """
    jumps = []
    for chunk in text.split(','):
        chunk = chunk.strip()
        if not chunk:
            continue
        x0, _, height = chunk.partition(':')
        jumps.append(Jump(x0=float(x0), height=float(height) if height else 1.0))
    return tuple(jumps)


# -- Построение моделей из конфигурации --

def model_catalog(config: RunConfig) -> OrbitCatalog:
    model = config.model
    horizon = config.numerics.horizon
    if model.kind == 'fuchsian':
        fuchsian = OrbitService.validate_generators(model.generators or (), model.max_word_len,
                                                    model.certify_complete, model.potential)
        return OrbitService.enumerate_geodesic_orbits(fuchsian, horizon)
    suspension = OrbitService.make_suspension(model.a, model.b, model.c, model.d, model.roof, model.potential)
    return OrbitService.enumerate_suspension_orbits(suspension, horizon)


def require_cat(config: RunConfig, command: str) -> None:
    if config.model.kind != 'cat':
        raise ValueError(f'Команда {command} работает только с надстройкой cat map')


def fbi_case(config: RunConfig, s: Optional[float], c: Optional[float], h: Optional[float],
             variant: Optional[str]) -> tuple[GevreySignal, FbiGrid]:
    experiment = config.experiment
    s = s if s is not None else experiment.s
    signal = FbiService.make_gevrey_signal(s, c if c is not None else experiment.c, experiment.modes,
                                           jumps=parse_jumps(experiment.jumps))
    grid = FbiService.make_grid(h if h is not None else experiment.h, -1.0, 1.0,
                                -experiment.xi_max, experiment.xi_max, experiment.xi_step,
                                VARIANTS[variant or experiment.variant])
    return signal, grid


def fbi_options(command: Callable) -> Callable:
    command = click.option('--variant', type=click.Choice(sorted(VARIANTS)), default=None)(command)
    command = click.option('--h', 'h', type=click.FloatRange(0, 1, min_open=True), default=None)(command)
    command = click.option('--c', 'c', type=click.FloatRange(0, min_open=True), default=None)(command)
    return click.option('--s', 's', type=click.FloatRange(min=1), default=None)(command)


def read_or_locate(run: Run, resonances_path: Optional[str]) -> list:
    if resonances_path:
        return [r.to_resonance() for r in IoService.read_resonances(resonances_path)]
    catalog = model_catalog(run.config)
    numerics = run.config.numerics
    return ResonanceService.locate_zeros(ZetaService.zeta_evaluator(catalog), Box.parse(run.config.experiment.box),
                                         numerics.tol, numerics.max_depth, numerics.quad_points)


@click.group()
@click.version_option(__version__, prog_name='resonance-lab')
def cli():
    """ Лаборатория резонансов Рюэля-Поллико для модельных потоков Аносова """
    setup_logging()


@cli.command('orbits')
@lab_command
def orbits(run: Run):
    """ Каталог периодических орбит модели до горизонта """
    catalog = model_catalog(run.config)
    if run.table_path:
        IoService.catalog_to_csv(catalog, run.table_path)
    result = {'catalog': IoService.catalog_to_json(catalog)}
    if run.config.model.kind == 'cat':
        model = run.config.model
        cat_map = OrbitService.validate_cat_map(model.a, model.b, model.c, model.d)
        levels = int(catalog.metadata.get('levels', 0))
        counts = [OrbitService.fixed_point_count(cat_map, k) for k in range(1, min(levels, 12) + 1)]
        result['fixed_point_counts'] = counts
        result['primitive_counts'] = OrbitService.primitive_orbit_counts(counts)
    return result


@cli.command('zeta-eval')
@lab_command
@click.option('--catalog', 'catalog_path', type=click.Path(dir_okay=False), default=None)
@click.option('--z', 'z', default='2', callback=parse_complex, help='Точка, например 2+5j')
@click.option('--mode', type=click.Choice(['direct', 'ruelle', 'trace', 'detm']), default='direct')
@click.option('--m', 'm', type=click.IntRange(min=1), default=None, help='Порядок момента или det_m')
@click.option('--resonances', 'resonances_path', type=click.Path(dir_okay=False), default=None)
def zeta_eval(run: Run, catalog_path, z, mode, m, resonances_path):
    """ Значение дзета-функции с оценкой хвоста """
    catalog = IoService.read_catalog(catalog_path) if catalog_path else model_catalog(run.config)
    numerics = run.config.numerics
    m = m or numerics.det_order

    data = None
    if mode == 'detm':
        points = None
        if resonances_path:
            points = [r.to_weighted_point() for r in IoService.read_resonances(resonances_path)]
        data = ZetaService.regdet_input(catalog, m, numerics.anchor, points, numerics.resonance_k)

    quantity, series = ZetaService.evaluate(catalog, z, mode, m, numerics.strict_tails, data)
    return {'quantity': quantity, 'z': z, 'value': series.value, 'tail_bound': series.tail_bound,
            'tail_kind': series.tail_kind, 'catalog_complete': catalog.complete_flag}


@cli.command('zeros')
@lab_command
@click.option('--catalog', 'catalog_path', type=click.Path(dir_okay=False), default=None)
@click.option('--box', default=None, help='re_min,re_max,im_min,im_max')
@click.option('--tol', type=click.FloatRange(0, min_open=True), default=None)
def zeros(run: Run, catalog_path, box, tol):
    """ Нули усечённой дзета-функции в прямоугольнике """
    catalog = IoService.read_catalog(catalog_path) if catalog_path else model_catalog(run.config)
    numerics = run.config.numerics
    box = box or run.config.experiment.box
    found = ResonanceService.locate_zeros(ZetaService.zeta_evaluator(catalog), Box.parse(box),
                                          tol or numerics.tol, numerics.max_depth, numerics.quad_points)
    return {'box': box, 'count': sum(r.multiplicity for r in found),
            'resonances': [ResonanceSchemas.from_resonance(r) for r in found],
            'residuals': [r.residual for r in found]}


@cli.command('nr')
@lab_command
@click.option('--resonances', 'resonances_path', type=click.Path(dir_okay=False), default=None)
@click.option('--R', 'radius', type=click.FloatRange(min=0), default=None)
def counting(run: Run, resonances_path, radius):
    """ N(R): число резонансов в круге радиуса R """
    radius = radius if radius is not None else run.config.experiment.count_radius
    resonances = read_or_locate(run, resonances_path)
    return {'R': radius, 'count': ResonanceService.counting_function(resonances, radius)}


@cli.command('order')
@lab_command
@click.option('--radii', default=None, help='Радиусы через запятую')
def order(run: Run, radii):
    """ Порядок роста дзета-функции через представление det_m """
    require_cat(run.config, 'order')
    numerics = run.config.numerics
    catalog = model_catalog(run.config)
    data = ZetaService.regdet_input(catalog, numerics.det_order, numerics.anchor,
                                    resonance_k=numerics.resonance_k)
    fit = ResonanceService.order_estimate(ZetaService.log_abs_zeta_via_detm(catalog, data),
                                          run.config.experiment.floats(radii or run.config.experiment.radii),
                                          log_modulus=True)
    bound = data.dimension * data.gevrey_index
    return {'fit': fit, 'bound_ns': bound, 'within_bound': fit.rho <= bound}


@cli.command('traces-check')
@lab_command
@click.option('--z', 'z', default='1', callback=parse_complex)
@click.option('--horizon-j', type=click.IntRange(min=1), default=500)
def traces_check(run: Run, z, horizon_j):
    """ Формула следов: сумма по орбитам против суммы по резонансам """
    require_cat(run.config, 'traces-check')
    model = run.config.model
    m = run.config.numerics.det_order
    catalog = model_catalog(run.config)
    orbit_side = ZetaService.trace_moment(catalog, z, m, run.config.numerics.strict_tails)
    spectral_side = ZetaService.spectral_trace_sum(z, m, horizon_j, model.potential, model.roof)
    difference = abs(orbit_side.value - spectral_side.value)
    tolerance = TRACE_TOL + orbit_side.tail_bound + spectral_side.tail_bound
    return {'z': z, 'm': m, 'orbit_side': orbit_side.value, 'orbit_tail': orbit_side.tail_bound,
            'spectral_side': spectral_side.value, 'spectral_tail': spectral_side.tail_bound,
            'difference': difference, 'tolerance': tolerance, 'passed': difference <= tolerance}


@cli.command('detm-check')
@lab_command
@click.option('--lam', 'points', multiple=True, default=('1', '1+3j', '-0.5+6j'), callback=parse_complex)
def detm_check(run: Run, points):
    """ Восстановление zeta через det_m и exp(Q_z) против точной формулы """
    require_cat(run.config, 'detm-check')
    model = run.config.model
    numerics = run.config.numerics
    catalog = model_catalog(run.config)
    data = ZetaService.regdet_input(catalog, numerics.det_order, numerics.anchor, resonance_k=numerics.resonance_k)

    rows = []
    for lam in points:
        series = ZetaService.zeta_via_detm(catalog, data, lam, numerics.strict_tails)
        exact = ZetaService.closed_form_cat_zeta(lam, model.potential, model.roof)
        error = abs(series.value - exact)
        rows.append({'lam': lam, 'value': series.value, 'exact': exact, 'error': error,
                     'tail_bound': series.tail_bound, 'passed': error <= DETM_TOL})
    return {'rows': rows, 'passed': all(r['passed'] for r in rows)}


@cli.command('escape-check')
@lab_command
@click.option('--samples', type=click.IntRange(min=1), default=None)
@click.option('--radius-min', type=click.FloatRange(1, min_open=True), default=None)
def escape_check(run: Run, samples, radius_min):
    """ Свойства функции ухода G0, скобка вдоль потока, двойственность базисов, T1 """
    require_cat(run.config, 'escape-check')
    model = run.config.model
    experiment = run.config.experiment
    samples = samples or experiment.samples
    radius_min = radius_min or experiment.radius_min

    cat_map = OrbitService.validate_cat_map(model.a, model.b, model.c, model.d)
    split = EscapeService.splitting(cat_map, model.roof)
    params = run.config.escape.params()
    report = EscapeService.property_scan(params, split, samples, radius_min, run.config.seed, run.threads)

    bracket_error = 0.0
    for alpha in EscapeService.sample_cotangent(split, BRACKET_SAMPLES, radius_min, run.config.seed):
        value = EscapeService.bracket_along_flow(alpha, params, split)
        scale = max(1.0, abs(value.closed_form))
        bracket_error = max(bracket_error, abs(value.finite_difference - value.closed_form) / scale)

    pairing = EscapeService.dual_pairing(split)
    return {'params': params, 'report': report, 'bracket_max_error': bracket_error,
            'pairing_max_error': float(np.max(np.abs(pairing - np.eye(3)))),
            'T1_min': EscapeService.find_T1(params, split, seed=run.config.seed)}


@cli.command('fbi')
@lab_command
@fbi_options
def fbi(run: Run, s, c, h, variant):
    """ Таблица FBI-преобразования (x, xi, re, im, abs) """
    signal, grid = fbi_case(run.config, s, c, h, variant)
    values = FbiService.fbi_transform(signal, grid, run.threads)
    if run.table_path:
        IoService.fbi_to_csv(values, grid, run.table_path)
    return {'h': grid.h, 'variant': grid.variant, 'nx': len(grid.x_nodes), 'nxi': len(grid.xi_nodes),
            'sup_abs': float(np.abs(values).max()), 'table': run.table_path}


@cli.command('fbi-fit')
@lab_command
@fbi_options
@click.option('--table', 'table_path', type=click.Path(dir_okay=False), default=None, help='CSV из команды fbi')
def fbi_fit(run: Run, s, c, h, variant, table_path):
    """ Подгонка убывания sup_x |Tu| и выбор показателя """
    experiment = run.config.experiment
    if table_path:
        values, grid = IoService.read_fbi_csv(table_path, h if h is not None else experiment.h,
                                              VARIANTS[variant or experiment.variant])
    else:
        signal, grid = fbi_case(run.config, s, c, h, variant)
        values = FbiService.fbi_transform(signal, grid, run.threads)
    s = s if s is not None else experiment.s
    candidates = FbiService.select_exponent(values, grid)
    return {'fit': FbiService.decay_fit(values, grid, s),
            'candidates': [candidates[p] for p in sorted(candidates, reverse=True)],
            'selected_exponent': max(candidates, key=lambda p: candidates[p].r_squared)}


@cli.command('fbi-wf')
@lab_command
@fbi_options
@click.option('--table', 'table_path', type=click.Path(dir_okay=False), default=None, help='CSV из команды fbi')
@click.option('--threshold', type=click.FloatRange(0, 1, min_open=True, max_open=True), default=None)
def fbi_wf(run: Run, s, c, h, variant, table_path, threshold):
    """ Клетки волнового фронта по таблице или по сигналу из конфигурации """
    experiment = run.config.experiment
    threshold = threshold or experiment.threshold
    if table_path:
        values, grid = IoService.read_fbi_csv(table_path, h if h is not None else experiment.h,
                                              VARIANTS[variant or experiment.variant])
        return FbiService.wavefront_from_values(values, grid, threshold)
    signal, grid = fbi_case(run.config, s, c, h, variant)
    return FbiService.wavefront_scan(signal, grid, threshold, run.threads)


@cli.command('spectra')
@lab_command
@click.option('--eps-list', 'eps_text', default=None, help='Убывающий список eps через запятую')
@click.option('--z', 'z', type=float, default=None, help='Точка метрики d_z')
@click.option('--R', 'disk_r', type=click.FloatRange(0, min_open=True), default=None, help='Радиус круга')
def spectra(run: Run, eps_text, z, disk_r):
    """ Стохастическая устойчивость: (eps, d_zH) и отчёт по секторам """
    require_cat(run.config, 'spectra')
    model = run.config.model
    numerics = run.config.numerics
    overrides = {key: value for key, value in (('eps_list', eps_text), ('z', z), ('disk_r', disk_r))
                 if value is not None}
    if overrides:
        experiment = run.config.experiment.model_copy(update=overrides)
        run.config = run.config.model_copy(update={'experiment': experiment})
    experiment = run.config.experiment
    cat_map = OrbitService.validate_cat_map(model.a, model.b, model.c, model.d)
    eps_list = experiment.floats(experiment.eps_list)

    rows = SpectraService.stochastic_stability_experiment(cat_map, eps_list, experiment.z, experiment.disk_r,
                                                          numerics.window_k, numerics.grid_per_cell,
                                                          threads=run.threads)
    sectors = []
    for row in rows:
        bound = -FOUR_PI2 * row.eps + SECTOR_SLACK
        leading = max((r.eigenvalues[0].real for r in row.sectors if r.eigenvalues), default=-math.inf)
        sectors.append({'eps': row.eps, 'bound': bound, 'max_re': leading, 'within_bound': leading <= bound,
                        'sectors': [{'sector_id': r.sector_id, 'K': r.K, 'ds': r.ds, 'discarded': r.discarded,
                                     'count': len(r.eigenvalues)} for r in row.sectors]})

    if run.table_path:
        IoService.rows_to_csv([{'eps': repr(r.eps), 'd_zH': repr(r.d_zH), 'n_eigs_in_disk': r.n_eigs_in_disk}
                               for r in rows], ('eps', 'd_zH', 'n_eigs_in_disk'), run.table_path)
        IoService.write_text(IoService.dumps(sectors) + '\n',
                             str(Path(run.table_path).with_suffix('.sectors.json')))
    return {'rows': rows, 'sectors': sectors}


if __name__ == '__main__':
    cli()
