"""
Конфигурация запуска:
  * ключи SECTION__FIELD разбираются в секции, значения проходят валидацию;
  * неизвестные ключи и поля отклоняются с ConfigParse (код выхода 2);
  * отсутствующий файл -> IoError (код выхода 3);
  * генераторы задаются строкой a,b,c,d;a,b,c,d;
  * секция ESCAPE собирает параметры функции ухода и проверяет T0 < T1.
"""
import pytest
from pytest import approx

from app.config import ExperimentSection, RunConfig, finite_or_none, load_run_config, parse_run_config
from app.models import EscapeParams
from app.utils.exceptions import ConfigParse, IoError


class TestParseRunConfig:

    def test_defaults_when_empty(self):
        config = parse_run_config({})
        assert config == RunConfig()
        assert (config.model.a, config.model.b, config.model.c, config.model.d) == (2, 1, 1, 1)
        assert config.numerics.horizon == approx(30.0)
        assert config.seed == 0

    def test_sections_and_case_insensitive_keys(self):
        config = parse_run_config({'MODEL__ROOF': '2.5', 'numerics__det_order': '5', 'SEED': '7'})
        assert config.model.roof == approx(2.5)
        assert config.numerics.det_order == 5
        assert config.seed == 7

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigParse) as info:
            parse_run_config({'PLOT__COLOR': 'red'})
        assert info.value.exit_code == 2

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigParse):
            parse_run_config({'MODEL__COLOR': 'red'})

    def test_key_without_value_rejected(self):
        with pytest.raises(ConfigParse):
            parse_run_config({'MODEL__A': None})

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigParse):
            parse_run_config({'MODEL__A': 'two'})

    def test_negative_seed_rejected(self):
        with pytest.raises(ConfigParse):
            parse_run_config({'SEED': '-1'})

    def test_generators_string(self):
        config = parse_run_config({'MODEL__KIND': 'fuchsian', 'MODEL__GENERATORS': '2,0,0,0.5; 1,1,0,1'})
        assert config.model.generators == ((2.0, 0.0, 0.0, 0.5), (1.0, 1.0, 0.0, 1.0))

    def test_generator_with_three_numbers_rejected(self):
        with pytest.raises(ConfigParse):
            parse_run_config({'MODEL__GENERATORS': '2,0,0'})



class TestEscapeSection:

    def test_override(self):
        config = parse_run_config({'ESCAPE__T1': '7.5', 'escape__a_const': '55'})
        params = config.escape.params()
        assert params.T1 == approx(7.5)
        assert params.A_const == approx(55.0)
        assert params.T0 == approx(2.0)

    def test_defaults_match_params(self):
        assert RunConfig().escape.params() == EscapeParams()

    def test_window_order_rejected(self):
        with pytest.raises(ConfigParse):
            parse_run_config({'ESCAPE__T1': '1'})

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigParse):
            parse_run_config({'ESCAPE__COLOR': 'red'})


class TestLoadRunConfig:

    def test_none_gives_defaults(self):
        assert load_run_config(None) == RunConfig()

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError) as info:
            load_run_config(str(tmp_path / 'absent.env'))
        assert info.value.exit_code == 3

    def test_key_value_file(self, tmp_path):
        path = tmp_path / 'run.env'
        path.write_text('# пример\nMODEL__POTENTIAL=0.5\nEXPERIMENT__EPS_LIST=0.1,0.01\nSEED=3\n', encoding='utf-8')
        config = load_run_config(str(path))
        assert config.model.potential == approx(0.5)
        assert ExperimentSection.floats(config.experiment.eps_list) == approx([0.1, 0.01])
        assert config.seed == 3


class TestHelpers:

    def test_floats_skips_empty_chunks(self):
        assert ExperimentSection.floats('5, 7.5,,10') == approx([5.0, 7.5, 10.0])

    def test_finite_or_none(self):
        assert finite_or_none(float('inf')) is None
        assert finite_or_none(1.5) == approx(1.5)
