import json

import pytest

from features.errors import ParseError
from utils import planlab_home
from utils.config_loader import ConfigLoader, get_config
from utils.file_io import read_text, write_json, write_text_atomic
from utils.logger import get_logger


class TestConfig:
    def test_defaults_and_home(self, planlab_home):
        config = get_config()
        assert config.config_file == planlab_home / 'config.json'
        assert config.get('seed') == 0
        assert config.get('jobs') == 1

    def test_set_casts_and_saves(self, planlab_home):
        config = get_config()
        config.set('jobs', '3')
        config.set('df_mix', '0.25')
        assert config.get('jobs') == 3 and config.get('df_mix') == 0.25
        saved = json.loads((planlab_home / 'config.json').read_text(encoding='utf-8'))
        assert saved['jobs'] == 3
        assert ConfigLoader().get('jobs') == 3

    def test_unknown_key(self):
        with pytest.raises(KeyError):
            get_config().set('colour', 'red')

    def test_validate_fixes_bad_values(self):
        config = get_config()
        config.config.update({'jobs': 0, 'nonexecutable_share': 2.0, 'seed': 'x'})
        assert config.validate_config()
        assert (config.get('jobs'), config.get('nonexecutable_share'), config.get('seed')) == (1, 0.5, 0)
        assert not config.validate_config()

    def test_wrong_type_falls_back(self):
        config = get_config()
        config.config['eval_batch_size'] = 'many'
        assert config.get('eval_batch_size') == 256

    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv('PLANLAB_SEED', '41')
        assert ConfigLoader().get('seed') == 41
        monkeypatch.setenv('PLANLAB_SEED', 'soon')
        assert ConfigLoader().get('seed') == 0

    def test_corrupt_file_uses_defaults(self, planlab_home):
        planlab_home.mkdir(parents=True, exist_ok=True)
        (planlab_home / 'config.json').write_text('{not json', encoding='utf-8')
        assert ConfigLoader().get_all() == ConfigLoader().default_config

    def test_export_import(self, tmp_path):
        config = get_config()
        config.set('volume_scale', 10)
        exported = tmp_path / 'settings.json'
        assert config.export_config(exported)
        config.reset_to_defaults()
        assert config.get('volume_scale') == 100
        assert config.import_config(exported)
        assert config.get('volume_scale') == 10


def test_log_file_under_home(planlab_home):
    logger = get_logger()
    logger.warning("written to the log file")
    path = logger.get_log_file_path()
    assert path.startswith(str(planlab_home / 'logs'))


def test_timed_block(planlab_home):
    logger = get_logger()
    with logger.timed('gen colors-wf') as details:
        details['records'] = 4
    with pytest.raises(RuntimeError):
        with logger.timed('check parity'):
            raise RuntimeError('stop')
    text = (planlab_home / 'logs').joinpath(logger.log_file.name).read_text(encoding='utf-8')
    assert 'gen colors-wf took' in text and 'records=4' in text
    assert 'check parity took' not in text


def test_planlab_home_override(monkeypatch, tmp_path):
    monkeypatch.setenv('PLANLAB_HOME', str(tmp_path / 'elsewhere'))
    assert planlab_home() == tmp_path / 'elsewhere'


class TestFiles:
    def test_read_normalizes(self, tmp_path):
        path = tmp_path / 'plan.pplan'
        path.write_bytes('\ufeff(plan\r\n  (a_b k))\r\n'.encode('utf-8'))
        assert read_text(path) == '(plan\n  (a_b k))\n'

    def test_read_rejects_other_encodings(self, tmp_path):
        path = tmp_path / 'plan.pplan'
        path.write_bytes('(plan (café k))'.encode('utf-16'))
        with pytest.raises(ParseError, match='expected UTF-8'):
            read_text(path)

    def test_atomic_write(self, tmp_path):
        target = tmp_path / 'nested' / 'out.txt'
        write_text_atomic(target, 'one\n')
        write_text_atomic(target, 'two\n')
        assert target.read_text(encoding='utf-8') == 'two\n'
        assert [p.name for p in target.parent.iterdir()] == ['out.txt']

    def test_write_json(self, tmp_path):
        target = write_json(tmp_path / 'm.json', {'b': 1, 'a': [1, 2]})
        assert json.loads(target.read_text(encoding='utf-8')) == {'b': 1, 'a': [1, 2]}
