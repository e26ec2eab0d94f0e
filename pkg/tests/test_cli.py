import json

import pytest

from features.crasp import parse_crasp, serialize_crasp, uses_match
from features.crasp_programs import shift_match_program
from ui.cli import EXIT_INVALID, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


class TestVerify:
    def test_valid_plan(self, capsys, asset):
        code, result = run_json(capsys, 'verify', 'flipflop', asset('flipflop.pinst'), asset('flipflop-abe.pplan'))
        assert code == EXIT_OK
        assert result['status'] == 'valid'

    def test_invalid_plan(self, capsys, asset):
        code, result = run_json(capsys, 'verify', asset('flipflop.pdom'), asset('flipflop.pinst'),
                                asset('flipflop-bae.pplan'), '--trace')
        assert code == EXIT_INVALID
        assert result['status'] == 'incomplete'
        assert len(result['trace']) == 4

    def test_audit(self, capsys, asset):
        code, result = run_json(capsys, 'verify', asset('grippers-wf.pdom'), asset('grippers-example.pinst'),
                                asset('grippers-pi.pplan'), '--audit')
        assert code == EXIT_OK
        assert result['well_formed_violations'] == []
        assert result['domain_class']['label'] == 'well_formed'

    def test_audit_non_executable(self, capsys, asset):
        code, result = run_json(capsys, 'verify', asset('grippers-wf.pdom'), asset('grippers-example.pinst'),
                                asset('grippers-pi2-prime.pplan'), '--audit')
        assert code == EXIT_INVALID
        assert result['status'] == 'non_executable'
        assert all(v['step'] < result['step'] for v in result['well_formed_violations'])

    def test_missing_file(self, capsys, asset, tmp_path):
        code, _ = run(capsys, 'verify', 'flipflop', asset('flipflop.pinst'), str(tmp_path / 'absent.pplan'))
        assert code == EXIT_USAGE


@pytest.mark.parametrize('argv', [[], ['bogus'], ['gen', 'blocks', '-o', 'x'], ['gen', 'colors-wf', '-o', 'x',
                                                                                 '--lengths', '9:3']])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_USAGE


class TestCrasp:
    def test_run(self, capsys, tmp_path):
        program = tmp_path / 'shift.crasp'
        program.write_text(serialize_crasp(shift_match_program(1)), encoding='utf-8')
        hit, miss = tmp_path / 'hit.tok', tmp_path / 'miss.tok'
        hit.write_text('#3 #4\n', encoding='utf-8')
        miss.write_text('#3 #3\n', encoding='utf-8')

        code, result = run_json(capsys, 'run-crasp', str(program), str(hit), '--classify')
        assert code == EXIT_OK
        assert result['accepted'] is True and result['length'] == 2
        assert run(capsys, 'run-crasp', str(program), str(miss))[0] == EXIT_INVALID

        code, table = run(capsys, 'run-crasp', str(program), str(hit), '--dump-table')
        assert code == EXIT_OK
        rows = table.splitlines()
        assert len(rows) == len(shift_match_program(1))
        assert all(len(row.split('\t')) == 2 for row in rows)

    def test_compile_and_lower(self, capsys, tmp_path):
        target = tmp_path / 'colors.crasp'
        code, report = run_json(capsys, 'compile-crasp', 'colors-wf', '-o', str(target))
        assert code == EXIT_OK
        assert report['mode'] == 'wf'
        program = parse_crasp(target.read_text(encoding='utf-8'))
        assert len(program) == report['lines']

        lowered = tmp_path / 'lowered.crasp'
        shift = tmp_path / 'shift.crasp'
        shift.write_text(serialize_crasp(shift_match_program(1)), encoding='utf-8')
        code, result = run_json(capsys, 'lower', str(shift), '--values', '1,2,3', '-o', str(lowered))
        assert code == EXIT_OK
        assert result['within_budget']
        assert not uses_match(parse_crasp(lowered.read_text(encoding='utf-8')))

    def test_encode(self, capsys, asset):
        code, out = run(capsys, 'encode', 'grippers-wf', asset('grippers-example.pinst'), asset('grippers-pi.pplan'))
        assert code == EXIT_OK
        tokens = out.split()
        assert tokens[0] == '$' and tokens[-1] == '@'


class TestGen:
    ARGS = ('gen', 'colors-strips', '--count', '2', '--lengths', '11:14', '--ood-lengths', '15:18',
            '--splits', 'train,test_ood')

    def test_deterministic(self, capsys, tmp_path):
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert run(capsys, '--seed', '3', *self.ARGS, '-o', str(first))[0] == EXIT_OK
        assert run(capsys, '--seed', '3', *self.ARGS, '-o', str(second))[0] == EXIT_OK
        for name in ('colors-strips.train.jsonl', 'colors-strips.test_ood.jsonl'):
            assert (first / name).read_bytes() == (second / name).read_bytes()
        manifest = json.loads((first / 'manifest.json').read_text(encoding='utf-8'))
        assert manifest['flags']['seed'] == 3

        code, summary = run_json(capsys, 'stats', str(first / 'colors-strips.train.jsonl'))
        assert code == EXIT_OK
        assert summary['records'] == 2

    def test_unknown_split(self, capsys, tmp_path):
        code, _ = run(capsys, 'gen', 'colors-wf', '-o', str(tmp_path), '--splits', 'dev')
        assert code == EXIT_USAGE


class TestCheckTheory:
    def test_flipflop(self, capsys):
        code, report = run_json(capsys, 'check-theory', 'flipflop', '--max-len', '4')
        assert code == EXIT_OK
        assert report['passed'] and report['checked'] == 3 + 9 + 27 + 81

    def test_flipflop_cap(self, capsys):
        assert run(capsys, 'check-theory', 'flipflop', '--max-len', '20')[0] == EXIT_USAGE

    def test_parity(self, capsys):
        code, report = run_json(capsys, 'check-theory', 'parity', '--max-len', '2')
        assert code == EXIT_OK
        assert report['board'] == '2x2'

    def test_compiled_needs_variant(self, capsys):
        assert run(capsys, 'check-theory', 'compiled')[0] == EXIT_USAGE


def test_export_domains(capsys, tmp_path):
    code, result = run_json(capsys, 'export-domains', str(tmp_path), '--board', '2x2')
    assert code == EXIT_OK
    assert str(tmp_path / 'flipflop.pdom') in result['written']
    assert (tmp_path / 'lightsout-wf.pinst').exists()


class TestConfig:
    def test_set_and_show(self, capsys, planlab_home):
        code, result = run_json(capsys, 'config', 'set', 'seed', '7')
        assert code == EXIT_OK and result == {'seed': 7}
        assert run_json(capsys, 'config', 'show')[1]['seed'] == 7
        assert (planlab_home / 'config.json').exists()

    def test_unknown_key(self, capsys):
        assert run(capsys, 'config', 'set', 'colour', '1')[0] == EXIT_USAGE

    def test_reset(self, capsys):
        run(capsys, 'config', 'set', 'jobs', '4')
        assert run_json(capsys, 'config', 'reset')[1]['jobs'] == 1
