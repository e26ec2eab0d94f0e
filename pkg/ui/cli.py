"""
Command Line - verification, C*-RASP tooling, dataset generation and theory checks

Results are printed to stdout as JSON; diagnostics go to stderr through the logger.
Exit codes: 0 success or valid plan, 1 invalid plan or rejected input,
2 usage error, 3 internal error or failed check.
"""

import argparse
import json
import re
import sys
from pathlib import Path

from features.builtin_domains import VARIANTS, Board, builtin_domains, get_variant
from features.crasp import accepts, evaluate, format_tokens, parse_crasp, parse_tokens, program_summary, serialize_crasp
from features.crasp_compile import EncodingLayout, build_fixed, build_variable, encode, explain
from features.crasp_lowering import lower_match_to_finite, lowering_report
from features.datagen import SPLITS, GenConfig, build_splits, crasp_layout, object_token_values, stats
from features.errors import GenerationError, ParseError, PlanLabError
from features.formats import load_domain, load_instance, load_plan, serialize_domain, serialize_instance
from features.strips import audit_well_formed_trace, classify_domain, simulate
from features.theory_checks import (
    CompiledSweep,
    check_compiled_variant,
    check_flipflop,
    check_lowering,
    check_parity_reduction,
    check_toggle_identity,
    check_translation,
    lowering_suite,
)
from utils.config_loader import get_config
from utils.file_io import read_text, write_text_atomic
from utils.logger import get_logger

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_FAILURE = 3

CHECKS = ('flipflop', 'parity', 'toggle', 'compiled', 'lowering', 'translation')


# Argument types

def board_arg(text):
    found = re.fullmatch(r'(\d+)x(\d+)', text)
    if not found:
        raise argparse.ArgumentTypeError(f"board must look like 5x5, got {text!r}")
    return Board(int(found.group(1)), int(found.group(2)))


def range_arg(text):
    found = re.fullmatch(r'(\d+):(\d+)', text)
    if not found or int(found.group(1)) > int(found.group(2)):
        raise argparse.ArgumentTypeError(f"range must look like 11:100, got {text!r}")
    return int(found.group(1)), int(found.group(2))


def int_list_arg(text):
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def name_list_arg(text):
    return [item.strip() for item in text.split(',') if item.strip()]


def emit(data):
    print(json.dumps(data, indent=2, ensure_ascii=False))


class PlanLabCLI:
    """planlab command line"""

    def __init__(self):
        self.config = get_config()
        self.logger = get_logger()
        self.parser = self._create_parser()

    def _create_parser(self):
        """Create the parser with every subcommand"""
        parser = argparse.ArgumentParser(
            prog='planlab',
            description="Plan verification, C*-RASP compilation and plan datasets"
        )
        parser.add_argument('-v', '--verbose', action='store_true', help="debug output on stderr")
        parser.add_argument('--seed', type=int, default=None, help="random seed (default: config or PLANLAB_SEED)")
        parser.add_argument('--jobs', type=int, default=None, help="worker processes for gen and check-theory")

        self.commands = parser.add_subparsers(dest='command', metavar='COMMAND')
        self.commands.required = True
        self._add_verify_command()
        self._add_crasp_commands()
        self._add_gen_commands()
        self._add_check_command()
        self._add_domain_commands()
        self._add_config_command()
        return parser

    def _add_verify_command(self):
        """verify"""
        verify = self.commands.add_parser('verify', help="simulate a plan and report its verdict")
        verify.add_argument('domain', help="domain file or built-in domain name")
        verify.add_argument('instance', help="instance file")
        verify.add_argument('plan', help="plan file")
        verify.add_argument('--trace', action='store_true', help="include every visited state")
        verify.add_argument('--audit', action='store_true', help="report well-formedness violations along the trace")
        verify.set_defaults(handler=self.cmd_verify)

    def _add_crasp_commands(self):
        """run-crasp, encode, compile-crasp, lower"""
        run = self.commands.add_parser('run-crasp', help="run a C*-RASP program on one input")
        run.add_argument('program', help=".crasp program file")
        run.add_argument('input', help="token file (#<int> for extended tokens)")
        run.add_argument('--dump-table', action='store_true', help="print every line's values as TSV instead")
        run.add_argument('--classify', action='store_true', help="include the program summary")
        run.set_defaults(handler=self.cmd_run_crasp)

        enc = self.commands.add_parser('encode', help="token encoding of an instance and plan")
        enc.add_argument('domain', help="domain file or built-in domain name")
        enc.add_argument('instance')
        enc.add_argument('plan')
        self._add_layout_arguments(enc)
        enc.set_defaults(handler=self.cmd_encode)

        compile_ = self.commands.add_parser('compile-crasp', help="compile a plan verifier into C*-RASP")
        compile_.add_argument('domain', help="domain file or built-in domain name")
        compile_.add_argument('--mode', choices=('wf', 'df'), default=None,
                              help="well-formed or delete-free construction (default: from the domain)")
        compile_.add_argument('--universe', choices=('fixed', 'variable'), default='variable')
        compile_.add_argument('--instance', help="instance whose objects form the fixed universe")
        compile_.add_argument('--objects', type=name_list_arg, help="comma-separated fixed universe")
        compile_.add_argument('-o', '--output', help="write the program here and print the report")
        compile_.add_argument('--explain', type=int, metavar='LINE', help="print the construction step of a line")
        self._add_layout_arguments(compile_, objects_as=False)
        compile_.set_defaults(handler=self.cmd_compile)

        lower = self.commands.add_parser('lower', help="rewrite match lines over a finite value alphabet")
        lower.add_argument('program', help=".crasp program file")
        values = lower.add_mutually_exclusive_group(required=True)
        values.add_argument('--values', type=int_list_arg, help="comma-separated extended token values")
        values.add_argument('--max-value', type=int, help="values 0..N")
        lower.add_argument('--budget', type=int, default=None, help="maximum match branches")
        lower.add_argument('-o', '--output', help="write the lowered program here")
        lower.set_defaults(handler=self.cmd_lower)

    def _add_layout_arguments(self, parser, objects_as=True):
        parser.add_argument('--negative-goals', action='store_true', default=None,
                            help="allow negative goal literals (on by default for Lights Out)")
        parser.add_argument('--name-values', action='store_true',
                            help="object_i is read as value i instead of its declaration index")
        if objects_as:
            parser.add_argument('--objects-as', choices=('ext', 'sigma'), default='ext')

    def _add_gen_commands(self):
        """gen, stats"""
        gen = self.commands.add_parser('gen', help="generate JSONL splits for one variant")
        gen.add_argument('variant', choices=list(VARIANTS))
        gen.add_argument('-o', '--output', required=True, help="output directory")
        gen.add_argument('--count', type=int, help="records per split (default: scaled table volumes)")
        gen.add_argument('--lengths', type=range_arg, help="in-distribution plan lengths, e.g. 11:100")
        gen.add_argument('--ood-lengths', type=range_arg, help="out-of-distribution plan lengths, e.g. 101:200")
        gen.add_argument('--splits', type=name_list_arg, default=list(SPLITS), help="comma-separated splits")
        gen.add_argument('--board', type=board_arg, default=Board(), help="Lights Out board (default 5x5)")
        gen.add_argument('--object-pool', type=int, help="largest object_i index")
        gen.add_argument('--df-mix', type=float)
        gen.add_argument('--nonexecutable-share', type=float)
        gen.set_defaults(handler=self.cmd_gen)

        stats_ = self.commands.add_parser('stats', help="statistics of generated JSONL files")
        stats_.add_argument('files', nargs='+')
        stats_.set_defaults(handler=self.cmd_stats)

    def _add_check_command(self):
        """check-theory"""
        check = self.commands.add_parser('check-theory', help="brute-force language identity checks")
        check.add_argument('check', choices=CHECKS)
        check.add_argument('--max-len', type=int, help="longest input or plan")
        check.add_argument('--samples', type=int, help="random samples instead of exhaustive enumeration")
        check.add_argument('--board', type=board_arg, help="Lights Out board")
        check.add_argument('--variant', choices=list(VARIANTS), help="variant for the compiled check")
        check.add_argument('--fixed', action='store_true', help="fixed-universe compilation")
        check.add_argument('--trials', type=int, help="records for the compiled check")
        check.add_argument('--lengths', type=range_arg, default=(11, 60), help="plan lengths for the compiled check")
        check.add_argument('--program', help=".crasp program for the lowering check (default: fragment suite)")
        check.add_argument('--values', type=int_list_arg, default=[1, 2, 3], help="lowering alphabet values")
        check.add_argument('--deltas', type=int_list_arg, default=[1, 17, 1000], help="translation shifts")
        check.set_defaults(handler=self.cmd_check)

    def _add_domain_commands(self):
        """export-domains"""
        export = self.commands.add_parser('export-domains', help="write every built-in domain as .pdom")
        export.add_argument('directory')
        export.add_argument('--board', type=board_arg, default=Board())
        export.set_defaults(handler=self.cmd_export_domains)

    def _add_config_command(self):
        """config"""
        config = self.commands.add_parser('config', help="show or change settings")
        config.add_argument('action', choices=('show', 'set', 'reset', 'path'))
        config.add_argument('key', nargs='?')
        config.add_argument('value', nargs='?')
        config.set_defaults(handler=self.cmd_config)

    # Running

    def run(self, argv=None):
        """Parse argv, run the command and return its exit code"""
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_OK if e.code in (0, None) else EXIT_USAGE

        self.logger.set_console_log_level(self.config.get('log_level'))
        if args.verbose:
            self.logger.enable_debug_mode()
        args.seed = args.seed if args.seed is not None else self.config.get('seed')
        args.jobs = args.jobs if args.jobs is not None else self.config.get('jobs')
        self.logger.debug(f"planlab {args.command}: {vars(args)}")

        try:
            return args.handler(args)
        except GenerationError as e:
            return self._fail(e, args, EXIT_FAILURE)
        except (PlanLabError, OSError, ValueError, KeyError) as e:
            return self._fail(e, args, EXIT_USAGE)
        except Exception as e:
            self.logger.exception(f"planlab {args.command} crashed")
            return self._fail(e, args, EXIT_FAILURE)

    def _fail(self, error, args, code):
        self.logger.log_error_with_context(error, f"planlab {args.command}", f"exit {code}")
        message = str(error) if not isinstance(error, KeyError) else error.args[0]
        print(f"planlab: error: {message}", file=sys.stderr)
        return code

    # Helpers

    def _domain(self, value, board=None):
        """Built-in domain by name, otherwise a domain file"""
        domains = builtin_domains(board or Board())
        if value in domains and not Path(value).exists():
            return domains[value]
        return load_domain(value)

    def _layout(self, args, domain, objects_as='ext'):
        negative = args.negative_goals
        if negative is None:
            negative = domain.name in VARIANTS and crasp_layout(get_variant(domain.name)).negative_goals
        return EncodingLayout(negative_goals=negative, objects_as=objects_as)

    def _values(self, args, objects):
        if not args.name_values:
            return None
        values = object_token_values(objects)
        if values is None:
            raise ValueError("--name-values needs objects named object_<int>")
        return values

    def _write_or_print(self, path, text):
        if path:
            write_text_atomic(path, text)
        else:
            sys.stdout.write(text)

    # Commands

    def cmd_verify(self, args):
        """Simulate the plan; exit 0 when valid, 1 otherwise"""
        domain = self._domain(args.domain)
        instance = load_instance(args.instance, domain)
        plan = load_plan(args.plan, domain)
        trace, verdict = simulate(instance, plan)

        result = verdict.to_dict()
        if args.trace:
            result['trace'] = [[str(p) for p in sorted(state)] for state in trace]
        if args.audit:
            # only the executed prefix of a non-executable plan is audited
            executed = plan[:verdict.step - 1] if verdict.status == 'non_executable' else plan
            result['domain_class'] = classify_domain(domain).to_dict()
            result['well_formed_violations'] = [v.to_dict() for v in audit_well_formed_trace(instance, executed)]
        emit(result)
        return EXIT_OK if verdict.status == 'valid' else EXIT_INVALID

    def cmd_run_crasp(self, args):
        """Run a program; exit 0 on accept, 1 on reject"""
        program = parse_crasp(read_text(args.program))
        tokens = parse_tokens(read_text(args.input))
        if args.dump_table:
            table = evaluate(program, tokens)
            sys.stdout.write(table.to_tsv())
            return EXIT_OK if table.accepted else EXIT_INVALID

        accepted = accepts(program, tokens)
        result = {'accepted': accepted, 'length': len(tokens)}
        if args.classify:
            result['program'] = program_summary(program)
        emit(result)
        return EXIT_OK if accepted else EXIT_INVALID

    def cmd_encode(self, args):
        domain = self._domain(args.domain)
        instance = load_instance(args.instance, domain)
        plan = load_plan(args.plan, domain)
        layout = self._layout(args, domain, args.objects_as)
        print(format_tokens(encode(instance, plan, layout, self._values(args, instance.objects))))
        return EXIT_OK

    def cmd_compile(self, args):
        """Compile and either print the program or write it and print the report"""
        domain = self._domain(args.domain)
        mode = args.mode
        if mode is None:
            mode = 'df' if classify_domain(domain).delete_free else 'wf'

        if args.universe == 'fixed':
            objects = self._fixed_universe(args, domain)
            layout = self._layout(args, domain, 'sigma')
            program, report = build_fixed(domain, objects, mode, layout, self._values(args, objects))
        else:
            program, report = build_variable(domain, mode, self._layout(args, domain))

        if args.explain is not None:
            emit({'line': args.explain, 'step': explain(program, report, args.explain)})
            return EXIT_OK
        text = serialize_crasp(program, report.provenance)
        if args.output:
            write_text_atomic(args.output, text)
            emit({**report.to_dict(), 'program': program_summary(program), 'output': args.output})
        else:
            sys.stdout.write(text)
        return EXIT_OK

    def _fixed_universe(self, args, domain):
        if args.objects:
            return tuple(args.objects)
        if args.instance:
            return load_instance(args.instance, domain).objects
        variant = VARIANTS.get(domain.name)
        if variant is not None and variant.family == 'lightsout':
            return variant.template(Board()).objects
        raise ValueError("a fixed universe needs --instance or --objects")

    def cmd_lower(self, args):
        program = parse_crasp(read_text(args.program))
        values = args.values if args.values is not None else args.max_value
        budget = args.budget if args.budget is not None else self.config.get('lowering_branch_budget')
        lowered = lower_match_to_finite(program, values, budget)
        text = serialize_crasp(lowered)
        if args.output:
            write_text_atomic(args.output, text)
            emit({**lowering_report(program, values, budget), 'lines': len(lowered), 'output': args.output})
        else:
            sys.stdout.write(text)
        return EXIT_OK

    def cmd_gen(self, args):
        """Write the splits and manifest; print the manifest without per-record detail"""
        config = GenConfig.from_settings(
            args.variant, self.config.get_all(),
            seed=args.seed,
            id_lengths=args.lengths,
            ood_lengths=args.ood_lengths,
            board=args.board,
            object_pool=args.object_pool,
            df_mix=args.df_mix,
            nonexecutable_share=args.nonexecutable_share,
        )
        unknown = [split for split in args.splits if split not in SPLITS]
        if unknown:
            raise ValueError(f"unknown split {unknown[0]!r} (choose from {', '.join(SPLITS)})")
        flags = {
            'variant': args.variant,
            'seed': args.seed,
            'count': args.count,
            'lengths': list(config.id_lengths),
            'ood_lengths': list(config.ood_lengths),
            'splits': args.splits,
            'board': f"{args.board.rows}x{args.board.cols}",
            'object_pool': args.object_pool,
            'df_mix': config.df_mix,
            'nonexecutable_share': config.nonexecutable_share,
        }
        manifest = build_splits(config, args.output, args.count, args.jobs, flags, args.splits)
        emit({'output': args.output, 'files': manifest['files'], 'stats': manifest['stats']})
        return EXIT_OK

    def cmd_stats(self, args):
        rows = []
        for path in args.files:
            for number, line in enumerate(read_text(path).splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise ParseError(f"{path}:{number}: not a JSON record ({e.msg})") from e
        emit(stats(rows))
        return EXIT_OK

    def cmd_check(self, args):
        """Run one theory check; exit 0 when it passes, 3 when it finds a counterexample"""
        settings = self.config
        jobs = args.jobs
        batch_size = settings.get('eval_batch_size')

        if args.check == 'flipflop':
            max_len = args.max_len if args.max_len is not None else 10
            if max_len > settings.get('flipflop_max_len'):
                raise ValueError(f"flipflop max length is capped at {settings.get('flipflop_max_len')}")
            reports = [check_flipflop(max_len, jobs)]
        elif args.check == 'parity':
            if args.samples is None:
                reports = [check_parity_reduction(
                    args.board or Board(2, 2),
                    args.max_len if args.max_len is not None else settings.get('parity_exhaustive_max_len'),
                    seed=args.seed, jobs=jobs,
                    max_inits=settings.get('parity_exhaustive_max_inits'),
                    exhaustive_max_cells=settings.get('parity_exhaustive_max_cells'),
                    exhaustive_max_len=settings.get('parity_exhaustive_max_len'))]
            else:
                reports = [check_parity_reduction(
                    args.board or Board(),
                    args.max_len if args.max_len is not None else settings.get('parity_random_max_len'),
                    samples=args.samples, seed=args.seed, jobs=jobs)]
        elif args.check == 'toggle':
            reports = [check_toggle_identity(args.board or Board(), args.samples or 1000, args.seed)]
        elif args.check == 'compiled':
            if args.variant is None:
                raise ValueError("the compiled check needs --variant")
            sweep = CompiledSweep(args.variant, args.fixed, args.seed, args.lengths, args.board or Board())
            trials = args.trials if args.trials is not None else settings.get('compiled_trials')
            reports = [check_compiled_variant(sweep, trials, jobs, batch_size)]
        elif args.check == 'lowering':
            max_len = args.max_len if args.max_len is not None else settings.get('lowering_max_len')
            budget = settings.get('lowering_branch_budget')
            if args.program:
                program = parse_crasp(read_text(args.program))
                reports = [check_lowering(program, args.values, max_len, jobs, budget, batch_size)]
            else:
                reports = lowering_suite(args.values, max_len, jobs, budget, batch_size)
        else:
            reports = [check_translation(args.samples or 1000, args.deltas, args.seed)]

        passed = all(report.passed for report in reports)
        if len(reports) == 1:
            emit(reports[0].to_dict())
        else:
            emit({'name': args.check, 'passed': passed, 'reports': [report.to_dict() for report in reports]})
        if not passed:
            self.logger.warning(f"check-theory {args.check} found a counterexample")
        return EXIT_OK if passed else EXIT_FAILURE

    def cmd_export_domains(self, args):
        """Every built-in domain as .pdom, Lights Out templates also as an all-off .pinst"""
        directory = Path(args.directory)
        written = []
        for name, domain in builtin_domains(args.board).items():
            path = directory / f"{name}.pdom"
            write_text_atomic(path, serialize_domain(domain))
            written.append(str(path))
            variant = VARIANTS.get(name)
            if variant is not None and variant.family == 'lightsout':
                path = directory / f"{name}.pinst"
                write_text_atomic(path, serialize_instance(variant.template(args.board).instance((), name)))
                written.append(str(path))
        emit({'written': written})
        return EXIT_OK

    def cmd_config(self, args):
        if args.action == 'show':
            emit(self.config.get_all())
        elif args.action == 'path':
            emit({'config': str(self.config.config_file), 'log': self.logger.get_log_file_path()})
        elif args.action == 'reset':
            self.config.reset_to_defaults()
            emit(self.config.get_all())
        else:
            if args.key is None or args.value is None:
                raise ValueError("config set needs KEY and VALUE")
            self.config.set(args.key, args.value)
            if self.config.validate_config():
                self.config.save_config()
            emit({args.key: self.config.get(args.key)})
        return EXIT_OK


def main(argv=None):
    """Main entry point"""
    return PlanLabCLI().run(argv)
