import sys
import os
import argparse

# Add the project root to sys.path
project_root = os.path.abspath(os.path.dirname(__file__) + "/..")
sys.path.append(project_root)

from src.constants import VERSION
from src.errors import ConfigError, TargetMOError
from src.managers.experiment_manager import ExperimentManager, plotdata
from src.managers.experiment_settings import ExperimentSettings
from src.utils.helpers import Logger

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def build_parser():
    """Create the argument parser with the run, replicate and plotdata verbs."""
    parser = argparse.ArgumentParser(prog='targetmo', description="Preference-targeted Bayesian multi-objective optimization")
    parser.add_argument('--version', action='version', version=f"%(prog)s {VERSION}")
    verbs = parser.add_subparsers(dest='command', required=True)

    for name, help_text in (('run', "execute one run of a spec"),
                            ('replicate', "run a spec over derived seeds and tabulate the metrics")):
        verb = verbs.add_parser(name, help=help_text)
        verb.add_argument('--spec', required=True, help="JSON experiment spec")
        verb.add_argument('--out', help="output directory (overrides the spec)")
        verb.add_argument('--seed', type=int, help="base seed (overrides the spec)")
        verb.add_argument('--quiet', action='store_true', help="no console log")

    verb = verbs.add_parser('plotdata', help="write plot-ready CSVs for a finished run")
    verb.add_argument('run_dir', nargs='?', help="output directory of a run")
    verb.add_argument('--out', dest='out', help="output directory of a run")
    verb.add_argument('--quiet', action='store_true', help="no console log")
    return parser


def _experiment(args):
    settings = ExperimentSettings(args.spec)
    spec = settings.load(seed=args.seed, output_dir=args.out)
    output_dir = spec.output_dir or os.path.join('outputs', spec.run.label or 'run')
    os.makedirs(output_dir, exist_ok=True)
    logger = Logger(stream=None if args.quiet else sys.stdout, log_dir=output_dir)
    return ExperimentManager(spec, output_dir, logger, settings), logger


def main(argv=None) -> int:
    """Parse arguments, dispatch the verb and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    logger = None
    try:
        if args.command == 'plotdata':
            run_dir = args.run_dir or args.out
            if not run_dir:
                raise ConfigError("plotdata needs a run directory")
            logger = Logger(stream=None if args.quiet else sys.stdout)
            plotdata(run_dir, logger=logger)
        else:
            manager, logger = _experiment(args)
            if args.command == 'run':
                manager.run()
            else:
                manager.replicate()
        return EXIT_OK
    except ConfigError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except TargetMOError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        print(f"Unexpected error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        if logger:
            logger.close()


def run_app():
    sys.exit(main())


if __name__ == "__main__":
    run_app()
