import argparse
import json
import logging
import os
import sys

import pandas as pd

from pyrsl.helpers import geometry
from pyrsl.helpers.instances import load_instance
from pyrsl.helpers.utils import SCHEMA, EnumerationTooLarge, InstanceError, RunConfig
from pyrsl.mains import expectation
from pyrsl.mains.suites import EXPERIMENTS, SUITES

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3

# columns that make an experiment row a pass/fail verdict
VERDICT_COLUMNS = ('pass', 'conv_pass', 'monotone')

# named worked cases of the extreme suite
EXAMPLES = {'8.5': 'circle', '8.6': 'split-step'}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='base seed for every generator')
    common.add_argument('--dirs', type=int, help='number of sampling directions (d >= 2)')
    common.add_argument('--tol-membership', type=float, dest='tol_membership')
    common.add_argument('--tol-set-eq', type=float, dest='tol_set_eq')
    common.add_argument('--grid', type=int, help='simplex lattice resolution')
    common.add_argument('--trials', type=int, help='random instances per suite')
    common.add_argument('--out', help='report path (JSON for expect/verify, CSV for experiment)')
    common.add_argument('--no-timing', action='store_const', const=False, dest='timing',
                        help='drop runtime columns so repeated runs are byte-identical')
    common.add_argument('--verbose', '-v', action='store_true')

    parser = argparse.ArgumentParser(prog='pyrsl', description='Random set lab: Aumann integrals, hull operators, barycenters.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('expect', parents=[common], help='expectation of a random set instance')
    p.add_argument('instance', help='instance JSON file')

    p = sub.add_parser('verify', parents=[common], help='run a verification suite')
    p.add_argument('suite', choices=sorted(SUITES))
    p.add_argument('--instance', choices=['random', 'split-step', 'circle'], help='instance for the extreme suite')
    p.add_argument('--example', choices=sorted(EXAMPLES), help='worked case for the extreme suite (8.5 circle, 8.6 split-step)')

    p = sub.add_parser('experiment', parents=[common], help='run an experiment series')
    p.add_argument('name', choices=sorted(EXPERIMENTS))
    p.add_argument('--n', type=int, nargs='+', dest='n_values', help='atom counts for the series')
    return parser


def config_from_args(args):
    keys = ('seed', 'dirs', 'tol_membership', 'tol_set_eq', 'grid', 'trials', 'out', 'timing', 'instance', 'n_values')
    settings = {k: getattr(args, k, None) for k in keys}
    if getattr(args, 'example', None):
        settings['instance'] = EXAMPLES[args.example]
    # an explicit --grid also sets the lattice of the hulls suite
    settings['suite_grid'] = args.grid
    return RunConfig(**settings)


def _report(command, config, body):
    settings = {k: v for k, v in config.as_dict().items() if k != 'out'}
    return {"schema": SCHEMA, "command": command, "config": settings, **body}


def _emit_json(report, out):
    text = json.dumps(report, indent=2, sort_keys=True)
    if out:
        with open(out, 'w') as f:
            f.write(text + '\n')
        logger.info(f"[cli] wrote {out}")
    else:
        print(text)


def cmd_expect(path, config):
    x = load_instance(path)
    dirs = geometry.direction_set(x.dim, config.dirs, config.seed)
    result = expectation.selection_expectation(x, dirs)
    body = {"result": result.to_json()}
    law = expectation.closed_form(x)
    if law is not None:
        body["closed_form"] = {
            "law": law["law"],
            "body": law["body"].to_json(),
            "gap": expectation.closed_form_gap(result, law, dirs),
        }
    _emit_json(_report('expect', config, body), config.out)
    if config.out:
        table = expectation.support_table(result, dirs)
        table.to_csv(os.path.splitext(config.out)[0] + '_support.csv', index=False)
        print(pd.DataFrame([{"method": result.method, "gap": result.hausdorff_gap, "dirs": result.dirs}]).to_string(index=False))
    return EXIT_OK


def cmd_verify(suite, config):
    entries = SUITES[suite](config)
    passed = all(e["pass"] for e in entries)
    if config.out:
        _emit_json(_report('verify', config, {"suite": suite, "entries": entries, "pass": passed}), config.out)
    print(pd.DataFrame(entries).to_string(index=False))
    return EXIT_OK if passed else EXIT_FAILED


def cmd_experiment(name, config):
    table = EXPERIMENTS[name](config)
    if config.out:
        table.to_csv(config.out, index=False)
        logger.info(f"[cli] wrote {config.out}")
    print(table.to_string(index=False))
    verdicts = [c for c in VERDICT_COLUMNS if c in table.columns]
    passed = all(bool(table[c].all()) for c in verdicts)
    return EXIT_OK if passed else EXIT_FAILED


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    config = config_from_args(args)
    try:
        if args.command == 'expect':
            return cmd_expect(args.instance, config)
        if args.command == 'verify':
            return cmd_verify(args.suite, config)
        return cmd_experiment(args.name, config)
    except InstanceError as e:
        logger.error(f"[cli] {e}")
        return EXIT_INPUT
    except EnumerationTooLarge as e:
        logger.error(f"[cli] {e}")
        return EXIT_GUARD
