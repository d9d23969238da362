# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""Command-line front end: `quantchar <subcommand> ...`.

Library subcommands print JSON (or CSV for the reconstruction ones) on
stdout.  Experiment subcommands write a CSV report plus a JSON sidecar and
exit with code 2 when one of their internal assertions fails.
"""

import argparse
import csv
import json
import logging
import os
import sys
import textwrap

import numpy as np

from . import characterization, experiments, geometry, measures, metrics, quanterror
from .config import DEFAULT_CONFIG_FNAME, load_experiment_config
from .errors import QuantcharError


logger = logging.getLogger(__name__)

PROG = "quantchar"
EXIT_ASSERTION_FAILED = 2


def die(msg):
    print("%s: %s\nAborted." % (PROG, msg), file=sys.stderr)
    sys.exit(1)


##
## Argument parsing helpers
##

def parse_floats(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError("not a list of numbers: %r" % (text,))


def parse_ints(text):
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError("not a list of integers: %r" % (text,))


def parse_points(text, dimension):
    """"0.25,0.75" is two points on the line; "0,1;1,0" two points of R^2."""
    if dimension == 1:
        return np.array(parse_floats(text))[:, None]
    points = [parse_floats(chunk) for chunk in text.split(";") if chunk.strip()]
    if any(len(p) != dimension for p in points):
        raise QuantcharError("every point needs %d coordinates: %r" % (dimension, text))
    return np.array(points)


def parse_norm(text):
    try:
        return geometry.NormSpec.parse(text)
    except ValueError:
        raise argparse.ArgumentTypeError("not a norm exponent: %r" % (text,))


def parse_args(argv=None):
    parser = argparse.ArgumentParser(prog=PROG,
            formatter_class=argparse.RawDescriptionHelpFormatter,
            description=textwrap.dedent("""\
                L^p quantization error functions as characterization tools.

                usage examples:
                  quantchar qerr --measure m.json --grid 0.25,0.75 --p 2
                  quantchar counterexample --N 2 --n-max 8 --out rows.csv"""))
    parser.add_argument("--config", dest="config", default=None, metavar="FILE",
            help="experiment config file (default: %s if present)" % DEFAULT_CONFIG_FNAME)
    parser.add_argument("-v", "--verbose", dest="verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("qerr", help="evaluate e_{N,p}(mu, grid)")
    p.add_argument("--measure", required=True, metavar="FILE")
    p.add_argument("--grid", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--norm", type=parse_norm, default=geometry.EUCLIDEAN)
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("lloyd", help="Lloyd iteration for the quadratic quantizer")
    p.add_argument("--measure", required=True, metavar="FILE")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pool-size", dest="pool_size", type=int, default=100000)

    p = sub.add_parser("qdist", help="lower bound on the quantization distance Q_{N,p}")
    p.add_argument("--mu", required=True, metavar="FILE")
    p.add_argument("--nu", required=True, metavar="FILE")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--norm", type=parse_norm, default=geometry.EUCLIDEAN)
    p.add_argument("--box", type=parse_floats, default=None, metavar="LO,HI")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=100000)

    p = sub.add_parser("wasserstein", help="W_p between two measures")
    p.add_argument("--mu", required=True, metavar="FILE")
    p.add_argument("--nu", required=True, metavar="FILE")
    p.add_argument("--p", type=float, default=1.0)

    p = sub.add_parser("covering", help="sphere covering certificate")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--r", type=parse_norm, default=geometry.EUCLIDEAN)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("mollify", help="mollified density from e_{N,p}")
    p.add_argument("--measure", required=True, metavar="FILE")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--xs", required=True)
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=200000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("cdf-extract", help="CDF from e_{1,1}")
    p.add_argument("--measure", required=True, metavar="FILE")
    p.add_argument("--xs", type=parse_floats, required=True)
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=200000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("counterexample", help="Q-Cauchy sequence without a W_2 limit")
    p.add_argument("--N", dest="N", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--grid-budget", dest="grid_budget", type=int, default=None)
    p.add_argument("--half-width", dest="half_width", type=float, default=None)
    p.add_argument("--pitch", type=float, default=None)
    _add_report_arguments(p)

    p = sub.add_parser("grid-law", help="empirical law of Lloyd grids against its limit")
    p.add_argument("--family", default=None, choices=sorted(experiments.GRID_LAW_FAMILIES))
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--Ns", dest="N_list", type=parse_ints, default=None)
    p.add_argument("--lloyd-iters", dest="lloyd_iters", type=int, default=None)
    p.add_argument("--pool-size", dest="pool_size", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None)
    _add_report_arguments(p)

    p = sub.add_parser("equivalence", help="lattice sup of e-differences against W_p")
    p.add_argument("--family", default=None, choices=sorted(experiments.EQUIVALENCE_FAMILIES))
    p.add_argument("--N", dest="N", type=int, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--ns", dest="n_list", type=parse_ints, default=None)
    p.add_argument("--half-width", dest="half_width", type=float, default=None)
    p.add_argument("--pitch", type=float, default=None)
    _add_report_arguments(p)

    return parser.parse_args(argv)


def _add_report_arguments(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", dest="out", default=None, metavar="CSV")


##
## Subcommands
##

def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _print_csv(header, rows):
    writer = csv.writer(sys.stdout)
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def cmd_qerr(args):
    mu = measures.load_measure(args.measure)
    grid = geometry.Grid(parse_points(args.grid, mu.dimension))
    q = quanterror.QErrorQuery(mu, grid, args.p, args.norm)
    _print_json(quanterror.evaluate_qerr(q, args.mc_samples, args.seed).to_dict())


def cmd_lloyd(args):
    mu = measures.load_measure(args.measure)
    result = quanterror.lloyd(mu, args.n, args.iters, seed=args.seed, pool_size=args.pool_size)
    _print_json({"grid": result.grid.tolist(), "distortion": result.distortion})


def cmd_qdist(args):
    mu, nu = measures.load_measure(args.mu), measures.load_measure(args.nu)
    box = None
    if args.box is not None:
        if len(args.box) != 2:
            raise QuantcharError("--box takes two numbers LO,HI, got %r" % (args.box,))
        box = (args.box[0], args.box[1])
    report = metrics.qdist(mu, nu, args.n, args.p, args.norm, box, args.restarts, args.seed,
            mc_samples=args.mc_samples)
    _print_json(report.to_dict())


def cmd_wasserstein(args):
    mu, nu = measures.load_measure(args.mu), measures.load_measure(args.nu)
    if mu.dimension == 1 and nu.dimension == 1:
        print(repr(metrics.wasserstein_1d(mu, nu, args.p)))
        return
    for m in (mu, nu):
        if not isinstance(m, measures.DiscreteMeasure) or not np.allclose(m.weights, m.weights[0]):
            raise QuantcharError("W_p in d > 1 needs two uniform discrete measures")
    print(repr(metrics.wasserstein_assignment(mu.atoms, nu.atoms, args.p)))


def cmd_covering(args):
    grid = geometry.covering_grid(args.dim, args.r)
    _print_json(geometry.verify_covering(grid, args.r, args.samples, args.seed).to_dict())


def cmd_mollify(args):
    mu = measures.load_measure(args.measure)
    spec = characterization.make_mollifier(mu.dimension, args.p, epsilon=args.eps,
            seed=args.seed)
    handle = characterization.EFunctionHandle.for_measure(mu, args.p,
            mc_samples=args.mc_samples, seed=args.seed, level=spec.level)
    xs = parse_points(args.xs, mu.dimension)
    _print_csv(["x", "density_estimate"],
            [(_format_point(x), characterization.mollified_density(handle, spec, x)) for x in xs])


def cmd_cdf_extract(args):
    mu = measures.load_measure(args.measure)
    handle = characterization.EFunctionHandle.for_measure(mu, 1, mc_samples=args.mc_samples,
            seed=args.seed)
    _print_csv(["x", "F_estimate"],
            [(x, characterization.cdf_from_e11(handle, x)) for x in args.xs])


def _format_point(x):
    return float(x[0]) if x.shape[0] == 1 else " ".join(repr(float(v)) for v in x)


EXPERIMENT_OPTIONS = {
    "counterexample": ("N", "n_max", "grid_budget", "half_width", "pitch"),
    "grid_law": ("family", "p", "N_list", "lloyd_iters", "pool_size", "replicates"),
    "equivalence": ("family", "N", "p", "n_list", "half_width", "pitch"),
}


def cmd_experiment(args):
    experiment = args.command.replace("-", "_")
    overrides = {name: getattr(args, name) for name in EXPERIMENT_OPTIONS[experiment]}
    if args.config is not None:
        if not os.path.exists(args.config):
            die("config file not found: %s" % args.config)
        filenames = [args.config]
    else:
        filenames = [DEFAULT_CONFIG_FNAME] if os.path.exists(DEFAULT_CONFIG_FNAME) else []
    config = load_experiment_config(experiment, filenames, overrides, args.seed, args.out)
    rows, failures = experiments.run_experiment(config)
    experiments.write_report(rows, config.output_path, config, failures)
    if failures:
        print("%s: %d assertion(s) failed, see %s.json" % (PROG, len(failures),
                config.output_path), file=sys.stderr)
        return EXIT_ASSERTION_FAILED
    return 0


COMMANDS = {
    "qerr": cmd_qerr,
    "lloyd": cmd_lloyd,
    "qdist": cmd_qdist,
    "wasserstein": cmd_wasserstein,
    "covering": cmd_covering,
    "mollify": cmd_mollify,
    "cdf-extract": cmd_cdf_extract,
    "counterexample": cmd_experiment,
    "grid-law": cmd_experiment,
    "equivalence": cmd_experiment,
}


def main(argv=None):
    args = parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args) or 0
    except (QuantcharError, OSError, ValueError, KeyError) as e:
        die(str(e))


if __name__ == "__main__":
    sys.exit(main())
