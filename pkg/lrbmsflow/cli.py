import argparse
import json
import logging
import os
import sys
import time

import numpy

from lrbmsflow.BasisConstruction import BasisConstruction, sample_training_set
from lrbmsflow.CoarseGrid import CoarseGrid
from lrbmsflow.FaceFluxField import mass_loss
from lrbmsflow.MobilityBasis import profiles_from_tof
from lrbmsflow.ReducedModel import ReducedModel, problem_checksum
from lrbmsflow.Scenario import parse_scenario
from lrbmsflow.TimeIntegration import (PHASES, TimeIntegration, Trajectory, TwoPhaseProblem, build_mobility_basis,
                                       compare_runs, run_high_dim, run_lrbms, snapshot_steps)
from lrbmsflow.TimeOfFlight import solve_tof
from lrbmsflow.exceptions import ConfigurationError, FieldIOError, NumericalError
from lrbmsflow.vtk_utils import emit_vtk

logger = logging.getLogger(__name__)

EXIT_CONFIGURATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

THREAD_VARIABLES = ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS')


def _coarse_size(text):
    try:
        Nx, Ny = (int(v) for v in text.lower().split('x'))
    except ValueError:
        raise argparse.ArgumentTypeError('Expected a coarse grid as NxxNy, e.g. 16x2, got %s' % text) from None
    return Nx, Ny


def _write_json(data, path):
    try:
        with open(path, 'w') as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write('\n')
    except OSError as e:
        raise FieldIOError('Could not write %s: %s' % (path, e)) from e


def _output_directory(scenario, override=None):
    directory = override or scenario.output.directory
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise FieldIOError('Could not create the output directory %s: %s' % (directory, e)) from e
    return directory


def vtk_writer(directory, prefix, every, q1=0.0):
    '''Postprocess hook writing the state every so many steps.'''
    def postprocess(problem, state, n):
        if not every or n % every:
            return

        p, u, s = state
        fields = {'saturation': s}
        if p is not None:
            fields['pressure'] = p
            fields['velocity'] = numpy.linalg.norm(u.center_velocity(), axis=1)
            fields['mass_loss'] = mass_loss(u, q1)

        emit_vtk(fields, problem.grid, os.path.join(directory, '%s_%05d.vtk' % (prefix, n)),
                 title='%s step %d' % (prefix, n))

    return postprocess


def _parameters(args, scenario):
    parameters = scenario.parameters()
    parameters['Verbose'] = args.verbose > 0
    return parameters


def _run_parameters(args, scenario, directory, prefix):
    parameters = _parameters(args, scenario)
    parameters['Postprocess'] = vtk_writer(directory, prefix, parameters['Output Frequency'], scenario.sources.q1)
    return parameters


def _profile_parameters(parameters, scenario):
    '''Also keep the steps snapshot profiles are taken from.'''
    parameters = dict(parameters)
    parameters['Store Steps'] = snapshot_steps(scenario.time.N_T, scenario.rom.M)
    return parameters


def _load_model(path, problem, coarse_grid):
    if not path or not os.path.exists(path):
        raise ConfigurationError('Reduced model %s does not exist, run offline first' % path)

    return ReducedModel.load(path, problem.grid, problem_checksum(problem.discretization, coarse_grid))


def _scenario_coarse(scenario, problem):
    return CoarseGrid(problem.grid, scenario.geometry.coarse_nx, scenario.geometry.coarse_ny)


def offline_models(scenario, problem, coarse_sizes, trajectory=None, parameters=None):
    '''Build one reduced model per coarse grid from the same mobility
    profiles and training set. Returns the models and their reports.'''
    rom = scenario.rom
    parameters = parameters if parameters is not None else scenario.parameters()

    start = time.perf_counter()
    mobility = build_mobility_basis(problem, rom.M, rom.profile_mode, trajectory, parameters)
    profile_time = time.perf_counter() - start

    training_set = sample_training_set(rom.M, rom.training_count, rom.seed)

    models = []
    for Nx, Ny in coarse_sizes:
        coarse = CoarseGrid(problem.grid, Nx, Ny)
        model = BasisConstruction(problem.discretization, mobility, coarse, parameters).build(training_set)
        model.report['timings']['profiles'] = profile_time
        models.append(model)

    return models


def command_run_hd(args, scenario):
    problem = TwoPhaseProblem.from_scenario(scenario)
    directory = _output_directory(scenario, args.output_dir)
    trajectory = run_high_dim(problem, _run_parameters(args, scenario, directory, 'hd'))
    trajectory.save(args.output or os.path.join(directory, 'hd.npz'))


def command_offline(args, scenario):
    problem = TwoPhaseProblem.from_scenario(scenario)
    coarse_sizes = args.coarse or [(scenario.geometry.coarse_nx, scenario.geometry.coarse_ny)]

    trajectory = None
    if scenario.rom.profile_mode == 'snapshots':
        if args.trajectory:
            trajectory = Trajectory.load(args.trajectory, problem.grid)
        else:
            trajectory = run_high_dim(problem, _profile_parameters(_parameters(args, scenario), scenario))

    models = offline_models(scenario, problem, coarse_sizes, trajectory, _parameters(args, scenario))

    root, ext = os.path.splitext(args.output)
    reports = []
    for model in models:
        path = args.output
        if len(models) > 1:
            path = '%s_%dx%d%s' % (root, model.coarse.Nx, model.coarse.Ny, ext or '.npz')
        model.save(path)
        reports.append(dict(model.report, model=path))

    _write_json({'profile_mode': scenario.rom.profile_mode, 'M': scenario.rom.M,
                 'training_count': scenario.rom.training_count, 'models': reports},
                args.report or root + '_report.json')

    for report in reports:
        logger.info('Coarse grid %dx%d: %d snapshots, N=%d', *report['coarse'], report['snapshots'], report['N'])


def command_run_rb(args, scenario):
    problem = TwoPhaseProblem.from_scenario(scenario)
    model = _load_model(args.model, problem, _scenario_coarse(scenario, problem))
    directory = _output_directory(scenario, args.output_dir)
    trajectory = run_lrbms(problem, model, _run_parameters(args, scenario, directory, 'rb'))
    trajectory.save(args.output or os.path.join(directory, 'rb.npz'))


def command_compare(args, scenario):
    reference = Trajectory.load(args.reference)
    other = Trajectory.load(args.other, reference.grid)
    q1 = scenario.sources.q1 if scenario is not None else 0.0

    metrics = compare_runs(reference, other, q1)
    metrics.write_csv(args.output)
    print(json.dumps(metrics.summary(), indent=2, sort_keys=True))


def command_tof(args, scenario):
    problem = TwoPhaseProblem.from_scenario(scenario)
    directory = _output_directory(scenario, args.output_dir)

    integration = TimeIntegration(problem, _parameters(args, scenario))
    _, u = integration.high_dim_pressure(problem.initial_saturation(), dict.fromkeys(PHASES, 0.0))
    tof = solve_tof(u, problem.phi, problem.degree)
    fluids = problem.fluids
    mobility = profiles_from_tof(tof, scenario.rom.M, problem.T, fluids.mu_w, fluids.mu_n, problem.degree)

    fields = {'tof': tof}
    for q in range(mobility.M):
        fields['total_mobility_%d' % q] = mobility.profile(q)[2]

    emit_vtk(fields, problem.grid, args.output or os.path.join(directory, 'tof.vtk'), title='time of flight')


def command_bench(args, scenario):
    '''High-dimensional run, offline phase and reduced run of one scenario,
    followed by the comparison report.'''
    problem = TwoPhaseProblem.from_scenario(scenario)
    directory = _output_directory(scenario, args.output_dir)

    start = time.perf_counter()
    parameters = _parameters(args, scenario)
    reference = run_high_dim(problem, _profile_parameters(parameters, scenario))
    hd_time = time.perf_counter() - start
    reference.save(os.path.join(directory, 'hd.npz'))

    start = time.perf_counter()
    coarse = (scenario.geometry.coarse_nx, scenario.geometry.coarse_ny)
    model, = offline_models(scenario, problem, [coarse], reference, parameters)
    offline_time = time.perf_counter() - start
    model.save(os.path.join(directory, 'model.npz'))

    start = time.perf_counter()
    reduced = run_lrbms(problem, model, parameters)
    rb_time = time.perf_counter() - start
    reduced.save(os.path.join(directory, 'rb.npz'))

    metrics = compare_runs(reference, reduced, scenario.sources.q1)
    metrics.write_csv(os.path.join(directory, 'metrics.csv'))

    hd_pressure = reference.timings['assembly'] + reference.timings['pressure']
    rb_pressure = reduced.timings['fit'] + reduced.timings['pressure']
    report = {
        'discrepancies': metrics.summary(),
        'offline': model.report,
        'runtime': {'high_dim': hd_time, 'offline': offline_time, 'reduced': rb_time},
        'pressure_speedup': hd_pressure / rb_pressure if rb_pressure > 0 else None,
    }
    _write_json(report, os.path.join(directory, 'bench.json'))
    print(json.dumps(report['discrepancies']['mean'], indent=2, sort_keys=True))


COMMANDS = {
    'run-hd': command_run_hd,
    'offline': command_offline,
    'run-rb': command_run_rb,
    'compare': command_compare,
    'tof': command_tof,
    'bench': command_bench,
}


def build_parser():
    parser = argparse.ArgumentParser(prog='lrbmsflow',
                                     description='Two-phase porous media flow with localized reduced bases')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='More output, repeat for debug output')
    parser.add_argument('-q', '--quiet', action='store_true', help='Only report warnings and errors')
    parser.add_argument('--threads', type=int, default=None,
                        help='Number of BLAS threads, defaults to $LRBMSFLOW_THREADS or 1')

    subparsers = parser.add_subparsers(dest='command', required=True)

    p = subparsers.add_parser('run-hd', help='High-dimensional simulation')
    p.add_argument('scenario')
    p.add_argument('-o', '--output', help='Trajectory file')
    p.add_argument('--output-dir', help='Directory for VTK files and the trajectory')

    p = subparsers.add_parser('offline', help='Build reduced models')
    p.add_argument('scenario')
    p.add_argument('-o', '--output', required=True, help='Reduced model file')
    p.add_argument('--coarse', type=_coarse_size, nargs='+', help='Coarse grids as NxxNy, one model each')
    p.add_argument('--report', help='Offline report file')
    p.add_argument('--trajectory', help='High-dimensional trajectory for snapshot profiles')

    p = subparsers.add_parser('run-rb', help='Reduced simulation')
    p.add_argument('scenario')
    p.add_argument('-m', '--model', required=True, help='Reduced model file')
    p.add_argument('-o', '--output', help='Trajectory file')
    p.add_argument('--output-dir', help='Directory for VTK files and the trajectory')

    p = subparsers.add_parser('compare', help='Discrepancies between two trajectories')
    p.add_argument('reference')
    p.add_argument('other')
    p.add_argument('-o', '--output', default='metrics.csv', help='Metrics file')
    p.add_argument('--scenario', help='Scenario providing the source term')

    p = subparsers.add_parser('tof', help='Time-of-flight and mobility profiles')
    p.add_argument('scenario')
    p.add_argument('-o', '--output', help='VTK file')
    p.add_argument('--output-dir', help='Output directory')

    p = subparsers.add_parser('bench', help='High-dimensional, offline and reduced run with comparison')
    p.add_argument('scenario')
    p.add_argument('--output-dir', help='Output directory')

    return parser


def _restart_with_threads(threads, argv):
    # BLAS reads the thread count when numpy is imported
    env = dict(os.environ, LRBMSFLOW_THREADS=str(threads))
    env.update((var, str(threads)) for var in THREAD_VARIABLES)
    os.execve(sys.executable, [sys.executable, '-m', 'lrbmsflow.cli'] + argv, env)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)

    if args.threads is not None and os.environ.get('OMP_NUM_THREADS') != str(args.threads):
        _restart_with_threads(args.threads, argv)

    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        scenario = None
        path = getattr(args, 'scenario', None)
        if path:
            scenario = parse_scenario(path)

        COMMANDS[args.command](args, scenario)
    except ConfigurationError as e:
        logger.error('%s', e)
        return EXIT_CONFIGURATION
    except NumericalError as e:
        logger.error('%s', e)
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error('%s', e)
        return EXIT_IO

    return 0


if __name__ == '__main__':
    sys.exit(main())
