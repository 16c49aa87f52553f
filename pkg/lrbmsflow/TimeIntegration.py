import json
import logging
import time

import numpy

from lrbmsflow.DgField import DgField
from lrbmsflow.FaceFluxField import (FaceFluxField, mass_loss, reconstruct_velocity,
                                     reconstruct_velocity_from_mobilities)
from lrbmsflow.FineGrid import FineGrid
from lrbmsflow.MobilityBasis import (fit_theta, linear_mobilities, parametrized_mobilities, profiles_from_snapshots,
                                     profiles_from_tof)
from lrbmsflow.PressureDiscretization import PressureDiscretization
from lrbmsflow.ReducedModel import problem_checksum
from lrbmsflow.SaturationTransport import (SaturationTransport, initial_saturation, limit, saturation_step,
                                           wetting_mass)
from lrbmsflow.TimeOfFlight import solve_tof
from lrbmsflow.exceptions import ConfigurationError, FieldIOError, NumericalError
from lrbmsflow.fields import generate_fields
from lrbmsflow.utils import create_cell_mtx, relative_discrepancy

logger = logging.getLogger(__name__)

PHASES = ('assembly', 'pressure', 'velocity', 'transport', 'limiter', 'fit')


class TwoPhaseProblem:
    '''Discretized displacement problem: grid, fields, the pressure and
    saturation discretizations and the time stepping data.'''

    def __init__(self, grid, K, phi, fluids, T, N_T, gravity=(0.0, 0.0), q1=0.0, q2=0.0, s0=0.0,
                 degree=1, c_base=30.0):
        if N_T < 1 or not T > 0:
            raise ConfigurationError('Invalid time interval T=%g with N_T=%d steps' % (T, N_T))

        self.grid = grid
        self.K = numpy.asarray(K, dtype=float)
        self.phi = numpy.asarray(phi, dtype=float)
        self.fluids = fluids
        self.T = T
        self.N_T = N_T
        self.dt = T / N_T
        self.q1 = q1
        self.s0 = s0
        self.degree = degree

        self.discretization = PressureDiscretization(grid, K, fluids, degree, c_base, q1, gravity)
        self.transport = SaturationTransport(self.discretization, phi, self.dt, q2)

    @classmethod
    def from_scenario(cls, scenario):
        g = scenario.geometry
        grid = FineGrid(g.Lx, g.Ly, g.nx, g.ny, scenario.boundary.as_dict())
        K, phi = generate_fields(scenario.fields, grid)
        return cls(grid, K, phi, scenario.fluids, scenario.time.T, scenario.time.N_T, scenario.gravity,
                   scenario.sources.q1, scenario.sources.q2, scenario.time.initial_saturation,
                   scenario.dg.degree, scenario.dg.c_base)

    def initial_saturation(self):
        return initial_saturation(self.grid, self.s0, self.degree)

    def mobilities(self, s):
        return linear_mobilities(s, self.fluids.mu_w, self.fluids.mu_n)


def front_position(s):
    '''Largest x-coordinate of a cell center with a mean saturation of at
    least 0.5, or 0 if there is none.'''
    columns = numpy.flatnonzero(create_cell_mtx(s.means >= 0.5, s.grid).any(axis=1))
    if len(columns) == 0:
        return 0.0

    return float((columns[-1] + 0.5) * s.grid.hx)


class Trajectory:
    '''States (p^n, u^n, s^n) of a run at the stored steps n >= 1 and the
    initial saturation s^0, together with timings and monitoring data.'''

    def __init__(self, grid, degree, initial):
        self.grid = grid
        self.degree = degree
        self.initial = initial
        self.steps = []
        self.pressures = []
        self.velocities = []
        self.saturations = []
        self.timings = dict.fromkeys(PHASES, 0.0)
        self.diagnostics = {'front': [], 'mass': [], 'injected': [], 'cfl': []}

    def append(self, n, p, u, s):
        self.steps.append(n)
        self.pressures.append(p)
        self.velocities.append(u)
        self.saturations.append(s)

    def saturation(self, n):
        if n == 0:
            return self.initial

        try:
            return self.saturations[self.steps.index(n)]
        except ValueError:
            raise ConfigurationError('Step %d was not stored' % n) from None

    def save(self, path):
        data = {
            'grid': numpy.array([self.grid.Lx, self.grid.Ly, self.grid.nx, self.grid.ny]),
            'boundary': numpy.array(json.dumps(self.grid.boundary, sort_keys=True)),
            'degree': numpy.array(self.degree),
            'initial': self.initial.vector,
            'steps': numpy.array(self.steps, dtype=int),
            'pressures': numpy.array([p.vector for p in self.pressures]),
            'velocities': numpy.array([u.values for u in self.velocities]),
            'saturations': numpy.array([s.vector for s in self.saturations]),
            'timings': numpy.array(json.dumps(self.timings, sort_keys=True)),
            'diagnostics': numpy.array(json.dumps(self.diagnostics, sort_keys=True)),
        }
        try:
            with open(path, 'wb') as f:
                numpy.savez_compressed(f, **data)
        except OSError as e:
            raise FieldIOError('Could not write trajectory %s: %s' % (path, e)) from e

    @classmethod
    def load(cls, path, grid=None):
        '''Read a trajectory, rebuilding the grid from the stored geometry if
        none is given.'''
        try:
            with numpy.load(path) as f:
                data = {key: f[key] for key in f.files}
        except (OSError, ValueError) as e:
            raise FieldIOError('Could not read trajectory %s: %s' % (path, e)) from e

        if grid is None:
            Lx, Ly, nx, ny = data['grid']
            grid = FineGrid(Lx, Ly, int(nx), int(ny), json.loads(str(data['boundary'])))

        degree = int(data['degree'])
        trajectory = cls(grid, degree, DgField(grid, data['initial'], degree))
        for n, p, u, s in zip(data['steps'], data['pressures'], data['velocities'], data['saturations']):
            trajectory.append(int(n), DgField(grid, p, degree), FaceFluxField(grid, u), DgField(grid, s, degree))

        trajectory.timings = json.loads(str(data['timings']))
        trajectory.diagnostics = json.loads(str(data['diagnostics']))
        return trajectory


class RunMetrics:
    '''Per step discrepancies between a reference and a second run, the
    relative mass loss of the second run and its timings.'''

    COLUMNS = ('e_L2_s', 'e_H1_s', 'e_L2_p', 'e_H1_p')

    def __init__(self, steps, e_L2_s, e_H1_s, e_L2_p, e_H1_p, mass_loss=None, timings=None):
        self.steps = numpy.asarray(steps, dtype=int)
        self.e_L2_s = numpy.asarray(e_L2_s, dtype=float)
        self.e_H1_s = numpy.asarray(e_H1_s, dtype=float)
        self.e_L2_p = numpy.asarray(e_L2_p, dtype=float)
        self.e_H1_p = numpy.asarray(e_H1_p, dtype=float)
        self.mass_loss = mass_loss if mass_loss is not None else []
        self.timings = timings if timings is not None else {}

    def column(self, name):
        return getattr(self, name)

    def means(self):
        return {name: float(numpy.mean(self.column(name))) for name in self.COLUMNS}

    def end(self):
        return {name: float(self.column(name)[-1]) for name in self.COLUMNS}

    def max_mass_loss(self):
        return float(max((z.max() for z in self.mass_loss), default=0.0))

    def summary(self):
        return {'mean': self.means(), 'end': self.end(), 'max_mass_loss': self.max_mass_loss(),
                'timings': self.timings}

    def write_csv(self, path):
        try:
            with open(path, 'w') as f:
                f.write('step,' + ','.join(self.COLUMNS) + '\n')
                for k, n in enumerate(self.steps):
                    f.write('%d,' % n + ','.join('%.17g' % self.column(name)[k] for name in self.COLUMNS) + '\n')
        except OSError as e:
            raise FieldIOError('Could not write metrics %s: %s' % (path, e)) from e


class TimeIntegration:
    '''Sequential pressure, velocity and saturation time stepping.

    Without a reduced model every step solves the fine pressure equation
    with the mobilities of the current saturation. With a reduced model the
    mobility coefficients are fitted to the current saturation, the reduced
    pressure is reconstructed on the fine grid and the saturation is still
    transported on the fine grid.

    Parameters
    ----------
    problem : TwoPhaseProblem
    parameters : dict
        'Linear Solver', 'Convergence Tolerance', 'Maximum Iterations',
        'Reduced Solver', 'Velocity Mobility', 'Store Frequency', 'Store
        Steps', 'Verbose' and 'Postprocess', a callable taking the problem,
        the state (p, u, s) and the step.

    '''

    def __init__(self, problem, parameters=None):
        self.problem = problem
        self.parameters = parameters if parameters is not None else {}

    def postprocess(self, state, n):
        if 'Postprocess' in self.parameters and self.parameters['Postprocess']:
            self.parameters['Postprocess'](self.problem, state, n)

    def high_dim_pressure(self, s, timings):
        problem = self.problem
        d = problem.discretization

        start = time.perf_counter()
        lambda_w, lambda_n, lambda_t = problem.mobilities(s)
        A = d.assemble_bilinear(lambda_t)
        b = d.assemble_rhs(lambda_w, lambda_n)
        timings['assembly'] += time.perf_counter() - start

        start = time.perf_counter()
        p = d.solve_system(A, b, self.parameters.get('Linear Solver', 'cg'),
                           self.parameters.get('Convergence Tolerance', 1e-10),
                           self.parameters.get('Maximum Iterations', None))
        timings['pressure'] += time.perf_counter() - start

        start = time.perf_counter()
        u = reconstruct_velocity_from_mobilities(d, p, lambda_w, lambda_n)
        timings['velocity'] += time.perf_counter() - start
        return p, u

    def reduced_pressure(self, s, model, timings):
        d = self.problem.discretization

        start = time.perf_counter()
        theta = fit_theta(s, model.mobility)
        timings['fit'] += time.perf_counter() - start

        start = time.perf_counter()
        p = model.reconstruct(model.reduced_solve(theta, self.parameters.get('Reduced Solver', 'cholesky')))
        timings['pressure'] += time.perf_counter() - start

        start = time.perf_counter()
        if self.parameters.get('Velocity Mobility', 'saturation') == 'parametrized':
            lambda_w, lambda_n, _ = parametrized_mobilities(theta, model.mobility)
            u = reconstruct_velocity_from_mobilities(d, p, lambda_w, lambda_n)
        else:
            u = reconstruct_velocity(d, p, s)
        timings['velocity'] += time.perf_counter() - start

        if self.parameters.get('Verbose', False):
            logger.debug('Mobility fit residual %e', model.mobility.residual(self.problem.mobilities(s)[2], theta))

        return p, u

    def _stored(self, n):
        every = self.parameters.get('Store Frequency', 1)
        return (every and n % every == 0) or n == self.problem.N_T or n in self.parameters.get('Store Steps', ())

    def integration(self, model=None):
        problem = self.problem
        transport = problem.transport

        if model is not None:
            expected = problem_checksum(problem.discretization, model.coarse)
            if model.checksum != expected:
                raise ConfigurationError('The reduced model was built for a different problem')

        s = problem.initial_saturation()
        trajectory = Trajectory(problem.grid, problem.degree, s)
        timings = trajectory.timings
        injected = 0.0
        cfl_warned = False

        self.postprocess((None, None, s), 0)

        for n in range(1, problem.N_T + 1):
            try:
                if model is None:
                    p, u = self.high_dim_pressure(s, timings)
                else:
                    p, u = self.reduced_pressure(s, model, timings)

                cfl = transport.cfl_number(u)
                if cfl > 1 and not cfl_warned:
                    logger.warning('CFL number %.3g exceeds one at step %d, consider more time steps', cfl, n)
                    cfl_warned = True

                start = time.perf_counter()
                injected += problem.dt * (transport.boundary_inflow(s, u)
                                          + numpy.sum(transport.q2 * problem.grid.cell_area))
                s = saturation_step(s, u, transport)
                timings['transport'] += time.perf_counter() - start

                start = time.perf_counter()
                if s.degree > 0:
                    s = limit(s, u)
                timings['limiter'] += time.perf_counter() - start
            except NumericalError as e:
                e.step = n
                e.args = ('Time step %d failed: %s' % (n, e),) + e.args[1:]
                raise

            diagnostics = trajectory.diagnostics
            diagnostics['front'].append(front_position(s))
            diagnostics['mass'].append(wetting_mass(s, problem.phi))
            diagnostics['injected'].append(injected)
            diagnostics['cfl'].append(cfl)

            if self._stored(n):
                trajectory.append(n, p, u, s)

            logger.debug('t = %f', n * problem.dt)
            self.postprocess((p, u, s), n)

        logger.info('Finished %d time steps, front at x = %g', problem.N_T, trajectory.diagnostics['front'][-1])
        return trajectory


def run_high_dim(problem, parameters=None):
    return TimeIntegration(problem, parameters).integration()


def run_lrbms(problem, model, parameters=None):
    return TimeIntegration(problem, parameters).integration(model)


def compare_runs(reference, other, q1=0.0):
    '''Relative discrepancies of other with respect to reference at every
    step stored in both, and the relative mass loss of other.'''
    if reference.grid.ncells != other.grid.ncells or reference.degree != other.degree:
        raise ConfigurationError('Trajectories live on different grids')

    steps = [n for n in reference.steps if n in other.steps]
    if not steps or reference.steps[-1] != other.steps[-1]:
        raise ConfigurationError('Trajectories have different numbers of time steps')

    values = numpy.zeros((len(steps), 4))
    zeta = []
    for k, n in enumerate(steps):
        i = reference.steps.index(n)
        j = other.steps.index(n)
        values[k, :2] = relative_discrepancy(reference.saturations[i], other.saturations[j])
        values[k, 2:] = relative_discrepancy(reference.pressures[i], other.pressures[j])
        zeta.append(mass_loss(other.velocities[j], q1))

    return RunMetrics(steps, *values.T, mass_loss=zeta, timings=dict(other.timings))


def snapshot_steps(N_T, M):
    '''M equally spaced steps from 0 to N_T.'''
    return [int(n) for n in numpy.round(numpy.linspace(0, N_T, M))]


def build_mobility_basis(problem, M, mode='tof', trajectory=None, parameters=None):
    '''Mobility profiles from the time-of-flight of the initial velocity or
    from M saturations of a high-dimensional trajectory.'''
    fluids = problem.fluids
    if mode == 'snapshots':
        if trajectory is None:
            raise ConfigurationError('Snapshot profiles need a high-dimensional trajectory')

        saturations = [trajectory.saturation(n) for n in snapshot_steps(problem.N_T, M)]
        return profiles_from_snapshots(saturations, fluids.mu_w, fluids.mu_n)

    if mode != 'tof':
        raise ConfigurationError('Unknown profile mode %s' % mode)

    timings = dict.fromkeys(PHASES, 0.0)
    s = problem.initial_saturation()
    _, u = TimeIntegration(problem, parameters).high_dim_pressure(s, timings)
    tof = solve_tof(u, problem.phi, problem.degree)
    return profiles_from_tof(tof, M, problem.T, fluids.mu_w, fluids.mu_n, problem.degree)
