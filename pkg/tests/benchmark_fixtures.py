import os

import pytest

from lrbmsflow import BasisConstruction, CoarseGrid, TwoPhaseProblem
from lrbmsflow.BasisConstruction import sample_training_set
from lrbmsflow.Scenario import parse_scenario
from lrbmsflow.TimeIntegration import build_mobility_basis, run_high_dim, run_lrbms, snapshot_steps

SCENARIO = os.path.join(os.path.dirname(__file__), '..', 'scenarios', 'analogue.json')


@pytest.fixture(scope='module')
def scenario():
    return parse_scenario(SCENARIO)


@pytest.fixture(scope='module')
def problem(scenario):
    return TwoPhaseProblem.from_scenario(scenario)


@pytest.fixture(scope='module')
def parameters(scenario):
    return scenario.parameters()


@pytest.fixture(scope='module')
def reference(scenario, problem, parameters):
    parameters = dict(parameters)
    parameters['Store Steps'] = snapshot_steps(scenario.time.N_T, scenario.rom.M)
    return run_high_dim(problem, parameters)


@pytest.fixture(scope='module')
def mobility(scenario, problem, parameters):
    return build_mobility_basis(problem, scenario.rom.M, 'tof', parameters=parameters)


@pytest.fixture(scope='module')
def training_set(scenario):
    return sample_training_set(scenario.rom.M, scenario.rom.training_count, scenario.rom.seed)


@pytest.fixture(scope='module')
def training_snapshots(scenario, problem, mobility, parameters, training_set):
    coarse = CoarseGrid(problem.grid, scenario.geometry.coarse_nx, scenario.geometry.coarse_ny)
    return BasisConstruction(problem.discretization, mobility, coarse, parameters).training_snapshots(training_set)


@pytest.fixture(scope='module')
def model(scenario, problem, mobility, parameters, training_set):
    coarse = CoarseGrid(problem.grid, scenario.geometry.coarse_nx, scenario.geometry.coarse_ny)
    return BasisConstruction(problem.discretization, mobility, coarse, parameters).build(training_set)


@pytest.fixture(scope='module')
def reduced(problem, model, parameters):
    return run_lrbms(problem, model, parameters)
