import json
import logging
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from lrbmsflow.exceptions import ConfigurationError, FieldIOError

logger = logging.getLogger(__name__)


class Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class Geometry(Section):
    Lx: float = Field(300.0, gt=0)
    Ly: float = Field(60.0, gt=0)
    nx: int = Field(400, ge=1)
    ny: int = Field(160, ge=1)
    coarse_nx: int = Field(16, ge=1, description='Number of coarse cells Nx in x-direction')
    coarse_ny: int = Field(2, ge=1, description='Number of coarse cells Ny in y-direction')

    @model_validator(mode='after')
    def check_coarse_grid(self):
        if self.nx % self.coarse_nx:
            raise ValueError('coarse_nx (Nx=%d) does not divide nx=%d' % (self.coarse_nx, self.nx))
        if self.ny % self.coarse_ny:
            raise ValueError('coarse_ny (Ny=%d) does not divide ny=%d' % (self.coarse_ny, self.ny))
        return self


class Time(Section):
    T: float = Field(3e5, gt=0)
    N_T: int = Field(6000, ge=1)
    initial_saturation: float = Field(0.0, ge=0, le=1)

    @property
    def dt(self):
        return self.T / self.N_T


class Fluids(Section):
    rho_w: float = 999.749
    rho_n: float = 890.0
    mu_w: float = Field(0.00130581, gt=0)
    mu_n: float = Field(0.008, gt=0)


class Layer(Section):
    start_row: int = Field(0, ge=0)
    permeability: float = Field(gt=0)
    porosity: float = Field(0.2, gt=0, le=1)


class Lens(Section):
    box: Tuple[float, float, float, float] = Field(description='x0, x1, y0, y1 of the lens')
    multiplier: float = Field(1e-3, gt=0, description='Factor applied to the permeability')
    porosity: Optional[float] = Field(None, gt=0, le=1)


class FieldGenerator(Section):
    '''Permeability and porosity fields. 'constant' uses permeability and
    porosity, 'layered' horizontal bands, 'lens' bands with embedded boxes
    and 'file' two rasters.'''
    kind: Literal['constant', 'layered', 'lens', 'file'] = 'lens'
    permeability: float = Field(1e-8, gt=0)
    porosity: float = Field(0.2, gt=0, le=1)
    layers: List[Layer] = Field(default_factory=lambda: [
        Layer(start_row=0, permeability=2e-8, porosity=0.25),
        Layer(start_row=50, permeability=5e-8, porosity=0.3),
        Layer(start_row=100, permeability=1e-8, porosity=0.2),
    ])
    lenses: List[Lens] = Field(default_factory=lambda: [
        Lens(box=(120.0, 180.0, 20.0, 40.0), multiplier=1e-3, porosity=0.15),
    ])
    noise: float = Field(0.0, ge=0, description='Standard deviation of the log-permeability perturbation')
    seed: int = 0
    permeability_file: Optional[str] = None
    porosity_file: Optional[str] = None

    @model_validator(mode='after')
    def check_files(self):
        if self.kind == 'file' and not (self.permeability_file and self.porosity_file):
            raise ValueError('kind file needs permeability_file and porosity_file')
        if self.kind in ('layered', 'lens') and not self.layers:
            raise ValueError('kind %s needs at least one layer' % self.kind)
        return self


class BoundarySide(Section):
    pressure: Literal['dirichlet', 'neumann'] = 'neumann'
    value: float = 0.0
    saturation: Optional[float] = Field(None, ge=0, le=1)


class Boundary(Section):
    left: BoundarySide = BoundarySide(pressure='dirichlet', value=10.0, saturation=1.0)
    right: BoundarySide = BoundarySide(pressure='neumann', value=3e-4)
    bottom: BoundarySide = BoundarySide()
    top: BoundarySide = BoundarySide()

    def as_dict(self):
        return {side: getattr(self, side).model_dump() for side in ('left', 'right', 'bottom', 'top')}


class Sources(Section):
    q1: float = 0.0
    q2: float = 0.0


class Dg(Section):
    degree: Literal[0, 1] = 1
    c_base: float = Field(30.0, ge=0)
    solver: Literal['cg', 'direct'] = 'cg'
    tolerance: float = Field(1e-10, gt=0)
    max_iter: Optional[int] = Field(None, ge=1)


class Rom(Section):
    M: int = Field(8, ge=2)
    eps_tol: float = Field(1e-4, ge=0)
    eps_pca: float = Field(1e-6, ge=0)
    training_count: int = Field(300, ge=1)
    seed: int = 0
    N_max: int = Field(500, ge=1)
    use_pca: bool = False
    unit_basis: bool = False
    profile_mode: Literal['tof', 'snapshots'] = 'tof'
    training_solver: Literal['cg', 'direct'] = 'cg'
    reduced_solver: Literal['cholesky', 'lu'] = 'cholesky'
    velocity_mobility: Literal['saturation', 'parametrized'] = 'saturation'


class Output(Section):
    directory: str = 'output'
    every: int = Field(0, ge=0, description='VTK output every so many steps, 0 for none')
    store_every: int = Field(1, ge=1, description='Keep the state of every so many steps in trajectories')


class Scenario(Section):
    '''Complete description of a displacement run. The defaults are the
    values of the benchmark problem.'''
    geometry: Geometry = Field(default_factory=Geometry)
    time: Time = Field(default_factory=Time)
    fluids: Fluids = Field(default_factory=Fluids)
    gravity: Tuple[float, float] = (0.0, 0.0)
    fields: FieldGenerator = Field(default_factory=FieldGenerator)
    boundary: Boundary = Field(default_factory=Boundary)
    sources: Sources = Field(default_factory=Sources)
    dg: Dg = Field(default_factory=Dg)
    rom: Rom = Field(default_factory=Rom)
    output: Output = Field(default_factory=Output)

    def parameters(self):
        '''Solver parameters in the form taken by the algorithm classes.'''
        return {
            'Verbose': False,
            'Convergence Tolerance': self.dg.tolerance,
            'Maximum Iterations': self.dg.max_iter,
            'Linear Solver': self.dg.solver,
            'Training Solver': self.rom.training_solver,
            'Greedy Tolerance': self.rom.eps_tol,
            'Maximum Basis Size': self.rom.N_max,
            'Use PCA': self.rom.use_pca,
            'PCA Tolerance': self.rom.eps_pca,
            'Unit Basis Functions': self.rom.unit_basis,
            'Reduced Solver': self.rom.reduced_solver,
            'Velocity Mobility': self.rom.velocity_mobility,
            'Output Frequency': self.output.every,
            'Store Frequency': self.output.store_every,
        }


def parse_scenario(path):
    '''Read a JSON scenario. Missing values take the benchmark defaults,
    unknown keys are rejected.'''
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise FieldIOError('Could not read scenario %s: %s' % (path, e)) from e
    except json.JSONDecodeError as e:
        raise ConfigurationError('Scenario %s is not valid JSON: %s' % (path, e)) from e

    scenario = validate_scenario(data, path)
    logger.debug('Read scenario %s with %d x %d cells and %d time steps', path, scenario.geometry.nx,
                 scenario.geometry.ny, scenario.time.N_T)
    return scenario


def validate_scenario(data, name='<scenario>'):
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError('Invalid scenario %s:\n%s' % (name, e)) from e


def dump_scenario(scenario, path):
    try:
        with open(path, 'w') as f:
            f.write(scenario.model_dump_json(indent=2))
    except OSError as e:
        raise FieldIOError('Could not write scenario %s: %s' % (path, e)) from e
