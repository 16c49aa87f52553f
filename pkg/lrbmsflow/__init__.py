import os

# BLAS reads the thread count when numpy is imported
for _var in ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS'):
    os.environ.setdefault(_var, os.environ.get('LRBMSFLOW_THREADS', '1'))

from .FineGrid import FineGrid  # noqa: E402
from .CoarseGrid import CoarseGrid  # noqa: E402
from .DgField import DgField  # noqa: E402
from .CrsMatrix import CrsMatrix  # noqa: E402
from .PressureDiscretization import PressureDiscretization  # noqa: E402
from .FaceFluxField import FaceFluxField  # noqa: E402
from .SaturationTransport import SaturationTransport  # noqa: E402
from .TimeOfFlight import TimeOfFlight  # noqa: E402
from .MobilityBasis import MobilityBasis  # noqa: E402
from .BasisConstruction import BasisConstruction  # noqa: E402
from .ReducedModel import ReducedModel  # noqa: E402
from .TimeIntegration import TimeIntegration, TwoPhaseProblem  # noqa: E402
from .Scenario import Scenario, parse_scenario  # noqa: E402

__all__ = [
    'FineGrid', 'CoarseGrid', 'DgField', 'CrsMatrix', 'PressureDiscretization', 'FaceFluxField',
    'SaturationTransport', 'TimeOfFlight', 'MobilityBasis', 'BasisConstruction', 'ReducedModel',
    'TimeIntegration', 'TwoPhaseProblem', 'Scenario', 'parse_scenario'
]
