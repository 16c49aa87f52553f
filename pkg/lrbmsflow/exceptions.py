class LrbmsError(Exception):
    '''Base class of all errors raised by lrbmsflow.'''
    pass


class ConfigurationError(LrbmsError, ValueError):
    pass


class DomainError(LrbmsError, ValueError):
    pass


class FieldIOError(LrbmsError, OSError):
    pass


class NumericalError(LrbmsError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularMatrixError(NumericalError):
    pass


class DegenerateFlowError(NumericalError):
    pass


class AssemblyError(NumericalError):
    pass


class ReducedSolveError(NumericalError):
    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta
