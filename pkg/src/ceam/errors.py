class NumericalFailure(ArithmeticError):
    """A configuration where a quantity is singular or undefined."""


class PoleError(NumericalFailure):
    pass


class OpaqueElementError(NumericalFailure):
    """An element with t = 0 has no transfer matrix."""


class DegenerateError(NumericalFailure):
    """Sensitivity or information vanishes, so the request has no answer."""


class NonSmoothError(NumericalFailure):
    pass


class EstimationError(NumericalFailure):
    pass
