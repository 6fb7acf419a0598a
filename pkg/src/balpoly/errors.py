"""Exception hierarchy. Every error raised on purpose derives from BalpolyError."""


class BalpolyError(Exception):
    pass


class InputError(BalpolyError):
    """Malformed input data (bad file, bad schema, inconsistent dimensions)."""


class DimensionMismatch(InputError):
    pass


class DegenerateInput(InputError):
    pass


class UnknownCell(InputError):
    pass


class PointOutsideCarrier(BalpolyError):
    pass


class PointOutsideComplex(BalpolyError):
    pass


class IncompatibleComplexes(BalpolyError):
    pass


class NotASubOpen(BalpolyError):
    pass


class NotASubdivision(BalpolyError):
    pass


class FunctionNotDefinedOnComplex(BalpolyError):
    pass


class ComplexMismatch(BalpolyError):
    pass


class DirectionOutsideCell(BalpolyError):
    pass


class NotPositive(BalpolyError):
    pass


class NotMinkowski(BalpolyError):
    pass


class NotCellwiseConcave(BalpolyError):
    pass


class FiberInconsistent(BalpolyError):
    def __init__(self, message, cells=(), point=None):
        super().__init__(message)
        self.cells = tuple(cells)
        self.point = point


class WitnessNotConcave(BalpolyError):
    pass


class WitnessInvalid(BalpolyError):
    pass


class StarNotContained(BalpolyError):
    pass


class UnboundedCell(BalpolyError):
    pass


class NotConcaveOnCell(BalpolyError):
    pass


class NotWeaklyConcaveMember(BalpolyError):
    pass
