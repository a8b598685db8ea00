class WirecutError(Exception):
    """Base class for errors raised by this package."""


class InputError(WirecutError):
    """Bad user input: malformed documents, invalid cuts or options."""


class CircuitError(InputError):
    pass


class CutError(InputError):
    pass


class TableError(InputError):
    pass


class ReconstructionError(WirecutError):
    pass


class OptimizationError(WirecutError):
    pass
