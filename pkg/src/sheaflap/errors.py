"""Exception hierarchy shared by all sheaflap modules."""


class SheafLapError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SheafLapError):
    pass


class ValidationError(SheafLapError):
    pass


class WidthError(SheafLapError):
    pass


class ShapeError(SheafLapError):
    pass


class HostMismatch(SheafLapError):
    """A sheaf was paired with a hypergraph it was not built on."""


class SingularBlock(SheafLapError):
    pass


class NotSymmetric(SheafLapError):
    pass


class TooLarge(SheafLapError):
    pass


class AllZeroSpectrum(SheafLapError):
    pass


class DegeneratePoint(SheafLapError):
    """The most discrepant pair of some hyperedge is not unique."""


class ConfigError(SheafLapError):
    pass


class UnsupportedOp(SheafLapError):
    pass
