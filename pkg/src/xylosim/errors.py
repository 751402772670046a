"""Exception types raised across the simulator."""


class XyloSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(XyloSimError, ValueError):
    pass


class ShapeError(XyloSimError, ValueError):
    pass


class NumericalError(XyloSimError, ArithmeticError):
    pass


class ParseError(XyloSimError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ValidationError(XyloSimError, ValueError):
    pass
