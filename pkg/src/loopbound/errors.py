"""Exception types shared across the package."""


class LoopBoundError(Exception):
    pass


class ParseError(LoopBoundError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class StructureError(LoopBoundError):
    """A flowgraph violates one of the structural invariants."""


class UnsupportedFeature(LoopBoundError):
    pass


class UnknownVariable(LoopBoundError):
    pass


class BackboneLimitExceeded(LoopBoundError):
    pass


class ExternalSolverError(LoopBoundError):
    pass
