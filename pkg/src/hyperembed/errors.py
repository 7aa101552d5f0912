"""Exception hierarchy shared by all modules."""


class HyperembedError(Exception):
    """Base class; ``stage`` names the pipeline stage that failed, if known."""

    def __init__(self, message: str, stage: str | None = None):
        self.stage = stage
        super().__init__(f"[{stage}] {message}" if stage else message)


class ParseError(HyperembedError, ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message, stage="load")


class ValidationError(HyperembedError, ValueError):
    pass


class DimensionError(HyperembedError, ValueError):
    pass


class DegenerateStructureError(HyperembedError, ValueError):
    pass


class ParameterError(HyperembedError, ValueError):
    pass


class DenseCapError(HyperembedError, MemoryError):
    """Raised when a dense oracle computation would exceed the configured size cap."""


class ConvergenceError(HyperembedError, RuntimeError):
    def __init__(self, message: str, residuals=None, stage: str | None = None):
        self.residuals = residuals
        super().__init__(message, stage=stage)


class EmbeddingFormatError(HyperembedError, IOError):
    pass


class ContractError(HyperembedError, ValueError):
    """An operator violates a structural contract (e.g. symmetry)."""
