"""Exception types shared across the package."""


class TryOnError(Exception):
    """Base class; ``code`` is the category printed by the CLI."""

    code = "error"


class ShapeError(TryOnError, ValueError):
    code = "shape"


class ArgumentError(TryOnError, ValueError):
    code = "argument"


class GenomeError(TryOnError, ValueError):
    code = "genome"


class ParseError(TryOnError, ValueError):
    code = "parse"

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ConfigError(TryOnError, ValueError):
    code = "config"


class MissingStageError(TryOnError, RuntimeError):
    code = "missing-stage"

    def __init__(self, stage, hint=""):
        msg = f"required stage '{stage}' has no output"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)
        self.stage = stage


class NumericalError(TryOnError, FloatingPointError):
    code = "numerical"
