"""Exception hierarchy shared by every module of the package."""


class BoussinesqError(Exception):
    """Base class for all package errors."""


class NegativeNormNonzeroMean(BoussinesqError, ValueError):
    """A negative-order norm was requested for a field with nonzero mean."""


class NegativeArgument(BoussinesqError, ValueError):
    pass


class NonPositiveField(BoussinesqError, ValueError):
    """A height field has a sample <= 0 where strict positivity is required."""


class ZeroField(BoussinesqError, ValueError):
    pass


class MeanNotOne(BoussinesqError, ValueError):
    pass


class InvalidState(BoussinesqError, ValueError):
    """Mean or positivity constraints of a state are violated."""


class PositivityLost(BoussinesqError, RuntimeError):
    """The height field touched zero during time stepping.

    This signals under-resolution (time step or grid); the solver never
    clips ``w`` to recover.
    """

    def __init__(self, t: float, x: float, min_w: float):
        self.t = t
        self.x = x
        self.min_w = min_w
        super().__init__(f"min w = {min_w:.6g} <= 0 at t = {t:.6g}, x = {x:.6g}")


class DegenerateFit(BoussinesqError, RuntimeError):
    pass


class FrameCollapse(BoussinesqError, RuntimeError):
    """Tangent stretching factors underflowed between re-orthonormalizations."""


class Inconclusive(BoussinesqError, RuntimeError):
    """No partial sum of the Lyapunov spectrum is negative."""


class ConfigError(BoussinesqError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class UnknownKey(ConfigError):
    pass


class MissingRequired(ConfigError):
    pass


class ConstraintError(ConfigError):
    pass


class CheckpointError(BoussinesqError, ValueError):
    pass


class BadMagic(CheckpointError):
    pass


class VersionMismatch(CheckpointError):
    pass


class TruncatedFile(CheckpointError):
    pass
