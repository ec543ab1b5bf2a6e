from typing import Optional


class CycleNetError(Exception):
    """Base class of every error raised by cyclenet"""


# Simulation ------------------------------------------------------------------
class NonPhysicalState(CycleNetError):
    def __init__(self, theta: float, detail: str = "") -> None:
        """Pressure or temperature left the physical domain during integration

        Args:
            theta:  Crank angle (CAD) of the offending step.
            detail: Which quantity failed.
        """
        self.theta = theta
        self.detail = detail
        super().__init__(f"non-physical state at {theta:.2f} CAD {detail}".strip())


class NoConvergence(CycleNetError):
    def __init__(self, iterations: int, residual: float) -> None:
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"equilibrium solve did not converge after {iterations} iterations "
            f"(max residual {residual:.3e})"
        )


# Data ------------------------------------------------------------------------
class ConstantColumn(CycleNetError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"column '{name}' is constant and cannot be scaled")


class SchemaMismatch(CycleNetError):
    def __init__(self, column: str, detail: str = "missing") -> None:
        self.column = column
        super().__init__(f"schema mismatch on column '{column}': {detail}")


class ParseError(CycleNetError):
    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ) -> None:
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column else ")")
        super().__init__(message + where)


class VersionMismatch(CycleNetError):
    def __init__(self, found: object, expected: object) -> None:
        self.found = found
        self.expected = expected
        super().__init__(f"unsupported file version {found!r}, expected {expected!r}")


# Learning --------------------------------------------------------------------
class NonFiniteLoss(CycleNetError):
    def __init__(self, epoch: int) -> None:
        self.epoch = epoch
        super().__init__(f"training loss became non-finite during epoch {epoch}")


class FreezeError(CycleNetError):
    """A freeze mask leaves no trainable layer"""


class RankDeficient(CycleNetError):
    def __init__(self, rank: int, columns: int) -> None:
        self.rank = rank
        super().__init__(f"design matrix has rank {rank} < {columns} columns")


# Metrics ---------------------------------------------------------------------
class ZeroVariance(CycleNetError):
    """One of the vectors given to a correlation has no variance"""


class ZeroObserved(CycleNetError):
    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"observed value at index {index} is zero")


# Command line ----------------------------------------------------------------
class ConfigError(CycleNetError):
    """The experiment configuration does not validate"""


class UsageError(CycleNetError):
    """The command line arguments are inconsistent"""
