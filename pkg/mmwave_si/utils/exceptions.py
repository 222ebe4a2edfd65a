# === Error Hierarchy ===
class MmwaveSiError(Exception):
    """
    Base class for every error raised by the package. `exit_code` is what the CLI returns.
    """
    exit_code: int = 1


class ConfigError(MmwaveSiError, ValueError):
    """
    Invalid or missing configuration, usage errors.
    """
    exit_code = 2


class DataError(MmwaveSiError, ValueError):
    """
    Input data that cannot be used (malformed grids, degenerate samples, bad geometry).
    """
    exit_code = 3


class GridParseError(DataError):
    """
    A grid file could not be parsed. `line` is the 1-based line number in the file, if known.
    """

    def __init__(
            self,
            message: str,
            line: int | None = None
    ):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateGeometryError(DataError):
    """
    Two elements coincide, or a panel pose is not a valid orthonormal frame.
    """


class OffLatticeError(DataError):
    """
    A direction does not sit on the lattice of a DirectionGrid.
    """


class DegenerateSampleError(DataError):
    """
    Too few samples, zero variance, or values outside a distribution's support.
    """


class TableDomainError(DataError):
    """
    A neighborhood size that the embedded fit tables do not cover.
    """


class ConvergenceError(MmwaveSiError, ArithmeticError):
    """
    An iterative numeric routine failed to converge.
    """
    exit_code = 4


# === Warnings ===
class InrClampWarning(UserWarning):
    """
    Nominal INR outside the tabulated [-20, 40] dB span; the boundary column was used.
    """
