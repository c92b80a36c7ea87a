"""Exception taxonomy shared by every module.

The CLI maps these onto process exit codes, so raising the right class
matters: DataError -> 2, ArtifactError -> 3, NumericError -> 4, and
ConfigError -> 1. Everything else is a plain bug.
"""


class FiscalForgeError(Exception):
    """Base class for all package-raised errors."""


class ConfigError(FiscalForgeError):
    """Malformed CLI usage or run-config file (unknown keys, bad types)."""


class DataError(FiscalForgeError):
    """Unusable input data: missing file, malformed CSV, degenerate column."""


class DomainError(FiscalForgeError, ValueError):
    """Argument outside a function's mathematical domain."""


class ShapeError(FiscalForgeError, ValueError):
    """Mismatched vector lengths or parameter layouts."""


class ContractError(FiscalForgeError, ValueError):
    """Caller violated an operation's contract (off-simplex action, unevaluated fitness)."""


class SequenceError(FiscalForgeError, RuntimeError):
    """Operation invoked out of order, e.g. stepping a finished environment."""


class NumericError(FiscalForgeError, ArithmeticError):
    """Non-finite value produced where a finite one is required."""


class ArtifactError(FiscalForgeError):
    """Checkpoint or other stored artifact is corrupt or incompatible."""
