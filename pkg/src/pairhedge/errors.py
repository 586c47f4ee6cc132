"""Exception types shared across the package.

Each class carries the process exit code used by the command line tool.
"""


class PairHedgeError(Exception):
    exit_code = 1
    kind = "error"


class InputError(PairHedgeError, ValueError):
    """Malformed return data, bad arguments, or a violated precondition."""

    exit_code = 2
    kind = "input"


class ScaleGuardError(PairHedgeError, ValueError):
    """The requested computation is beyond the enumeration budget."""

    exit_code = 3
    kind = "scale"


class BankruptError(PairHedgeError, ArithmeticError):
    """Every pair engine has wealth zero, so no portfolio can be formed."""

    exit_code = 2
    kind = "bankrupt"


class HorizonError(PairHedgeError, ValueError):
    """Stepping a horizon-committed engine past its final session."""

    exit_code = 2
    kind = "horizon"
