"""Exception hierarchy shared by every module of the package."""


class CRPError(Exception):
    """Base class for all errors raised by crpgp."""


class EmptyYard(CRPError):
    pass


class StackFull(CRPError):
    pass


class EmptyOrigin(CRPError):
    pass


class SameStack(CRPError):
    pass


class TargetBlocked(CRPError):
    pass


class Deadlock(CRPError):
    """No legal relocation exists under the active scheme.

    ``stats`` carries the partial solution (move log up to the failure).
    """

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats


class InternalLoop(Deadlock):
    """A scheme exceeded the per-retrieval relocation cap."""


class ParseError(CRPError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class UnknownTerminal(ParseError):
    pass


class Infeasible(CRPError):
    pass


class BudgetExceeded(CRPError):
    pass


class ConfigError(CRPError):
    pass


class TooFewSamples(CRPError):
    pass
