"""Exception hierarchy shared by all modules."""


class GeoflowError(Exception):
    """Base class for every error raised by the package."""


class PreconditionError(GeoflowError, ValueError):
    """An operation was called outside its documented domain."""


class NonSquare(PreconditionError):
    pass


class EmptyRowOrColumn(PreconditionError):
    def __init__(self, kind, symbol):
        self.kind = kind
        self.symbol = symbol
        super().__init__(f"{kind} {symbol} has no admissible transition")


class NotIrreducible(PreconditionError):
    pass


class NoConvergence(GeoflowError, RuntimeError):
    pass


class InadmissibleWord(PreconditionError):
    pass


class WordTooShort(PreconditionError):
    pass


class WindowExhausted(GeoflowError, IndexError):
    pass


class BracketFailure(GeoflowError, RuntimeError):
    pass


class DegreeTooLow(PreconditionError):
    pass


class UnequalLengths(PreconditionError):
    pass


class AlphaTooLarge(PreconditionError):
    pass


class DegenerateEndpoints(PreconditionError):
    pass


class OutsideDisk(PreconditionError):
    pass


class NotInPartial(PreconditionError):
    pass


class NotInFlowBox(PreconditionError):
    pass


class NoReturn(GeoflowError, RuntimeError):
    pass


class UncertifiedTransition(GeoflowError, RuntimeError):
    """A sampled transition could be neither certified nor excluded."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(f"{len(self.pairs)} transition(s) could not be certified: {self.pairs[:5]}")


class ParseError(GeoflowError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
