"""Exception types raised by sheettdd."""


class SheetTddError(Exception):
    """Base class for every error this package raises on purpose."""


class ParseError(SheetTddError, ValueError):
    """Malformed input text.

    ``pos`` is a 0-based character offset within the parsed string and
    ``line`` a 1-based line number within a file, when known.
    """

    def __init__(self, message, pos=None, line=None):
        self.message = message
        self.pos = pos
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if pos is not None:
            where.append(f"position {pos}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class TranslationError(SheetTddError, ValueError):
    """A reference shift moved some axis outside the grid."""


class FormulaCellError(SheetTddError):
    """A literal substitution targeted a cell holding a formula."""


class UnknownNameError(SheetTddError, KeyError):
    """A suite, test or sheet name that does not exist was requested."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
