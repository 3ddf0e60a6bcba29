"""Exception hierarchy shared by the solver, runtime and CLI."""


class BeliefArenaError(Exception):
    """Base class for every error raised by this package."""


class GameInputError(BeliefArenaError, ValueError):
    """Malformed or inconsistent input (unknown signal, bad family, ...)."""


class ParseError(GameInputError):
    """Syntax error in a game or strategy description."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class ValidationFailed(GameInputError):
    """A parsed game violates one of the model invariants."""

    def __init__(self, report):
        self.report = report
        lines = [f"{loc}: {msg}" for sev, loc, msg in report.issues if sev == "error"]
        super().__init__("invalid game:\n  " + "\n  ".join(lines))


class Refusal(BeliefArenaError):
    """A request that is well-formed but cannot be honoured, e.g. synthesizing
    a winning strategy from a support that is not winning."""


class GuardExceeded(BeliefArenaError):
    """An oracle was asked to enumerate something larger than its size guard."""
