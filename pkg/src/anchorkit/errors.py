"""Exception hierarchy.  The CLI maps each class to an exit code."""


class AnchorKitError(Exception):
    exit_code = 4

    def to_json(self):
        return {"error": type(self).__name__, "message": str(self)}


class ConfigError(AnchorKitError, ValueError):
    """Bad configuration: unknown column, out-of-range parameter, missing file."""

    exit_code = 2


class DataError(AnchorKitError, ValueError):
    """Input data that cannot be used as given."""

    exit_code = 3


class ParseError(DataError):
    """Malformed CSV input; ``row`` is the 1-based line number in the file."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row

    def to_json(self):
        out = super().to_json()
        out["row"] = self.row
        return out


class CorruptFileError(DataError):
    pass


class FormatVersionError(DataError):
    pass


class ContractError(AnchorKitError, ValueError):
    """A documented precondition was violated by the caller."""

    exit_code = 4
