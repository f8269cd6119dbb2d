"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with inputs outside its documented contract."""


class PlacementError(RuntimeError):
    """Scenario spawning could not place every agent within the attempt budget."""


class ConfigError(ValueError):
    """A scenario or sweep configuration is malformed.

    ``field`` names the offending key (dotted path) when known.
    """

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line

    def __str__(self):
        msg = super().__str__()
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field is not None:
            where.append(f"field '{self.field}'")
        return f"{', '.join(where)}: {msg}" if where else msg
