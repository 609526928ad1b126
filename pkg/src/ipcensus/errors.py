"""Exception types shared across the census toolkit."""


class CensusError(Exception):
    """Base class for all toolkit errors."""


class ParseError(CensusError):
    """Malformed input line; carries the 1-based line number when known."""

    def __init__(self, message, line_no=None, path=None):
        self.line_no = line_no
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line_no is not None:
            where += f"line {line_no}: "
        elif where:
            where += " "
        super().__init__(where + message)


class ConfigError(CensusError):
    """Inconsistent or incomplete configuration."""


class PartitionViolation(CensusError):
    """A block would receive zero or two taxonomy labels."""


class NoFeasibleThreshold(CensusError):
    """No threshold pair meets the configured error bound; the data is unusable."""


class ZeroVariance(CensusError):
    """Correlation is undefined because one input vector is constant."""
