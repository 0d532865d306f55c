"""Exception hierarchy shared by every DLNS module"""

from typing import Optional


class DlnsError(Exception):
    """Base class for all solver errors"""


class StructuralError(DlnsError):
    """Malformed instance, unknown variable or value outside its domain"""


class CapacityError(DlnsError):
    """A table, separator or enumeration exceeds its configured bound"""

    def __init__(self, message: str, size: Optional[int] = None, limit: Optional[int] = None):
        super().__init__(message)
        self.size = size
        self.limit = limit


class StrategyError(DlnsError):
    """A destroy strategy cannot run on this instance"""


class InstanceParseError(DlnsError):
    """Instance file could not be parsed"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field {field}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.field = field
        self.line = line


class HarnessError(DlnsError):
    """The message-passing substrate was driven into an invalid state"""


class ConfigError(DlnsError):
    """Invalid termination rule, flag combination or parameter"""


class RunError(DlnsError):
    """A repair failed during a D-LNS iteration"""

    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause
