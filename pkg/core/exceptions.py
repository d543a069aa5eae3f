# core/exceptions.py


class GraphOptError(Exception):
    """Base class for all solver errors"""


class GraphError(GraphOptError):
    """Invalid graph construction (duplicate ids, dangling references, bad indices)"""


class ConfigurationError(GraphOptError):
    """Invalid descriptor, precision or experiment configuration"""


class BALFormatError(GraphOptError):
    """Malformed BAL problem file"""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OptimizationError(GraphOptError):
    """Solver cannot start or continue (e.g. non-finite chi² at entry)"""
