from typing import Any, Dict, Optional, Tuple


class AffinityError(Exception):
    """Base error carrying the subset/parameter context of a failed computation"""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context = context or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_type": type(self).__name__,
            "error_message": str(self),
            "context": {k: _plain(v) for k, v in self.context.items()},
        }


def _plain(value: Any) -> Any:
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return str(value)


# linalg2
class SingularMatrix(AffinityError):
    pass


class NegativeExponent(AffinityError):
    pass


class NonPositiveEntry(AffinityError):
    pass


class EmptyFamily(AffinityError):
    pass


# ifs-model
class ParameterOrder(AffinityError):
    pass


class PositivityNotAchieved(AffinityError):
    pass


class RootTooLarge(AffinityError):
    pass


class OverlapDetected(AffinityError):
    pass


class NotContracting(AffinityError):
    pass


# pressure
class BudgetExceeded(AffinityError):
    """Raised when the requested depth needs more words than the budget allows"""

    def __init__(self, message: str, largest_feasible_depth: int = 0,
                 partial: Any = None, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, context)
        self.largest_feasible_depth = largest_feasible_depth
        self.partial = partial
        self.context.setdefault("largest_feasible_depth", largest_feasible_depth)


class EmptySubset(AffinityError):
    pass


class SubsetNotFinite(AffinityError):
    pass


class LowerUnavailable(AffinityError):
    pass


class TailUnavailable(AffinityError):
    pass


class NotPositive(AffinityError):
    pass


class ConstantsUnavailable(AffinityError):
    pass


# dimension / spectrum
class Uncertifiable(AffinityError):
    """Raised in strict mode when only a non-certified interval is available"""

    def __init__(self, message: str, interval: Any = None,
                 context: Optional[Dict[str, Any]] = None):
        super().__init__(message, context)
        self.interval = interval


class AssumptionViolated(AffinityError):
    def __init__(self, message: str, failing: Tuple[str, ...] = (),
                 context: Optional[Dict[str, Any]] = None):
        super().__init__(message, context)
        self.failing = tuple(failing)
        self.context.setdefault("failing", list(self.failing))


class Inconclusive(AffinityError):
    pass


# cli
class ConfigParse(AffinityError):
    pass


class FileIO(AffinityError):
    pass


class SubsetSyntaxError(AffinityError):
    def __init__(self, message: str, position: int,
                 context: Optional[Dict[str, Any]] = None):
        super().__init__(f"{message} (at position {position})", context)
        self.position = position
        self.context.setdefault("position", position)


class IndexNotInSystem(AffinityError):
    pass
