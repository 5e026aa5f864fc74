"""Exception types shared across the package."""


class NambuLabError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(NambuLabError):
    """Malformed expression text.

    Carries the byte offset of the first offending character.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(NambuLabError):
    """Identifier does not resolve to a coordinate, parameter or function."""

    def __init__(self, name: str, offset: int = -1):
        where = f" (at offset {offset})" if offset >= 0 else ""
        super().__init__(f"unknown identifier '{name}'{where}")
        self.name = name
        self.offset = offset


class DomainEvalError(NambuLabError):
    """Evaluation hit a singularity (division by zero, sqrt/ln out of domain).

    ``subexpression`` is the printed form of the offending subtree.
    """

    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


class DimensionMismatchError(NambuLabError):
    """Operands do not share a coordinate frame or point dimension."""


class SingularLocusError(NambuLabError):
    """det B fell below the singular-locus guard: the constants of motion
    are functionally dependent at this point and no normalized bracket exists."""

    def __init__(self, det_b: float, threshold: float, where=None):
        at = f" at {list(where)}" if where is not None else ""
        super().__init__(
            f"|det B| = {abs(det_b):.3e} <= guard {threshold:.3e}{at}"
        )
        self.det_b = det_b
        self.threshold = threshold


class DomainExitError(NambuLabError):
    """Trajectory left the admissible region mid-integration."""

    def __init__(self, t_last: float, trajectory=None, reason: str = ""):
        extra = f": {reason}" if reason else ""
        super().__init__(f"trajectory left the domain after t={t_last:.6g}{extra}")
        self.t_last = t_last
        self.trajectory = trajectory


class SchemaError(NambuLabError):
    """System definition file violates the expected JSON layout."""


class DefiningRelationError(NambuLabError):
    """A loaded system fails its own defining bracket relations."""
