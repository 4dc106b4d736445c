"""Exception hierarchy shared by all vrigid modules."""


class VRigidError(Exception):
    """Base class for every error raised by vrigid."""


class OutOfDomain(VRigidError):
    """Query point lies outside the evaluable region of a function."""


class EvalError(VRigidError):
    """Expression evaluation failed (log of a non-positive value, division by zero)."""


class DegenerateSegment(VRigidError):
    pass


class DegenerateChord(VRigidError):
    pass


class DegenerateFamily(VRigidError):
    """Parameters fall outside the family a routine was asked to handle."""


class InvalidScale(VRigidError):
    pass


class NotOrthogonal(VRigidError):
    pass


class FitFailed(VRigidError):
    pass


class CoverageTooLow(VRigidError):
    def __init__(self, coverage, minimum):
        super().__init__(f"coverage {coverage:.3f} below minimum {minimum:.3f}")
        self.coverage = coverage
        self.minimum = minimum


class NormalizationImpossible(VRigidError):
    pass


class ParseError(VRigidError):
    """Malformed expression, spec file or grid CSV.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None, source=None):
        loc = []
        if source:
            loc.append(str(source))
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        prefix = ", ".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.message = message
        self.line = line
        self.column = column


class UsageError(VRigidError):
    pass


class IoError(VRigidError):
    """An output file could not be written or an input file read."""
