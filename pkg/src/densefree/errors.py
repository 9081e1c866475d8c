"""Exception hierarchy shared by all construction modules."""


class DenseFreeError(Exception):
    """Base class for every error raised by this package."""


class UnknownPoint(DenseFreeError, KeyError):
    pass


class UnknownBasePoint(UnknownPoint):
    pass


class InvalidConstraint(DenseFreeError, ValueError):
    pass


class MapNotDefinedOnBase(DenseFreeError, KeyError):
    pass


class MissingLabel(DenseFreeError, KeyError):
    pass


class ConflictingPair(DenseFreeError, ValueError):
    pass


class NotIsomorphism(DenseFreeError, ValueError):
    pass


class StageRegression(DenseFreeError, ValueError):
    pass


class PreconditionViolation(DenseFreeError, ValueError):
    pass


class InconsistentReuse(DenseFreeError, AssertionError):
    pass


class NotAChain(DenseFreeError, ValueError):
    pass


class NotClassCoherent(DenseFreeError, ValueError):
    pass


class ClassNotRepresented(DenseFreeError, ValueError):
    pass


class RowOutOfRange(DenseFreeError, IndexError):
    pass


class NoCommonColumn(DenseFreeError, LookupError):
    pass


class MalformedCertificate(DenseFreeError, ValueError):
    pass
