"""Exception hierarchy shared by all forge modules."""


class ForgeError(Exception):
    """Base class for every error raised by forge."""


class InputError(ForgeError):
    """Malformed input file or argument."""


# exact linear algebra
class AmbientMismatch(ForgeError):
    pass


class DimensionTooLarge(ForgeError):
    pass


class ShapeMismatch(ForgeError):
    pass


class NotADerangement(ForgeError):
    pass


class GenericityFailure(ForgeError):
    """A generic choice failed its checkable postcondition on every retry."""


# matroids / polymatroids
class NotAMatroid(ForgeError):
    pass


class UnknownElement(ForgeError):
    pass


class NotAPolymatroid(ForgeError):
    pass


class GroundSetMismatch(ForgeError):
    pass


class GroundSetTooLarge(ForgeError):
    pass


class PreconditionViolation(ForgeError):
    pass


# groups
class UnencodablePresentation(ForgeError):
    pass


class NotAGroup(ForgeError):
    pass


class NotAHomomorphism(ForgeError):
    pass


# dowling
class NormalFormFailure(ForgeError):
    pass


# inflation / expansion
class OddC(ForgeError):
    pass


class NotCAdmissible(ForgeError):
    pass


class MultiplicityMismatch(ForgeError):
    pass


class GroundMismatch(ForgeError):
    pass


class NotWellSeparated(ForgeError):
    pass


class NotAnExpansion(ForgeError):
    pass


class TooLarge(ForgeError):
    pass


# pipeline
class NotAWitness(ForgeError):
    pass


class NotDeskScale(ForgeError):
    pass


class AuditFailure(ForgeError):
    """An internal cross-check between two independent computations disagreed."""
