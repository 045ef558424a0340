"""Exception hierarchy shared by all modules."""


class Solvable2DError(Exception):
    """Base class for every error raised by this package."""


class DomainError(Solvable2DError):
    """A point (or a stencil point) lies outside a field's domain."""


class BranchError(DomainError):
    """A logarithm argument left the principal branch."""


class NonFiniteError(Solvable2DError):
    pass


class EmptyMaskError(Solvable2DError):
    pass


class PathBlockedError(Solvable2DError):
    """An integration path for a nonlocal potential crosses an excluded region."""


class CompatibilityError(Solvable2DError):
    """The two solutions defining a nonlocal potential solve different equations."""


class ZeroSeedError(Solvable2DError):
    pass


class ZeroQError(Solvable2DError):
    pass


class DegenerateError(Solvable2DError):
    """The Darboux coefficient F vanishes; the transformation is undefined."""


class ZeroLaplacianError(Solvable2DError):
    pass


class ParamError(Solvable2DError, ValueError):
    pass
