"""Exception types shared across the package."""


class RigidQError(Exception):
    """Base class for all rigidq errors."""


class DuplicateBeadsError(RigidQError):
    """Two beads coincide (or nearly coincide) within the duplicate tolerance."""


class TooSmallError(RigidQError):
    """Operation requires at least two beads."""


class BodyTooSmallError(RigidQError):
    """Complement operators are undefined for a single-bead body."""


class SizeGuardError(RigidQError):
    """Dense materialization would exceed the configured size guard."""


class LengthMismatchError(RigidQError):
    """Vector length does not match the operator dimensions."""


class ShapeMismatchError(RigidQError):
    """Matrix operands have incompatible shapes."""


class SingularHError(RigidQError):
    """The naive divide-and-conquer merge hit a (numerically) singular H matrix."""
