"""Exception types shared across the retargeting pipeline."""


class RetargetError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimension(RetargetError):
    """Domain size or edge-length argument outside its allowed range."""


class DegenerateInput(RetargetError):
    """Geometric input collapses to a lower dimension (repeated points etc.)."""


class OverlapViolation(RetargetError):
    """Regions that must stay pairwise disjoint touch each other or the border."""


class OutOfDomain(RetargetError):
    """Query point lies outside the meshed rectangle."""


class DegenerateTriangle(RetargetError):
    """Triangle area too small to carry gradient coefficients."""


class SizeMismatch(RetargetError):
    """Array shape does not match the mesh it is paired with."""


class EmptyFreeSet(RetargetError):
    """Every vertex is constrained; there is nothing to solve for."""


class MissingParameter(RetargetError):
    """A constraint set lacks a value demanded by the vertex classes."""


class ConstraintViolation(RetargetError):
    """A supplied constraint set breaks one of its structural rules."""


class SingularSystem(RetargetError):
    """Reduced linear system could not be solved to tolerance."""


class NonPositiveScale(RetargetError):
    """Parameter initialization produced a non-positive region scale."""


class NoConvergence(RetargetError):
    """Orientation correction exhausted its relaxation schedule."""


class FlippedTriangle(RetargetError):
    """A target triangle has non-positive signed area."""


class IndexMeshMismatch(RetargetError):
    """A target index was built for a different mesh or map."""


class NoComponents(RetargetError):
    """Thresholding the saliency map produced no usable region."""


class BindFailure(RetargetError):
    """The service could not bind its listening address."""
