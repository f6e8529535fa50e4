"""Exception types shared across the package."""


class GeometryError(ValueError):
    """A geometric precondition was violated."""


class BehindCameraError(GeometryError):
    """A point that must be in front of a camera has non-positive depth."""


class DegenerateGeometryError(GeometryError):
    """Geometry is degenerate (e.g. a camera center inside a sample sphere)."""


class SceneFormatError(ValueError):
    """A scene or rig description failed to parse or validate."""
