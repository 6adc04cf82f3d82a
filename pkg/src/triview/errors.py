"""Exception types shared across the package."""


class TriviewError(Exception):
    """Base class for all triview errors."""


class SingularTransform(TriviewError):
    """Affine geotransform whose linear part is not invertible."""


class PolarDegenerate(TriviewError):
    """Footprint geometry requested too close to a pole."""


class DecodeError(TriviewError):
    """Byte stream is not a decodable PNG or JPEG image."""


class OutOfBounds(TriviewError):
    """Pixel window exceeds the image it addresses."""


class WindowTooLarge(TriviewError):
    """Sliding window larger than the image."""


class ImageTooSmall(TriviewError):
    """Image below the minimum size a statistic needs."""


class ProviderError(TriviewError):
    """Asset provider fault, distinct from a clean miss."""


class OutOfCoverage(TriviewError):
    """Requested ground footprint exceeds the source raster."""


class ZeroVector(TriviewError):
    """Vector with no direction cannot be normalized."""


class DimensionMismatch(TriviewError):
    """Embedding operands with different dimensionality."""


class KOutOfRange(TriviewError):
    """Requested rank depth outside 1..gallery size."""


class EmbeddingFormatError(TriviewError):
    """Embedding file violates the wire format."""


class BadTarget(TriviewError):
    """Target column index outside the score matrix."""


class BatchMisaligned(TriviewError):
    """Batches whose instance ids do not line up row-for-row."""


class NonFiniteGradient(TriviewError):
    """Gradient evaluation produced NaN or infinity."""


class Diverged(TriviewError):
    """Training loss left the finite range."""


class MissingFootprint(TriviewError):
    """Judgment lacks the footprint a coverage metric needs."""


class MissingLocation(TriviewError):
    """Judgment lacks the coordinates a distance metric needs."""


class EmptyQuerySet(TriviewError):
    """Aggregation over zero judgments."""
