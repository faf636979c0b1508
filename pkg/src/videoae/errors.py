"""Exception hierarchy for the toolkit.

Every user-facing failure raises a subclass of :class:`VideoAEError` so
callers (CLI, HTTP service) can distinguish bad input from genuine bugs.
"""


class VideoAEError(Exception):
    """Base class for all toolkit errors."""


# --- ingest ---------------------------------------------------------------

class NoFrames(VideoAEError):
    """A frame source yielded no frames."""


class ResolutionMismatch(VideoAEError):
    """Frames in one sequence do not share a single resolution."""


class InvalidTarget(VideoAEError):
    """A resize/pad target is not achievable from the source frame."""


class CorruptBundle(VideoAEError):
    """A model bundle failed its digest or manifest validation."""


# --- autoencoder ----------------------------------------------------------

class InvalidConfig(VideoAEError):
    """Autoencoder configuration violates an architecture invariant."""


class ShapeError(VideoAEError):
    """An array does not conform to the shape the operation requires."""


class InsufficientData(VideoAEError):
    """Too few frames/codes for the requested operation."""


# --- latentops ------------------------------------------------------------

class EmptySelection(VideoAEError):
    """An averaging/selection operation received an empty subset."""


class InvalidAlpha(VideoAEError):
    """Interpolation weight outside [0, 1]."""


class InvalidFactor(VideoAEError):
    """Timeline resampling factor must be positive."""


class InvalidK(VideoAEError):
    """Cluster count or top-k outside its valid range."""


class InvalidRadius(VideoAEError):
    """Correspondence search radius must be nonnegative."""


# --- projection -----------------------------------------------------------

class InvalidIterations(VideoAEError):
    """Reprojection count must be nonnegative."""


class NotFitted(VideoAEError):
    """An embedding model was used before being fit."""


# --- editing --------------------------------------------------------------

class InvalidPath(VideoAEError):
    """A texture path spec is empty or malformed."""


class InvalidRect(VideoAEError):
    """A patch rectangle is out of bounds or mismatched in size."""


# --- transmit -------------------------------------------------------------

class InvalidPlan(VideoAEError):
    """A transmission plan has nonpositive or incompatible fields."""


class NotAPacket(VideoAEError):
    """Bytes do not start with the packet magic."""


class CorruptPacket(VideoAEError):
    """Packet framing, lengths, or CRC failed validation."""


class WrongModel(VideoAEError):
    """Packet model digest does not match the loaded model."""
