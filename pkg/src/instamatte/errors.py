"""Exception types raised across the toolkit.

Everything derives from :class:`MatteError` so callers can catch one type
at the pipeline boundary while tests can assert on the specific failure.
"""


class MatteError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(MatteError):
    """Rasters that must share dimensions do not."""


class MalformedTrimapError(MatteError):
    """A trimap raster contains byte values outside {0, 128, 255}."""


class EmptyMaskError(MatteError):
    """An operation requires at least one foreground pixel."""


class DegenerateAlphaError(MatteError):
    """An alpha matte is entirely foreground or entirely background."""


class ImageTooSmallError(MatteError):
    """The image is smaller than the solver's local window."""


class MattingBackendError(MatteError):
    """A matting backend failed; the message carries the reason."""


class SolverConvergenceError(MattingBackendError):
    """The conjugate-gradient solve did not reach the residual bound."""


class NoUnknownRegionError(MatteError):
    """Patch sampling was asked to cover a trimap with no unknown pixels."""


class UncoveredUnknownError(MatteError):
    """An unknown pixel was covered by no patch in any round."""


class ManifestError(MatteError):
    """A scene manifest failed validation; the message names the field."""


class PipelineStageError(MatteError):
    """A stage failed inside the per-instance loop.

    Carries the instance id and the pass index (0 for the initial trimap
    stage) so multi-instance runs can report failures individually.
    """

    def __init__(self, instance_id, pass_index, cause):
        self.instance_id = instance_id
        self.pass_index = pass_index
        self.cause = cause
        super().__init__(f"instance {instance_id!r}, pass {pass_index}: {cause}")
