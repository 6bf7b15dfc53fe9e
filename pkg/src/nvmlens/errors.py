"""Exception hierarchy shared by every nvmlens module."""


class NvmLensError(Exception):
    """Base class; the CLI maps any subclass to exit status 1."""


class TraceParseError(NvmLensError):
    def __init__(self, path, line, msg):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {msg}")


class TraceFormatError(NvmLensError):
    pass


class TraceIntegrityError(NvmLensError):
    pass


class EmptySeriesError(NvmLensError):
    pass


class DegenerateIntervalError(NvmLensError):
    pass


class SegmentationError(NvmLensError):
    pass


class DomainError(NvmLensError, ValueError):
    pass


class InsufficientDataError(NvmLensError):
    pass


class IncompatibleFeatureError(NvmLensError):
    pass


class PlacementError(NvmLensError):
    pass
