"""Exception hierarchy shared by every stage of the pipeline."""


class AortaTrackError(Exception):
    """Base class; the CLI turns any of these into exit status 1."""


class MissingFiles(AortaTrackError):
    pass


class DimensionMismatch(AortaTrackError):
    pass


class MalformedHeader(AortaTrackError):
    pass


class LengthMismatch(AortaTrackError):
    pass


class InvalidSpec(AortaTrackError):
    pass


class InvalidWindow(AortaTrackError):
    pass


class SeedNotFound(AortaTrackError):
    pass


class EmptyHistogram(AortaTrackError):
    pass


class MissingRescale(AortaTrackError):
    pass


class EmptySeries(AortaTrackError):
    pass


class EmptyInput(AortaTrackError):
    pass


class ConfigError(AortaTrackError):
    pass
