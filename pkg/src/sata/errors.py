"""Exception types shared across the package."""


class SataError(Exception):
    """Base class for package-specific failures."""


class SpecError(SataError):
    """Invalid generator spec or run configuration."""


class MaskFormatError(SataError):
    """Malformed or inconsistent mask file content."""


class ScheduleFormatError(SataError):
    """Malformed or inconsistent schedule file content."""


class ReportFormatError(SataError):
    """Malformed or mismatched report file content."""
