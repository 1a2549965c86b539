"""Exception types shared across the package.

The CLI maps each family onto a process exit code, so new errors should
subclass the closest family rather than ``PhishDQNError`` directly.
"""


class PhishDQNError(Exception):
    """Base class for every error raised by this package."""


class DataError(PhishDQNError):
    """Bad input data: URLs, labels, evidence, splits. CLI exit code 3."""


class MalformedUrl(DataError):
    def __init__(self, raw, reason):
        super().__init__(f"malformed URL {raw!r}: {reason}")
        self.raw = raw
        self.reason = reason


class MissingEvidence(DataError):
    def __init__(self, fields, url=None):
        where = f" for {url!r}" if url else ""
        super().__init__(f"missing evidence{where}: {', '.join(fields)}")
        self.fields = tuple(fields)
        self.url = url


class InvalidEvidence(DataError):
    pass


class BadLabel(DataError):
    def __init__(self, row, value):
        super().__init__(f"row {row}: bad label {value!r} (expected 0/1/legitimate/phishing)")
        self.row = row
        self.value = value


class DegenerateSplit(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class InsufficientExperience(PhishDQNError):
    pass


class NonFiniteLoss(PhishDQNError):
    """Training diverged. CLI exit code 4."""


class ModelFileError(PhishDQNError):
    """Model file cannot be used by this build. CLI exit code 5."""


class VersionMismatch(ModelFileError):
    pass


class CorruptFile(ModelFileError):
    pass
