"""Exception types shared across the toolkit."""


class DysmetricsError(Exception):
    """Base class for all toolkit errors."""


# --- corpus / parsing ---

class MalformedRecord(DysmetricsError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class UnknownSeverity(MalformedRecord):
    def __init__(self, line_no, label):
        self.label = label
        super().__init__(line_no, f"unknown severity {label!r}")


class UnknownPhoneme(MalformedRecord):
    def __init__(self, line_no, symbol):
        self.symbol = symbol
        super().__init__(line_no, f"unknown phoneme {symbol!r}")


class UnsupportedFormat(DysmetricsError):
    pass


class TruncatedFile(DysmetricsError):
    pass


class OverlappingIntervals(DysmetricsError):
    pass


class UnorderedIntervals(DysmetricsError):
    pass


class UnknownLabel(DysmetricsError):
    pass


# --- signal analysis ---

class ClipTooShort(DysmetricsError):
    pass


class NoFormantsFound(DysmetricsError):
    pass


# --- measurements ---

class TooFewPeriods(DysmetricsError):
    pass


class NoVoicedFrames(DysmetricsError):
    pass


class EmptyCanonical(DysmetricsError):
    pass


class UnclassifiedSymbol(DysmetricsError):
    def __init__(self, symbol):
        self.symbol = symbol
        super().__init__(f"symbol {symbol!r} is neither vowel nor consonant in the profile")


class MissingCornerNoMean(DysmetricsError):
    def __init__(self, role):
        self.role = role
        super().__init__(f"corner vowel /{role}/ missing and no speaker mean available")


class MissingAE(DysmetricsError):
    pass


class ZeroDuration(DysmetricsError):
    pass


class NoQualifyingFrames(DysmetricsError):
    pass


class TooFewIntervals(DysmetricsError):
    pass


# --- statistics ---

class EmptyGroup(DysmetricsError):
    pass


class ZeroVariance(DysmetricsError):
    pass


# --- ml pipeline ---

class TooFewRows(DysmetricsError):
    pass


class SingleClass(DysmetricsError):
    pass


class NoConvergence(DysmetricsError):
    pass


class SingleSpeaker(DysmetricsError):
    pass


class ZeroBaseline(DysmetricsError):
    pass


class MissingSeverity(DysmetricsError):
    pass


# --- fixtures ---

class InvalidSpec(DysmetricsError):
    pass
