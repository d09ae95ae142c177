"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures without
inspecting types one by one (2 config, 3 data, 4 backend).
"""


class EmoforgeError(Exception):
    exit_code = 1


class ConfigError(EmoforgeError):
    exit_code = 2


class DataError(EmoforgeError):
    exit_code = 3


class BackendError(EmoforgeError):
    exit_code = 4


# corpus
class EmptyFile(DataError):
    pass


class LineCountMismatch(DataError):
    def __init__(self, n_text, n_labels):
        super().__init__(f"{n_text} text lines but {n_labels} label lines")
        self.n_text = n_text
        self.n_labels = n_labels


class InvalidLabel(DataError):
    def __init__(self, line_no, raw):
        super().__init__(f"invalid label {raw!r} on line {line_no}")
        self.line_no = line_no


class InsufficientData(DataError):
    pass


class EmptyCorpus(DataError):
    pass


# numeric modules
class EmptyInput(DataError):
    pass


class NoTargetSamples(DataError):
    pass


class NoComplementSamples(DataError):
    pass


class MissingClass(DataError):
    pass


class MissingCover(DataError):
    pass


class TooManyFeatures(DataError):
    pass


class VocabularyMismatch(DataError):
    pass


class EmptyAfterFilter(DataError):
    pass


# linguistics
class BothEmpty(DataError):
    pass


class NoNgrams(DataError):
    pass


class ArityMismatch(DataError):
    pass


# harness
class LengthMismatch(DataError):
    pass


class PoolExhausted(DataError):
    pass


# generation
class CountMismatch(BackendError):
    def __init__(self, found, expected):
        super().__init__(f"parsed {found} tweets, expected {expected}")
        self.found = found
        self.expected = expected


class Unparseable(BackendError):
    pass


class DuplicateSaturation(BackendError):
    pass
