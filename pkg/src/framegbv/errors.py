"""Exception hierarchy shared by every stage of the pipeline."""


class FrameGBVError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class ParseError(FrameGBVError):
    pass


class IntegrityError(FrameGBVError):
    def __init__(self, message, identifier=None):
        super().__init__(message)
        self.identifier = identifier


class UnknownLexicalUnit(FrameGBVError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownFrame(FrameGBVError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SpanError(FrameGBVError):
    def __init__(self, message, record_id=None, sentence_index=None):
        super().__init__(message)
        self.record_id = record_id
        self.sentence_index = sentence_index


class ForeignFrameElement(FrameGBVError):
    pass


class ConfigError(FrameGBVError, ValueError):
    pass


class OverrideTargetError(FrameGBVError):
    pass


class EmptyClassError(FrameGBVError):
    pass


class EmptyRegistryError(FrameGBVError):
    pass


class ShapeError(FrameGBVError, ValueError):
    pass


class DegenerateInput(FrameGBVError, ValueError):
    pass


class ConvergenceError(FrameGBVError):
    pass


class SingleClassError(FrameGBVError, ValueError):
    pass


class NonFiniteError(FrameGBVError, ValueError):
    pass


class TooFewSamplesError(FrameGBVError, ValueError):
    pass


class LengthMismatch(FrameGBVError, ValueError):
    pass


class PatternError(FrameGBVError):
    pass


class OverlapError(FrameGBVError, ValueError):
    pass
