class SongaeError(Exception):
    """Base class for every failure raised by the package"""


class AudioFileNotFoundError(SongaeError, FileNotFoundError):
    pass


class UnsupportedCodecError(SongaeError, ValueError):
    pass


class EmptyAudioError(SongaeError, ValueError):
    pass


class AnnotationFormatError(SongaeError, ValueError):
    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class FeatureError(SongaeError, ValueError):
    pass


class BarwiseError(SongaeError, ValueError):
    pass


class ShapeMismatchError(SongaeError, ValueError):
    pass


class DivergenceError(SongaeError, ArithmeticError):
    pass


class TrainingDivergedError(DivergenceError):
    def __init__(self, message: str, report=None):
        self.report = report  # TrainReport up to the failing epoch
        super().__init__(message)


class SegmentationError(SongaeError, ValueError):
    pass


class EvaluationError(SongaeError, ValueError):
    pass


class EmptyCorpusError(SongaeError, ValueError):
    pass


class PipelineStageError(SongaeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
