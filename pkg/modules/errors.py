"""
Exception hierarchy cho toàn bộ toolkit nén point cloud.
Mỗi lỗi kế thừa cả PccError lẫn builtin tương ứng (ValueError, RuntimeError, OSError)
để caller có thể bắt theo kiểu nào cũng được.
"""
from typing import Optional


class PccError(Exception):
    """Base class for every error raised by the toolkit"""


# ---- geometry ----

class RejectedInputError(PccError, ValueError):
    """Argument outside the accepted domain (unknown shape kind, bad depth, ...)"""


class EmptyOutputError(PccError, ValueError):
    """Operation would produce an empty point cloud"""


class PointParseError(PccError, ValueError):
    """Malformed line in a plain-text point file"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class StorageError(PccError, OSError):
    """File could not be read or written"""


# ---- nncore / cvae ----

class ShapeError(PccError, ValueError):
    """Tensor shapes are incompatible for the requested operation"""


class TapeStateError(PccError, RuntimeError):
    """Tape used out of order (backward before forward, reused tape)"""


class ConfigurationError(PccError, ValueError):
    """Model / codec settings disagree with the data"""


class NumericError(PccError, ArithmeticError):
    """Non-finite value or invalid distribution parameter"""


class TrainingDivergedError(NumericError):
    """Loss became non-finite during training"""

    def __init__(self, message: str, epoch: int):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


class ModelFormatError(PccError, ValueError):
    """Weight file has the wrong magic, version or content hash"""


# ---- ans / bitsback / seqcodec ----

class CodecError(PccError, RuntimeError):
    """Entropy coder failure (invalid table, corrupted message)"""


class MessageExhaustedError(CodecError):
    """Pop needed more words than the message holds"""


class InsufficientInitialBitsError(CodecError):
    """Posterior pops during encoding ran out of seeded bits"""


class ModelMismatchError(CodecError):
    """Container was produced with a different model"""


class ContainerFormatError(CodecError):
    """Container bytes are truncated or malformed"""


class MissingTableError(CodecError):
    """Sequential decoder has no probability table for a cloud"""

    def __init__(self, message: str, index: int):
        self.index = index
        super().__init__(message)


__all__ = [
    'PccError', 'RejectedInputError', 'EmptyOutputError', 'PointParseError', 'StorageError',
    'ShapeError', 'TapeStateError', 'ConfigurationError', 'NumericError',
    'TrainingDivergedError', 'ModelFormatError', 'CodecError', 'MessageExhaustedError',
    'InsufficientInitialBitsError', 'ModelMismatchError', 'ContainerFormatError',
    'MissingTableError',
]
