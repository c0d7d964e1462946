# perfmei/exceptions.py
"""
Иерархия ошибок пакета.
Каждая ошибка несёт место возникновения (строка CSV, id ноты, поле payload),
чтобы CLI и HTTP-слой могли выдать локализованное сообщение.
"""
from typing import Optional, Sequence


class PerfMeiError(Exception):
    """Базовая ошибка perfmei."""


class DomainError(PerfMeiError, ValueError):
    """Аргумент вне области определения (частота <= 0, MIDI вне 0..127)."""


class UsageError(PerfMeiError, ValueError):
    """Неверное использование API: несогласованные аргументы."""


class TranscriptionError(PerfMeiError, ValueError):
    """Ошибка разбора CSV-транскрипции с номером строки (1-based)."""

    def __init__(self, message: str, line: Optional[int] = None, lines: Sequence[int] = ()):
        self.line = line
        self.lines = tuple(lines) if lines else ((line,) if line is not None else ())
        super().__init__(message)


class CsvParseError(TranscriptionError):
    """Строка не разбирается: число колонок или нечисловое поле."""


class CsvValidationError(TranscriptionError):
    """Строка разобрана, но значения недопустимы (или нарушена монофония)."""


class AudioError(PerfMeiError):
    """Ошибка, связанная с аудио."""


class AudioFormatError(AudioError, ValueError):
    """Файл не WAV либо частота дискретизации не совпадает с конфигурацией."""


class NoteRangeError(AudioError, ValueError):
    """Область ноты выходит за пределы аудио."""

    def __init__(self, message: str, note_id: str = ""):
        self.note_id = note_id
        super().__init__(message)


class MeiError(PerfMeiError, ValueError):
    """Ошибка MEI-кодека; note_id и field указывают место, если известны."""

    def __init__(self, message: str, note_id: Optional[str] = None, field: Optional[str] = None):
        self.note_id = note_id
        self.field = field
        super().__init__(message)


class MeiParseError(MeiError):
    """XML не является корректно сформированным."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        super().__init__(message)


class MeiLinkError(MeiError):
    """when/@data ссылается на отсутствующий xml:id."""


class MeiPayloadError(MeiError):
    """Содержимое CDATA не является JSON."""


class MeiSchemaError(MeiError):
    """Структура документа или payload не соответствует схеме."""
