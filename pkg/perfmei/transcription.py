# perfmei/transcription.py
"""
Импорт нот из CSV-экспорта Tony (onset_s,frequency_hz,duration_s).
Ноты используются вместо выравнивания по партитуре: каждая задаёт
частотно-временную область, в которой считаются дескрипторы.
"""
import csv
import logging
import math
from pathlib import Path
from typing import List, Tuple, Union

from perfmei.exceptions import CsvParseError, CsvValidationError, UsageError
from perfmei.models import XML_ID_PATTERN, TranscribedNote, TranscriptionFile

logger = logging.getLogger(__name__)

# Допустимое перекрытие соседних нот
OVERLAP_TOLERANCE_S = 0.010

COLUMNS = ("onset_s", "frequency_hz", "duration_s")


def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def _parse_row(fields: List[str], line_no: int) -> TranscribedNote:
    if len(fields) != len(COLUMNS):
        raise CsvParseError(
            f"line {line_no}: expected {len(COLUMNS)} columns ({','.join(COLUMNS)}), got {len(fields)}",
            line=line_no,
        )
    values = []
    for column, field in zip(COLUMNS, fields):
        try:
            values.append(float(field))
        except ValueError:
            raise CsvParseError(f"line {line_no}: {column} '{field}' is not a number", line=line_no)

    onset, frequency, duration = values
    if not all(math.isfinite(v) for v in values):
        raise CsvValidationError(f"line {line_no}: values must be finite", line=line_no)
    if onset < 0:
        raise CsvValidationError(f"line {line_no}: onset {onset:g} s is negative", line=line_no)
    if duration <= 0:
        raise CsvValidationError(f"line {line_no}: duration {duration:g} s must be positive", line=line_no)
    if frequency <= 0:
        raise CsvValidationError(f"line {line_no}: frequency {frequency:g} Hz must be positive", line=line_no)
    return TranscribedNote(onset_s=onset, duration_s=duration, nominal_f0_hz=frequency)


def parse_tony_csv(text: str, source_path: str = "") -> TranscriptionFile:
    """
    Разбор CSV Tony. Первая строка с нечисловым первым полем считается заголовком.
    Пустые строки пропускаются; любая другая строка либо даёт ноту, либо ошибку
    с номером строки (1-based).
    Ноты сортируются по onset; перекрытие соседних нот больше 10 мс -> ошибка.
    """
    if text.startswith("\ufeff"):
        text = text[1:]

    rows: List[Tuple[int, TranscribedNote]] = []
    first_row = True
    for line_no, raw in enumerate(text.split("\n"), start=1):
        raw = raw[:-1] if raw.endswith("\r") else raw
        if not raw.strip():
            continue
        try:
            fields = [field.strip() for field in next(csv.reader([raw]))]
        except csv.Error as exc:
            raise CsvParseError(f"line {line_no}: {exc}", line=line_no) from exc
        if first_row:
            first_row = False
            if not _is_number(fields[0]):
                logger.debug(f"Skipping header line {line_no}: {raw!r}")
                continue
        rows.append((line_no, _parse_row(fields, line_no)))

    rows.sort(key=lambda row: row[1].onset_s)
    for (line_a, a), (line_b, b) in zip(rows, rows[1:]):
        if b.onset_s < a.offset_s - OVERLAP_TOLERANCE_S - 1e-9:
            overlap_ms = (a.offset_s - b.onset_s) * 1000.0
            raise CsvValidationError(
                f"lines {line_a} and {line_b}: notes overlap by {overlap_ms:.1f} ms "
                f"(tolerance {OVERLAP_TOLERANCE_S * 1000:.0f} ms); transcription must be monophonic",
                line=line_b,
                lines=(line_a, line_b),
            )

    logger.debug(f"Parsed {len(rows)} notes from {source_path or '<text>'}")
    return TranscriptionFile(notes=[note for _, note in rows], source_path=source_path)


def read_tony_csv(path: Union[str, Path]) -> TranscriptionFile:
    """Чтение файла (UTF-8, переводы строк \\n и \\r\\n)."""
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line_no = data[:exc.start].count(b"\n") + 1
        raise CsvParseError(f"line {line_no}: not valid UTF-8 (byte 0x{data[exc.start]:02x})", line=line_no) from exc
    return parse_tony_csv(text, source_path=str(path))


def assign_ids(t: TranscriptionFile, prefix: str = "note-") -> TranscriptionFile:
    """id = <prefix><4-значный индекс с 0001> в порядке onset."""
    if not XML_ID_PATTERN.match(f"{prefix}0001"):
        raise UsageError(f"id prefix '{prefix}' does not produce valid xml:ids")
    notes = [
        note.model_copy(update={"id": f"{prefix}{index:04d}"})
        for index, note in enumerate(t.notes, start=1)
    ]
    return t.model_copy(update={"notes": notes})


def serialize_tony_csv(t: TranscriptionFile) -> str:
    """Обратная запись в формат Tony, без заголовка; repr сохраняет float точно."""
    return "".join(
        f"{note.onset_s!r},{note.nominal_f0_hz!r},{note.duration_s!r}\n" for note in t.notes
    )
