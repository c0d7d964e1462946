# perfmei/payload.py
"""
Каноническая JSON-форма payload для <extData>:
фиксированный порядок ключей, числа с 9 значащими цифрами, без пробелов.
Повторное кодирование декодированного payload даёт те же байты.
"""
from typing import Any, Iterable, Optional, Tuple
import json
import logging
import math
import numbers

from pydantic import ValidationError

from perfmei.exceptions import MeiPayloadError, MeiSchemaError
from perfmei.models import SUMMARY_NAMES, TRACK_NAMES, DescriptorFrameSeries, NoteSummary, TranscribedNote
from perfmei.schemas import (
    PAYLOAD_SCHEMA,
    ContinuousTracks,
    ExtDataPayload,
    FrameInfo,
    ParseMode,
    SummaryFields,
)

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ("schema", "onset_s", "duration_s", "frame", "continuous", "summary")
FRAME_KEYS = ("hop_s", "count")

SIGNIFICANT_DIGITS = 9


def format_number(value: Any) -> str:
    """
    Число в канонической форме: целые как есть, вещественные с 9 значащими
    цифрами; для |x| в [1e-3, 1e9) без экспоненты. -0 пишется как 0.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers in the payload grammar")
    if isinstance(value, numbers.Integral):
        return str(int(value))
    x = float(value)
    if not math.isfinite(x):
        raise ValueError(f"non-finite number {x!r} cannot be encoded")
    if x == 0.0:
        return "0"
    return f"{x:.{SIGNIFICANT_DIGITS}g}"


def _encode_string(text: str) -> str:
    # '>' -> \u003e
    return json.dumps(text, ensure_ascii=True).replace(">", "\\u003e")


def _encode_value(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Real):
        return format_number(value)
    if isinstance(value, str):
        return _encode_string(value)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_encode_value(item) for item in value) + "]"
    if isinstance(value, dict):
        return _encode_object((key, value[key]) for key in sorted(value))
    raise TypeError(f"cannot encode {type(value).__name__} in a payload")


def _encode_object(pairs: Iterable[Tuple[str, Any]]) -> str:
    return "{" + ",".join(f"{_encode_string(key)}:{_encode_value(value)}" for key, value in pairs) + "}"


def _with_extras(model, names: Iterable[str]):
    pairs = [(name, getattr(model, name)) for name in names]
    extras = model.model_extra or {}
    pairs.extend((key, extras[key]) for key in sorted(extras))
    return pairs


def json_encode_payload(p: ExtDataPayload) -> str:
    members = [
        ("schema", _encode_string(p.schema_id)),
        ("onset_s", format_number(p.onset_s)),
        ("duration_s", format_number(p.duration_s)),
        ("frame", _encode_object(_with_extras(p.frame, FRAME_KEYS))),
        ("continuous", _encode_object(_with_extras(p.continuous, TRACK_NAMES))),
        ("summary", _encode_object(_with_extras(p.summary, SUMMARY_NAMES))),
    ]
    extras = p.model_extra or {}
    members.extend((key, _encode_value(extras[key])) for key in sorted(extras))
    return "{" + ",".join(f"{_encode_string(key)}:{value}" for key, value in members) + "}"


def _reject_constant(token: str):
    raise ValueError(f"{token} is not allowed in payload JSON")


def _check_keys(obj: Any, expected: Iterable[str], path: str, note_id: Optional[str]) -> None:
    label = f"note {note_id}" if note_id else "payload"
    if not isinstance(obj, dict):
        raise MeiSchemaError(f"{label}: {path or 'payload'} must be a JSON object", note_id=note_id, field=path or None)
    expected = list(expected)
    unknown = sorted(set(obj) - set(expected))
    missing = [key for key in expected if key not in obj]
    if unknown:
        field = f"{path}.{unknown[0]}" if path else unknown[0]
        raise MeiSchemaError(f"{label}: unknown key '{field}'", note_id=note_id, field=field)
    if missing:
        field = f"{path}.{missing[0]}" if path else missing[0]
        raise MeiSchemaError(f"{label}: missing key '{field}'", note_id=note_id, field=field)


def _error_field(exc: ValidationError) -> Tuple[str, str]:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error["loc"] if not isinstance(part, int))
    return location.replace("schema_id", "schema"), error["msg"]


def _check_track_lengths(data: dict, note_id: Optional[str]) -> None:
    frame, continuous = data.get("frame"), data.get("continuous")
    if not (isinstance(frame, dict) and isinstance(continuous, dict)):
        return
    count = frame.get("count")
    if not isinstance(count, int) or isinstance(count, bool):
        return
    for name in TRACK_NAMES:
        track = continuous.get(name)
        if isinstance(track, list) and len(track) != count:
            label = f"note {note_id}" if note_id else "payload"
            raise MeiSchemaError(
                f"{label}: continuous.{name} has {len(track)} values but frame.count is {count}",
                note_id=note_id,
                field=f"continuous.{name}",
            )


def json_decode_payload(
    text: str,
    note_id: Optional[str] = None,
    mode: ParseMode = ParseMode.strict,
) -> ExtDataPayload:
    """
    Разбор JSON payload. Не-JSON -> MeiPayloadError; нарушение схемы
    (ключи, типы, длины треков) -> MeiSchemaError с id ноты и полем.
    """
    mode = ParseMode(mode)
    label = f"note {note_id}" if note_id else "payload"
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise MeiPayloadError(f"{label}: extData does not contain valid JSON ({exc})", note_id=note_id) from exc

    if mode is ParseMode.strict:
        _check_keys(data, TOP_LEVEL_KEYS, "", note_id)
        _check_keys(data["frame"], FRAME_KEYS, "frame", note_id)
        _check_keys(data["continuous"], TRACK_NAMES, "continuous", note_id)
        _check_keys(data["summary"], SUMMARY_NAMES, "summary", note_id)
    elif not isinstance(data, dict):
        raise MeiSchemaError(f"{label}: payload must be a JSON object", note_id=note_id)
    _check_track_lengths(data, note_id)

    try:
        return ExtDataPayload.model_validate_json(text, strict=mode is ParseMode.strict)
    except ValidationError as exc:
        field, message = _error_field(exc)
        raise MeiSchemaError(f"{label}: {field or 'payload'}: {message}", note_id=note_id, field=field or None) from exc


def payload_from_record(note: TranscribedNote, series: DescriptorFrameSeries, summary: NoteSummary) -> ExtDataPayload:
    return ExtDataPayload(
        schema=PAYLOAD_SCHEMA,
        onset_s=note.onset_s,
        duration_s=note.duration_s,
        frame=FrameInfo(hop_s=series.grid.hop_s, count=series.grid.count),
        continuous=ContinuousTracks(**{name: list(getattr(series, name)) for name in TRACK_NAMES}),
        summary=SummaryFields(**summary.model_dump()),
    )
