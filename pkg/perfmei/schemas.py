# perfmei/schemas.py
"""
Модели обмена: JSON-payload внутри <extData> и MEI-документ в памяти.
Вложенные модели payload допускают лишние ключи (lenient-режим их сохраняет);
strict-режим проверяет точный набор ключей при декодировании.
"""
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal, Optional
import enum

from perfmei.models import TRACK_NAMES, XML_ID_PATTERN, NoteName, NoteSummary

PAYLOAD_SCHEMA = "ampact-extdata/1.0"


class ParseMode(str, enum.Enum):
    strict = "strict"
    lenient = "lenient"


class FrameInfo(BaseModel):
    model_config = ConfigDict(frozen=True, extra="allow", allow_inf_nan=False)

    hop_s: float
    count: int = Field(..., ge=0)


class ContinuousTracks(BaseModel):
    model_config = ConfigDict(frozen=True, extra="allow", allow_inf_nan=False)

    f0_hz: List[Optional[float]]
    power_db: List[Optional[float]]
    spectral_centroid_hz: List[Optional[float]]
    spectral_flux: List[Optional[float]]
    spectral_slope: List[Optional[float]]
    spectral_flatness: List[Optional[float]]


class SummaryFields(NoteSummary):
    model_config = ConfigDict(frozen=True, extra="allow", allow_inf_nan=False)


class ExtDataPayload(BaseModel):
    """Канонический JSON-объект одного <extData>."""
    model_config = ConfigDict(frozen=True, extra="allow", allow_inf_nan=False, populate_by_name=True)

    schema_id: Literal["ampact-extdata/1.0"] = Field(PAYLOAD_SCHEMA, alias="schema")
    onset_s: float
    duration_s: float
    frame: FrameInfo
    continuous: ContinuousTracks
    summary: SummaryFields

    @model_validator(mode="after")
    def _check_track_lengths(self) -> "ExtDataPayload":
        for name in TRACK_NAMES:
            length = len(getattr(self.continuous, name))
            if length != self.frame.count:
                raise ValueError(
                    f"continuous.{name} has {length} values but frame.count is {self.frame.count}"
                )
        return self


class ScoreNote(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    name: NoteName

    @field_validator("id")
    @classmethod
    def _check_id(cls, value: str) -> str:
        if not XML_ID_PATTERN.match(value):
            raise ValueError(f"'{value}' is not a valid xml:id")
        return value


class When(BaseModel):
    """Точка во времени записи, ссылающаяся на ноту (data="#id")."""
    model_config = ConfigDict(frozen=True)

    absolute_s: float = Field(..., ge=0)
    target_id: str
    payload: ExtDataPayload


class MeiDocument(BaseModel):
    """
    Партитура (ноты) + исполнение (when) + ссылка на аудио.
    Ссылки when -> note модель не проверяет: это делает validate_document.
    """
    model_config = ConfigDict(frozen=True)

    notes: List[ScoreNote] = Field(default_factory=list)
    whens: List[When] = Field(default_factory=list)
    av_target: str = ""


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    message: str
    note_id: Optional[str] = None
    field: Optional[str] = None

    def __str__(self) -> str:
        location = self.note_id or "document"
        if self.field:
            location = f"{location} [{self.field}]"
        return f"{location}: {self.message}"
