# perfmei/models.py
"""
Доменные типы: имена нот, ноты транскрипции, параметры анализа,
покадровые дескрипторы и сводные дескрипторы ноты.
Все модели неизменяемые (frozen) и безопасны для передачи между потоками.
"""
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal, Optional, Tuple
import enum
import re

XML_ID_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.-]*$")

PITCH_CLASSES = {"c": 0, "d": 2, "e": 4, "f": 5, "g": 7, "a": 9, "b": 11}


class Accidental(str, enum.Enum):
    natural = "natural"
    sharp = "sharp"
    flat = "flat"


ACCIDENTAL_OFFSETS = {Accidental.natural: 0, Accidental.sharp: 1, Accidental.flat: -1}


class NoteName(BaseModel):
    """Имя ноты в научной нотации (C4 = MIDI 60)."""
    model_config = ConfigDict(frozen=True)

    pname: Literal["c", "d", "e", "f", "g", "a", "b"]
    accidental: Accidental = Accidental.natural
    octave: int = Field(..., ge=-1, le=9)

    @property
    def midi(self) -> int:
        return 12 * (self.octave + 1) + PITCH_CLASSES[self.pname] + ACCIDENTAL_OFFSETS[self.accidental]

    @model_validator(mode="after")
    def _check_midi_range(self) -> "NoteName":
        if not 0 <= self.midi <= 127:
            raise ValueError(f"{self} is outside the MIDI range 0..127")
        return self

    def __str__(self) -> str:
        sign = {Accidental.natural: "", Accidental.sharp: "#", Accidental.flat: "b"}[self.accidental]
        return f"{self.pname.upper()}{sign}{self.octave}"


class TranscribedNote(BaseModel):
    """Одна строка транскрипции Tony. id пустой, пока не вызван assign_ids."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    id: str = ""
    onset_s: float = Field(..., ge=0)
    duration_s: float = Field(..., gt=0)
    nominal_f0_hz: float = Field(..., gt=0)

    @field_validator("id")
    @classmethod
    def _check_id(cls, value: str) -> str:
        if value and not XML_ID_PATTERN.match(value):
            raise ValueError(f"'{value}' is not a valid xml:id")
        return value

    @property
    def offset_s(self) -> float:
        return self.onset_s + self.duration_s


class TranscriptionFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    notes: List[TranscribedNote] = Field(default_factory=list)
    source_path: str = ""


class AnalysisConfig(BaseModel):
    """
    Параметры анализа. Значения по умолчанию рассчитаны на вокал при 44.1 кГц:
    окно Ханна 2048 отсчётов, шаг 10 мс, поиск f0 в полосе +-3 полутона.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    sample_rate_hz: int = Field(44100, gt=0)
    window_len: int = Field(2048, ge=16)
    fft_len: int = Field(2048, ge=16)
    hop_s: float = Field(0.010, gt=0)
    f0_search_semitones: float = Field(3.0, gt=0)
    voicing_threshold: float = Field(0.3, ge=0, le=1)
    f0_periods: int = Field(4, ge=1)
    vibrato_min_dur_s: float = Field(0.25, ge=0)
    vibrato_band_hz: Tuple[float, float] = (3.0, 9.0)
    vibrato_min_depth_cents: float = Field(10.0, ge=0)
    vibrato_max_gap_frames: int = Field(3, ge=0)
    silence_floor_db: float = -120.0

    @model_validator(mode="after")
    def _check_consistency(self) -> "AnalysisConfig":
        if self.window_len > self.fft_len:
            raise ValueError(f"window_len ({self.window_len}) must not exceed fft_len ({self.fft_len})")
        low, high = self.vibrato_band_hz
        frame_nyquist = 1.0 / (2.0 * self.hop_s)
        if not 0 < low < high < frame_nyquist:
            raise ValueError(
                f"vibrato band must satisfy 0 < low < high < {frame_nyquist:g} Hz, got [{low:g}, {high:g}]"
            )
        return self

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2.0


class FrameGrid(BaseModel):
    """Центры кадров внутри области ноты, шаг hop_s."""
    model_config = ConfigDict(frozen=True)

    note_id: str = ""
    frame_times_s: List[float]
    hop_s: float = Field(..., gt=0)
    count: int = Field(..., ge=1)

    @model_validator(mode="after")
    def _check_count(self) -> "FrameGrid":
        if len(self.frame_times_s) != self.count:
            raise ValueError(f"grid has {len(self.frame_times_s)} frame times but count={self.count}")
        return self


TRACK_NAMES = (
    "f0_hz",
    "power_db",
    "spectral_centroid_hz",
    "spectral_flux",
    "spectral_slope",
    "spectral_flatness",
)


class DescriptorFrameSeries(BaseModel):
    """Шесть непрерывных дескрипторов ноты, по одному значению на кадр."""
    model_config = ConfigDict(frozen=True)

    grid: FrameGrid
    f0_hz: List[Optional[float]]
    power_db: List[float]
    spectral_centroid_hz: List[Optional[float]]
    spectral_flux: List[Optional[float]]
    spectral_slope: List[Optional[float]]
    spectral_flatness: List[Optional[float]]

    @model_validator(mode="after")
    def _check_lengths(self) -> "DescriptorFrameSeries":
        for name in TRACK_NAMES:
            if len(getattr(self, name)) != self.grid.count:
                raise ValueError(f"{name} has {len(getattr(self, name))} values, expected {self.grid.count}")
        return self


class NoteSummary(BaseModel):
    """
    Десять сводных дескрипторов ноты.
    Поля высоты тона (perceived_pitch_hz, jitter, vibrato_*) равны None вместе,
    если озвученных кадров меньше двух.
    """
    model_config = ConfigDict(frozen=True)

    perceived_pitch_hz: Optional[float] = None
    jitter: Optional[float] = None
    vibrato_rate_hz: Optional[float] = None
    vibrato_depth_cents: Optional[float] = None
    mean_power_db: Optional[float] = None
    shimmer: Optional[float] = None
    mean_spectral_centroid_hz: Optional[float] = None
    mean_spectral_flux: Optional[float] = None
    mean_spectral_slope: Optional[float] = None
    mean_spectral_flatness: Optional[float] = None


SUMMARY_NAMES = tuple(NoteSummary.model_fields)
