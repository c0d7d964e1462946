# perfmei/services.py
"""
Конвейер, общий для CLI и HTTP-сервиса:
аудио + транскрипция -> дескрипторы -> сводка -> payload / MEI.
"""
from typing import List, Optional, Sequence, Tuple
import logging

from perfmei.audio import AudioSignal
from perfmei.descriptors import analyze_notes
from perfmei.mei import build_document, serialize_mei
from perfmei.models import (
    AnalysisConfig,
    DescriptorFrameSeries,
    NoteName,
    NoteSummary,
    TranscribedNote,
    TranscriptionFile,
)
from perfmei.payload import json_encode_payload, payload_from_record
from perfmei.schemas import ExtDataPayload, MeiDocument
from perfmei.summary import summarize_note
from perfmei.transcription import assign_ids
from perfmei.utils import note_name_from_hz

logger = logging.getLogger(__name__)

DEFAULT_FFT_LEN = 2048


def analysis_config(
    sample_rate_hz: int,
    hop_ms: Optional[float] = None,
    window: Optional[int] = None,
) -> AnalysisConfig:
    """AnalysisConfig с переопределёнными флагами; БПФ не короче окна."""
    overrides = {"sample_rate_hz": sample_rate_hz}
    if hop_ms is not None:
        overrides["hop_s"] = hop_ms / 1000.0
    if window is not None:
        overrides["window_len"] = window
        overrides["fft_len"] = max(DEFAULT_FFT_LEN, window)
    return AnalysisConfig(**overrides)


def note_names_for(notes: Sequence[TranscribedNote]) -> List[NoteName]:
    return [note_name_from_hz(note.nominal_f0_hz) for note in notes]


def analyze_transcription(
    audio: AudioSignal,
    transcription: TranscriptionFile,
    cfg: AnalysisConfig,
    workers: Optional[int] = None,
) -> List[Tuple[DescriptorFrameSeries, NoteSummary]]:
    series = analyze_notes(audio, transcription.notes, cfg, workers=workers)
    return [(s, summarize_note(s, cfg)) for s in series]


def describe_performance(
    audio: AudioSignal,
    transcription: TranscriptionFile,
    cfg: AnalysisConfig,
    id_prefix: str = "note-",
    workers: Optional[int] = None,
) -> List[ExtDataPayload]:
    transcription = assign_ids(transcription, id_prefix)
    records = analyze_transcription(audio, transcription, cfg, workers)
    return [
        payload_from_record(note, series, summary)
        for note, (series, summary) in zip(transcription.notes, records)
    ]


def describe_json(payloads: Sequence[ExtDataPayload]) -> str:
    """JSON-массив payload в канонической форме."""
    return "[" + ",".join(json_encode_payload(p) for p in payloads) + "]"


def encode_performance(
    audio: AudioSignal,
    transcription: TranscriptionFile,
    cfg: AnalysisConfig,
    av_target: str,
    id_prefix: str = "note-",
    workers: Optional[int] = None,
) -> MeiDocument:
    transcription = assign_ids(transcription, id_prefix)
    records = analyze_transcription(audio, transcription, cfg, workers)
    names = note_names_for(transcription.notes)
    doc = build_document(transcription.notes, names, records, av_target)
    logger.info(f"Encoded {len(doc.notes)} notes from {audio.source or 'audio'} -> {av_target}")
    return doc


def encode_to_mei(
    audio: AudioSignal,
    transcription: TranscriptionFile,
    cfg: AnalysisConfig,
    av_target: str,
    id_prefix: str = "note-",
    workers: Optional[int] = None,
) -> str:
    return serialize_mei(encode_performance(audio, transcription, cfg, av_target, id_prefix, workers))
