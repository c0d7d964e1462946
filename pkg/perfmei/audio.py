# perfmei/audio.py
"""
Загрузка WAV (PCM 16 бит или float 32 бит, моно или стерео).
Стерео сводится в моно усреднением каналов, отсчёты в диапазоне [-1, 1].
"""
from pathlib import Path
from typing import BinaryIO, Union
import logging

import numpy as np
import soundfile as sf
from pydantic import BaseModel, ConfigDict

from perfmei.exceptions import AudioFormatError
from perfmei.models import AnalysisConfig

logger = logging.getLogger(__name__)

WAV_FORMATS = {"WAV", "WAVEX"}


class AudioSignal(BaseModel):
    """Моно-сигнал только для чтения; разделяется между потоками анализа."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    samples: np.ndarray
    sample_rate_hz: int
    source: str = ""

    @property
    def duration_s(self) -> float:
        return self.samples.shape[0] / self.sample_rate_hz


def load_wav(source: Union[str, Path, BinaryIO], name: str = "") -> AudioSignal:
    name = name or (str(source) if isinstance(source, (str, Path)) else "<upload>")
    try:
        with sf.SoundFile(source) as f:
            if f.format not in WAV_FORMATS:
                raise AudioFormatError(f"{name}: expected RIFF/WAVE audio, got {f.format}")
            data = f.read(dtype="float64", always_2d=True)
            sample_rate = f.samplerate
            subtype = f.subtype
    except (RuntimeError, sf.SoundFileError) as exc:
        raise AudioFormatError(f"{name}: cannot decode audio ({exc})") from exc

    samples = data.mean(axis=1) if data.shape[1] > 1 else data[:, 0]
    samples = np.ascontiguousarray(samples)
    samples.setflags(write=False)
    logger.debug(f"Loaded {name}: {data.shape[1]} channel(s), {sample_rate} Hz, {subtype}, {samples.shape[0]} samples")
    return AudioSignal(samples=samples, sample_rate_hz=sample_rate, source=name)


def check_sample_rate(audio: AudioSignal, cfg: AnalysisConfig) -> None:
    if audio.sample_rate_hz != cfg.sample_rate_hz:
        raise AudioFormatError(
            f"{audio.source or 'audio'}: sample rate {audio.sample_rate_hz} Hz does not match "
            f"the analysis sample rate {cfg.sample_rate_hz} Hz"
        )
