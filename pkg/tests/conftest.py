# tests/conftest.py
from pathlib import Path
from typing import Callable

import numpy as np
import pytest
import soundfile as sf

from perfmei.audio import AudioSignal
from perfmei.models import SUMMARY_NAMES, TRACK_NAMES, AnalysisConfig
from perfmei.schemas import ContinuousTracks, ExtDataPayload, FrameInfo, MeiDocument, ScoreNote, SummaryFields, When
from perfmei.utils import note_name_from_midi

SR = 44100


def make_signal(samples: np.ndarray, sample_rate_hz: int = SR, source: str = "synthetic") -> AudioSignal:
    samples = np.ascontiguousarray(samples, dtype=float)
    samples.setflags(write=False)
    return AudioSignal(samples=samples, sample_rate_hz=sample_rate_hz, source=source)


def sine(freq_hz: float, duration_s: float, amplitude: float = 1.0, sr: int = SR) -> np.ndarray:
    t = np.arange(int(round(duration_s * sr))) / sr
    return amplitude * np.sin(2 * np.pi * freq_hz * t)


def sawtooth(freq_hz: float, duration_s: float, amplitude: float = 0.5, sr: int = SR) -> np.ndarray:
    t = np.arange(int(round(duration_s * sr))) / sr
    phase = (freq_hz * t) % 1.0
    return amplitude * (2.0 * phase - 1.0)


def vibrato_sine(
    freq_hz: float,
    duration_s: float,
    rate_hz: float,
    depth_cents: float,
    amplitude: float = 0.8,
    sr: int = SR,
) -> np.ndarray:
    t = np.arange(int(round(duration_s * sr))) / sr
    instantaneous = freq_hz * 2.0 ** (depth_cents / 1200.0 * np.sin(2 * np.pi * rate_hz * t))
    phase = 2 * np.pi * np.cumsum(instantaneous) / sr
    return amplitude * np.sin(phase)


def white_noise(duration_s: float, amplitude: float = 0.3, seed: int = 0, sr: int = SR) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return amplitude * rng.standard_normal(int(round(duration_s * sr)))


@pytest.fixture
def cfg() -> AnalysisConfig:
    return AnalysisConfig()


@pytest.fixture
def write_wav(tmp_path: Path) -> Callable[..., Path]:
    def _write(name: str, samples: np.ndarray, sr: int = SR, subtype: str = "FLOAT") -> Path:
        path = tmp_path / name
        sf.write(path, samples, sr, subtype=subtype)
        return path
    return _write


@pytest.fixture
def write_text(tmp_path: Path) -> Callable[[str, str], Path]:
    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


@pytest.fixture
def sine_fixture(write_wav, write_text):
    """1.2 s 440 Hz full-scale sine with one note from 0.1 s to 1.1 s."""
    audio = write_wav("sine.wav", sine(440.0, 1.2))
    notes = write_text("sine.csv", "onset,frequency,duration\n0.1,440.0,1.0\n")
    return audio, notes


def nine_digits(x: float) -> float:
    return float(f"{x:.9g}")


def random_payload(rng: np.random.Generator, onset_s: float, max_frames: int = 20, canonical: bool = True):
    """canonical=True: значения уже округлены до 9 значащих цифр и переживают цикл без потерь."""
    round_value = nine_digits if canonical else float
    count = int(rng.integers(0, max_frames + 1))

    def value(low: float, high: float):
        if rng.random() < 0.15:
            return None
        return round_value(rng.uniform(low, high))

    def bounds(name: str):
        return (0.0, 1.0) if "flatness" in name else (-1000.0, 1000.0)

    tracks = {name: [value(*bounds(name)) for _ in range(count)] for name in TRACK_NAMES}
    summary = {name: value(*bounds(name)) for name in SUMMARY_NAMES}
    return ExtDataPayload(
        onset_s=onset_s,
        duration_s=round_value(rng.uniform(0.01, 2.0)),
        frame=FrameInfo(hop_s=0.01, count=count),
        continuous=ContinuousTracks(**tracks),
        summary=SummaryFields(**summary),
    )


def random_document(rng: np.random.Generator, max_notes: int = 50):
    count = int(rng.integers(0, max_notes + 1))
    onsets_ms = np.cumsum(rng.integers(0, 2000, size=count))
    notes, whens = [], []
    for index, onset_ms in enumerate(onsets_ms, start=1):
        note_id = f"n{index:04d}"
        onset_s = int(onset_ms) / 1000.0
        notes.append(ScoreNote(id=note_id, name=note_name_from_midi(int(rng.integers(0, 128)))))
        whens.append(When(absolute_s=onset_s, target_id=note_id, payload=random_payload(rng, onset_s)))
    return MeiDocument(notes=notes, whens=whens, av_target=f"take{int(rng.integers(100))}.wav")
