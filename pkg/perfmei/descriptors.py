# perfmei/descriptors.py
"""
Покадровые непрерывные дескрипторы внутри области ноты:
f0, мощность, спектральные центроид, поток, наклон и плоскостность.

Окно Ханна window_len, БПФ fft_len, шаг hop_s. Кадры, выходящие за края
сигнала, дополняются нулями. f0 ищется нормированной автокорреляцией только
в полосе +-f0_search_semitones вокруг номинальной частоты ноты.
"""
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import List, Optional, Sequence
import logging
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft
from scipy.signal import get_window

from perfmei.audio import AudioSignal, check_sample_rate
from perfmei.exceptions import NoteRangeError
from perfmei.models import AnalysisConfig, DescriptorFrameSeries, FrameGrid, TranscribedNote

logger = logging.getLogger(__name__)

FLATNESS_FLOOR = 1e-12


@lru_cache(maxsize=8)
def hann_window(length: int) -> np.ndarray:
    window = get_window("hann", length)
    window.setflags(write=False)
    return window


def bin_frequencies(cfg: AnalysisConfig) -> np.ndarray:
    return sp_fft.rfftfreq(cfg.fft_len, d=1.0 / cfg.sample_rate_hz)


def center_index(center_s: float, sample_rate_hz: int) -> int:
    # Половина отсчёта округляется вверх
    return int(math.floor(center_s * sample_rate_hz + 0.5 + 1e-7))


def padded_slice(samples: np.ndarray, start: int, length: int) -> np.ndarray:
    out = np.zeros(length)
    lo = max(start, 0)
    hi = min(start + length, samples.shape[0])
    if hi > lo:
        out[lo - start:hi - start] = samples[lo:hi]
    return out


def _frame(audio: AudioSignal, center_s: float, length: int) -> np.ndarray:
    start = center_index(center_s, audio.sample_rate_hz) - length // 2
    return padded_slice(audio.samples, start, length)


def frame_note(audio: AudioSignal, note: TranscribedNote, cfg: AnalysisConfig) -> FrameGrid:
    """
    Сетка кадров ноты: первый центр в onset + hop/2, далее с шагом hop.
    Нота короче одного шага получает один кадр в середине области.
    """
    tolerance = 0.5 / audio.sample_rate_hz
    if note.onset_s >= audio.duration_s or note.offset_s > audio.duration_s + tolerance:
        raise NoteRangeError(
            f"note {note.id or '?'}: region [{note.onset_s:.3f}, {note.offset_s:.3f}] s "
            f"lies outside the audio ({audio.duration_s:.3f} s)",
            note_id=note.id,
        )

    count = int(math.floor(note.duration_s / cfg.hop_s + 1e-9))
    if count == 0:
        times = [note.onset_s + note.duration_s / 2.0]
    else:
        times = [note.onset_s + cfg.hop_s * (k + 0.5) for k in range(count)]
    return FrameGrid(note_id=note.id, frame_times_s=times, hop_s=cfg.hop_s, count=len(times))


def frame_spectrum(audio: AudioSignal, center_s: float, cfg: AnalysisConfig) -> np.ndarray:
    """Модуль rfft кадра с окном Ханна; fft_len/2 + 1 бинов."""
    frame = _frame(audio, center_s, cfg.window_len) * hann_window(cfg.window_len)
    return np.abs(sp_fft.rfft(frame, n=cfg.fft_len))


def frame_power_db(audio: AudioSignal, center_s: float, cfg: AnalysisConfig) -> float:
    """
    Средняя мощность кадра с окном Ханна, компенсированная на энергию окна,
    в дБ относительно полной шкалы. Синус амплитуды 1 даёт -3.01 дБ.
    """
    window = hann_window(cfg.window_len)
    weighted = _frame(audio, center_s, cfg.window_len) * window
    power = float(weighted @ weighted) / float(window @ window)
    if power <= 0.0:
        return cfg.silence_floor_db
    return max(10.0 * math.log10(power), cfg.silence_floor_db)


def f0_band(nominal_f0_hz: float, cfg: AnalysisConfig) -> tuple:
    ratio = 2.0 ** (cfg.f0_search_semitones / 12.0)
    return nominal_f0_hz / ratio, nominal_f0_hz * ratio


def track_f0(
    audio: AudioSignal,
    note: TranscribedNote,
    grid: FrameGrid,
    cfg: AnalysisConfig,
) -> List[Optional[float]]:
    """
    f0 по кадрам: нормированная автокорреляция только по лагам внутри полосы ноты,
    параболическая интерполяция пика. Кадр без пика выше voicing_threshold -> None.
    """
    sr = audio.sample_rate_hz
    f_low, f_high = f0_band(note.nominal_f0_hz, cfg)
    lag_min = max(1, math.ceil(sr / f_high))
    lag_max = max(lag_min, math.floor(sr / f_low))
    lags = np.arange(max(1, lag_min - 1), lag_max + 2)
    in_band = (lags >= lag_min) & (lags <= lag_max)
    # Интегрирование по f0_periods самых длинных периодов
    length = min(cfg.window_len, cfg.f0_periods * lag_max)

    track: List[Optional[float]] = []
    for center_s in grid.frame_times_s:
        start = center_index(center_s, sr) - length // 2
        segment = padded_slice(audio.samples, start, length + int(lags[-1]))
        reference = segment[:length]
        energy = float(reference @ reference)
        if energy <= 0.0:
            track.append(None)
            continue

        shifted = sliding_window_view(segment, length)[lags]
        cumulative = np.concatenate(([0.0], np.cumsum(segment * segment)))
        lag_energy = cumulative[lags + length] - cumulative[lags]
        denominator = np.sqrt(energy * lag_energy)
        numerator = shifted @ reference
        nccf = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)

        candidates = np.flatnonzero(in_band)
        k = int(candidates[np.argmax(nccf[candidates])])
        if nccf[k] < cfg.voicing_threshold:
            track.append(None)
            continue

        delta = 0.0
        if 0 < k < len(lags) - 1:
            left, peak, right = nccf[k - 1], nccf[k], nccf[k + 1]
            curvature = left - 2.0 * peak + right
            if curvature < 0:
                delta = float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))
        f0 = sr / (lags[k] + delta)
        track.append(float(min(max(f0, f_low), f_high)))
    return track


def spectral_centroid(spectrum: np.ndarray, bin_freqs: np.ndarray) -> Optional[float]:
    total = float(spectrum.sum())
    if total <= 0.0:
        return None
    return float(bin_freqs @ spectrum) / total


def _l1_normalize(spectrum: np.ndarray) -> np.ndarray:
    total = float(spectrum.sum())
    if total <= 0.0:
        return np.zeros_like(spectrum, dtype=float)
    return spectrum / total


def spectral_flux(spectrum_t: np.ndarray, spectrum_prev: Optional[np.ndarray] = None) -> float:
    """L2-норма разности L1-нормированных спектров; первый кадр ноты -> 0."""
    if spectrum_prev is None:
        return 0.0
    if spectrum_t.shape != spectrum_prev.shape:
        raise ValueError(f"spectra differ in length: {spectrum_t.shape} vs {spectrum_prev.shape}")
    return float(np.linalg.norm(_l1_normalize(spectrum_t) - _l1_normalize(spectrum_prev)))


def spectral_slope(spectrum: np.ndarray, bin_freqs: np.ndarray) -> Optional[float]:
    """Наклон МНК нормированных амплитуд по частоте бина (1/Гц)."""
    if spectrum.shape[0] < 2:
        raise ValueError("spectral slope needs at least two bins")
    total = float(spectrum.sum())
    if total <= 0.0:
        return None
    weights = spectrum / total
    centered = bin_freqs - bin_freqs.mean()
    return float(centered @ weights) / float(centered @ centered)


def spectral_flatness(power_spectrum: np.ndarray) -> Optional[float]:
    """Отношение геометрического и арифметического средних спектра мощности."""
    peak = float(power_spectrum.max()) if power_spectrum.size else 0.0
    if peak <= 0.0:
        return None
    floored = np.maximum(power_spectrum, FLATNESS_FLOOR * peak)
    geometric = math.exp(float(np.mean(np.log(floored))))
    arithmetic = float(power_spectrum.mean())
    return min(max(geometric / arithmetic, 0.0), 1.0)


def analyze_note(audio: AudioSignal, note: TranscribedNote, cfg: AnalysisConfig) -> DescriptorFrameSeries:
    check_sample_rate(audio, cfg)
    grid = frame_note(audio, note, cfg)
    freqs = bin_frequencies(cfg)
    f0 = track_f0(audio, note, grid, cfg)

    power, centroid, flux, slope, flatness = [], [], [], [], []
    previous: Optional[np.ndarray] = None
    for center_s in grid.frame_times_s:
        spectrum = frame_spectrum(audio, center_s, cfg)
        silent = not bool(np.any(spectrum > 0.0))
        power.append(frame_power_db(audio, center_s, cfg))
        centroid.append(spectral_centroid(spectrum, freqs))
        # Тихий кадр: поток не определён
        flux.append(None if silent else spectral_flux(spectrum, previous))
        slope.append(spectral_slope(spectrum, freqs))
        flatness.append(spectral_flatness(spectrum * spectrum))
        previous = spectrum

    logger.debug(f"Analyzed note {note.id}: {grid.count} frames, {sum(v is not None for v in f0)} voiced")
    return DescriptorFrameSeries(
        grid=grid,
        f0_hz=f0,
        power_db=power,
        spectral_centroid_hz=centroid,
        spectral_flux=flux,
        spectral_slope=slope,
        spectral_flatness=flatness,
    )


def analyze_notes(
    audio: AudioSignal,
    notes: Sequence[TranscribedNote],
    cfg: AnalysisConfig,
    workers: Optional[int] = None,
) -> List[DescriptorFrameSeries]:
    """Анализ нот в пуле потоков; результат всегда в порядке нот."""
    if workers == 1 or len(notes) <= 1:
        return [analyze_note(audio, note, cfg) for note in notes]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda note: analyze_note(audio, note, cfg), notes))
