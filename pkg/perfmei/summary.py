# perfmei/summary.py
"""
Сводные дескрипторы ноты из непрерывных треков:
воспринимаемая высота, джиттер, вибрато (частота и глубина),
средняя мощность, шиммер и четыре спектральных средних.

Джиттер и шиммер считаются по кадрам, а не по периодам;
шиммер - по линейной амплитуде 10^(дБ/20).
"""
from typing import List, Optional, Sequence
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import fft as sp_fft
from scipy.signal import detrend

from perfmei.models import AnalysisConfig, DescriptorFrameSeries, FrameGrid, NoteSummary

logger = logging.getLogger(__name__)

REFERENCE_HZ = 440.0


class VibratoEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    rate_hz: float
    depth_cents: float


def _voiced(f0_track: Sequence[Optional[float]]) -> List[float]:
    return [f for f in f0_track if f is not None and f > 0]


def _mean_defined(values: Sequence[Optional[float]]) -> Optional[float]:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return float(np.mean(defined))


def perceived_pitch(f0_track: Sequence[Optional[float]]) -> Optional[float]:
    """Среднее озвученных f0 в центах относительно 440 Гц, обратно в Гц."""
    voiced = _voiced(f0_track)
    if len(voiced) < 2:
        return None
    cents = 1200.0 * np.log2(np.asarray(voiced) / REFERENCE_HZ)
    return REFERENCE_HZ * 2.0 ** (float(np.mean(cents)) / 1200.0)


def jitter(f0_track: Sequence[Optional[float]]) -> Optional[float]:
    """Среднее |f0[i+1] - f0[i]| по соседним озвученным кадрам, делённое на среднее f0."""
    differences = [
        abs(b - a)
        for a, b in zip(f0_track, f0_track[1:])
        if a is not None and b is not None and a > 0 and b > 0
    ]
    if not differences:
        return None
    return float(np.mean(differences)) / float(np.mean(_voiced(f0_track)))


def shimmer(power_track_db: Sequence[Optional[float]], silence_floor_db: float = -120.0) -> Optional[float]:
    """То же для линейной амплитуды; кадры на уровне тишины не участвуют."""
    amplitudes = [
        None if db is None or db <= silence_floor_db else 10.0 ** (db / 20.0)
        for db in power_track_db
    ]
    qualifying = [a for a in amplitudes if a is not None]
    if len(qualifying) < 2:
        return None
    differences = [abs(b - a) for a, b in zip(amplitudes, amplitudes[1:]) if a is not None and b is not None]
    if not differences:
        return None
    return float(np.mean(differences)) / float(np.mean(qualifying))


def _longest_gap(mask: np.ndarray) -> int:
    longest = run = 0
    for missing in mask:
        run = run + 1 if missing else 0
        longest = max(longest, run)
    return longest


def vibrato(
    f0_track: Sequence[Optional[float]],
    grid: FrameGrid,
    cfg: AnalysisConfig,
) -> Optional[VibratoEstimate]:
    """
    Пик ДПФ трека в центах (без линейного тренда) внутри vibrato_band_hz.
    Нужны: озвученный участок не короче vibrato_min_dur_s, внутренние пропуски
    не длиннее vibrato_max_gap_frames (интерполируются линейно), глубина
    не меньше vibrato_min_depth_cents.
    """
    f0 = np.array([np.nan if v is None or v <= 0 else v for v in f0_track], dtype=float)
    voiced = np.flatnonzero(~np.isnan(f0))
    if voiced.size < 2:
        return None
    span = f0[voiced[0]:voiced[-1] + 1]
    if span.size * grid.hop_s < cfg.vibrato_min_dur_s - 1e-9:
        return None
    missing = np.isnan(span)
    if _longest_gap(missing) > cfg.vibrato_max_gap_frames:
        return None

    index = np.arange(span.size)
    cents = 1200.0 * np.log2(span / REFERENCE_HZ)
    cents = np.interp(index, index[~missing], cents[~missing])
    trace = detrend(cents - cents.mean(), type="linear")

    # Дополнение нулями до n_fft
    n = trace.size
    n_fft = max(8 * n, 1024)
    magnitude = np.abs(sp_fft.rfft(trace, n=n_fft))
    freqs = sp_fft.rfftfreq(n_fft, d=grid.hop_s)
    low, high = cfg.vibrato_band_hz
    band = np.flatnonzero((freqs >= low) & (freqs <= high))
    if band.size == 0:
        return None
    k = int(band[np.argmax(magnitude[band])])
    depth = 2.0 * float(magnitude[k]) / n

    rate = float(freqs[k])
    if 0 < k < magnitude.size - 1:
        left, peak, right = magnitude[k - 1], magnitude[k], magnitude[k + 1]
        curvature = left - 2.0 * peak + right
        if curvature < 0:
            rate += float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5)) * float(freqs[1])
    rate = min(max(rate, low), high)

    if depth < cfg.vibrato_min_depth_cents:
        return None
    return VibratoEstimate(rate_hz=rate, depth_cents=depth)


def mean_power_db(power_track_db: Sequence[Optional[float]], silence_floor_db: float = -120.0) -> float:
    """10*log10 от средней линейной мощности (не среднее дБ)."""
    defined = [db for db in power_track_db if db is not None]
    if not defined:
        return silence_floor_db
    linear = float(np.mean(10.0 ** (np.asarray(defined) / 10.0)))
    if linear <= 0.0:
        return silence_floor_db
    return max(10.0 * math.log10(linear), silence_floor_db)


def summarize_note(series: DescriptorFrameSeries, cfg: AnalysisConfig) -> NoteSummary:
    pitch = rate = depth = note_jitter = None
    if len(_voiced(series.f0_hz)) >= 2:
        pitch = perceived_pitch(series.f0_hz)
        note_jitter = jitter(series.f0_hz)
        estimate = vibrato(series.f0_hz, series.grid, cfg)
        if estimate is not None:
            rate, depth = estimate.rate_hz, estimate.depth_cents

    summary = NoteSummary(
        perceived_pitch_hz=pitch,
        jitter=note_jitter,
        vibrato_rate_hz=rate,
        vibrato_depth_cents=depth,
        mean_power_db=mean_power_db(series.power_db, cfg.silence_floor_db),
        shimmer=shimmer(series.power_db, cfg.silence_floor_db),
        mean_spectral_centroid_hz=_mean_defined(series.spectral_centroid_hz),
        mean_spectral_flux=_mean_defined(series.spectral_flux),
        mean_spectral_slope=_mean_defined(series.spectral_slope),
        mean_spectral_flatness=_mean_defined(series.spectral_flatness),
    )
    logger.debug(f"Summarized note {series.grid.note_id}: pitch={pitch}, vibrato={rate}/{depth}")
    return summary
