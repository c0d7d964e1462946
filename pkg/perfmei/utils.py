# perfmei/utils.py
"""Арифметика высоты тона: Гц <-> MIDI <-> имя ноты, интервалы в центах."""
import math
import numbers

from perfmei.exceptions import DomainError
from perfmei.models import Accidental, NoteName

# Диезное написание
SHARP_SPELLING = (
    ("c", Accidental.natural),
    ("c", Accidental.sharp),
    ("d", Accidental.natural),
    ("d", Accidental.sharp),
    ("e", Accidental.natural),
    ("f", Accidental.natural),
    ("f", Accidental.sharp),
    ("g", Accidental.natural),
    ("g", Accidental.sharp),
    ("a", Accidental.natural),
    ("a", Accidental.sharp),
    ("b", Accidental.natural),
)


def _check_frequency(f: float, name: str = "frequency") -> None:
    if not (isinstance(f, numbers.Real) and math.isfinite(f) and f > 0):
        raise DomainError(f"{name} must be a positive finite number of Hz, got {f!r}")


def midi_from_hz(f: float) -> float:
    _check_frequency(f)
    return 69.0 + 12.0 * math.log2(f / 440.0)


def hz_from_midi(m: float) -> float:
    return 440.0 * 2.0 ** ((m - 69.0) / 12.0)


def note_name_from_midi(m: int) -> NoteName:
    """
    Разложение MIDI-номера на pname/accidental/octave.
    Хроматические ступени всегда пишутся через диез.
    """
    if isinstance(m, bool) or not isinstance(m, numbers.Integral):
        raise DomainError(f"MIDI number must be an integer, got {m!r}")
    m = int(m)
    if not 0 <= m <= 127:
        raise DomainError(f"MIDI number must be in 0..127, got {m}")
    pname, accidental = SHARP_SPELLING[m % 12]
    return NoteName(pname=pname, accidental=accidental, octave=m // 12 - 1)


def midi_from_note_name(name: NoteName) -> int:
    return name.midi


def note_name_from_hz(f: float) -> NoteName:
    """Ближайшая равномерно темперированная нота."""
    midi = int(math.floor(midi_from_hz(f) + 0.5))
    return note_name_from_midi(midi)


def cents_between(f1: float, f2: float) -> float:
    _check_frequency(f1, "f1")
    _check_frequency(f2, "f2")
    return 1200.0 * math.log2(f2 / f1)
