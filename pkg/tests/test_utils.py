import math

import numpy as np
import pytest

from perfmei.exceptions import DomainError
from perfmei.models import Accidental, NoteName
from perfmei.utils import (
    cents_between,
    hz_from_midi,
    midi_from_hz,
    midi_from_note_name,
    note_name_from_hz,
    note_name_from_midi,
)


def test_a4_is_midi_69():
    assert midi_from_hz(440.0) == pytest.approx(69.0)
    assert hz_from_midi(69) == pytest.approx(440.0)


def test_octave_is_twelve_semitones():
    assert midi_from_hz(880.0) - midi_from_hz(440.0) == pytest.approx(12.0)
    assert cents_between(440.0, 880.0) == pytest.approx(1200.0)
    assert cents_between(880.0, 440.0) == pytest.approx(-1200.0)


@pytest.mark.parametrize("midi, expected", [
    (60, ("c", Accidental.natural, 4)),
    (61, ("c", Accidental.sharp, 4)),
    (69, ("a", Accidental.natural, 4)),
    (70, ("a", Accidental.sharp, 4)),
    (0, ("c", Accidental.natural, -1)),
    (127, ("g", Accidental.natural, 9)),
])
def test_note_name_from_midi(midi, expected):
    name = note_name_from_midi(midi)
    assert (name.pname, name.accidental, name.octave) == expected
    assert midi_from_note_name(name) == midi


def test_every_midi_number_round_trips():
    for midi in range(128):
        assert midi_from_note_name(note_name_from_midi(midi)) == midi


def test_note_name_str():
    assert str(note_name_from_midi(70)) == "A#4"
    assert str(NoteName(pname="b", accidental=Accidental.flat, octave=3)) == "Bb3"


def test_note_name_from_hz_rounds_to_nearest_semitone():
    assert str(note_name_from_hz(440.0 * 2 ** (0.49 / 12))) == "A4"
    assert str(note_name_from_hz(440.0 * 2 ** (0.51 / 12))) == "A#4"
    assert str(note_name_from_hz(261.63)) == "C4"


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_non_positive_frequency_is_a_domain_error(bad):
    with pytest.raises(DomainError):
        midi_from_hz(bad)
    with pytest.raises(DomainError):
        cents_between(440.0, bad)


@pytest.mark.parametrize("bad", [-1, 128, 60.5])
def test_midi_outside_range_is_a_domain_error(bad):
    with pytest.raises(DomainError):
        note_name_from_midi(bad)


def test_note_name_rejects_out_of_range_spelling():
    with pytest.raises(ValueError):
        NoteName(pname="g", accidental=Accidental.sharp, octave=9)
    with pytest.raises(ValueError):
        NoteName(pname="c", accidental=Accidental.flat, octave=-1)


def test_cents_between_is_antisymmetric():
    rng = np.random.default_rng(12)
    for f1, f2 in rng.uniform(8.0, 12000.0, size=(500, 2)):
        assert cents_between(f1, f2) == pytest.approx(-cents_between(f2, f1), abs=1e-9)
        assert cents_between(f1, f1) == 0.0
