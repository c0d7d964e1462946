# perfmei/cli.py
"""
Командная строка: encode, decode, validate, describe.
Коды выхода: 0 - успех; 1 - ввод-вывод или неверное использование;
2 - ошибки разбора и проверки (CSV, диапазон нот, MEI, нарушения схемы).
"""
from pathlib import Path
from typing import List, Optional, Sequence
import csv
import functools
import io
import logging
import sys

import click
from pydantic import ValidationError

from perfmei.audio import load_wav
from perfmei.exceptions import (
    AudioFormatError,
    DomainError,
    MeiError,
    NoteRangeError,
    TranscriptionError,
    UsageError,
)
from perfmei.mei import parse_mei, serialize_mei, validate_document
from perfmei.models import SUMMARY_NAMES
from perfmei.payload import format_number, json_encode_payload
from perfmei.schemas import MeiDocument, ParseMode
from perfmei.services import analysis_config, describe_json, describe_performance, encode_performance
from perfmei.transcription import read_tony_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2

SUMMARY_COLUMNS = ("id", "pname", "accidental", "octave", "onset_s", "duration_s") + SUMMARY_NAMES

INPUT_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)


def _error(message: str) -> None:
    click.echo(f"error: {message}", err=True)


def exit_codes(command):
    """Переводит исключения пакета в коды выхода, сообщение - в stderr."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs) -> int:
        try:
            return command(*args, **kwargs)
        except (TranscriptionError, NoteRangeError, DomainError, MeiError) as exc:
            _error(str(exc))
            return EXIT_INVALID
        except (AudioFormatError, UsageError) as exc:
            _error(str(exc))
            return EXIT_USAGE
        except ValidationError as exc:
            _error(f"invalid analysis settings: {exc}")
            return EXIT_USAGE
        except OSError as exc:
            _error(f"{exc.filename or ''}: {exc.strerror or exc}")
            return EXIT_USAGE
    return wrapper


@click.group(help="Encode sung performances as MEI with frame-wise audio descriptors.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging to standard error.")
def cli(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _analysis_inputs(audio_path: Path, notes_path: Path, hop_ms: Optional[float], window: Optional[int]):
    transcription = read_tony_csv(notes_path)
    audio = load_wav(audio_path)
    cfg = analysis_config(audio.sample_rate_hz, hop_ms=hop_ms, window=window)
    return audio, transcription, cfg


@cli.command()
@click.option("--audio", "audio_path", required=True, type=INPUT_FILE, help="WAV recording.")
@click.option("--notes", "notes_path", required=True, type=INPUT_FILE, help="Tony note CSV.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--audio-target", default=None, help="URI recorded in avFile (defaults to the audio path).")
@click.option("--hop-ms", type=click.FloatRange(min=0, min_open=True), default=None)
@click.option("--window", type=click.IntRange(min=16), default=None)
@click.option("--id-prefix", default="note-", show_default=True)
@exit_codes
def encode(
    audio_path: Path,
    notes_path: Path,
    out_path: Path,
    audio_target: Optional[str],
    hop_ms: Optional[float],
    window: Optional[int],
    id_prefix: str,
) -> int:
    """Analyze the notes and write one MEI file."""
    audio, transcription, cfg = _analysis_inputs(audio_path, notes_path, hop_ms, window)
    doc = encode_performance(audio, transcription, cfg, audio_target or str(audio_path), id_prefix)
    out_path.write_bytes(serialize_mei(doc).encode("utf-8"))

    for note, when in zip(doc.notes, doc.whens):
        pitch = when.payload.summary.perceived_pitch_hz
        click.echo(f"{note.id}\t{note.name}\t{when.absolute_s:.3f}\t{'-' if pitch is None else f'{pitch:.2f}'}")
    logger.info(f"Wrote {out_path}")
    return EXIT_OK


def _summary_rows(doc: MeiDocument) -> List[List[str]]:
    names = {note.id: note.name for note in doc.notes}
    rows = []
    for when in doc.whens:
        name = names[when.target_id]
        payload = when.payload
        summary = [getattr(payload.summary, field) for field in SUMMARY_NAMES]
        rows.append(
            [when.target_id, name.pname, name.accidental.value, str(name.octave),
             format_number(payload.onset_s), format_number(payload.duration_s)]
            + ["" if value is None else format_number(value) for value in summary]
        )
    return rows


@cli.command()
@click.option("--mei", "mei_path", required=True, type=INPUT_FILE)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@exit_codes
def decode(mei_path: Path, out_dir: Path, fmt: str) -> int:
    """Write summary.csv (and per-note payload JSON) from an MEI file."""
    doc = parse_mei(mei_path.read_bytes(), ParseMode.strict)
    out_dir.mkdir(parents=True, exist_ok=True)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    writer.writerows(_summary_rows(doc))
    (out_dir / "summary.csv").write_bytes(buffer.getvalue().encode("utf-8"))

    if fmt == "json":
        for when in doc.whens:
            (out_dir / f"{when.target_id}.json").write_bytes(json_encode_payload(when.payload).encode("utf-8"))
    logger.info(f"Decoded {len(doc.whens)} notes into {out_dir}")
    return EXIT_OK


@cli.command()
@click.option("--mei", "mei_path", required=True, type=INPUT_FILE)
@click.option("--lenient", is_flag=True, help="Drop dangling links and accept relaxed time formats.")
@exit_codes
def validate(mei_path: Path, lenient: bool) -> int:
    """Report every violation found in an MEI file."""
    data = mei_path.read_bytes()
    warnings: List[str] = []
    doc = parse_mei(data, ParseMode.lenient if lenient else ParseMode.strict, warnings=warnings)
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)

    violations = validate_document(doc)
    for violation in violations:
        click.echo(str(violation))
    return EXIT_INVALID if violations else EXIT_OK


@cli.command()
@click.option("--audio", "audio_path", required=True, type=INPUT_FILE)
@click.option("--notes", "notes_path", required=True, type=INPUT_FILE)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@exit_codes
def describe(audio_path: Path, notes_path: Path, out_path: Path) -> int:
    """Write the per-note payloads as a JSON array, without the MEI wrapper."""
    audio, transcription, cfg = _analysis_inputs(audio_path, notes_path, None, None)
    payloads = describe_performance(audio, transcription, cfg)
    out_path.write_bytes(describe_json(payloads).encode("utf-8"))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="perfmei", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    return result if isinstance(result, int) else EXIT_OK
