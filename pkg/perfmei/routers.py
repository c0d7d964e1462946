# perfmei/routers.py

from fastapi import APIRouter, File, Form, HTTPException, Query, UploadFile, status
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import Response
from typing import List, Optional
import io
import logging

from perfmei import config
from perfmei.audio import load_wav
from perfmei.exceptions import AudioFormatError, DomainError, MeiError, NoteRangeError, TranscriptionError, UsageError
from perfmei.mei import parse_mei, serialize_mei, validate_document
from perfmei.schemas import ParseMode
from perfmei.services import analysis_config, describe_json, describe_performance, encode_performance
from perfmei.transcription import parse_tony_csv

logger = logging.getLogger(__name__)

router = APIRouter()


async def read_upload(upload: UploadFile, allow_empty: bool = False) -> bytes:
    """Читает загруженный файл целиком; больше лимита -> 413, пустой -> 400 (если не allow_empty)."""
    data = await upload.read(config.MAX_UPLOAD_BYTES + 1)
    if len(data) > config.MAX_UPLOAD_BYTES:
        raise HTTPException(
            status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
            detail=f"{upload.filename} exceeds {config.MAX_UPLOAD_MB:g} MB",
        )
    if not data and not allow_empty:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"{upload.filename} is empty")
    return data


async def load_inputs(audio: UploadFile, notes: UploadFile):
    audio_bytes = await read_upload(audio)
    notes_bytes = await read_upload(notes, allow_empty=True)
    try:
        transcription = parse_tony_csv(notes_bytes.decode("utf-8"), source_path=notes.filename or "")
        signal = load_wav(io.BytesIO(audio_bytes), name=audio.filename or "")
    except UnicodeDecodeError:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"{notes.filename} is not UTF-8 text")
    except AudioFormatError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))
    except TranscriptionError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))
    return signal, transcription, analysis_config(signal.sample_rate_hz)


@router.post("/describe")
async def describe(
    audio: UploadFile = File(..., description="WAV-запись"),
    notes: UploadFile = File(..., description="CSV-транскрипция Tony"),
):
    signal, transcription, cfg = await load_inputs(audio, notes)
    try:
        payloads = await run_in_threadpool(describe_performance, signal, transcription, cfg, "note-", config.WORKERS)
    except (NoteRangeError, DomainError) as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))
    return Response(content=describe_json(payloads), media_type="application/json")


@router.post("/encode")
async def encode(
    audio: UploadFile = File(..., description="WAV-запись"),
    notes: UploadFile = File(..., description="CSV-транскрипция Tony"),
    audio_target: Optional[str] = Form(None, description="URI для avFile (по умолчанию имя файла)"),
    id_prefix: str = Form("note-", description="Префикс xml:id нот"),
):
    signal, transcription, cfg = await load_inputs(audio, notes)
    target = audio_target or audio.filename or "audio.wav"
    try:
        doc = await run_in_threadpool(encode_performance, signal, transcription, cfg, target, id_prefix, config.WORKERS)
    except UsageError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))
    except (NoteRangeError, DomainError) as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))
    logger.info(f"Encoded {len(doc.notes)} notes for {target}")
    return Response(content=serialize_mei(doc).encode("utf-8"), media_type="application/xml")


@router.post("/validate")
async def validate(
    mei: UploadFile = File(..., description="MEI-файл"),
    lenient: bool = Query(False, description="Отбрасывать висячие ссылки вместо ошибки"),
):
    data = await read_upload(mei)
    warnings: List[str] = []
    try:
        doc = await run_in_threadpool(
            parse_mei, data, ParseMode.lenient if lenient else ParseMode.strict, warnings
        )
    except MeiError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))
    violations = validate_document(doc)
    return {"violations": [str(v) for v in violations], "warnings": warnings}
