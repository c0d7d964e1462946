# perfmei/mei.py
"""
MEI 5: ноты в <body> и данные исполнения в <performance>/<recording>.
Каждая нота связана со своим <when absolute="HH:MM:SS.mmm" data="#id">,
внутри которого <extData> с CDATA, содержащим канонический JSON payload.

    <music>
        <performance>
            <recording>
                <avFile target="vocals.wav" mimetype="audio/wav"/>
                <when absolute="00:00:00.500" data="#note-0001">
                    <extData><![CDATA[{"schema":"ampact-extdata/1.0",...}]]></extData>
                </when>
            </recording>
        </performance>
        <body> ... <layer n="1"><note xml:id="note-0001" pname="a" oct="4"/></layer> ... </body>
    </music>
"""
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math
import re

from lxml import etree
from pydantic import ValidationError

from perfmei.exceptions import MeiLinkError, MeiParseError, MeiPayloadError, MeiSchemaError, UsageError
from perfmei.models import (
    TRACK_NAMES,
    XML_ID_PATTERN,
    Accidental,
    DescriptorFrameSeries,
    NoteName,
    NoteSummary,
    TranscribedNote,
)
from perfmei.payload import json_decode_payload, json_encode_payload, payload_from_record
from perfmei.schemas import MeiDocument, ParseMode, ScoreNote, Violation, When

logger = logging.getLogger(__name__)

MEI_NS = "http://www.music-encoding.org/ns/mei"
MEI_VERSION = "5.0"
XML_ID = "{http://www.w3.org/XML/1998/namespace}id"

ACCID_GES_CODES = {Accidental.sharp: "s", Accidental.flat: "f"}
ACCID_FROM_CODE = {"s": Accidental.sharp, "f": Accidental.flat, "n": Accidental.natural}

ABSOLUTE_STRICT = re.compile(r"^(\d+):([0-5]\d):([0-5]\d(?:\.\d+)?)$")
# HH:MM:SS:mmm
ABSOLUTE_COLON_MS = re.compile(r"^(\d+):(\d{1,2}):(\d{1,2}):(\d{1,3})$")
ABSOLUTE_LOOSE = re.compile(r"^(\d+):(\d{1,2}):(\d{1,2}(?:\.\d+)?)$")

ONSET_TOLERANCE_S = 0.001


def format_absolute(seconds: float) -> str:
    millis = int(math.floor(seconds * 1000.0 + 0.5))
    hours, millis = divmod(millis, 3_600_000)
    minutes, millis = divmod(millis, 60_000)
    secs, millis = divmod(millis, 1000)
    return f"{hours:02d}:{minutes:02d}:{secs:02d}.{millis:03d}"


def parse_absolute(text: Optional[str], mode: ParseMode = ParseMode.strict) -> float:
    """HH:MM:SS.mmm; в lenient-режиме также HH:MM:SS:mmm и секунды десятичным числом."""
    value = (text or "").strip()
    match = ABSOLUTE_STRICT.match(value)
    if match:
        hours, minutes, seconds = match.groups()
        return int(hours) * 3600 + int(minutes) * 60 + float(seconds)
    if ParseMode(mode) is ParseMode.lenient:
        match = ABSOLUTE_COLON_MS.match(value)
        if match:
            hours, minutes, seconds, millis = (int(part) for part in match.groups())
            return hours * 3600 + minutes * 60 + seconds + millis / 1000.0
        match = ABSOLUTE_LOOSE.match(value)
        if match:
            hours, minutes, seconds = match.groups()
            return int(hours) * 3600 + int(minutes) * 60 + float(seconds)
        try:
            seconds = float(value)
        except ValueError:
            pass
        else:
            if math.isfinite(seconds) and seconds >= 0:
                return seconds
    raise ValueError(f"'{value}' is not a valid absolute time")


def build_document(
    notes: Sequence[TranscribedNote],
    names: Sequence[NoteName],
    records: Sequence[Tuple[DescriptorFrameSeries, NoteSummary]],
    av_target: str,
) -> MeiDocument:
    """Одна нота и один when на каждую ноту транскрипции, в порядке нот."""
    if not len(notes) == len(names) == len(records):
        raise UsageError(
            f"notes ({len(notes)}), names ({len(names)}) and records ({len(records)}) must have equal lengths"
        )
    score_notes, whens = [], []
    for note, name, (series, summary) in zip(notes, names, records):
        if not note.id:
            raise UsageError("note ids must be assigned before building a document")
        score_notes.append(ScoreNote(id=note.id, name=name))
        whens.append(When(
            absolute_s=note.onset_s,
            target_id=note.id,
            payload=payload_from_record(note, series, summary),
        ))
    return MeiDocument(notes=score_notes, whens=whens, av_target=av_target)


def _el(parent, tag: str, attrib: Optional[dict] = None):
    return etree.SubElement(parent, f"{{{MEI_NS}}}{tag}", attrib or {})


def serialize_mei(doc: MeiDocument) -> str:
    root = etree.Element(f"{{{MEI_NS}}}mei", {"meiversion": MEI_VERSION}, nsmap={None: MEI_NS})

    head = _el(root, "meiHead")
    file_desc = _el(head, "fileDesc")
    title = _el(_el(file_desc, "titleStmt"), "title")
    title.text = doc.av_target or "untitled performance"
    _el(file_desc, "pubStmt")

    music = _el(root, "music")
    recording = _el(_el(music, "performance"), "recording")
    av_file = {"target": doc.av_target}
    if doc.av_target.lower().endswith(".wav"):
        av_file["mimetype"] = "audio/wav"
    _el(recording, "avFile", av_file)
    for when in doc.whens:
        when_el = _el(recording, "when", {
            "absolute": format_absolute(when.absolute_s),
            "data": f"#{when.target_id}",
        })
        _el(when_el, "extData").text = etree.CDATA(json_encode_payload(when.payload))

    score = _el(_el(_el(music, "body"), "mdiv"), "score")
    staff_grp = _el(_el(score, "scoreDef"), "staffGrp")
    _el(staff_grp, "staffDef", {"n": "1", "lines": "5"})
    measure = _el(_el(score, "section"), "measure", {"n": "1"})
    layer = _el(_el(measure, "staff", {"n": "1"}), "layer", {"n": "1"})
    for note in doc.notes:
        attrib = {XML_ID: note.id, "pname": note.name.pname, "oct": str(note.name.octave)}
        if note.name.accidental is not Accidental.natural:
            attrib["accid.ges"] = ACCID_GES_CODES[note.name.accidental]
        _el(layer, "note", attrib)

    return etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True).decode("utf-8")


def _recover(mode: ParseMode, warnings: Optional[List[str]], error: Exception) -> None:
    """strict -> исключение; lenient -> предупреждение в список вызывающего, иначе в журнал."""
    if mode is ParseMode.strict:
        raise error
    if warnings is None:
        logger.warning(str(error))
    else:
        warnings.append(str(error))


def _parse_note(element, mode: ParseMode, warnings: Optional[List[str]]) -> Optional[ScoreNote]:
    note_id = element.get(XML_ID)
    if not note_id:
        _recover(mode, warnings, MeiSchemaError("note element without xml:id", field="xml:id"))
        return None
    if not XML_ID_PATTERN.match(note_id):
        raise MeiSchemaError(f"'{note_id}' is not a valid xml:id", note_id=note_id, field="xml:id")
    code = element.get("accid.ges")
    if code is None and mode is ParseMode.lenient:
        code = element.get("accid")
    if code is not None and code not in ACCID_FROM_CODE:
        _recover(mode, warnings, MeiSchemaError(
            f"note {note_id}: unsupported accidental '{code}'", note_id=note_id, field="accid.ges"))
        code = None
    try:
        name = NoteName(
            pname=(element.get("pname") or "").lower(),
            accidental=ACCID_FROM_CODE[code] if code else Accidental.natural,
            octave=int(element.get("oct", "")),
        )
        return ScoreNote(id=note_id, name=name)
    except (ValidationError, ValueError) as exc:
        raise MeiSchemaError(f"note {note_id}: invalid pitch attributes ({exc})", note_id=note_id, field="pname") from exc


def parse_mei(
    xml: Union[str, bytes],
    mode: ParseMode = ParseMode.strict,
    warnings: Optional[List[str]] = None,
) -> MeiDocument:
    """
    Разбор MEI обратно в MeiDocument.
    strict: любая висячая ссылка when/@data -> MeiLinkError.
    lenient: такие when отбрасываются с предупреждением (в warnings, если список передан, иначе в журнал).
    """
    mode = ParseMode(mode)
    data = xml.encode("utf-8") if isinstance(xml, str) else xml
    parser = etree.XMLParser(resolve_entities=False, no_network=True, huge_tree=False)
    try:
        root = etree.fromstring(data, parser)
    except etree.XMLSyntaxError as exc:
        line, column = exc.position if exc.position else (exc.lineno, None)
        raise MeiParseError(f"malformed XML at line {line}, column {column}: {exc.msg}", line=line, column=column) from exc

    if mode is ParseMode.strict and root.tag != f"{{{MEI_NS}}}mei":
        raise MeiSchemaError(f"root element is {root.tag}, expected mei in namespace {MEI_NS}")

    notes: List[ScoreNote] = []
    seen = set()
    body = root.find(".//{*}body")
    for element in (body.iter("{*}note") if body is not None else ()):
        note = _parse_note(element, mode, warnings)
        if note is None:
            continue
        if note.id in seen:
            _recover(mode, warnings, MeiSchemaError(f"duplicate xml:id '{note.id}'", note_id=note.id, field="xml:id"))
            continue
        seen.add(note.id)
        notes.append(note)

    av_file = root.find(".//{*}avFile")
    av_target = av_file.get("target", "") if av_file is not None else ""

    whens: List[When] = []
    for element in root.iter("{*}when"):
        reference = (element.get("data") or "").strip()
        if mode is ParseMode.lenient:
            reference = reference.split()[0] if reference else reference
        if not reference.startswith("#") and mode is ParseMode.strict:
            raise MeiSchemaError(f"when/@data '{reference}' is not a local reference", field="data")
        target = reference.lstrip("#")

        try:
            absolute_s = parse_absolute(element.get("absolute"), mode)
        except ValueError as exc:
            raise MeiSchemaError(f"note {target}: {exc}", note_id=target, field="absolute") from exc

        if target not in seen:
            _recover(mode, warnings, MeiLinkError(
                f"when at {element.get('absolute')} references missing xml:id '{target}'",
                note_id=target,
                field="data",
            ))
            continue

        ext_data = element.find("{*}extData")
        if ext_data is None:
            raise MeiPayloadError(f"note {target}: when has no extData", note_id=target, field="extData")
        payload = json_decode_payload((ext_data.text or "").strip(), note_id=target, mode=mode)
        whens.append(When(absolute_s=absolute_s, target_id=target, payload=payload))

    logger.debug(f"Parsed MEI: {len(notes)} notes, {len(whens)} whens, target={av_target!r}")
    return MeiDocument(notes=notes, whens=whens, av_target=av_target)


def validate_document(doc: MeiDocument) -> List[Violation]:
    """
    Отчёт о нарушениях (пустой список - документ корректен):
    xml:id, висячие ссылки, порядок времени, onset payload против @absolute,
    длины треков, диапазон плоскостности.
    """
    violations: List[Violation] = []
    ids = set()
    for note in doc.notes:
        if not XML_ID_PATTERN.match(note.id):
            violations.append(Violation(message=f"invalid xml:id '{note.id}'", note_id=note.id, field="xml:id"))
        if note.id in ids:
            violations.append(Violation(message=f"duplicate xml:id '{note.id}'", note_id=note.id, field="xml:id"))
        ids.add(note.id)

    previous: Optional[float] = None
    for when in doc.whens:
        note_id = when.target_id
        payload = when.payload
        if note_id not in ids:
            violations.append(Violation(message=f"dangling reference #{note_id}", note_id=note_id, field="data"))
        if previous is not None and when.absolute_s < previous - 1e-9:
            violations.append(Violation(
                message=f"absolute time {format_absolute(when.absolute_s)} precedes the previous when",
                note_id=note_id,
                field="absolute",
            ))
        previous = when.absolute_s

        difference = abs(payload.onset_s - when.absolute_s)
        if difference > ONSET_TOLERANCE_S + 1e-9:
            violations.append(Violation(
                message=f"onset mismatch {round(difference * 1000)} ms",
                note_id=note_id,
                field="onset_s",
            ))
        if payload.duration_s <= 0:
            violations.append(Violation(
                message=f"duration {payload.duration_s:g} s must be positive", note_id=note_id, field="duration_s"))
        for name in TRACK_NAMES:
            length = len(getattr(payload.continuous, name))
            if length != payload.frame.count:
                violations.append(Violation(
                    message=f"{name} has {length} values but frame.count is {payload.frame.count}",
                    note_id=note_id,
                    field=f"continuous.{name}",
                ))
        if any(v is not None and not 0.0 <= v <= 1.0 for v in payload.continuous.spectral_flatness):
            violations.append(Violation(
                message="spectral_flatness values outside [0, 1]",
                note_id=note_id,
                field="continuous.spectral_flatness",
            ))
        flatness = payload.summary.mean_spectral_flatness
        if flatness is not None and not 0.0 <= flatness <= 1.0:
            violations.append(Violation(
                message=f"mean_spectral_flatness {flatness:g} outside [0, 1]",
                note_id=note_id,
                field="summary.mean_spectral_flatness",
            ))
    return violations
