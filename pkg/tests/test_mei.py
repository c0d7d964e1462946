import numpy as np
import pytest
from lxml import etree

from perfmei.exceptions import MeiLinkError, MeiParseError, MeiPayloadError, MeiSchemaError, UsageError
from perfmei.mei import MEI_NS, XML_ID, build_document, format_absolute, parse_absolute, parse_mei, serialize_mei, validate_document
from perfmei.models import Accidental, DescriptorFrameSeries, FrameGrid, NoteName, NoteSummary, TranscribedNote
from perfmei.schemas import MeiDocument, ParseMode, ScoreNote, When
from perfmei.services import encode_performance
from perfmei.transcription import parse_tony_csv
from tests.conftest import make_signal, random_document, random_payload, sine

NS = {"m": MEI_NS}


@pytest.fixture
def document():
    rng = np.random.default_rng(5)
    notes = [
        ScoreNote(id="note-0001", name=NoteName(pname="a", octave=4)),
        ScoreNote(id="note-0002", name=NoteName(pname="b", accidental=Accidental.flat, octave=3)),
        ScoreNote(id="note-0003", name=NoteName(pname="f", accidental=Accidental.sharp, octave=5)),
    ]
    whens = [
        When(absolute_s=onset, target_id=note.id, payload=random_payload(rng, onset, max_frames=4))
        for note, onset in zip(notes, (0.5, 1.25, 3661.042))
    ]
    return MeiDocument(notes=notes, whens=whens, av_target="vocals/take 1.wav")


def _replace(xml: str, old: str, new: str) -> str:
    assert old in xml
    return xml.replace(old, new, 1)


def _assert_same_document(parsed: MeiDocument, doc: MeiDocument) -> None:
    assert parsed.notes == doc.notes
    assert parsed.av_target == doc.av_target
    assert [w.target_id for w in parsed.whens] == [w.target_id for w in doc.whens]
    assert [w.payload for w in parsed.whens] == [w.payload for w in doc.whens]
    for got, expected in zip(parsed.whens, doc.whens):
        assert got.absolute_s == pytest.approx(expected.absolute_s, abs=1e-3)


@pytest.mark.parametrize("seconds, text", [
    (0.0, "00:00:00.000"),
    (0.5, "00:00:00.500"),
    (61.25, "00:01:01.250"),
    (3661.042, "01:01:01.042"),
])
def test_format_absolute(seconds, text):
    assert format_absolute(seconds) == text
    assert parse_absolute(text) == pytest.approx(round(seconds, 3), abs=1e-9)


def test_relaxed_times_only_in_lenient_mode():
    assert parse_absolute("00:00:01:500", ParseMode.lenient) == pytest.approx(1.5)
    assert parse_absolute("2.25", ParseMode.lenient) == pytest.approx(2.25)
    assert parse_absolute("0:0:3.5", ParseMode.lenient) == pytest.approx(3.5)
    for text in ("00:00:01:500", "2.25", "", "-1"):
        with pytest.raises(ValueError):
            parse_absolute(text)


def test_serialized_structure(document):
    xml = serialize_mei(document)
    assert xml.startswith("<?xml version='1.0' encoding='UTF-8'?>")
    assert xml.count("<![CDATA[") == 3
    root = etree.fromstring(xml.encode("utf-8"))
    assert root.get("meiversion") == "5.0"
    av_file = root.find(".//m:performance/m:recording/m:avFile", NS)
    assert av_file.get("target") == "vocals/take 1.wav"
    assert av_file.get("mimetype") == "audio/wav"
    whens = root.findall(".//m:recording/m:when", NS)
    assert [w.get("data") for w in whens] == ["#note-0001", "#note-0002", "#note-0003"]
    assert whens[2].get("absolute") == "01:01:01.042"
    notes = root.findall(".//m:body//m:layer/m:note", NS)
    assert [n.get(XML_ID) for n in notes] == ["note-0001", "note-0002", "note-0003"]
    assert [n.get("accid.ges") for n in notes] == [None, "f", "s"]
    assert [(n.get("pname"), n.get("oct")) for n in notes] == [("a", "4"), ("b", "3"), ("f", "5")]


def test_round_trip_is_byte_stable(document):
    xml = serialize_mei(document)
    parsed = parse_mei(xml)
    _assert_same_document(parsed, document)
    assert serialize_mei(parsed) == xml
    assert validate_document(parsed) == []


def test_randomized_canonical_precision_documents_round_trip():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        doc = random_document(rng)
        xml = serialize_mei(doc)
        parsed = parse_mei(xml.encode("utf-8"))
        _assert_same_document(parsed, doc)
        assert serialize_mei(parsed) == xml


def test_every_encoded_document_links_each_note_once():
    rng = np.random.default_rng(99)
    for _ in range(20):
        doc = parse_mei(serialize_mei(random_document(rng, max_notes=10)))
        assert len(doc.notes) == len(doc.whens)
        assert {n.id for n in doc.notes} == {w.target_id for w in doc.whens}
        assert [w.target_id for w in doc.whens] == [n.id for n in doc.notes]
        assert validate_document(doc) == []


def test_renaming_one_note_id_gives_exactly_one_violation(document):
    notes = list(document.notes)
    notes[1] = notes[1].model_copy(update={"id": "renamed"})
    report = validate_document(document.model_copy(update={"notes": notes}))
    assert len(report) == 1
    assert report[0].note_id == "note-0002"
    assert report[0].field == "data"


def test_retargeting_one_when_gives_exactly_one_violation(document):
    whens = list(document.whens)
    whens[0] = whens[0].model_copy(update={"target_id": "ghost"})
    report = validate_document(document.model_copy(update={"whens": whens}))
    assert [str(v) for v in report] == ["ghost [data]: dangling reference #ghost"]


def test_onset_mismatch_and_flatness_range(document):
    first = document.whens[0]
    payload = first.payload.model_copy(update={
        "onset_s": first.absolute_s + 0.005,
        "summary": first.payload.summary.model_copy(update={"mean_spectral_flatness": 1.5}),
    })
    whens = [first.model_copy(update={"payload": payload})] + list(document.whens[1:])
    report = validate_document(document.model_copy(update={"whens": whens}))
    messages = sorted(str(v) for v in report)
    assert messages == [
        "note-0001 [onset_s]: onset mismatch 5 ms",
        "note-0001 [summary.mean_spectral_flatness]: mean_spectral_flatness 1.5 outside [0, 1]",
    ]


def test_times_must_not_decrease(document):
    whens = list(document.whens)
    whens[2] = whens[2].model_copy(update={
        "absolute_s": 1.0,
        "payload": whens[2].payload.model_copy(update={"onset_s": 1.0}),
    })
    report = validate_document(document.model_copy(update={"whens": whens}))
    assert [(v.note_id, v.field) for v in report] == [("note-0003", "absolute")]


def test_malformed_xml_reports_position():
    with pytest.raises(MeiParseError) as exc:
        parse_mei(b"<?xml version='1.0'?>\n<mei xmlns='http://www.music-encoding.org/ns/mei'>\n<music>\n</mei>")
    assert exc.value.line == 4


def test_dangling_reference_strict_and_lenient(document):
    xml = _replace(serialize_mei(document), 'data="#note-0002"', 'data="#note-9999"')
    with pytest.raises(MeiLinkError) as exc:
        parse_mei(xml)
    assert exc.value.note_id == "note-9999"

    warnings = []
    doc = parse_mei(xml, ParseMode.lenient, warnings=warnings)
    assert [w.target_id for w in doc.whens] == ["note-0001", "note-0003"]
    assert len(warnings) == 1 and "note-9999" in warnings[0]
    assert validate_document(doc) == []


def test_lenient_accepts_relaxed_times_and_accid(document):
    xml = serialize_mei(document)
    xml = _replace(xml, 'absolute="00:00:01.250"', 'absolute="00:00:01:250"')
    xml = _replace(xml, 'accid.ges="f"', 'accid="f"')
    with pytest.raises(MeiSchemaError) as exc:
        parse_mei(xml)
    assert exc.value.field == "absolute"

    doc = parse_mei(xml, ParseMode.lenient)
    assert doc.whens[1].absolute_s == pytest.approx(1.25)
    assert doc.notes[1].name.accidental is Accidental.flat
    assert serialize_mei(doc) == serialize_mei(document)


def test_duplicate_ids(document):
    xml = _replace(serialize_mei(document), 'xml:id="note-0003"', 'xml:id="note-0001"')
    with pytest.raises(MeiSchemaError):
        parse_mei(xml)
    warnings = []
    doc = parse_mei(xml, ParseMode.lenient, warnings=warnings)
    assert [n.id for n in doc.notes] == ["note-0001", "note-0002"]
    assert any("duplicate" in w for w in warnings)


def test_broken_payloads_are_located(document):
    xml = serialize_mei(document)
    root = etree.fromstring(xml.encode("utf-8"))
    ext = root.findall(".//m:when/m:extData", NS)[1]
    ext.text = etree.CDATA("{oops")
    with pytest.raises(MeiPayloadError) as exc:
        parse_mei(etree.tostring(root))
    assert exc.value.note_id == "note-0002"

    ext.getparent().remove(ext)
    with pytest.raises(MeiPayloadError) as exc:
        parse_mei(etree.tostring(root))
    assert exc.value.field == "extData"


def _record(count: int):
    grid = FrameGrid(frame_times_s=[0.005 + 0.01 * k for k in range(count)], hop_s=0.01, count=count)
    series = DescriptorFrameSeries(
        grid=grid,
        f0_hz=[440.0] * count,
        power_db=[-6.0] * count,
        spectral_centroid_hz=[450.0] * count,
        spectral_flux=[0.0] * count,
        spectral_slope=[-1e-5] * count,
        spectral_flatness=[0.1] * count,
    )
    return series, NoteSummary(perceived_pitch_hz=440.0, mean_power_db=-6.0)


def test_build_document_links_notes_and_whens():
    notes = [
        TranscribedNote(id="note-0001", onset_s=0.25, duration_s=0.03, nominal_f0_hz=440.0),
        TranscribedNote(id="note-0002", onset_s=0.5, duration_s=0.02, nominal_f0_hz=440.0),
    ]
    names = [NoteName(pname="a", octave=4)] * 2
    doc = build_document(notes, names, [_record(3), _record(2)], "a.wav")
    assert [w.target_id for w in doc.whens] == ["note-0001", "note-0002"]
    assert doc.whens[0].absolute_s == 0.25
    assert doc.whens[1].payload.frame.count == 2
    assert validate_document(doc) == []

    with pytest.raises(UsageError):
        build_document(notes, names[:1], [_record(3), _record(2)], "a.wav")
    with pytest.raises(UsageError):
        build_document([notes[0].model_copy(update={"id": ""})], names[:1], [_record(3)], "a.wav")


def test_empty_document_round_trips():
    doc = build_document([], [], [], "silence.wav")
    xml = serialize_mei(doc)
    root = etree.fromstring(xml.encode("utf-8"))
    assert root.find(".//m:layer", NS) is not None
    assert root.findall(".//m:when", NS) == []
    assert parse_mei(xml) == doc
    assert validate_document(doc) == []


def test_onset_mismatch_in_milliseconds(document):
    first = document.whens[0]
    moved = first.model_copy(update={"absolute_s": 0.7, "payload": first.payload.model_copy(update={"onset_s": 0.5})})
    report = validate_document(document.model_copy(update={"whens": [moved] + list(document.whens[1:])}))
    assert [v.message for v in report] == ["onset mismatch 200 ms"]


def test_ghost_reference_names_the_missing_id(document):
    xml = _replace(serialize_mei(document), 'data="#note-0003"', 'data="#ghost"')
    with pytest.raises(MeiLinkError, match="ghost"):
        parse_mei(xml)


def test_sharp_note_and_null_f0_serialization():
    note = TranscribedNote(id="note-0001", onset_s=0.5, duration_s=0.02, nominal_f0_hz=466.16)
    series, summary = _record(2)
    series = series.model_copy(update={"f0_hz": [440.0, None]})
    doc = build_document([note], [NoteName(pname="a", accidental=Accidental.sharp, octave=4)], [(series, summary)], "x.wav")
    xml = serialize_mei(doc)
    assert '<note xml:id="note-0001" pname="a" oct="4" accid.ges="s"/>' in xml
    assert '<when absolute="00:00:00.500" data="#note-0001">' in xml
    assert '"f0_hz":[440,null]' in xml


def test_encoded_whens_follow_note_order(cfg):
    audio = make_signal(np.concatenate([sine(262.0, 0.5), sine(440.0, 0.5), sine(330.0, 0.5)]))
    transcription = parse_tony_csv("1.02,330,0.4\n0.02,262,0.4\n0.52,440,0.4\n")
    doc = parse_mei(serialize_mei(encode_performance(audio, transcription, cfg, "three.wav")))
    assert [n.id for n in doc.notes] == ["note-0001", "note-0002", "note-0003"]
    assert [w.target_id for w in doc.whens] == [n.id for n in doc.notes]
    assert [str(n.name) for n in doc.notes] == ["C4", "A4", "E4"]
    assert [w.absolute_s for w in doc.whens] == pytest.approx([0.02, 0.52, 1.02])
