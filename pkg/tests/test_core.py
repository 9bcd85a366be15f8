import pytest

from wbckit.core import (
    CLASS_CODES,
    ClassLabel,
    ImageRecord,
    Manifest,
    ManifestError,
    Severity,
    SplitName,
    ValidationError,
    parse_label,
    parse_manifest,
    parse_severity,
    parse_split,
    write_manifest,
)

from conftest import make_manifest


def test_exactly_13_labels():
    assert len(CLASS_CODES) == 13
    assert len(set(CLASS_CODES)) == 13
    for code in CLASS_CODES:
        assert parse_label(code).value == code


@pytest.mark.parametrize("bad", ["NEUTRO", "sne", "Sne", "", "SNE ", "XX"])
def test_unknown_label_rejected(bad):
    with pytest.raises(ValidationError):
        parse_label(bad)


def test_severity_total_order():
    assert Severity.PRISTINE < Severity.MILD < Severity.MODERATE < Severity.EXTREME
    assert sorted(Severity) == list(Severity)
    for s in Severity:
        assert parse_severity(str(s)) == s


def test_severity_bad_tokens():
    for bad in ("Pristine", "PRISTINE", "light", ""):
        with pytest.raises(ValidationError):
            parse_severity(bad)


def test_split_tokens():
    assert parse_split("phase2_test") == SplitName.PHASE2_TEST
    with pytest.raises(ValidationError):
        parse_split("train")


def test_parse_three_rows(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("image_id,patient_id,label\na,p1,SNE\nb,p1,LY\nc,p2,PLY\n")
    m = parse_manifest(p)
    assert len(m) == 3
    assert [r.label.value for r in m] == ["SNE", "LY", "PLY"]
    assert m.records[0].patient_id == "p1"


def test_duplicate_image_id_named(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("image_id,patient_id,label\nimg_7,p1,SNE\nimg_8,p1,LY\nimg_7,p2,MO\n")
    with pytest.raises(ManifestError, match="img_7"):
        parse_manifest(p)


def test_unknown_label_in_file(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("image_id,patient_id,label\na,p1,NEUTRO\n")
    with pytest.raises(ManifestError, match="NEUTRO"):
        parse_manifest(p)


def test_malformed_row_reports_line(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("image_id,patient_id,label\na,p1,SNE\nb,p1\n")
    with pytest.raises(ManifestError, match=":3"):
        parse_manifest(p)


def test_unknown_split_and_severity_tokens(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("image_id,patient_id,label,split\na,p1,SNE,phase3\n")
    with pytest.raises(ManifestError, match="phase3"):
        parse_manifest(p)
    p.write_text("image_id,patient_id,label,severity\na,p1,SNE,broken\n")
    with pytest.raises(ManifestError, match="broken"):
        parse_manifest(p)


def test_empty_manifest_header_only(tmp_path):
    p = tmp_path / "m.csv"
    write_manifest(Manifest(()), p)
    assert p.read_text() == "image_id,patient_id,label\n"
    assert len(parse_manifest(p)) == 0


def test_roundtrip_100_records(tmp_path):
    records = []
    for i in range(100):
        records.append(ImageRecord(
            image_id=f"im{i:03d}",
            patient_id=f"p{i % 7}",
            label=list(ClassLabel)[i % 13],
            split=list(SplitName)[i % 4],
            severity=list(Severity)[i % 4],
            seed=i * 977,
        ))
    m = Manifest(tuple(records))
    path = tmp_path / "m.csv"
    write_manifest(m, path)
    parsed = parse_manifest(path)
    # source_path is not serialized; everything else must round-trip
    assert len(parsed) == 100
    for a, b in zip(m, parsed):
        assert (a.image_id, a.patient_id, a.label, a.split, a.severity, a.seed) == \
               (b.image_id, b.patient_id, b.label, b.split, b.severity, b.seed)


def test_write_is_byte_stable(tmp_path):
    m = make_manifest([("a", "p1", "SNE"), ("b", "p2", "PLY")])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_manifest(m, p1)
    write_manifest(parse_manifest(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert b"\r" not in p1.read_bytes()


def test_severity_column_written_when_tagged(tmp_path):
    m = Manifest((ImageRecord("a", "p", ClassLabel.SNE, severity=Severity.MILD),))
    p = tmp_path / "m.csv"
    write_manifest(m, p)
    assert p.read_text() == "image_id,patient_id,label,severity\na,p,SNE,mild\n"


def test_partial_tagging_rejected():
    with pytest.raises(ManifestError, match="all or none"):
        Manifest((
            ImageRecord("a", "p", ClassLabel.SNE, severity=Severity.MILD),
            ImageRecord("b", "p", ClassLabel.SNE),
        ))


def test_duplicate_in_constructor():
    with pytest.raises(ManifestError):
        Manifest((
            ImageRecord("a", "p", ClassLabel.SNE),
            ImageRecord("a", "q", ClassLabel.LY),
        ))


def test_out_of_order_optional_columns_rejected(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("image_id,patient_id,label,severity,split\na,p1,SNE,mild,phase1_train\n")
    with pytest.raises(ManifestError):
        parse_manifest(p)
