"""Journal persistence: uniqueness, determinism, resume semantics."""

import pytest

from annotator.errors import IntegrityError
from annotator.journal import Journal, JournalEntry


def entry(scan="s0", rnd=1, coord=(0, 0, 0), score=0.5):
    return JournalEntry(
        scan_id=scan,
        round_index=rnd,
        coord=coord,
        strategy="vcd",
        score=score,
        point_indices=(1, 2, 3),
        revealed_labels=(1, 1, 2),
    )


HEADER = {"mode": "al", "strategy": "vcd", "seed": 7}


def test_append_and_reload(tmp_path):
    path = tmp_path / "j.ndjson"
    j = Journal(HEADER, path=path)
    j.append(entry())
    j.append(entry(coord=(1, 0, 0)))
    j.close()
    header, entries = Journal.load(path)
    assert header["seed"] == 7
    assert [e.coord for e in entries] == [(0, 0, 0), (1, 0, 0)]
    assert entries[0].revealed_labels == (1, 1, 2)


def test_duplicate_selection_rejected():
    j = Journal(HEADER)
    j.append(entry())
    with pytest.raises(IntegrityError):
        j.append(entry(score=0.9))
    # same coord on another scan is fine
    j.append(entry(scan="s1"))


def test_label_count_must_match_indices():
    with pytest.raises(IntegrityError):
        JournalEntry(
            scan_id="s",
            round_index=1,
            coord=(0, 0, 0),
            strategy="vcd",
            score=0.0,
            point_indices=(1, 2),
            revealed_labels=(1,),
        )


def test_serialization_is_deterministic(tmp_path):
    a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    for path in (a, b):
        j = Journal(HEADER, path=path)
        j.append(entry())
        j.append(entry(scan="s1", score=1 / 3))
        j.close()
    assert a.read_bytes() == b.read_bytes()


def test_resume_appends_to_existing(tmp_path):
    path = tmp_path / "j.ndjson"
    j = Journal(HEADER, path=path)
    j.append(entry())
    j.close()
    j2 = Journal.resume(path, HEADER)
    assert len(j2) == 1
    j2.append(entry(coord=(5, 5, 5), rnd=2))
    j2.close()
    _, entries = Journal.load(path)
    assert len(entries) == 2


def test_resume_rejects_other_campaign(tmp_path):
    path = tmp_path / "j.ndjson"
    Journal(HEADER, path=path).close()
    with pytest.raises(IntegrityError):
        Journal.resume(path, {**HEADER, "seed": 8})


def test_truncated_tail_is_dropped_on_resume(tmp_path):
    path = tmp_path / "j.ndjson"
    j = Journal(HEADER, path=path)
    j.append(entry())
    j.close()
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('{"kind":"entry","scan_id":"s9"')  # interrupted write
    j2 = Journal.resume(path, HEADER)
    assert len(j2) == 1
    j2.close()
    header, entries = Journal.load(path)  # file was rewritten clean
    assert len(entries) == 1


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "j.ndjson"
    path.write_text('{"kind":"entry"}\n', encoding="utf-8")
    with pytest.raises(IntegrityError):
        Journal.load(path)
    path.write_text("", encoding="utf-8")
    with pytest.raises(IntegrityError):
        Journal.load(path)
