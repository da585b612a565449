import threading

import pytest

from reviewforge.errors import ParseError
from reviewforge.jsonl import Appender, dumps, read_lines, write_all


def test_dumps_canonical():
    assert dumps({"b": 1, "a": "x"}) == '{"b":1,"a":"x"}'
    assert dumps({"t": "café"}) == '{"t":"café"}'


def test_round_trip_byte_identical(tmp_path):
    rows = [{"id": i, "text": f"row {i} café"} for i in range(5)]
    path = tmp_path / "rows.jsonl"
    write_all(path, rows)
    first = path.read_bytes()
    lines, errors = read_lines(path)
    reread = [row for _, row in lines]
    assert not errors
    write_all(path, reread)
    assert path.read_bytes() == first


def test_read_lines_collects_errors(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"ok":1}\nnot json\n{"ok":2}\n')
    lines, errors = read_lines(path)
    rows = list(lines)
    assert [r["ok"] for _, r in rows] == [1, 2]
    assert len(errors) == 1 and errors[0].line_no == 2


def test_read_lines_strict_raises(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("oops\n")
    lines, _ = read_lines(path, strict=True)
    with pytest.raises(ParseError):
        list(lines)


def test_appender_concurrent(tmp_path):
    path = tmp_path / "log.jsonl"
    appender = Appender(path)

    def work(tid):
        for i in range(20):
            appender.append({"tid": tid, "i": i})

    threads = [threading.Thread(target=work, args=(t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    lines, errors = read_lines(path)
    rows = list(lines)
    assert not errors
    assert len(rows) == 80
    # per-thread order preserved
    for tid in range(4):
        seq = [r["i"] for _, r in rows if r["tid"] == tid]
        assert seq == sorted(seq)
