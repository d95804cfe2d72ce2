import math
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aaspectra.aaindex import (AMINO_ACIDS, ParseError, PropertyRecord, default_aaindex_path,
                               drop_incomplete, format_aaindex, parse_aaindex)

HEADER = "I    A/L     R/K     N/M     D/F     C/P     Q/S     E/T     G/W     H/Y     I/V"


def block(acc, desc, row1, row2, extra=""):
    return f"H {acc}\nD {desc}\n{extra}{HEADER}\n  {row1}\n  {row2}\n//\n"


def reference_records(text):
    """Deliberately naive reader: regex over each record, file order A/L R/K ... I/V."""
    order = "ARNDCQEGHILKMFPSTWYV"
    out = {}
    for chunk in text.split("\n//"):
        m = re.search(r"^H (\S+)", chunk, re.M)
        i = re.search(r"^I .*\n((?: .*\n?){2})", chunk, re.M)
        if not (m and i):
            continue
        toks = i.group(1).split()
        out[m.group(1)] = {aa: (None if t == "NA" else float(t)) for aa, t in zip(order, toks)}
    return out


def test_empty_input():
    assert parse_aaindex("") == []
    assert drop_incomplete([]) == []


def test_identity_mapping_of_i_line_order():
    text = block("TEST001", "test property", " ".join(map(str, range(1, 11))),
                 " ".join(map(str, range(11, 21))))
    [rec] = parse_aaindex(text)
    assert rec.accession == "TEST001" and rec.description == "test property"
    assert rec.values["A"] == 1 and rec.values["V"] == 20
    assert rec.values["I"] == 10 and rec.values["L"] == 11
    assert sorted(rec.values) == sorted(AMINO_ACIDS)
    assert not rec.has_missing


def test_na_in_w_slot_matches_reference_reader():
    row2 = "11 12 13 14 15 16 17 NA 19 20"
    text = block("TEST002", "with a gap", "1 2 3 4 5 6 7 8 9 10", row2)
    [rec] = parse_aaindex(text)
    ref = reference_records(text)["TEST002"]
    assert rec.has_missing
    assert math.isnan(rec.values["W"])
    numeric = {aa: v for aa, v in rec.values.items() if not math.isnan(v)}
    assert len(numeric) == 19
    assert numeric == {aa: v for aa, v in ref.items() if v is not None}


def test_multiline_description_and_extra_tags():
    text = ("H X1\nD first part\n  second part\nR PMID:1\nA Someone\nT title\n  more title\n"
            f"{HEADER}\n  1 2 3 4 5 6 7 8 9 10\n  1 2 3 4 5 6 7 8 9 10\n//\n")
    [rec] = parse_aaindex(text)
    assert rec.description == "first part second part"


def test_drop_incomplete_keeps_order():
    text = (block("A1", "ok", "1 " * 10, "2 " * 10) + block("A2", "bad", "NA " + "1 " * 9, "2 " * 10)
            + block("A3", "ok", "3 " * 10, "4 " * 10))
    recs = parse_aaindex(text)
    assert [r.accession for r in drop_incomplete(recs)] == ["A1", "A3"]


@pytest.mark.parametrize("text, fragment", [
    ("D no accession\n" + HEADER + "\n 1 2 3 4 5 6 7 8 9 10\n 1 2 3 4 5 6 7 8 9 10\n//\n", "byte offset 0"),
    ("H NOI\nD nothing\n//\n", "NOI"),
    ("H SHORT\nD x\n" + HEADER + "\n 1 2 3\n 4 5 6\n//\n", "SHORT"),
    ("H BADNUM\nD x\n" + HEADER + "\n 1 2 3 4 5 6 7 8 9 q\n 1 2 3 4 5 6 7 8 9 10\n//\n", "BADNUM"),
])
def test_malformed_records_name_their_location(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_aaindex(text)


def test_offset_reported_for_second_record():
    good = block("G1", "fine", "1 " * 10, "1 " * 10)
    with pytest.raises(ParseError, match=f"byte offset {len(good.encode())}"):
        parse_aaindex(good + "D orphan\n//\n")


def test_duplicate_accession_rejected():
    b = block("DUP", "x", "1 " * 10, "1 " * 10)
    with pytest.raises(ParseError, match="duplicate"):
        parse_aaindex(b + b)


def test_unterminated_record_rejected():
    with pytest.raises(ParseError, match="terminator"):
        parse_aaindex(block("T", "x", "1 " * 10, "1 " * 10)[:-3])


def test_bundled_release_against_grep_oracle(aaindex_records):
    raw = default_aaindex_path().read_text(encoding="latin-1")
    assert len(aaindex_records) == 566 == len(re.findall(r"^H ", raw, re.M))
    ref = reference_records(raw)
    with_na = {acc for acc, vals in ref.items() if any(v is None for v in vals.values())}
    complete = drop_incomplete(aaindex_records)
    assert len(complete) == 566 - len(with_na)
    assert {r.accession for r in complete}.isdisjoint(with_na)
    for rec in aaindex_records:
        for aa, v in ref[rec.accession].items():
            if v is None:
                assert math.isnan(rec.values[aa])
            else:
                assert rec.values[aa] == v


def test_full_release_round_trips(aaindex_records):
    again = parse_aaindex(format_aaindex(aaindex_records))
    for a, b in zip(aaindex_records, again):
        assert (a.accession, a.description) == (b.accession, b.description)
        np.testing.assert_array_equal(a.vector(), b.vector())


_value = st.one_of(st.floats(-1e6, 1e6, allow_nan=False), st.just(math.nan))
_record = st.builds(
    lambda acc, desc, vals: PropertyRecord(acc, desc, dict(zip(AMINO_ACIDS, vals)),
                                           any(math.isnan(v) for v in vals)),
    st.from_regex(r"[A-Z]{4}[0-9]{6}", fullmatch=True),
    st.from_regex(r"[A-Za-z][A-Za-z0-9 ,()\-]{0,40}[A-Za-z0-9)]", fullmatch=True),
    st.lists(_value, min_size=20, max_size=20),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(_record, max_size=5, unique_by=lambda r: r.accession))
def test_parse_format_parse_is_identity(records):
    once = parse_aaindex(format_aaindex(records))
    twice = parse_aaindex(format_aaindex(once))
    assert len(once) == len(records) == len(twice)
    for orig, a, b in zip(records, once, twice):
        assert orig.accession == a.accession == b.accession
        assert " ".join(orig.description.split()) == a.description == b.description
        assert orig.has_missing == a.has_missing
        np.testing.assert_array_equal(orig.vector(), a.vector())
        np.testing.assert_array_equal(a.vector(), b.vector())


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e12, 1e12, allow_nan=False, allow_infinity=False))
def test_decimal_text_round_trip(v):
    vals = " ".join([repr(v)] * 10)
    [rec] = parse_aaindex(block("R1", "x", vals, vals))
    got = rec.values["A"]
    assert got == v or abs(got - v) <= 1e-9 * abs(v)
