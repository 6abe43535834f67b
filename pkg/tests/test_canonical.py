from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, strategies as st

from annoserve.canonical import canonical_bytes, canonical_dumps, parse_rfc3339, rfc3339_now, sort_map


def test_compact_separators_and_key_passthrough():
    assert canonical_dumps({"b": 1, "a": [1, 2]}) == '{"b":1,"a":[1,2]}'


def test_integers_without_decimal_point():
    assert canonical_dumps([0, 1, -7, 10**12]) == "[0,1,-7,1000000000000]"


def test_floats_shortest_round_trip():
    # json uses repr(), which is the shortest string that parses back exactly
    assert canonical_dumps([0.1, 1.5, 100.0]) == "[0.1,1.5,100.0]"
    value = 0.6143718912
    assert json.loads(canonical_dumps(value)) == value


def test_unicode_not_escaped():
    assert canonical_dumps({"name": "café"}) == '{"name":"café"}'
    assert canonical_bytes("ü") == '"ü"'.encode("utf-8")


def test_nan_and_infinity_rejected():
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(ValueError):
            canonical_dumps({"x": bad})


def test_sort_map_recursive():
    doc = {"b": {"d": 1, "c": 2}, "a": [{"z": 0, "y": 1}]}
    assert canonical_dumps(sort_map(doc)) == '{"a":[{"y":1,"z":0}],"b":{"c":2,"d":1}}'


@given(st.dictionaries(st.text(max_size=8), st.integers(), max_size=6))
def test_sorted_maps_serialize_identically_regardless_of_insertion_order(d):
    items = list(d.items())
    shuffled = dict(reversed(items))
    assert canonical_dumps(sort_map(d)) == canonical_dumps(sort_map(shuffled))


# ---------------------------------------------------------------------------
# RFC 3339 timestamps


def test_now_is_utc_and_parses():
    stamp = rfc3339_now()
    assert stamp.endswith("Z")
    parsed = parse_rfc3339(stamp)
    assert parsed.utcoffset().total_seconds() == 0


def test_parse_accepts_z_and_numeric_offsets():
    a = parse_rfc3339("2026-08-01T12:00:00Z")
    b = parse_rfc3339("2026-08-01T12:00:00+00:00")
    assert a == b


def test_parse_rejects_naive_and_garbage():
    with pytest.raises(ValueError):
        parse_rfc3339("2026-08-01T12:00:00")
    with pytest.raises(ValueError):
        parse_rfc3339("yesterday")


def test_parse_rejects_non_utc_offsets():
    # timestamps are defined as UTC throughout; a +02:00 wall time is not
    with pytest.raises(ValueError):
        parse_rfc3339("2026-08-01T11:59:00+02:00")
