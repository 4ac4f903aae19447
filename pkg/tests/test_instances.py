import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crpgp.errors import Infeasible, ParseError
from crpgp.instances import (
    MANIFEST,
    generate_caserta,
    generate_dataset,
    generate_zhu,
    load_dataset,
    parse_instance,
    write_dataset,
    write_instance,
)
from crpgp.yard import Yard

EXAMPLE = "3 4 4\n2 2 4\n2 1 3\n0\n"


def test_parse_example():
    y = parse_instance(EXAMPLE)
    assert (y.n_stacks, len(y), y.max_height) == (3, 4, 4)
    assert y.stacks == [[2, 4], [1, 3], []]
    assert write_instance(y) == EXAMPLE


def test_empty_yard_text():
    assert write_instance(Yard([[], []], 3)) == "2 0 3\n0\n0\n"


@pytest.mark.parametrize("text", [
    "3 5 4\n2 2 4\n2 1 3\n0\n",  # N mismatch
    "2 2 4\n1 7\n1 7\n",  # duplicate
    "1 3 2\n3 1 2 3\n",  # too tall
    "2 1 3\n1 1\n",  # missing stack line
    "2 1 3\n2 1\n0\n",  # count mismatch
    "x y z\n",
    "",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_instance(text)


def test_caserta_structure_and_determinism():
    y = generate_caserta(3, 3, 42)
    assert len(y) == 9 and all(len(s) == 3 for s in y.stacks)
    assert sorted(c for s in y.stacks for c in s) == list(range(1, 10))
    assert y.max_height == 6
    assert generate_caserta(3, 3, 42) == y


def test_caserta_uniform_slot_of_container_one():
    counts = np.zeros(9)
    for seed in range(10000):
        flat = [c for s in generate_caserta(3, 3, seed).stacks for c in s]
        counts[flat.index(1)] += 1
    freq = counts / counts.sum()
    assert np.all(np.abs(freq - 1 / 9) <= 0.01), freq


def test_zhu_generator():
    y = generate_zhu(6, 15, 4, 7)
    assert len(y) == 15 and all(len(s) <= 3 for s in y.stacks)
    assert sorted(c for s in y.stacks for c in s) == list(range(1, 16))
    assert generate_zhu(6, 15, 4, 7) == y
    with pytest.raises(Infeasible):
        generate_zhu(6, 19, 4, 7)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 10), st.integers(1, 10), st.integers(0, 2**63))
def test_round_trip_caserta(s, h, seed):
    y = generate_caserta(s, h, seed)
    text = write_instance(y)
    assert parse_instance(text) == y
    assert write_instance(parse_instance(text)) == text


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 10), st.integers(3, 8), st.data())
def test_round_trip_zhu(s, t, data):
    n = data.draw(st.integers(0, s * (t - 1)))
    y = generate_zhu(s, n, t, data.draw(st.integers(0, 2**32)))
    assert parse_instance(write_instance(y)) == y
    assert sorted(c for st_ in y.stacks for c in st_) == list(range(1, n + 1))


def test_dataset_defaults_and_manifest(tmp_path):
    items = generate_dataset("caserta", 840, 3)
    assert len(items) == 840
    classes = {(r.S, r.N // r.S) for r, _ in items}
    assert len(classes) == 21
    for rec, y in items[:50]:
        assert rec.T == y.max_height == rec.N // rec.S + rec.S
    out = write_dataset(tmp_path / "d", items[:30])
    lines = (out / MANIFEST).read_text().splitlines()
    assert len(lines) == 30
    first = json.loads(lines[0])
    assert set(first) == {"fileName", "family", "S", "N", "T", "seed"}
    loaded = load_dataset(out)
    assert [n for n, _ in loaded] == [r.file_name for r, _ in items[:30]]
    assert [y for _, y in loaded] == [y for _, y in items[:30]]


def test_zhu_dataset_ranges():
    items = generate_dataset("zhu", 1000, 5)
    assert len(items) == 1000
    for rec, y in items:
        assert 6 <= rec.S <= 10 and 15 <= rec.N <= 69
        assert rec.N <= rec.S * (rec.T - 1)
        assert all(len(s) <= rec.T - 1 for s in y.stacks)


def test_dataset_bytes_are_deterministic(tmp_path):
    a = write_dataset(tmp_path / "a", generate_dataset("zhu", 20, 9))
    b = write_dataset(tmp_path / "b", generate_dataset("zhu", 20, 9))
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes()
