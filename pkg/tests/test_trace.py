#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for `nvllc.trace`."""

import os

import pytest
from path import Path as path

from nvllc import trace as tr
from nvllc.trace import TraceKind, TraceSpec

_here = path(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture(scope="function")
def temp(request, tmpdir):
    template_dir = 'root'

    tmpdir = path(tmpdir)
    (_here / template_dir).copytree(tmpdir / template_dir)
    cwd = os.getcwd()
    temp = tmpdir / template_dir
    os.chdir(temp)

    def fin():
        os.chdir(cwd)
    request.addfinalizer(fin)
    return temp


def only(kind):
    return {k: (1.0 if k == kind else 0.0) for k in tr.VALUE_KINDS}


class TestGenerate:

    def test_deterministic(self):
        spec = TraceSpec(length=500, seed=4)
        assert list(tr.generate(spec)) == list(tr.generate(spec))
        assert list(tr.generate(spec)) != list(tr.generate(TraceSpec(length=500, seed=5)))
        return

    def test_addresses_are_aligned_and_inside_footprint(self):
        for model in tr.ADDRESS_MODELS:
            spec = TraceSpec(length=1000, address_model=model, footprint=8192, seed=1)
            for event in tr.generate(spec):
                assert event.address % 64 == 0
                assert 0 <= event.address < 8192
        return

    def test_strided(self):
        spec = TraceSpec(length=6, address_model="strided", stride=128, footprint=512)
        assert [e.address for e in tr.generate(spec)] == [0, 128, 256, 384, 0, 128]
        return

    def test_zipf_concentrates_accesses(self):
        spec = TraceSpec(length=5000, address_model="zipf", zipf_s=1.2, footprint=1 << 16)
        addresses = [e.address for e in tr.generate(spec)]
        top = max(addresses.count(a) for a in set(addresses))
        assert top > 5000 / 1024 * 20
        return

    def test_zero_values(self):
        spec = TraceSpec(length=2000, write_fraction=1.0, value_model=only("zeros"))
        summary = tr.summarize(tr.generate(spec))
        assert summary.classes == {"Zeros": 2000}
        return

    def test_random_values_are_incompressible(self):
        spec = TraceSpec(length=10000, write_fraction=1.0, value_model=only("random"))
        summary = tr.summarize(tr.generate(spec))
        assert summary.classes.get("Uncompressed", 0) >= 0.99 * 10000
        return

    def test_small_delta_values_compress_to_b8d1(self):
        spec = TraceSpec(length=500, write_fraction=1.0, value_model=only("small_delta"))
        summary = tr.summarize(tr.generate(spec))
        assert summary.classes == {"B8D1": 500}
        return

    def test_write_fraction(self):
        for seed in range(3):
            spec = TraceSpec(length=10000, write_fraction=0.3, seed=seed)
            summary = tr.summarize(tr.generate(spec))
            sigma = (0.3 * 0.7 / 10000) ** 0.5
            assert abs(summary.write_fraction - 0.3) < 4 * sigma
        return

    @pytest.mark.parametrize("kwargs, field_name", [
        (dict(write_fraction=1.5), "write_fraction"),
        (dict(address_model="gaussian"), "address_model"),
        (dict(footprint=32), "footprint"),
        (dict(value_model={"zeros": 0.5, "random": 0.4}), "value_model"),
        (dict(value_model={"ones": 1.0}), "value_model"),
        (dict(length=-1), "length"),
    ])
    def test_invalid_spec(self, kwargs, field_name):
        with pytest.raises(tr.TraceSpecError) as info:
            TraceSpec(**kwargs).validate()
        assert info.value.field == field_name
        return


class TestTraceFile:

    def test_round_trip(self, temp):
        events = list(tr.generate(TraceSpec(length=300, seed=2)))
        assert tr.write_trace(temp / 'trace.bin', events) == 300
        assert list(tr.read_trace(temp / 'trace.bin')) == events
        assert tr.trace_block_size(temp / 'trace.bin') == 64
        return

    def test_record_sizes(self, temp):
        events = [
            tr.TraceEvent(TraceKind.READ, 64),
            tr.TraceEvent(TraceKind.WRITE, 128, bytes(64)),
        ]
        tr.write_trace(temp / 'trace.bin', events)
        assert os.path.getsize(temp / 'trace.bin') == 16 + 9 + 9 + 64
        return

    def test_empty_trace(self, temp):
        tr.write_trace(temp / 'empty.bin', [])
        assert list(tr.read_trace(temp / 'empty.bin')) == []
        return

    def test_truncated_record(self, temp):
        events = list(tr.generate(TraceSpec(length=50, write_fraction=1.0, seed=3)))
        tr.write_trace(temp / 'trace.bin', events)
        with open(temp / 'trace.bin', 'rb') as handle:
            data = handle.read()
        with open(temp / 'cut.bin', 'wb') as handle:
            handle.write(data[:-10])
        with pytest.raises(tr.TraceFormatError) as info:
            list(tr.read_trace(temp / 'cut.bin'))
        assert info.value.offset == len(data) - 10
        return

    def test_bad_magic(self, temp):
        with open(temp / 'bad.bin', 'wb') as handle:
            handle.write(b"NOTATRACE" + bytes(20))
        with pytest.raises(tr.TraceFormatError) as info:
            list(tr.read_trace(temp / 'bad.bin'))
        assert info.value.offset == 0
        return

    def test_unaligned_events_are_refused(self, temp):
        with pytest.raises(ValueError):
            tr.write_trace(temp / 'trace.bin', [tr.TraceEvent(TraceKind.READ, 3)])
        return

    def test_csv_import(self, temp):
        events = list(tr.iter_trace(temp / 'hand.csv'))
        assert [e.kind for e in events] == [
            TraceKind.WRITE, TraceKind.READ, TraceKind.WRITE, TraceKind.READ,
        ]
        assert events[0].payload == bytes(64)
        assert events[1].address == 0x40
        assert events[2].payload[:8] == bytes(range(1, 9))
        return

    def test_csv_block_size(self, temp):
        with open(temp / 'narrow.csv', 'w') as handle:
            handle.write("R,0x20,\nW,0x40,{0}\n".format("ab" * 32))
        events = list(tr.iter_trace(temp / 'narrow.csv', block_size=32))
        assert [e.address for e in events] == [0x20, 0x40]
        assert events[1].payload == b"\xab" * 32
        with pytest.raises(tr.TraceFormatError) as info:
            list(tr.iter_trace(temp / 'narrow.csv'))
        assert info.value.offset == 1
        return

    def test_csv_errors_carry_the_line(self, temp):
        with open(temp / 'broken.csv', 'w') as handle:
            handle.write("R,0x0,\nX,0x40,\n")
        with pytest.raises(tr.TraceFormatError) as info:
            tr.read_csv_trace(temp / 'broken.csv')
        assert info.value.offset == 2
        return
