#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for `nvllc.rearrange`."""

import numpy as np
import pytest

from nvllc import rearrange as ra


def healthy(size=72):
    return np.zeros(size, dtype=bool)


class TestPlacement:

    def test_wraps_around_the_frame(self):
        assert list(ra.placement(healthy(), 70, 4)) == [70, 71, 0, 1]
        return

    def test_skips_faulty_bytes(self):
        bitmap = healthy()
        bitmap[[3, 5]] = True
        assert list(ra.placement(bitmap, 2, 4)) == [2, 4, 6, 7]
        return

    def test_capacity_exceeded(self):
        bitmap = healthy()
        bitmap[:70] = True
        with pytest.raises(ra.CapacityExceeded):
            ra.placement(bitmap, 0, 3)
        return

    def test_start_outside_frame(self):
        with pytest.raises(ValueError):
            ra.placement(healthy(), 72, 1)
        return


class TestRearrange:

    def test_mask_avoids_faulty_bytes(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            bitmap = rng.random(72) < 0.3
            length = int(rng.integers(1, ra.healthy_count(bitmap) + 1))
            ecb = rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()
            recb = ra.rearrange(ecb, bitmap, int(rng.integers(0, 72)))
            assert not (recb.mask & bitmap).any()
            assert recb.mask.sum() == length
        return

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(5000):
            bitmap = rng.random(72) < rng.random()
            if ra.healthy_count(bitmap) == 0:
                continue
            length = int(rng.integers(1, ra.healthy_count(bitmap) + 1))
            start = int(rng.integers(0, 72))
            ecb = rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()
            frame = rng.integers(0, 256, size=72, dtype=np.uint8)
            ra.rearrange(ecb, bitmap, start).apply(frame)
            assert ra.derange(frame, bitmap, start, length) == ecb
        return

    def test_apply_leaves_unmasked_bytes(self):
        frame = np.full(8, 0xAA, dtype=np.uint8)
        ra.rearrange(b"\x01\x02", healthy(8), 7).apply(frame)
        assert list(frame) == [0x02] + [0xAA] * 6 + [0x01]
        return

    @pytest.mark.slow
    def test_round_trip_at_scale(self):
        rng = np.random.default_rng(2)
        for _ in range(100000):
            bitmap = rng.random(72) < rng.random()
            if ra.healthy_count(bitmap) == 0:
                continue
            length = int(rng.integers(1, ra.healthy_count(bitmap) + 1))
            start = int(rng.integers(0, 72))
            ecb = rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()
            frame = np.zeros(72, dtype=np.uint8)
            ra.rearrange(ecb, bitmap, start).apply(frame)
            assert ra.derange(frame, bitmap, start, length) == ecb
        return


class TestGlobalCounter:

    @pytest.mark.parametrize("length", [2, 18, 45, 64])
    def test_uniform_wear_over_full_cycles(self, length):
        counter = ra.GlobalCounter(64)
        writes = np.zeros(64, dtype=np.int64)
        cycles = 16
        for _ in range(64 * cycles):
            recb = ra.rearrange(bytes(length), healthy(64), ra.next_start(counter))
            writes += recb.mask
        assert (writes == length * cycles).all()
        return

    def test_stride_visits_every_offset(self):
        counter = ra.GlobalCounter(72, stride=5)
        starts = {ra.next_start(counter) for _ in range(72)}
        assert starts == set(range(72))
        return

    def test_stride_sharing_a_factor(self):
        for stride in (2, 3, 0):
            with pytest.raises(ValueError):
                ra.GlobalCounter(72, stride=stride)
        return
