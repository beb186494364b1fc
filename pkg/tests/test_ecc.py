#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for `nvllc.ecc`."""

import itertools

import numpy as np
import pytest

from nvllc import ecc
from nvllc.ecc import DecodeKind


def codeword_bits(word, check):
    data = np.unpackbits(np.frombuffer(word, dtype=np.uint8), bitorder="little")
    checks = np.unpackbits(np.array([check], dtype=np.uint8), bitorder="little")
    return np.concatenate([data, checks])


def split_codewords(bits):
    """``(n, 72)`` bit rows back into data words and check bytes."""
    words = np.packbits(bits[:, :64], axis=1, bitorder="little")
    checks = np.packbits(bits[:, 64:], axis=1, bitorder="little")[:, 0]
    return words, checks


class TestEncode:

    def test_zero_word_has_zero_check(self):
        ecb = ecc.secded_encode(bytes(8))
        assert ecb.check_bits == b"\x00"
        assert ecb.total_len == 9
        return

    def test_check_length_per_started_word(self):
        assert ecc.check_len(1) == 1
        assert ecc.check_len(8) == 1
        assert ecc.check_len(16) == 2
        assert ecc.check_len(20) == 3
        assert ecc.check_len(64) == 8
        return

    def test_overall_parity_makes_codeword_even(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            word = rng.integers(0, 256, size=8, dtype=np.uint8).tobytes()
            check = ecc.secded_encode(word).check_bits[0]
            assert codeword_bits(word, check).sum() % 2 == 0
        return

    def test_single_data_bit(self):
        # data bit 0 sits at Hamming position 3: parity bits 0 and 1, odd overall
        ecb = ecc.secded_encode(b"\x01" + bytes(7))
        assert ecb.check_bits == b"\x83"
        return

    def test_all_ones_word(self):
        check = ecc.encode_words(np.full((1, 8), 0xFF, dtype=np.uint8))
        assert check.dtype == np.uint8
        assert codeword_bits(b"\xff" * 8, int(check[0])).sum() % 2 == 0
        return

    def test_matches_reference_encoder(self):
        positions = [p for p in range(1, 72) if p & (p - 1)][:64]

        def reference(value):
            syndrome = 0
            for i in range(64):
                if value >> i & 1:
                    syndrome ^= positions[i]
            overall = (bin(value).count("1") + bin(syndrome).count("1")) & 1
            return syndrome | overall << 7

        rng = np.random.default_rng(11)
        words = rng.integers(0, 256, size=(10000, 8), dtype=np.uint8)
        checks = ecc.encode_words(words)
        for word, check in zip(words, checks):
            assert int(check) == reference(int.from_bytes(word.tobytes(), "little"))
        return

    def test_words_match_block_encoder(self):
        rng = np.random.default_rng(2)
        data = rng.integers(0, 256, size=64, dtype=np.uint8)
        checks = ecc.encode_words(data.reshape(8, 8))
        assert checks.tobytes() == ecc.secded_encode(data.tobytes()).check_bits
        return

    def test_empty_payload(self):
        with pytest.raises(ValueError):
            ecc.secded_encode(b"")
        return


class TestEccBlock:

    def test_stored_layout(self):
        ecb = ecc.secded_encode(bytes(range(20)))
        stored = ecb.to_bytes()
        assert stored[:20] == bytes(range(20))
        assert len(stored) == 23
        assert ecc.EccBlock.from_bytes(stored, 20) == ecb
        return

    def test_from_bytes_checks_length(self):
        with pytest.raises(ValueError):
            ecc.EccBlock.from_bytes(bytes(22), 20)
        return


class TestDecode:

    def test_clean(self):
        ecb = ecc.secded_encode(b"\x11" * 16)
        data, status = ecc.secded_decode(ecb)
        assert data == b"\x11" * 16
        assert status.clean
        return

    def test_every_single_flip_is_corrected(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            word = rng.integers(0, 256, size=8, dtype=np.uint8).tobytes()
            ecb = ecc.secded_encode(word)
            for position in range(ecc.CODEWORD_BITS):
                data, status = ecc.secded_decode(ecc.flip_bit(ecb, position))
                assert data == word
                assert status.kind is DecodeKind.CORRECTED_SINGLE
                assert status.bit_position == position
        return

    def test_every_double_flip_is_detected(self):
        rng = np.random.default_rng(4)
        pairs = np.array(list(itertools.combinations(range(ecc.CODEWORD_BITS), 2)))
        assert len(pairs) == 2556
        rows = np.arange(len(pairs))
        for _ in range(100):
            word = rng.integers(0, 256, size=8, dtype=np.uint8).tobytes()
            check = ecc.secded_encode(word).check_bits[0]
            bits = np.tile(codeword_bits(word, check), (len(pairs), 1))
            bits[rows, pairs[:, 0]] ^= 1
            bits[rows, pairs[:, 1]] ^= 1
            words, checks = split_codewords(bits)
            _, kinds, _ = ecc.decode_words(words, checks)
            assert (kinds == 2).all()
        return

    def test_one_correction_per_word(self):
        ecb = ecc.secded_encode(bytes(range(24)))
        corrupted = ecc.flip_bit(ecc.flip_bit(ecb, 5), 72 + 64 + 2)
        data, status = ecc.secded_decode(corrupted)
        assert data == bytes(range(24))
        assert status.kind is DecodeKind.CORRECTED_SINGLE
        assert status.positions == (5, 72 + 66)
        return

    def test_two_flips_in_one_word(self):
        ecb = ecc.secded_encode(bytes(range(16)))
        corrupted = ecc.flip_bit(ecc.flip_bit(ecb, 3), 40)
        _, status = ecc.secded_decode(corrupted)
        assert status.kind is DecodeKind.UNCORRECTABLE
        return

    def test_short_last_word(self):
        ecb = ecc.secded_encode(b"\x7f")
        for position in list(range(8)) + list(range(64, 72)):
            data, status = ecc.secded_decode(ecc.flip_bit(ecb, position))
            assert data == b"\x7f"
            assert status.kind is DecodeKind.CORRECTED_SINGLE
        return


class TestFaultInjection:

    def test_padding_bits_cannot_be_flipped(self):
        ecb = ecc.secded_encode(bytes(20))
        with pytest.raises(ValueError):
            ecc.flip_bit(ecb, 2 * 72 + 8 * 5)
        return

    def test_ecb_byte_of(self):
        assert ecc.ecb_byte_of(0, 20) == 0
        assert ecc.ecb_byte_of(63, 20) == 7
        assert ecc.ecb_byte_of(72 + 19, 20) == 10
        assert ecc.ecb_byte_of(64, 20) == 20
        assert ecc.ecb_byte_of(72 + 64, 20) == 21
        return
