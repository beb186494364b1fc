# -*- coding: utf-8 -*-

"""
SECDED protection of compressed blocks.

Each 64-bit data word gets one check byte: seven Hamming parity bits
(bits 0..6) and an overall parity bit (bit 7), the (72,64) extended
Hamming code. Codeword bit positions are numbered per word as data bits
0..63 (byte ``i // 8``, bit ``i % 8``) followed by check bits 64..71; in a
multi-word block, word ``w`` occupies positions ``72 * w`` to ``72 * w + 71``.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

WORD_BYTES = 8
CODEWORD_BITS = 72
_DATA_BITS = 64
_PARITY_BITS = 7


def _hamming_positions():
    # data bits fill the non power-of-two positions 3, 5, 6, 7, 9, ...
    positions = [p for p in range(1, 72) if p & (p - 1)]
    return np.array(positions[:_DATA_BITS], dtype=np.int64)


_POSITIONS = _hamming_positions()
# row j: data bits whose Hamming position has bit j set
_PARITY_MATRIX = ((_POSITIONS[None, :] >> np.arange(_PARITY_BITS)[:, None]) & 1).astype(
    np.uint8
)
_POSITION_TO_DATA_BIT = {int(p): i for i, p in enumerate(_POSITIONS)}


class DecodeKind(enum.Enum):
    CLEAN = "Clean"
    CORRECTED_SINGLE = "CorrectedSingle"
    UNCORRECTABLE = "Uncorrectable"


@dataclass(frozen=True)
class DecodeStatus:
    """
    Outcome of a SECDED decode.

    :param kind: DecodeKind.
    :param bit_position: int or None.
        First corrected codeword bit when ``kind`` is CORRECTED_SINGLE.
    :param positions: tuple of int.
        Every corrected codeword bit, one per affected word.
    """

    kind: DecodeKind
    bit_position: int = None
    positions: tuple = field(default=())

    @property
    def clean(self):
        return self.kind is DecodeKind.CLEAN


CLEAN = DecodeStatus(DecodeKind.CLEAN)


def check_len(data_len):
    """Number of check bytes protecting ``data_len`` payload bytes."""
    return int(math.ceil(data_len / float(WORD_BYTES)))


@dataclass(frozen=True)
class EccBlock:
    """
    An ECC-extended block (ECB): payload plus one check byte per started word.
    """

    data: bytes
    check_bits: bytes

    @property
    def total_len(self):
        return len(self.data) + len(self.check_bits)

    def to_bytes(self):
        """Stored layout: payload bytes followed by check bytes."""
        return bytes(self.data) + bytes(self.check_bits)

    @classmethod
    def from_bytes(cls, buf, data_len):
        """
        Splits a stored ECB back into payload and check bytes.

        :param buf: bytes.
        :param data_len: int.
            Payload length recorded in the frame metadata.
        :return: EccBlock.
        """
        buf = bytes(buf)
        expected = data_len + check_len(data_len)
        if len(buf) != expected:
            raise ValueError(
                "ECB of {0} data bytes is {1} bytes long, got {2}".format(
                    data_len, expected, len(buf)
                )
            )
        return cls(buf[:data_len], buf[data_len:])


def _to_words(data):
    padded = bytes(data) + bytes(-len(data) % WORD_BYTES)
    return np.frombuffer(padded, dtype=np.uint8).reshape(-1, WORD_BYTES)


def _bits(words):
    return np.unpackbits(words, axis=1, bitorder="little")


def encode_words(words):
    """
    Check bytes of an array of 64-bit words.

    :param words: numpy.ndarray.
        ``(n, 8)`` uint8 array.
    :return: numpy.ndarray.
        ``(n,)`` uint8 check bytes.
    """
    bits = _bits(np.asarray(words, dtype=np.uint8))
    hamming = (bits.astype(np.int64) @ _PARITY_MATRIX.T.astype(np.int64)) & 1
    overall = (bits.sum(axis=1, dtype=np.int64) + hamming.sum(axis=1)) & 1
    weights = 1 << np.arange(_PARITY_BITS)
    return ((hamming * weights).sum(axis=1) | (overall << 7)).astype(np.uint8)


def decode_words(words, checks):
    """
    Corrects and classifies an array of codewords.

    :param words: numpy.ndarray.
        ``(n, 8)`` uint8 received data words.
    :param checks: numpy.ndarray.
        ``(n,)`` uint8 received check bytes.
    :return: tuple.
        ``(corrected_words, kinds, positions)``: kinds holds 0 clean,
        1 corrected, 2 uncorrectable; positions holds the corrected codeword
        bit (0..71) or -1.
    """
    words = np.array(words, dtype=np.uint8, copy=True)
    checks = np.asarray(checks, dtype=np.uint8)
    expected = encode_words(words)
    syndrome = (expected ^ checks) & 0x7F
    check_bits = np.unpackbits(checks[:, None], axis=1, bitorder="little")
    parity = (
        _bits(words).sum(axis=1, dtype=np.int64) + check_bits.sum(axis=1, dtype=np.int64)
    ) & 1

    kinds = np.zeros(len(words), dtype=np.int8)
    positions = np.full(len(words), -1, dtype=np.int64)
    for index in np.flatnonzero((syndrome != 0) | (parity != 0)):
        s, p = int(syndrome[index]), int(parity[index])
        if p == 0:
            kinds[index] = 2
            continue
        if s == 0:
            position = _DATA_BITS + 7
        elif s & (s - 1) == 0:
            position = _DATA_BITS + s.bit_length() - 1
        elif s in _POSITION_TO_DATA_BIT:
            position = _POSITION_TO_DATA_BIT[s]
            words[index, position // 8] ^= 1 << (position % 8)
        else:
            kinds[index] = 2
            continue
        kinds[index] = 1
        positions[index] = position
    return words, kinds, positions


def secded_encode(data):
    """
    Computes the ECB of a compressed payload. Short payloads are zero-padded
    to a word boundary for the computation only.

    :param data: bytes.
    :return: EccBlock.
    """
    data = bytes(data)
    if not data:
        raise ValueError("cannot protect an empty payload")
    return EccBlock(data, encode_words(_to_words(data)).tobytes())


def secded_decode(ecb):
    """
    Decodes a possibly corrupted ECB.

    :param ecb: EccBlock.
    :return: tuple.
        ``(data, DecodeStatus)``. Uncorrectable blocks return the data as read.
    """
    data = bytes(ecb.data)
    words = _to_words(data)
    checks = np.frombuffer(bytes(ecb.check_bits), dtype=np.uint8)
    corrected, kinds, positions = decode_words(words, checks)
    if (kinds == 2).any():
        return data, DecodeStatus(DecodeKind.UNCORRECTABLE)
    fixed = np.flatnonzero(kinds == 1)
    if not len(fixed):
        return data, CLEAN
    for w in fixed:
        # a correction landing in the unstored padding means more than one flip
        bit = int(positions[w])
        if bit < _DATA_BITS and int(w) * WORD_BYTES + bit // 8 >= len(data):
            return data, DecodeStatus(DecodeKind.UNCORRECTABLE)
    block_positions = tuple(int(w) * CODEWORD_BITS + int(positions[w]) for w in fixed)
    return (
        corrected.tobytes()[: len(data)],
        DecodeStatus(DecodeKind.CORRECTED_SINGLE, block_positions[0], block_positions),
    )


def ecb_byte_of(bit_position, data_len):
    """
    Index in the stored ECB (payload then check bytes) holding a codeword bit.

    :param bit_position: int.
        Block codeword bit position as reported by :class:`DecodeStatus`.
    :param data_len: int.
    :return: int.
    """
    word, bit = divmod(bit_position, CODEWORD_BITS)
    if bit < _DATA_BITS:
        return word * WORD_BYTES + bit // 8
    return data_len + word


def flip_bit(ecb, bit_position):
    """
    Flips one codeword bit of an ECB, for fault injection.

    :param ecb: EccBlock.
    :param bit_position: int.
    :return: EccBlock.
    """
    stored = bytearray(ecb.to_bytes())
    word, bit = divmod(bit_position, CODEWORD_BITS)
    if bit < _DATA_BITS and word * WORD_BYTES + bit // 8 >= len(ecb.data):
        raise ValueError("bit {0} lies in the unstored padding".format(bit_position))
    index = ecb_byte_of(bit_position, len(ecb.data))
    stored[index] ^= 1 << (bit_position % CODEWORD_BITS % 8)
    return EccBlock.from_bytes(stored, len(ecb.data))
