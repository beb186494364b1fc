# -*- coding: utf-8 -*-

"""
Base-Delta-Immediate compression of cache blocks.

Every encoding uses two bases: an implicit zero base and one explicit base
stored at the head of the payload. The per-segment base selector bits
(``zero_base_mask``) travel with the encoding tag in the tag array.
"""

import enum
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_BLOCK_SIZE = 64


class MalformedBlockError(ValueError):
    """Raised when a payload does not match its encoding class."""


class Encoding(enum.Enum):
    ZEROS = "Zeros"
    REPEAT = "Repeat"
    B8D1 = "B8D1"
    B8D2 = "B8D2"
    B8D4 = "B8D4"
    B4D1 = "B4D1"
    B4D2 = "B4D2"
    B2D1 = "B2D1"
    UNCOMPRESSED = "Uncompressed"

    @property
    def base_size(self):
        return _BASE_DELTA.get(self, (None, None))[0]

    @property
    def delta_size(self):
        return _BASE_DELTA.get(self, (None, None))[1]


_BASE_DELTA = {
    Encoding.B8D1: (8, 1),
    Encoding.B8D2: (8, 2),
    Encoding.B8D4: (8, 4),
    Encoding.B4D1: (4, 1),
    Encoding.B4D2: (4, 2),
    Encoding.B2D1: (2, 1),
}

PRECEDENCE = (
    Encoding.ZEROS,
    Encoding.REPEAT,
    Encoding.B8D1,
    Encoding.B4D1,
    Encoding.B8D2,
    Encoding.B2D1,
    Encoding.B4D2,
    Encoding.B8D4,
    Encoding.UNCOMPRESSED,
)

_UNSIGNED = {2: np.dtype("<u2"), 4: np.dtype("<u4"), 8: np.dtype("<u8")}
_SIGNED = {1: np.dtype("<i1"), 2: np.dtype("<i2"), 4: np.dtype("<i4"), 8: np.dtype("<i8")}


def check_block_size(block_size):
    """
    Validates a block size: a power of two of at least 32 bytes.

    :param block_size: int.
    :return: int.
        The validated block size.
    """
    if block_size < 32 or block_size & (block_size - 1):
        raise ValueError(
            "block size must be a power of two >= 32, got {0}".format(block_size)
        )
    return block_size


@lru_cache(maxsize=None)
def size_table(block_size=DEFAULT_BLOCK_SIZE):
    """
    Payload size of every encoding class for the given block size.

    Base-delta classes hold one explicit base plus one delta per base-sized
    segment, so the table scales with the number of segments.

    :param block_size: int.
        Block size in bytes.
    :return: dict.
        Mapping of :class:`Encoding` to payload bytes.
    """
    check_block_size(block_size)
    table = {Encoding.ZEROS: 1, Encoding.REPEAT: 8, Encoding.UNCOMPRESSED: block_size}
    for encoding, (base, delta) in _BASE_DELTA.items():
        table[encoding] = base + (block_size // base) * delta
    return table


def classes_by_size(block_size=DEFAULT_BLOCK_SIZE):
    """Encodings ordered by ascending payload size (ties keep precedence)."""
    table = size_table(block_size)
    return tuple(sorted(PRECEDENCE, key=lambda e: (table[e], PRECEDENCE.index(e))))


@dataclass(frozen=True)
class CompressedBlock:
    """
    A compressed block (CB).

    :param encoding: Encoding.
        Encoding class tag.
    :param payload: bytes.
        Explicit base followed by the deltas, or the raw block.
    :param zero_base_mask: int.
        Bit ``i`` set when segment ``i`` is a delta from the zero base.
    :param block_size: int.
        Size of the uncompressed block.
    """

    encoding: Encoding
    payload: bytes
    zero_base_mask: int = 0
    block_size: int = DEFAULT_BLOCK_SIZE

    def __len__(self):
        return len(self.payload)


def _fits(values, width):
    limit = 1 << (8 * width - 1)
    return (values >= -limit) & (values < limit)


def _signed_deltas(segments, base, base_size):
    # modular difference, reinterpreted as a signed base-sized integer
    diff = (segments - segments.dtype.type(base)).astype(_UNSIGNED[base_size])
    return diff.view(_SIGNED[base_size]).astype(np.int64)


def _try_base_delta(segments, base_size, delta_size):
    """
    Returns ``(base, zero_mask, deltas)`` or None when the class cannot encode.
    """
    as_signed = segments.view(_SIGNED[base_size]).astype(np.int64)
    zero_ok = _fits(as_signed, delta_size)
    if zero_ok.all():
        base = 0
    else:
        base = int(segments[np.argmin(zero_ok)])
    deltas_from_base = _signed_deltas(segments, base, base_size)
    base_ok = _fits(deltas_from_base, delta_size)
    if not (zero_ok | base_ok).all():
        return None
    deltas = np.where(zero_ok, as_signed, deltas_from_base)
    mask = 0
    for index in np.flatnonzero(zero_ok):
        mask |= 1 << int(index)
    return base, mask, deltas


def _encode(block, encoding):
    block_size = len(block)
    if encoding is Encoding.ZEROS:
        if block.count(0) == block_size:
            return CompressedBlock(encoding, b"\x00", 0, block_size)
        return None
    if encoding is Encoding.REPEAT:
        words = np.frombuffer(block, dtype="<u8")
        if (words == words[0]).all():
            return CompressedBlock(encoding, block[:8], 0, block_size)
        return None
    if encoding is Encoding.UNCOMPRESSED:
        return CompressedBlock(encoding, bytes(block), 0, block_size)
    base_size, delta_size = encoding.base_size, encoding.delta_size
    segments = np.frombuffer(block, dtype=_UNSIGNED[base_size])
    found = _try_base_delta(segments, base_size, delta_size)
    if found is None:
        return None
    base, mask, deltas = found
    payload = int(base).to_bytes(base_size, "little") + deltas.astype(
        _SIGNED[delta_size]
    ).tobytes()
    return CompressedBlock(encoding, payload, mask, block_size)


def _as_block(block):
    block = bytes(block)
    check_block_size(len(block))
    return block


@lru_cache(maxsize=8192)
def _compress_cached(block):
    for encoding in PRECEDENCE:
        result = _encode(block, encoding)
        if result is not None:
            return result
    raise AssertionError("Uncompressed always succeeds")  # pragma: no cover


def compress(block):
    """
    Compresses a raw block with the first encoding that succeeds, in the order
    Zeros, Repeat, B8D1, B4D1, B8D2, B2D1, B4D2, B8D4, Uncompressed.

    :param block: bytes.
        Raw block; its length is the block size.
    :return: CompressedBlock.
    """
    return _compress_cached(_as_block(block))


def uncompressed(block):
    """Wraps a raw block as an Uncompressed CB, for caches that never compress."""
    block = _as_block(block)
    return CompressedBlock(Encoding.UNCOMPRESSED, block, 0, len(block))


def feasible_encodings(block):
    """
    Every encoding class able to represent the block, in precedence order.

    :param block: bytes.
    :return: tuple of Encoding.
    """
    block = _as_block(block)
    return tuple(e for e in PRECEDENCE if _encode(block, e) is not None)


def compressed_size(cb):
    """
    Payload size of the encoding class of ``cb``.

    :param cb: CompressedBlock.
    :return: int.
    """
    return size_table(cb.block_size)[cb.encoding]


def decompress(cb):
    """
    Exact inverse of :func:`compress`.

    :param cb: CompressedBlock.
    :return: bytes.
        The raw block.
    """
    block_size = cb.block_size
    expected = size_table(block_size)[cb.encoding]
    if len(cb.payload) != expected:
        raise MalformedBlockError(
            "{0} payload must be {1} bytes, got {2}".format(
                cb.encoding.value, expected, len(cb.payload)
            )
        )
    encoding = cb.encoding
    if encoding is Encoding.ZEROS:
        if cb.payload != b"\x00":
            raise MalformedBlockError("Zeros payload must be a single zero byte")
        return bytes(block_size)
    if encoding is Encoding.REPEAT:
        return cb.payload * (block_size // 8)
    if encoding is Encoding.UNCOMPRESSED:
        return bytes(cb.payload)
    base_size, delta_size = encoding.base_size, encoding.delta_size
    count = block_size // base_size
    base = np.frombuffer(cb.payload[:base_size], dtype=_UNSIGNED[base_size])[0]
    deltas = np.frombuffer(cb.payload[base_size:], dtype=_SIGNED[delta_size]).astype(
        np.int64
    )
    zero_mask = np.array([(cb.zero_base_mask >> i) & 1 for i in range(count)], dtype=bool)
    dtype = _UNSIGNED[base_size]
    deltas = deltas.astype(_SIGNED[base_size]).view(dtype)
    with np.errstate(over="ignore"):
        segments = np.where(zero_mask, deltas, deltas + base).astype(dtype)
    return segments.tobytes()


def class_histogram(blocks):
    """
    Counts the encoding class chosen for each block of a stream.

    :param blocks: iterable of bytes.
    :return: collections.Counter.
        Encoding name to number of blocks.
    """
    return Counter(compress(block).encoding.value for block in blocks)
