# -*- coding: utf-8 -*-

"""
Synthetic memory-access traces and their on-disk formats.

Binary format (little-endian): a 16-byte header (8-byte magic, u16 version,
u16 block size, u32 reserved) followed by records of one kind byte and an
8-byte address; write records carry the block payload right after.
"""

import csv
import enum
import logging
import struct
from dataclasses import dataclass, field

import numpy as np
import toolz

from .compression import DEFAULT_BLOCK_SIZE, class_histogram

logger = logging.getLogger(__name__)

MAGIC = b"NVLLCTRC"
VERSION = 1
_HEADER = struct.Struct("<8sHHI")
_RECORD = struct.Struct("<BQ")

VALUE_KINDS = ("zeros", "repeated", "small_delta", "random")
ADDRESS_MODELS = ("uniform", "zipf", "strided")


class TraceKind(enum.Enum):
    READ = 0
    WRITE = 1


class TraceFormatError(ValueError):
    """
    Malformed trace input.

    :param offset: int.
        Byte offset (binary files) or line number (CSV files) of the problem.
    """

    def __init__(self, message, offset):
        super(TraceFormatError, self).__init__(
            "{0} (at offset {1})".format(message, offset)
        )
        self.offset = offset


class TraceSpecError(ValueError):
    """Invalid :class:`TraceSpec` field."""

    def __init__(self, field_name, message):
        super(TraceSpecError, self).__init__("{0}: {1}".format(field_name, message))
        self.field = field_name


@dataclass(frozen=True)
class TraceEvent:
    kind: TraceKind
    address: int
    payload: bytes = None

    @property
    def is_write(self):
        return self.kind is TraceKind.WRITE


def _default_values():
    return {"zeros": 0.25, "repeated": 0.15, "small_delta": 0.35, "random": 0.25}


@dataclass
class TraceSpec:
    """
    Parameters of a synthetic trace.

    :param length: int.
        Number of events.
    :param write_fraction: float.
        Probability that an event is a write.
    :param address_model: str.
        ``uniform``, ``zipf`` or ``strided``.
    :param zipf_s: float.
        Exponent of the bounded zipfian model.
    :param stride: int.
        Byte stride of the strided model.
    :param footprint: int.
        Bytes of address space touched.
    :param value_model: dict.
        Mixture weights over zeros, repeated, small_delta and random blocks.
    :param seed: int.
    :param block_size: int.
    """

    length: int = 10000
    write_fraction: float = 0.5
    address_model: str = "uniform"
    zipf_s: float = 1.0
    stride: int = DEFAULT_BLOCK_SIZE
    footprint: int = 1 << 20
    value_model: dict = field(default_factory=_default_values)
    seed: int = 0
    block_size: int = DEFAULT_BLOCK_SIZE

    def validate(self):
        if self.length < 0:
            raise TraceSpecError("length", "must not be negative")
        if not 0.0 <= self.write_fraction <= 1.0:
            raise TraceSpecError("write_fraction", "must lie in [0, 1]")
        if self.address_model not in ADDRESS_MODELS:
            raise TraceSpecError(
                "address_model", "must be one of {0}".format(", ".join(ADDRESS_MODELS))
            )
        if self.footprint < self.block_size:
            raise TraceSpecError("footprint", "must be at least one block")
        unknown = set(self.value_model) - set(VALUE_KINDS)
        if unknown:
            raise TraceSpecError(
                "value_model", "unknown kinds {0}".format(", ".join(sorted(unknown)))
            )
        weights = list(self.value_model.values())
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise TraceSpecError("value_model", "weights must be >= 0 and sum to 1")
        if self.address_model == "zipf" and self.zipf_s <= 0:
            raise TraceSpecError("zipf_s", "must be positive")
        if self.stride <= 0:
            raise TraceSpecError("stride", "must be positive")
        return self

    def weights(self):
        """Value mixture as an array ordered like :data:`VALUE_KINDS`."""
        return np.array([float(self.value_model.get(k, 0.0)) for k in VALUE_KINDS])


def make_block(rng, kind, block_size=DEFAULT_BLOCK_SIZE):
    """
    Draws one block of the given value kind.

    :param rng: numpy.random.Generator.
    :param kind: str.
        One of :data:`VALUE_KINDS`.
    :param block_size: int.
    :return: bytes.
    """
    if kind == "zeros":
        return bytes(block_size)
    if kind == "repeated":
        value = int(rng.integers(1, 1 << 62))
        return value.to_bytes(8, "little") * (block_size // 8)
    if kind == "small_delta":
        base = int(rng.integers(1 << 32, 1 << 62))
        deltas = rng.integers(-60, 61, size=block_size // 8)
        deltas[0] = 0
        return (np.uint64(base) + deltas.astype(np.int64).astype(np.uint64)).astype(
            "<u8"
        ).tobytes()
    if kind == "random":
        return rng.integers(0, 256, size=block_size, dtype=np.uint8).tobytes()
    raise ValueError("unknown value kind {0!r}".format(kind))


def _addresses(spec, rng):
    blocks = spec.footprint // spec.block_size
    if spec.address_model == "uniform":
        index = rng.integers(0, blocks, size=spec.length)
    elif spec.address_model == "zipf":
        ranks = np.arange(1, blocks + 1, dtype=np.float64) ** -spec.zipf_s
        hot = rng.permutation(blocks)
        index = hot[rng.choice(blocks, size=spec.length, p=ranks / ranks.sum())]
    else:
        step = max(1, spec.stride // spec.block_size)
        index = (np.arange(spec.length, dtype=np.int64) * step) % blocks
    return index.astype(np.int64) * spec.block_size


def generate(spec):
    """
    Generates the events of a synthetic trace; deterministic for a seed.

    :param spec: TraceSpec.
    :return: generator of TraceEvent.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    addresses = _addresses(spec, rng)
    writes = rng.random(spec.length) < spec.write_fraction
    kinds = rng.choice(len(VALUE_KINDS), size=spec.length, p=spec.weights())
    for address, is_write, kind in zip(addresses, writes, kinds):
        if is_write:
            payload = make_block(rng, VALUE_KINDS[kind], spec.block_size)
            yield TraceEvent(TraceKind.WRITE, int(address), payload)
        else:
            yield TraceEvent(TraceKind.READ, int(address))


def _encode_event(event, block_size):
    if event.address % block_size:
        raise ValueError("address {0:#x} is not block aligned".format(event.address))
    record = _RECORD.pack(event.kind.value, event.address)
    if event.is_write:
        if len(event.payload) != block_size:
            raise ValueError("write payload must be {0} bytes".format(block_size))
        record += bytes(event.payload)
    return record


def write_trace(path, events, block_size=DEFAULT_BLOCK_SIZE):
    """
    Writes events to a binary trace file.

    :param path: str.
    :param events: iterable of TraceEvent.
    :param block_size: int.
    :return: int.
        Number of events written.
    """
    count = 0
    with open(str(path), "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, VERSION, block_size, 0))
        for chunk in toolz.partition_all(4096, events):
            handle.write(b"".join(_encode_event(e, block_size) for e in chunk))
            count += len(chunk)
    logger.debug("wrote %d events to %s", count, path)
    return count


def read_trace(path):
    """
    Reads a binary trace file.

    :param path: str.
    :return: generator of TraceEvent.
    :raises TraceFormatError: on a bad header or truncated record.
    """
    with open(str(path), "rb") as handle:
        buf = handle.read()
    if len(buf) < _HEADER.size:
        raise TraceFormatError("truncated header", len(buf))
    magic, version, block_size, _ = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise TraceFormatError("bad magic {0!r}".format(magic), 0)
    if version != VERSION:
        raise TraceFormatError("unsupported version {0}".format(version), 8)
    offset = _HEADER.size
    while offset < len(buf):
        if offset + _RECORD.size > len(buf):
            raise TraceFormatError("truncated record", len(buf))
        kind, address = _RECORD.unpack_from(buf, offset)
        try:
            kind = TraceKind(kind)
        except ValueError:
            raise TraceFormatError("unknown record kind {0}".format(kind), offset)
        if address % block_size:
            raise TraceFormatError("unaligned address {0:#x}".format(address), offset + 1)
        offset += _RECORD.size
        if kind is TraceKind.WRITE:
            if offset + block_size > len(buf):
                raise TraceFormatError("truncated payload", len(buf))
            yield TraceEvent(kind, address, bytes(buf[offset : offset + block_size]))
            offset += block_size
        else:
            yield TraceEvent(kind, address)


def trace_block_size(path):
    """Block size recorded in a binary trace header."""
    with open(str(path), "rb") as handle:
        header = handle.read(_HEADER.size)
    if len(header) < _HEADER.size:
        raise TraceFormatError("truncated header", len(header))
    return _HEADER.unpack(header)[2]


def read_csv_trace(path, block_size=DEFAULT_BLOCK_SIZE):
    """
    Reads a hand-written ``kind,address_hex,payload_hex`` trace.

    ``kind`` is ``R``/``W`` (or ``read``/``write``); reads leave the payload
    empty. A first row starting with ``kind`` is taken as a header.

    :param path: str.
    :param block_size: int.
    :return: list of TraceEvent.
    """
    events = []
    with open(str(path), "r", newline="") as handle:
        for line_number, row in enumerate(csv.reader(handle), 1):
            if not row or row[0].strip().startswith("#"):
                continue
            if line_number == 1 and row[0].strip().lower() == "kind":
                continue
            kind = row[0].strip().upper()[:1]
            try:
                address = int(row[1], 16)
            except (IndexError, ValueError):
                raise TraceFormatError("bad address", line_number)
            if address % block_size:
                raise TraceFormatError("unaligned address", line_number)
            if kind == "R":
                events.append(TraceEvent(TraceKind.READ, address))
            elif kind == "W":
                try:
                    payload = bytes.fromhex(row[2].strip())
                except (IndexError, ValueError):
                    raise TraceFormatError("bad payload", line_number)
                if len(payload) != block_size:
                    raise TraceFormatError("payload is not one block", line_number)
                events.append(TraceEvent(TraceKind.WRITE, address, payload))
            else:
                raise TraceFormatError("unknown kind {0!r}".format(row[0]), line_number)
    return events


def iter_trace(path, block_size=DEFAULT_BLOCK_SIZE):
    """
    Reads a trace file, CSV or binary by suffix.

    ``block_size`` applies to CSV traces; binary traces carry their own.
    """
    if str(path).lower().endswith(".csv"):
        return iter(read_csv_trace(path, block_size))
    return read_trace(path)


@dataclass
class TraceSummary:
    events: int
    writes: int
    classes: dict

    @property
    def write_fraction(self):
        return self.writes / float(self.events) if self.events else 0.0


def summarize(events):
    """
    Event counts and the compression class histogram of the write payloads.

    :param events: iterable of TraceEvent.
    :return: TraceSummary.
    """
    events = list(events)
    payloads = [e.payload for e in events if e.is_write]
    return TraceSummary(len(events), len(payloads), dict(class_histogram(payloads)))
