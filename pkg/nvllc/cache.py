# -*- coding: utf-8 -*-

"""
Set-associative non-volatile last-level cache with per-byte degradation.

A block write goes through compression, SECDED encoding, victim selection
among the frames that still have enough healthy bytes, and rearrangement
over those healthy bytes starting at the global counter position. Every
frame holds ``block_size`` data bytes plus ``block_size // 8`` check bytes,
all of them degradable and covered by the frame's fault bitmap.
"""

import logging
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from . import compression as bdi
from .ecc import DecodeKind, EccBlock, check_len, ecb_byte_of, secded_decode, secded_encode
from .endurance import ECP_ENTRIES, EffectKind, Policy, apply_failure, record_write
from .rearrange import GlobalCounter, derange, healthy_count, next_start, placement, rearrange
from .trace import VALUE_KINDS, TraceKind, make_block

logger = logging.getLogger(__name__)

FIBONACCI_MULTIPLIER = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class CacheConsistencyError(RuntimeError):
    """A stored block failed to decode although no fault was pending."""


def _is_power_of_two(value):
    return value > 0 and value & (value - 1) == 0


@dataclass(frozen=True)
class CacheGeometry:
    """
    :param total_size: int.
        Data capacity in bytes.
    :param associativity: int.
        Ways per set.
    :param block_size: int.
        Bytes per block.
    """

    total_size: int = 4 << 20
    associativity: int = 16
    block_size: int = bdi.DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        for name in ("total_size", "associativity", "block_size"):
            if not _is_power_of_two(getattr(self, name)):
                raise ValueError("{0} must be a power of two".format(name))
        bdi.check_block_size(self.block_size)
        if self.total_size < self.associativity * self.block_size:
            raise ValueError("total_size must hold at least one set")

    @property
    def set_count(self):
        return self.total_size // (self.associativity * self.block_size)

    @property
    def check_bytes(self):
        return self.block_size // 8

    @property
    def frame_bytes(self):
        return self.block_size + self.check_bytes

    @property
    def shape(self):
        return (self.set_count, self.associativity, self.frame_bytes)

    @property
    def set_bits(self):
        return self.set_count.bit_length() - 1


def set_index(address, geometry):
    """
    Hashed set index: block address times the 64-bit Fibonacci constant,
    keeping the top ``log2(set_count)`` bits.

    :param address: int.
    :param geometry: CacheGeometry.
    :return: int.
    """
    bits = geometry.set_bits
    if bits == 0:
        return 0
    product = ((address // geometry.block_size) * FIBONACCI_MULTIPLIER) & _MASK64
    return product >> (64 - bits)


def required_capacity(cb):
    """
    Healthy bytes a frame needs to host ``cb`` with its check bytes.

    :param cb: CompressedBlock.
    :return: int.
    """
    size = bdi.compressed_size(cb)
    return size + check_len(size)


def class_capacities(block_size=bdi.DEFAULT_BLOCK_SIZE):
    """
    Required capacity of every encoding class, smallest first.

    :return: list of (Encoding, int).
    """
    table = bdi.size_table(block_size)
    return [(e, table[e] + check_len(table[e])) for e in bdi.classes_by_size(block_size)]


def frame_class(healthy, block_size=bdi.DEFAULT_BLOCK_SIZE):
    """
    Compression class of a frame: index (in :func:`class_capacities` order)
    of the largest encoding it can still host, or -1.

    :param healthy: int.
    :return: int.
    """
    capacities = [c for _, c in class_capacities(block_size)]
    return int(np.searchsorted(capacities, healthy, side="right")) - 1


@dataclass
class FrameMeta:
    """Tag-array metadata of a stored block; not subject to wear."""

    encoding: bdi.Encoding = None
    start: int = 0
    ecb_len: int = 0
    data_len: int = 0
    zero_base_mask: int = 0


class FrameState(object):
    """
    One way of one set. ``bitmap`` is a view into the cache-wide fault array
    and ``alive`` reads the cache-wide alive array.
    """

    __slots__ = ("_alive", "set", "way", "bitmap", "valid", "dirty", "tag", "meta",
                 "ecp_remaining", "lru_stamp")

    def __init__(self, alive, faulty, set_index, way, ecp_entries=0):
        self._alive = alive
        self.set = set_index
        self.way = way
        self.bitmap = faulty[set_index, way]
        self.valid = False
        self.dirty = False
        self.tag = None
        self.meta = FrameMeta()
        self.ecp_remaining = ecp_entries
        self.lru_stamp = 0

    @property
    def alive(self):
        return bool(self._alive[self.set, self.way])

    @alive.setter
    def alive(self, value):
        self._alive[self.set, self.way] = value

    @property
    def healthy_count(self):
        return healthy_count(self.bitmap)

    def invalidate(self):
        self.valid = False
        self.dirty = False
        self.tag = None

    def __repr__(self):
        return "FrameState(set={0}, way={1}, alive={2}, valid={3}, healthy={4})".format(
            self.set, self.way, self.alive, self.valid, self.healthy_count
        )


@dataclass(frozen=True)
class Latencies:
    hit: float = 20.0
    miss_penalty: float = 180.0


@dataclass(frozen=True)
class PerfSample:
    hit_rate: float
    amat: float


@dataclass(frozen=True)
class WriteOutcome:
    placed: bool
    set: int = None
    way: int = None

    @property
    def bypassed(self):
        return not self.placed


@dataclass(frozen=True)
class ReadOutcome:
    hit: bool
    data: bytes = None
    status: object = None


@dataclass(frozen=True)
class DeathRecord:
    set: int
    way: int
    byte: int
    effect: object


class MainMemory(object):
    """
    Backing store. Remembers written blocks; never-written addresses read as a
    block drawn from the value mixture, seeded by the address.

    :param block_size: int.
    :param value_model: dict or None.
        Mixture weights keyed by value kind; all-zero blocks when None.
    :param seed: int.
    """

    def __init__(self, block_size=bdi.DEFAULT_BLOCK_SIZE, value_model=None, seed=0):
        self.block_size = block_size
        self.seed = seed
        self.blocks = {}
        if value_model:
            weights = np.array([float(value_model.get(k, 0.0)) for k in VALUE_KINDS])
            self.weights = weights / weights.sum()
        else:
            self.weights = None

    def load(self, address):
        block = self.blocks.get(address)
        if block is None:
            if self.weights is None:
                return bytes(self.block_size)
            rng = np.random.default_rng([self.seed, address])
            kind = VALUE_KINDS[int(rng.choice(len(VALUE_KINDS), p=self.weights))]
            block = make_block(rng, kind, self.block_size)
            self.blocks[address] = block
        return block

    def store(self, address, block):
        self.blocks[address] = bytes(block)


class CacheStats(object):
    """Access counters plus a sliding window for the performance proxy."""

    def __init__(self, window=0):
        self.window = deque(maxlen=window) if window else None
        self.reset()

    def reset(self):
        self.hits = 0
        self.misses = 0
        self.bypasses = 0
        self.writebacks = 0
        self.fills = 0
        self.byte_writes = 0
        self.classes = Counter()
        self._window_hits = 0
        if self.window is not None:
            self.window.clear()

    @property
    def accesses(self):
        return self.hits + self.misses + self.bypasses

    def record(self, hit):
        if hit:
            self.hits += 1
        if self.window is not None:
            if len(self.window) == self.window.maxlen:
                self._window_hits -= self.window[0]
            self.window.append(1 if hit else 0)
            self._window_hits += 1 if hit else 0

    def hit_rate(self, windowed=False):
        if windowed and self.window is not None:
            if not self.window:
                return None
            return self._window_hits / float(len(self.window))
        if not self.accesses:
            return None
        return self.hits / float(self.accesses)


class Cache(object):
    """
    The degradable LLC.

    :param geometry: CacheGeometry.
    :param policy: Policy.
        FD, FD+6 or CMP.
    :param rw: RWMap or None.
        When given, every masked write wears the map and byte failures are
        applied as they happen; without it writes are only counted.
    :param stride: int.
        Global counter stride.
    :param latencies: Latencies.
    :param perf_window: int.
        Accesses covered by the windowed performance proxy; 0 disables it.
    :param memory: MainMemory or None.
    """

    def __init__(self, geometry, policy=Policy.CMP, rw=None, stride=1,
                 latencies=None, perf_window=0, memory=None):
        self.geometry = geometry
        self.policy = Policy.parse(policy)
        self.rw = rw
        if rw is not None and tuple(rw.shape) != geometry.shape:
            raise ValueError("RW map shape {0} does not match {1}".format(rw.shape, geometry.shape))
        self.latencies = latencies or Latencies()
        self.memory = memory or MainMemory(geometry.block_size)
        sets, ways, frame = geometry.shape
        self.faulty = np.zeros((sets, ways, frame), dtype=bool)
        self.data = np.zeros((sets, ways, frame), dtype=np.uint8)
        self.writes = np.zeros((sets, ways, frame), dtype=np.int64)
        self.alive = np.ones((sets, ways), dtype=bool)
        ecp = ECP_ENTRIES if self.policy is Policy.FD6 else 0
        self.frames = [
            [FrameState(self.alive, self.faulty, s, w, ecp) for w in range(ways)]
            for s in range(sets)
        ]
        self.counter = GlobalCounter(frame, stride)
        self.stats = CacheStats(perf_window)
        self.deaths = []
        self._clock = 0
        self._resident = {}
        self._min_capacity = class_capacities(geometry.block_size)[0][1]
        self.initial_capacity = self.effective_capacity()

    # ----------------------------------
    # lookup and replacement

    def set_index(self, address):
        return set_index(address, self.geometry)

    def lookup(self, address):
        """Returns the resident frame of ``address`` or None."""
        return self._resident.get(address)

    def _touch(self, frame):
        self._clock += 1
        frame.lru_stamp = self._clock

    def eligible(self, set_number, need):
        """Alive frames of a set with at least ``need`` healthy bytes."""
        return [
            f for f in self.frames[set_number]
            if f.alive and f.healthy_count >= need
        ]

    def select_victim(self, set_number, need):
        """
        Invalid eligible frames first (lowest way), otherwise the least
        recently used eligible frame; None when nothing can host the block.
        """
        candidates = self.eligible(set_number, need)
        if not candidates:
            return None
        for frame in candidates:
            if not frame.valid:
                return frame
        return min(candidates, key=lambda f: f.lru_stamp)

    def _drop(self, frame, writeback):
        if frame.valid:
            self._resident.pop(frame.tag, None)
            if writeback and frame.dirty:
                self.stats.writebacks += 1
        frame.invalidate()

    # ----------------------------------
    # write path

    def _compress(self, block):
        if self.policy.compresses:
            return bdi.compress(block)
        return bdi.uncompressed(block)

    def write_block(self, address, data, dirty=True):
        """
        Stores a block through compression, ECC, capacity-constrained
        replacement and rearrangement.

        :param address: int.
            Block-aligned address.
        :param data: bytes.
        :param dirty: bool.
            False for fills from memory.
        :return: WriteOutcome.
        """
        if address % self.geometry.block_size:
            raise ValueError("address {0:#x} is not block aligned".format(address))
        cb = self._compress(data)
        ecb = secded_encode(cb.payload)
        need = ecb.total_len
        s = self.set_index(address)

        previous = self._resident.get(address)
        if previous is not None:
            self._drop(previous, writeback=False)
        if dirty:
            self.memory.store(address, data)

        frame = self.select_victim(s, need)
        if frame is None:
            logger.debug("bypass %#x: no frame of set %d holds %d bytes", address, s, need)
            return WriteOutcome(False)
        self._drop(frame, writeback=True)

        start = next_start(self.counter)
        recb = rearrange(ecb.to_bytes(), frame.bitmap, start)
        recb.apply(self.data[s, frame.way])
        positions = np.flatnonzero(recb.mask)
        self.writes[s, frame.way, positions] += 1
        self.stats.byte_writes += len(positions)
        self.stats.classes[cb.encoding.value] += 1

        frame.valid = True
        frame.dirty = dirty
        frame.tag = address
        frame.meta = FrameMeta(cb.encoding, start, need, len(cb.payload), cb.zero_base_mask)
        self._resident[address] = frame
        self._touch(frame)

        if self.rw is not None:
            for event in record_write(self.rw, s, frame.way, positions):
                self.fail_byte(event.set, event.way, event.byte)
        return WriteOutcome(True, s, frame.way)

    # ----------------------------------
    # read path

    def read_block(self, address):
        """
        Reads a block back: derange, SECDED decode, decompress. A corrected
        single-bit error declares the byte holding it failed.

        :param address: int.
        :return: ReadOutcome.
        """
        frame = self._resident.get(address)
        if frame is None:
            return ReadOutcome(False)
        s, w, meta = frame.set, frame.way, frame.meta
        stored = derange(self.data[s, w], frame.bitmap, meta.start, meta.ecb_len)
        payload, status = secded_decode(EccBlock.from_bytes(stored, meta.data_len))
        if status.kind is DecodeKind.UNCORRECTABLE:
            raise CacheConsistencyError(
                "uncorrectable block at set {0} way {1}".format(s, w)
            )
        cb = bdi.CompressedBlock(meta.encoding, payload, meta.zero_base_mask,
                                 self.geometry.block_size)
        data = bdi.decompress(cb)
        self._touch(frame)
        if status.kind is DecodeKind.CORRECTED_SINGLE:
            # locate every faulty byte before any of them changes the bitmap
            positions = placement(frame.bitmap, meta.start, meta.ecb_len)
            failed = sorted({int(positions[ecb_byte_of(bit, meta.data_len)])
                             for bit in status.positions})
            for byte in failed:
                logger.info("corrected bit in set %d way %d byte %d", s, w, byte)
                if frame.alive and not frame.bitmap[byte]:
                    self.fail_byte(s, w, byte)
        return ReadOutcome(True, data, status)

    def access(self, event):
        """
        Services one trace event. Reads that miss are filled from memory;
        writes to resident blocks count as hits, writes that find no frame
        as bypasses.

        :param event: TraceEvent.
        :return: str.
            ``hit``, ``miss`` or ``bypass``.
        """
        if event.kind is TraceKind.READ:
            outcome = self.read_block(event.address)
            if outcome.hit:
                self.stats.record(True)
                return "hit"
            self.stats.misses += 1
            self.stats.record(False)
            self.stats.fills += 1
            self.write_block(event.address, self.memory.load(event.address), dirty=False)
            return "miss"
        resident = event.address in self._resident
        outcome = self.write_block(event.address, event.payload)
        if outcome.bypassed:
            self.stats.bypasses += 1
            self.stats.record(False)
            return "bypass"
        if resident:
            self.stats.record(True)
            return "hit"
        self.stats.misses += 1
        self.stats.record(False)
        return "miss"

    # ----------------------------------
    # degradation

    def fail_byte(self, set_number, way, byte):
        """
        Declares a frame byte failed and applies the policy's disabling effect.

        :return: DisablingEffect.
        """
        frame = self.frames[set_number][way]
        tag = frame.tag
        effect = apply_failure(self.policy, frame, byte, self._min_capacity)
        if effect.evicted:
            self._resident.pop(tag, None)
            if effect.dirty:
                self.stats.writebacks += 1
        if self.rw is not None:
            self.rw.remaining[set_number, way, byte] = (
                np.inf if effect.kind is EffectKind.SPARED else 0.0
            )
        self.deaths.append(DeathRecord(set_number, way, byte, effect))
        logger.debug("byte %d of set %d way %d failed: %s", byte, set_number, way, effect.label)
        return effect

    def inject_fault(self, set_number, way, byte, bit=0):
        """Flips one stored bit, emulating a latent hard fault."""
        self.data[set_number, way, byte] ^= np.uint8(1 << bit)

    def pop_deaths(self):
        deaths, self.deaths = self.deaths, []
        return deaths

    # ----------------------------------
    # capacity and performance

    def alive_bytes(self):
        """Boolean ``(sets, ways, frame)`` map of bytes that can still be written."""
        return self.alive[:, :, None] & ~self.faulty

    def healthy_counts(self):
        return self.geometry.frame_bytes - self.faulty.sum(axis=2)

    def frame_classes(self):
        """Compression class index of every frame (-1 for dead frames)."""
        capacities = np.array([c for _, c in class_capacities(self.geometry.block_size)])
        classes = np.searchsorted(capacities, self.healthy_counts(), side="right") - 1
        return np.where(self.alive, classes, -1)

    def effective_capacity(self):
        """
        Usable bytes: healthy data bytes of alive frames under CMP, whole
        blocks of alive frames under FD and FD+6.
        """
        if self.policy.compresses:
            healthy = self.healthy_counts() - self.geometry.check_bytes
            return int(np.clip(healthy, 0, None)[self.alive].sum())
        return int(self.alive.sum()) * self.geometry.block_size

    def capacity_fraction(self):
        return self.effective_capacity() / float(self.initial_capacity)

    def perf_proxy(self, windowed=True):
        """
        Hit rate and average memory access time; None before any access.

        :param windowed: bool.
            Use the sliding window when the cache has one.
        :return: PerfSample or None.
        """
        hit_rate = self.stats.hit_rate(windowed)
        if hit_rate is None:
            return None
        amat = self.latencies.hit + (1.0 - hit_rate) * self.latencies.miss_penalty
        return PerfSample(hit_rate, amat)

    def check_invariants(self):
        """Raises AssertionError when placement safety does not hold."""
        for row in self.frames:
            for frame in row:
                if not frame.alive:
                    assert not frame.valid, frame
                if frame.valid:
                    assert frame.meta.ecb_len <= frame.healthy_count, frame
                    occupied = placement(frame.bitmap, frame.meta.start, frame.meta.ecb_len)
                    assert not frame.bitmap[occupied].any(), frame
        return True
