# -*- coding: utf-8 -*-

"""
Write endurance of the cache bytes: the statistical budget model, the
remaining-writes (RW) map and what each disabling policy does when a byte
wears out.
"""

import enum
import logging
import math
import struct
from dataclasses import dataclass

import numpy as np

from .rearrange import healthy_count, placement

logger = logging.getLogger(__name__)

ECP_ENTRIES = 6

_SNAPSHOT_HEADER = struct.Struct("<4sHHIIIQ")
_SNAPSHOT_MAGIC = b"NVRW"
_SNAPSHOT_VERSION = 1


class Policy(enum.Enum):
    """Disabling policies."""

    FD = "FD"
    FD6 = "FD+6"
    CMP = "CMP"

    @property
    def compresses(self):
        return self is Policy.CMP

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        normalized = str(value).strip().upper().replace("ECP6", "FD+6")
        for policy in cls:
            if policy.value == normalized or policy.name == normalized:
                return policy
        raise ValueError("unknown policy {0!r}".format(value))


class PlacementError(RuntimeError):
    """A write reached a byte with no remaining endurance."""


@dataclass(frozen=True)
class EnduranceModel:
    """
    Normal endurance distribution of mean ``mu`` and deviation ``sigma``.

    :param mu: float.
        Mean number of writes a byte sustains.
    :param sigma: float or None.
        Standard deviation; ``0.2 * mu`` when omitted.
    :param seed: int.
    """

    mu: float = 1e11
    sigma: float = None
    seed: int = 0

    def __post_init__(self):
        if self.sigma is None:
            object.__setattr__(self, "sigma", 0.2 * self.mu)
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must not be negative")

    @property
    def w(self):
        """Exponent such that ``mu == 10 ** w``."""
        return math.log10(self.mu)

    @classmethod
    def from_exponent(cls, w, relative_sigma=0.2, seed=0):
        mu = 10.0 ** w
        return cls(mu=mu, sigma=relative_sigma * mu, seed=seed)


class RWMap(object):
    """
    Remaining writes of every degradable byte, shaped ``(sets, ways, frame)``.
    Spared bytes hold ``inf``; worn-out bytes hold 0.
    """

    def __init__(self, remaining, seed=0):
        self.remaining = np.asarray(remaining, dtype=np.float64)
        self.seed = seed

    @property
    def shape(self):
        return self.remaining.shape

    def copy(self):
        return RWMap(self.remaining.copy(), self.seed)

    def finite_total(self):
        """Sum of the finite budgets (spares excluded)."""
        finite = self.remaining[np.isfinite(self.remaining)]
        return float(finite.sum())

    def __eq__(self, other):
        return (
            isinstance(other, RWMap)
            and self.seed == other.seed
            and np.array_equal(self.remaining, other.remaining)
        )

    def __repr__(self):
        return "RWMap(shape={0}, seed={1})".format(self.shape, self.seed)


def init_rw_map(geometry, model):
    """
    Draws every byte's budget from N(mu, sigma), rounded and truncated at 1.

    :param geometry: CacheGeometry.
        Anything exposing ``shape`` as ``(sets, ways, frame_bytes)``.
    :param model: EnduranceModel.
    :return: RWMap.
    """
    shape = tuple(geometry.shape)
    if model.sigma == 0:
        remaining = np.full(shape, float(model.mu))
    else:
        rng = np.random.default_rng(model.seed)
        remaining = np.maximum(np.rint(rng.normal(model.mu, model.sigma, shape)), 1.0)
    logger.debug("RW map %s drawn with mu=%g sigma=%g", shape, model.mu, model.sigma)
    return RWMap(remaining, model.seed)


@dataclass(frozen=True)
class FailureEvent:
    set: int
    way: int
    byte: int


def record_write(rw, set_index, way, positions):
    """
    Wears the bytes of one masked write.

    :param rw: RWMap.
    :param set_index: int.
    :param way: int.
    :param positions: sequence of int.
        Frame bytes whose write control bit is set.
    :return: list of FailureEvent.
        Bytes whose budget reached 0 with this write.
    """
    row = rw.remaining[set_index, way]
    positions = np.asarray(positions, dtype=np.int64)
    if (row[positions] <= 0).any():
        raise PlacementError(
            "write to a worn-out byte in set {0} way {1}".format(set_index, way)
        )
    row[positions] -= 1
    return [
        FailureEvent(set_index, way, int(b)) for b in positions[row[positions] == 0]
    ]


class EffectKind(enum.Enum):
    SPARED = "spared"
    BYTE_DISABLED = "byte_disabled"
    FRAME_DISABLED = "frame_disabled"


@dataclass(frozen=True)
class DisablingEffect:
    """
    What a byte failure did to its frame.

    :param kind: EffectKind.
    :param evicted: bool.
        The resident block was dropped.
    :param dirty: bool.
        The dropped block had to be written back.
    """

    kind: EffectKind
    evicted: bool = False
    dirty: bool = False

    @property
    def label(self):
        return self.kind.value


def _evict(frame):
    dirty = bool(frame.valid and frame.dirty)
    evicted = bool(frame.valid)
    frame.invalidate()
    return evicted, dirty


def apply_failure(policy, frame, byte, min_capacity=2):
    """
    Applies a byte failure to its frame under a disabling policy.

    FD disables the frame at the first failure. FD+6 repairs the first six
    failures of a frame with error-correcting pointers and disables it at the
    seventh. CMP disables only the byte, drops the resident block when the
    byte held part of it, and kills the frame once it can no longer host the
    smallest protected block.

    :param policy: Policy.
    :param frame: FrameState.
    :param byte: int.
        Failed frame byte.
    :param min_capacity: int.
        Healthy bytes needed to host the smallest ECB.
    :return: DisablingEffect.
    """
    policy = Policy.parse(policy)
    if policy is Policy.FD6 and frame.ecp_remaining > 0:
        frame.ecp_remaining -= 1
        return DisablingEffect(EffectKind.SPARED)
    if policy is not Policy.CMP:
        frame.bitmap[byte] = True
        evicted, dirty = _evict(frame)
        frame.alive = False
        return DisablingEffect(EffectKind.FRAME_DISABLED, evicted, dirty)

    evicted = dirty = False
    if frame.valid:
        occupied = placement(frame.bitmap, frame.meta.start, frame.meta.ecb_len)
        frame.bitmap[byte] = True
        if byte in occupied or frame.meta.ecb_len > healthy_count(frame.bitmap):
            evicted, dirty = _evict(frame)
    else:
        frame.bitmap[byte] = True
    if healthy_count(frame.bitmap) < min_capacity:
        if frame.valid:
            evicted, dirty = _evict(frame)
        frame.alive = False
        return DisablingEffect(EffectKind.FRAME_DISABLED, evicted, dirty)
    return DisablingEffect(EffectKind.BYTE_DISABLED, evicted, dirty)


def save_rw_map(path, rw):
    """
    Writes an RW map snapshot: a small header then little-endian float64s.

    :param path: str.
    :param rw: RWMap.
    """
    sets, ways, frame = rw.shape
    with open(str(path), "wb") as handle:
        handle.write(
            _SNAPSHOT_HEADER.pack(
                _SNAPSHOT_MAGIC, _SNAPSHOT_VERSION, 0, sets, ways, frame, rw.seed
            )
        )
        handle.write(rw.remaining.astype("<f8").tobytes())


def load_rw_map(path):
    """
    Reads a snapshot written by :func:`save_rw_map`.

    :param path: str.
    :return: RWMap.
    """
    with open(str(path), "rb") as handle:
        header = handle.read(_SNAPSHOT_HEADER.size)
        if len(header) != _SNAPSHOT_HEADER.size:
            raise ValueError("truncated RW map header")
        magic, version, _, sets, ways, frame, seed = _SNAPSHOT_HEADER.unpack(header)
        if magic != _SNAPSHOT_MAGIC or version != _SNAPSHOT_VERSION:
            raise ValueError("not an RW map snapshot")
        body = handle.read()
    count = sets * ways * frame
    if len(body) != count * 8:
        raise ValueError(
            "RW map body holds {0} bytes, expected {1}".format(len(body), count * 8)
        )
    remaining = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return RWMap(remaining.reshape(sets, ways, frame), seed)
