# -*- coding: utf-8 -*-

"""
Intra-frame wear leveling.

An ECB is laid over the healthy bytes of a frame, scanning circularly from a
start offset supplied by a single global counter, so that successive writes
begin at different positions of the frame.
"""

import math
from dataclasses import dataclass

import numpy as np


class CapacityExceeded(ValueError):
    """Raised when an ECB is longer than the healthy bytes of a frame."""


def healthy_count(bitmap):
    """Number of healthy bytes of a fault bitmap (set bit = faulty)."""
    return int(len(bitmap) - np.count_nonzero(bitmap))


def placement(bitmap, start, length):
    """
    Frame positions receiving ECB bytes 0..length-1.

    :param bitmap: numpy.ndarray.
        Boolean fault bitmap, one entry per frame byte.
    :param start: int.
        Offset where the circular scan begins.
    :param length: int.
        ECB length.
    :return: numpy.ndarray.
        Positions, in ECB byte order.
    """
    bitmap = np.asarray(bitmap, dtype=bool)
    frame_size = len(bitmap)
    if not 0 <= start < frame_size:
        raise ValueError("start {0} outside a {1}-byte frame".format(start, frame_size))
    if length > healthy_count(bitmap):
        raise CapacityExceeded(
            "ECB of {0} bytes does not fit in {1} healthy bytes".format(
                length, healthy_count(bitmap)
            )
        )
    order = np.roll(np.arange(frame_size), -start)
    return order[~bitmap[order]][:length]


@dataclass
class RearrangedBlock:
    """
    RECB: frame-length values plus the write control bits.
    """

    values: np.ndarray
    mask: np.ndarray

    def apply(self, frame_bytes):
        """Writes the masked values into a frame buffer in place."""
        frame_bytes[self.mask] = self.values[self.mask]
        return frame_bytes


def rearrange(ecb, bitmap, start):
    """
    Maps ECB bytes onto the healthy frame bytes starting at ``start``.

    :param ecb: bytes.
    :param bitmap: numpy.ndarray.
    :param start: int.
    :return: RearrangedBlock.
    """
    bitmap = np.asarray(bitmap, dtype=bool)
    ecb = np.frombuffer(bytes(ecb), dtype=np.uint8)
    positions = placement(bitmap, start, len(ecb))
    values = np.zeros(len(bitmap), dtype=np.uint8)
    mask = np.zeros(len(bitmap), dtype=bool)
    values[positions] = ecb
    mask[positions] = True
    return RearrangedBlock(values, mask)


def derange(frame_bytes, bitmap, start, length):
    """
    Reads an ECB back out of a frame; inverse of :func:`rearrange`.

    :param frame_bytes: bytes or numpy.ndarray.
    :param bitmap: numpy.ndarray.
    :param start: int.
    :param length: int.
    :return: bytes.
    """
    frame_bytes = np.frombuffer(bytes(frame_bytes), dtype=np.uint8)
    return frame_bytes[placement(bitmap, start, length)].tobytes()


class GlobalCounter(object):
    """
    Cache-wide write counter that selects the start offset of each write.

    :param frame_size: int.
        Bytes per frame.
    :param stride: int.
        Increment applied after every write; coprime with ``frame_size``.
    """

    def __init__(self, frame_size, stride=1, value=0):
        if stride < 1 or math.gcd(stride, frame_size) != 1:
            raise ValueError("stride must be positive and coprime with the frame size")
        self.frame_size = frame_size
        self.stride = stride
        self.value = value

    def __repr__(self):
        return "GlobalCounter(value={0}, stride={1})".format(self.value, self.stride)


def next_start(counter):
    """
    Start offset for the next write; advances the counter by its stride.

    :param counter: GlobalCounter.
    :return: int.
    """
    start = counter.value % counter.frame_size
    counter.value += counter.stride
    return start
