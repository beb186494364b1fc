# -*- coding: utf-8 -*-

"""
Lifetime forecasting of the degradable cache.

``run_naive`` wears the RW map write by write and is exact but slow.
``run_forecast`` alternates short simulations, which measure the write
bandwidth of every byte (WB map), with predictions that age the RW map at
the average bandwidth of each byte group and retire the next K bytes to die.
"""

import csv
import enum
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import toolz

from .cache import Cache, MainMemory
from .endurance import EffectKind, Policy, init_rw_map
from .trace import generate, iter_trace

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "{0:.9g}"

TIMELINE_HEADER = ("t_seconds", "capacity_bytes", "capacity_fraction", "hit_rate", "amat")
EVENTS_HEADER = ("t_seconds", "set", "way", "byte", "policy_effect")
PLOT_HEADER = ("t_normalized", "capacity_fraction", "amat")


class NoProgress(RuntimeError):
    """Every alive byte has a zero predicted write rate."""


class WbMode(enum.Enum):
    BY_ALIVE = "alive"
    BY_ALIVE_AND_CLASS = "alive_class"

    @classmethod
    def for_policy(cls, policy, requested="auto"):
        if requested in (None, "auto"):
            return cls.BY_ALIVE_AND_CLASS if Policy.parse(policy).compresses else cls.BY_ALIVE
        return cls(requested)


# ==================================
# timeline


@dataclass(frozen=True)
class TimelineSample:
    t: float
    capacity: int
    capacity_fraction: float
    perf: object = None


@dataclass(frozen=True)
class DeathEvent:
    t: float
    set: int
    way: int
    byte: int
    effect: str
    capacity: int = None


@dataclass
class Timeline:
    """
    Capacity and performance samples over simulated time, plus the ordered
    byte deaths behind them.
    """

    initial_capacity: int
    policy: str = Policy.CMP.value
    samples: list = field(default_factory=list)
    events: list = field(default_factory=list)
    complete: bool = False
    budget_exceeded: bool = False
    no_progress: bool = False
    simulations: int = 0
    fallback_lookups: int = 0
    simulated_events: int = 0

    def add_sample(self, t, capacity, perf=None):
        """Appends a sample; a sample at the time of the previous one replaces it."""
        sample = TimelineSample(
            float(t), int(capacity), capacity / float(self.initial_capacity), perf
        )
        if self.samples and self.samples[-1].t >= sample.t:
            if self.samples[-1].t > sample.t:
                raise ValueError("timeline samples must not go back in time")
            self.samples[-1] = sample
        else:
            self.samples.append(sample)
        return sample

    def add_event(self, event):
        self.events.append(event)

    @property
    def incomplete(self):
        return not self.complete

    def time_to_fraction(self, fraction):
        """First sampled time at which capacity is at or below ``fraction``."""
        for sample in self.samples:
            if sample.capacity_fraction <= fraction:
                return sample.t
        return None

    def death_order(self, count=None):
        """Identities ``(set, way, byte)`` of the first ``count`` dying bytes."""
        order = [(e.set, e.way, e.byte) for e in self.events]
        return order if count is None else order[:count]


# ==================================
# simulation state


class Simulation(object):
    """
    A cache driven by a looped trace; simulated time advances by
    ``1 / event_rate`` per event.

    :param cache: Cache.
    :param events: list of TraceEvent.
    :param event_rate: float.
        Events per simulated second.
    """

    def __init__(self, cache, events, event_rate):
        self.cache = cache
        self.events = list(events)
        self.event_rate = float(event_rate)
        self.processed = 0
        self._stream = itertools.cycle(self.events)

    @property
    def time(self):
        return self.processed / self.event_rate

    def run(self, count):
        """Services the next ``count`` events of the looped trace."""
        if not self.events:
            return 0
        for event in toolz.take(count, self._stream):
            self.cache.access(event)
        self.processed += count
        return count

    def step(self):
        return self.run(1)

    @classmethod
    def from_config(cls, config, wear):
        """
        Builds the cache and trace of an experiment.

        :param config: ExperimentConfig.
        :param wear: bool.
            Attach a freshly drawn RW map to the cache (naive mode).
        :return: Simulation.
        """
        geometry = config.geometry
        rw = init_rw_map(geometry, config.endurance) if wear else None
        if config.trace_path:
            events = list(iter_trace(config.trace_path, geometry.block_size))
            memory = MainMemory(geometry.block_size)
        else:
            events = list(generate(config.trace))
            memory = MainMemory(geometry.block_size, config.trace.value_model, config.trace.seed)
        cache = Cache(
            geometry,
            config.policy,
            rw=rw,
            stride=config.stride,
            latencies=config.latencies,
            perf_window=config.perf_window,
            memory=memory,
        )
        return cls(cache, events, config.event_rate)


# ==================================
# naive mode


def _stop_capacity(cache, stop_fraction):
    return stop_fraction * cache.initial_capacity


def run_naive(config, simulation=None):
    """
    Exact degradation: every masked write wears the RW map and failures are
    applied as they happen. A sample is taken after every event with deaths.

    :param config: ExperimentConfig.
    :param simulation: Simulation or None.
        Prepared simulation with an RW map attached; built from ``config``
        when omitted.
    :return: Timeline.
    """
    sim = simulation or Simulation.from_config(config, wear=True)
    cache = sim.cache
    timeline = Timeline(cache.initial_capacity, cache.policy.value, simulations=1)
    stop = _stop_capacity(cache, config.forecast.stop_fraction)
    budget = config.forecast.max_events
    if cache.effective_capacity() <= stop:
        timeline.complete = True
        return timeline
    if not sim.events:
        timeline.no_progress = True
        return timeline
    while sim.processed < budget:
        sim.step()
        deaths = cache.pop_deaths()
        if not deaths:
            continue
        t = sim.time
        for death in deaths:
            timeline.add_event(DeathEvent(t, death.set, death.way, death.byte, death.effect.label))
        capacity = cache.effective_capacity()
        timeline.add_sample(t, capacity, cache.perf_proxy())
        if capacity <= stop:
            timeline.complete = True
            break
    else:
        timeline.budget_exceeded = True
        logger.warning("naive run stopped after %d events without reaching the target", budget)
    timeline.simulated_events = sim.processed
    return timeline


# ==================================
# epoch mode


@dataclass
class WBMap:
    """
    Per-byte writes per simulated second over one measurement window.

    :param bandwidth: numpy.ndarray.
        ``(sets, ways, frame)`` rates.
    :param window: float.
        Seconds covered by the measurement.
    :param perf: PerfSample or None.
        Performance proxy measured over the same window.
    """

    bandwidth: np.ndarray
    window: float
    perf: object = None


def measure_epoch(sim, window, warmup=0):
    """
    Runs ``warmup`` unmeasured events, then ``window`` measured ones, and
    turns the per-byte write counts into rates.

    :param sim: Simulation.
        Carries the current fault state; its cache must not wear.
    :param window: int.
        Measured events.
    :param warmup: int.
    :return: WBMap.
    """
    if window <= 0:
        raise ValueError("measurement window must hold at least one event")
    cache = sim.cache
    sim.run(warmup)
    cache.writes[...] = 0
    cache.stats.reset()
    sim.run(window)
    seconds = window / sim.event_rate
    bandwidth = cache.writes / seconds
    bandwidth[~cache.alive_bytes()] = 0.0
    return WBMap(bandwidth, seconds, cache.perf_proxy(windowed=False))


def _group_keys(cache, mode):
    """Group key of every byte: alive frames per set, optionally with the class."""
    alive_frames = cache.alive.sum(axis=1)
    keys = np.broadcast_to(alive_frames[:, None], cache.alive.shape).astype(np.int64)
    if mode is WbMode.BY_ALIVE_AND_CLASS:
        classes = cache.frame_classes().astype(np.int64)
        keys = keys * 1000 + (classes + 1)
    return np.broadcast_to(keys[:, :, None], cache.faulty.shape)


def _decode_key(key, mode):
    if mode is WbMode.BY_ALIVE_AND_CLASS:
        return (int(key) // 1000, int(key) % 1000 - 1)
    return int(key)


@dataclass
class WbAvgTable:
    """
    Average write bandwidth per byte group: ``A`` (alive frames in the set)
    or ``(A, CC)`` (with the frame's compression class).
    """

    mode: WbMode
    values: dict = field(default_factory=dict)
    fallbacks: int = 0

    def rate(self, key):
        """
        Rate of a group. Missing groups reuse the nearest existing ``A``
        (smaller first), then the nearest class (smaller first).
        """
        if key in self.values:
            return self.values[key]
        self.fallbacks += 1
        if not self.values:
            return 0.0
        if self.mode is WbMode.BY_ALIVE:
            best = min(self.values, key=lambda a: (abs(a - key), a))
            return self.values[best]
        alive, cls = key
        best = min(
            self.values,
            key=lambda k: (abs(k[0] - alive), k[0], abs(k[1] - cls), k[1]),
        )
        return self.values[best]


def aggregate(wb, cache, mode):
    """
    Mean measured rate over the alive bytes of every group.

    :param wb: WBMap.
    :param cache: Cache.
        Supplies the alive frames and their compression classes.
    :param mode: WbMode.
    :return: WbAvgTable.
    """
    mode = WbMode(mode) if not isinstance(mode, WbMode) else mode
    alive = cache.alive_bytes()
    keys = _group_keys(cache, mode)[alive]
    rates = wb.bandwidth[alive]
    table = WbAvgTable(mode)
    if not len(keys):
        return table
    unique, inverse = np.unique(keys, return_inverse=True)
    sums = np.bincount(inverse, weights=rates)
    counts = np.bincount(inverse)
    for key, total, count in zip(unique, sums, counts):
        table.values[_decode_key(key, mode)] = float(total / count)
    return table


def _rates(cache, table):
    alive = cache.alive_bytes()
    keys = _group_keys(cache, table.mode)
    rates = np.zeros(cache.faulty.shape)
    unique = np.unique(keys[alive])
    for key in unique:
        rates[(keys == key) & alive] = table.rate(_decode_key(key, table.mode))
    return alive, rates


def predict_k(rw, table, k, cache, t0=0.0, stop_capacity=None):
    """
    Predicts the next ``k`` byte deaths from one table of group rates.

    Each step ages every alive byte by its group rate until the first one
    reaches zero (ties go to the lowest set, way, byte), retires that byte
    through the cache's disabling policy and regroups the survivors.

    :param rw: RWMap.
        Updated in place.
    :param table: WbAvgTable.
    :param k: int.
    :param cache: Cache.
        Fault state; its frames are disabled as bytes die.
    :param t0: float.
        Simulated time the prediction starts from.
    :param stop_capacity: float or None.
        Stop early once effective capacity falls to this value.
    :return: tuple.
        ``(events, rw)``; events are DeathEvent with absolute times.
    :raises NoProgress: when not a single death can be predicted.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    events = []
    t = float(t0)
    remaining = rw.remaining
    for _ in range(k):
        alive, rates = _rates(cache, table)
        with np.errstate(divide="ignore", invalid="ignore"):
            ttl = np.where(alive & (rates > 0), remaining / rates, np.inf)
        index = int(np.argmin(ttl))
        dt = float(ttl.flat[index])
        if not np.isfinite(dt):
            if events:
                break
            raise NoProgress("no alive byte is being written")
        s, w, b = np.unravel_index(index, ttl.shape)
        aging = np.where(alive, rates * dt, 0.0)
        remaining -= aging
        np.maximum(remaining, 0.0, out=remaining)
        remaining[s, w, b] = 0.0
        t += dt
        effect = cache.fail_byte(int(s), int(w), int(b))
        remaining[s, w, b] = np.inf if effect.kind is EffectKind.SPARED else 0.0
        cache.pop_deaths()
        capacity = cache.effective_capacity()
        events.append(DeathEvent(t, int(s), int(w), int(b), effect.label, capacity))
        if stop_capacity is not None and capacity <= stop_capacity:
            break
    return events, rw


def run_forecast(config, simulation=None, rw=None):
    """
    Simulation-prediction epochs until capacity reaches the stop fraction.

    :param config: ExperimentConfig.
    :param simulation: Simulation or None.
        A simulation whose cache does not wear; built from ``config`` when
        omitted.
    :param rw: RWMap or None.
        Initial RW map; drawn from the endurance model when omitted.
    :return: Timeline.
    """
    sim = simulation or Simulation.from_config(config, wear=False)
    cache = sim.cache
    rw = rw if rw is not None else init_rw_map(config.geometry, config.endurance)
    settings = config.forecast
    mode = WbMode.for_policy(cache.policy, settings.wb_mode)
    window = settings.epoch_window or 10 * max(1, len(sim.events))
    warmup = settings.warmup if settings.warmup is not None else len(sim.events)
    timeline = Timeline(cache.initial_capacity, cache.policy.value)
    stop = _stop_capacity(cache, settings.stop_fraction)
    t = 0.0
    while True:
        if cache.effective_capacity() <= stop:
            timeline.complete = True
            break
        if timeline.simulations >= settings.max_epochs:
            timeline.budget_exceeded = True
            break
        if not sim.events:
            timeline.no_progress = True
            break
        wb = measure_epoch(sim, window, warmup)
        timeline.simulations += 1
        table = aggregate(wb, cache, mode)
        try:
            events, rw = predict_k(rw, table, settings.k, cache, t0=t, stop_capacity=stop)
        except NoProgress:
            logger.warning("epoch %d measured no writes to alive bytes", timeline.simulations)
            timeline.no_progress = True
            break
        timeline.fallback_lookups += table.fallbacks
        for event in events:
            timeline.add_event(event)
            timeline.add_sample(event.t, event.capacity, wb.perf)
        t = events[-1].t
        logger.info(
            "epoch %d: %d deaths, t=%.6g s, capacity %.4f",
            timeline.simulations, len(events), t, cache.capacity_fraction(),
        )
    timeline.simulated_events = sim.processed
    return timeline


def run(config):
    """Runs the mode selected in the configuration."""
    if config.forecast.mode == "naive":
        return run_naive(config)
    return run_forecast(config)


# ==================================
# export


def _fmt(value):
    return "" if value is None else FLOAT_FORMAT.format(value)


def write_timeline_csv(path, timeline):
    with open(str(path), "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TIMELINE_HEADER)
        for s in timeline.samples:
            perf = s.perf
            writer.writerow([
                _fmt(s.t),
                s.capacity,
                _fmt(s.capacity_fraction),
                _fmt(perf.hit_rate if perf else None),
                _fmt(perf.amat if perf else None),
            ])


def write_events_csv(path, timeline):
    with open(str(path), "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(EVENTS_HEADER)
        for e in timeline.events:
            writer.writerow([_fmt(e.t), e.set, e.way, e.byte, e.effect])


def write_plot_data_csv(path, timeline):
    """Capacity fraction and AMAT against time normalized to the last sample."""
    last = timeline.samples[-1].t if timeline.samples else 0.0
    with open(str(path), "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PLOT_HEADER)
        for s in timeline.samples:
            writer.writerow([
                _fmt(s.t / last if last else 0.0),
                _fmt(s.capacity_fraction),
                _fmt(s.perf.amat if s.perf else None),
            ])
