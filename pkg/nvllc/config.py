# -*- coding: utf-8 -*-

"""
Experiment configuration: a sectioned INI file read on top of the packaged
``defaults.ini``.
"""

import configparser
import dataclasses
import io
import logging
import math
import os
from dataclasses import dataclass, field

import importlib_resources

from .cache import CacheGeometry, Latencies
from .endurance import EnduranceModel, Policy
from .trace import (
    VALUE_KINDS,
    TraceFormatError,
    TraceSpec,
    TraceSpecError,
    trace_block_size,
)

logger = logging.getLogger(__name__)

_RESOURCE_PACKAGE = __package__
_SUFFIXES = {"K": 1 << 10, "M": 1 << 20, "G": 1 << 30}


class ConfigError(ValueError):
    """
    Invalid configuration value.

    :param field_name: str.
        Dotted ``section.key`` of the offending field.
    """

    def __init__(self, field_name, message):
        super(ConfigError, self).__init__("{0}: {1}".format(field_name, message))
        self.field = field_name


@dataclass(frozen=True)
class ForecastSettings:
    """
    :param mode: str.
        ``naive`` (exact degradation) or ``epoch`` (simulation-prediction).
    :param k: int.
        Deaths predicted per simulated epoch.
    :param epoch_window: int or None.
        Measured events per epoch; 10x the trace length when None.
    :param warmup: int or None.
        Unmeasured events before each window; 1x the trace length when None.
    :param stop_fraction: float.
        Runs stop once capacity falls to this fraction of the initial one.
    :param wb_mode: str.
        ``auto``, ``alive`` or ``alive_class``.
    :param max_events: int.
        Event budget of a naive run.
    :param max_epochs: int.
        Epoch budget of a forecast run.
    """

    mode: str = "epoch"
    k: int = 8
    epoch_window: int = None
    warmup: int = None
    stop_fraction: float = 0.5
    wb_mode: str = "auto"
    max_events: int = 100000000
    max_epochs: int = 100000


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: CacheGeometry = field(default_factory=CacheGeometry)
    policy: Policy = Policy.CMP
    endurance: EnduranceModel = field(default_factory=EnduranceModel)
    forecast: ForecastSettings = field(default_factory=ForecastSettings)
    trace: TraceSpec = field(default_factory=TraceSpec)
    trace_path: str = None
    latencies: Latencies = field(default_factory=Latencies)
    event_rate: float = 1e8
    perf_window: int = 10000
    stride: int = 1
    output_dir: str = "results"

    def with_seed(self, seed):
        """Same experiment with ``seed`` driving both endurance and trace."""
        return dataclasses.replace(
            self,
            endurance=dataclasses.replace(self.endurance, seed=seed),
            trace=dataclasses.replace(self.trace, seed=seed),
        )

    def with_policy(self, policy):
        return dataclasses.replace(self, policy=Policy.parse(policy))

    @property
    def seed(self):
        return self.endurance.seed

    def validate(self):
        if not 0.0 < self.forecast.stop_fraction <= 1.0:
            raise ConfigError("forecast.stop_fraction", "must lie in (0, 1]")
        if self.forecast.mode not in ("naive", "epoch"):
            raise ConfigError("forecast.mode", "must be naive or epoch")
        if self.forecast.k < 1:
            raise ConfigError("forecast.k", "must be at least 1")
        if self.forecast.wb_mode not in ("auto", "alive", "alive_class"):
            raise ConfigError("forecast.wb_mode", "must be auto, alive or alive_class")
        for name in ("epoch_window", "warmup"):
            value = getattr(self.forecast, name)
            if value is not None and value < (1 if name == "epoch_window" else 0):
                raise ConfigError("forecast." + name, "out of range")
        if self.event_rate <= 0:
            raise ConfigError("simulation.event_rate", "must be positive")
        if self.stride < 1 or math.gcd(self.stride, self.geometry.frame_bytes) != 1:
            raise ConfigError("cache.stride", "must be positive and coprime with the frame size")
        if self.trace_path is not None:
            if not os.path.isfile(self.trace_path):
                raise ConfigError("trace.path", "{0} not found".format(self.trace_path))
            if not str(self.trace_path).lower().endswith(".csv"):
                try:
                    block_size = trace_block_size(self.trace_path)
                except TraceFormatError as e:
                    raise ConfigError("trace.path", str(e))
                if block_size != self.geometry.block_size:
                    raise ConfigError(
                        "trace.path",
                        "block size {0} does not match cache.block_size".format(block_size),
                    )
        else:
            try:
                self.trace.validate()
            except TraceSpecError as e:
                raise ConfigError("trace." + e.field, str(e))
            if self.trace.block_size != self.geometry.block_size:
                raise ConfigError("trace.block_size", "must match cache.block_size")
        return self

    def to_ini(self):
        """Effective configuration in the same INI layout it is read from."""
        parser = configparser.ConfigParser()
        parser["cache"] = {
            "total_size": str(self.geometry.total_size),
            "associativity": str(self.geometry.associativity),
            "block_size": str(self.geometry.block_size),
            "stride": str(self.stride),
        }
        parser["policy"] = {"name": self.policy.value}
        parser["endurance"] = {
            "mu": repr(float(self.endurance.mu)),
            "sigma": repr(float(self.endurance.sigma)),
            "seed": str(self.endurance.seed),
        }
        fc = self.forecast
        parser["forecast"] = {
            "mode": fc.mode,
            "k": str(fc.k),
            "epoch_window": "" if fc.epoch_window is None else str(fc.epoch_window),
            "warmup": "" if fc.warmup is None else str(fc.warmup),
            "stop_fraction": repr(float(fc.stop_fraction)),
            "wb_mode": fc.wb_mode,
            "max_events": str(fc.max_events),
            "max_epochs": str(fc.max_epochs),
        }
        tr = self.trace
        section = {
            "path": self.trace_path or "",
            "length": str(tr.length),
            "write_fraction": repr(float(tr.write_fraction)),
            "address_model": tr.address_model,
            "zipf_s": repr(float(tr.zipf_s)),
            "address_stride": str(tr.stride),
            "footprint": str(tr.footprint),
            "seed": str(tr.seed),
        }
        for kind in VALUE_KINDS:
            section["value_" + kind] = repr(float(tr.value_model.get(kind, 0.0)))
        parser["trace"] = section
        parser["simulation"] = {
            "event_rate": repr(float(self.event_rate)),
            "perf_window": str(self.perf_window),
        }
        parser["latency"] = {
            "hit": repr(float(self.latencies.hit)),
            "miss_penalty": repr(float(self.latencies.miss_penalty)),
        }
        parser["output"] = {"directory": self.output_dir}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def parse_size(text):
    """
    Parses a byte count with an optional K/M/G (binary) suffix.

    :param text: str.
    :return: int.
    """
    text = text.strip().upper().rstrip("B").rstrip("I")
    if text and text[-1] in _SUFFIXES:
        return int(float(text[:-1]) * _SUFFIXES[text[-1]])
    return int(float(text))


def _getter(parser, section, key, convert, optional=False):
    raw = parser.get(section, key, fallback="").strip()
    if not raw:
        if optional:
            return None
        raise ConfigError("{0}.{1}".format(section, key), "missing value")
    try:
        return convert(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError("{0}.{1}".format(section, key), str(e))


def _int(text):
    return int(float(text)) if "e" in text.lower() else int(text)


def default_parser():
    """A parser holding the packaged defaults."""
    parser = configparser.ConfigParser()
    resource = importlib_resources.files(_RESOURCE_PACKAGE).joinpath("defaults.ini")
    parser.read_string(resource.read_text(encoding="utf-8"))
    return parser


def from_parser(parser):
    """
    Builds and validates an :class:`ExperimentConfig`.

    :param parser: configparser.ConfigParser.
    :return: ExperimentConfig.
    """
    get = lambda section, key, convert, optional=False: _getter(  # noqa: E731
        parser, section, key, convert, optional
    )
    try:
        geometry = CacheGeometry(
            total_size=get("cache", "total_size", parse_size),
            associativity=get("cache", "associativity", _int),
            block_size=get("cache", "block_size", parse_size),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("cache", str(e))
    try:
        policy = Policy.parse(get("policy", "name", str))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("policy.name", str(e))
    try:
        endurance = EnduranceModel(
            mu=get("endurance", "mu", float),
            sigma=get("endurance", "sigma", float, optional=True),
            seed=get("endurance", "seed", _int),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("endurance", str(e))
    forecast = ForecastSettings(
        mode=get("forecast", "mode", str).lower(),
        k=get("forecast", "k", _int),
        epoch_window=get("forecast", "epoch_window", _int, optional=True),
        warmup=get("forecast", "warmup", _int, optional=True),
        stop_fraction=get("forecast", "stop_fraction", float),
        wb_mode=get("forecast", "wb_mode", str).lower(),
        max_events=get("forecast", "max_events", _int),
        max_epochs=get("forecast", "max_epochs", _int),
    )
    trace = TraceSpec(
        length=get("trace", "length", _int),
        write_fraction=get("trace", "write_fraction", float),
        address_model=get("trace", "address_model", str).lower(),
        zipf_s=get("trace", "zipf_s", float),
        stride=get("trace", "address_stride", parse_size),
        footprint=get("trace", "footprint", parse_size),
        value_model={
            kind: get("trace", "value_" + kind, float) for kind in VALUE_KINDS
        },
        seed=get("trace", "seed", _int),
        block_size=geometry.block_size,
    )
    config = ExperimentConfig(
        geometry=geometry,
        policy=policy,
        endurance=endurance,
        forecast=forecast,
        trace=trace,
        trace_path=get("trace", "path", str, optional=True),
        latencies=Latencies(
            hit=get("latency", "hit", float),
            miss_penalty=get("latency", "miss_penalty", float),
        ),
        event_rate=get("simulation", "event_rate", float),
        perf_window=get("simulation", "perf_window", _int),
        stride=get("cache", "stride", _int),
        output_dir=get("output", "directory", str),
    )
    return config.validate()


def load_config(path=None, seed=None, overrides=None):
    """
    Reads the packaged defaults, then ``path`` on top, then ``overrides``.

    :param path: str or None.
        INI file.
    :param seed: int or None.
        Replaces both the endurance and the trace seed.
    :param overrides: dict or None.
        ``{section: {key: value}}`` applied last.
    :return: ExperimentConfig.
    """
    parser = default_parser()
    if path is not None:
        if not os.path.isfile(str(path)):
            raise ConfigError("config", "{0} not found".format(path))
        try:
            with open(str(path), "r", encoding="utf-8") as handle:
                parser.read_file(handle)
        except configparser.Error as e:
            raise ConfigError("config", str(e))
    for section, values in (overrides or {}).items():
        if not parser.has_section(section):
            parser.add_section(section)
        for key, value in values.items():
            parser.set(section, key, str(value))
    if path is not None:
        trace_path = parser.get("trace", "path", fallback="").strip()
        if trace_path and not os.path.isabs(trace_path):
            base = os.path.dirname(os.path.abspath(str(path)))
            parser.set("trace", "path", os.path.join(base, trace_path))
    config = from_parser(parser)
    if seed is not None:
        config = config.with_seed(seed)
    logger.debug("loaded configuration from %s", path or "defaults")
    return config
