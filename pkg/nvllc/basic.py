# -*- coding: utf-8 -*-
"""
    nvllc
    ~~~~~
    Plain implementations of the command-line verbs. Each one takes a loaded
    ExperimentConfig, writes its results under an output directory and
    reports progress with ``click.echo``.

    :license: BSD, see LICENSE for details.
"""

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import click
import toolz

from . import forecast as fc
from .endurance import Policy
from .trace import generate, summarize, write_trace

logger = logging.getLogger(__name__)

TIMELINE_FILE = "timeline.csv"
EVENTS_FILE = "events.csv"
PLOT_FILE = "plot_data.csv"
SUMMARY_FILE = "summary.txt"
CONFIG_FILE = "effective_config.ini"
COMPARE_FILE = "compare.csv"
RATIOS_FILE = "ratios.txt"

DEFAULT_POLICIES = (Policy.FD, Policy.FD6, Policy.CMP)
# time-to-half-capacity factors over FD reported for the full-system runs
REFERENCE_RATIOS = {"FD+6/FD": 1.47, "CMP/FD": 6.2}


class CompareError(RuntimeError):
    """A policy run of a comparison failed."""


# ==================================
# utility functions

def prepare_output(config, out_dir=None):
    """
    Creates the output directory and echoes the effective configuration
    into it.

    :param config: ExperimentConfig.
    :param out_dir: str or None.
        Overrides the configured directory.
    :return: str.
        The output directory.
    """
    out_dir = out_dir or config.output_dir
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    with open(os.path.join(out_dir, CONFIG_FILE), "w", encoding="utf-8") as handle:
        handle.write(config.to_ini())
    return out_dir


def write_summary(path, timeline):
    lines = [
        "policy = {0}".format(timeline.policy),
        "complete = {0}".format(str(timeline.complete).lower()),
        "budget_exceeded = {0}".format(str(timeline.budget_exceeded).lower()),
        "no_progress = {0}".format(str(timeline.no_progress).lower()),
        "initial_capacity = {0}".format(timeline.initial_capacity),
        "deaths = {0}".format(len(timeline.events)),
        "simulations = {0}".format(timeline.simulations),
        "fallback_lookups = {0}".format(timeline.fallback_lookups),
        "simulated_events = {0}".format(timeline.simulated_events),
    ]
    with open(str(path), "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def export_timeline(out_dir, timeline):
    """Writes the timeline, events, plot data and summary files."""
    fc.write_timeline_csv(os.path.join(out_dir, TIMELINE_FILE), timeline)
    fc.write_events_csv(os.path.join(out_dir, EVENTS_FILE), timeline)
    fc.write_plot_data_csv(os.path.join(out_dir, PLOT_FILE), timeline)
    write_summary(os.path.join(out_dir, SUMMARY_FILE), timeline)


def _report(timeline, quiet):
    if quiet:
        return
    last = timeline.samples[-1] if timeline.samples else None
    if timeline.complete:
        state = "complete"
    elif timeline.no_progress:
        state = "no progress"
    else:
        state = "budget exceeded"
    click.echo(
        "{0}: {1}, {2} deaths, capacity {3} at t={4} s".format(
            timeline.policy,
            state,
            len(timeline.events),
            fc.FLOAT_FORMAT.format(last.capacity_fraction) if last else "1",
            fc.FLOAT_FORMAT.format(last.t) if last else "0",
        )
    )


# ==================================
# commands

def simulate(config, out_dir=None, quiet=False):
    """
    Exact degradation run.

    :param config: ExperimentConfig.
    :param out_dir: str or None.
    :param quiet: bool.
    :return: Timeline.
    """
    out_dir = prepare_output(config, out_dir)
    timeline = fc.run_naive(config)
    export_timeline(out_dir, timeline)
    _report(timeline, quiet)
    return timeline


def forecast(config, out_dir=None, quiet=False):
    """
    Simulation-prediction run.

    :param config: ExperimentConfig.
    :param out_dir: str or None.
    :param quiet: bool.
    :return: Timeline.
    """
    out_dir = prepare_output(config, out_dir)
    timeline = fc.run_forecast(config)
    export_timeline(out_dir, timeline)
    _report(timeline, quiet)
    return timeline


@dataclass(frozen=True)
class PolicyRun:
    seed: int
    index: int
    policy: str
    t_target: float
    complete: bool
    simulations: int


@dataclass
class CompareResult:
    """
    Time to reach the target capacity for every (seed, policy) pair and the
    ratios against the baseline policy.
    """

    labels: list
    runs: list = field(default_factory=list)
    ratios: dict = field(default_factory=dict)

    @property
    def complete(self):
        return all(run.complete for run in self.runs)

    @property
    def incomplete(self):
        return not self.complete

    def mean_ratios(self):
        means = {}
        for label in self.labels[1:]:
            values = [r[label] for r in self.ratios.values() if r.get(label) is not None]
            means[label] = sum(values) / len(values) if values else None
        return means


def _run_policy(config, index, policy, seed, mode):
    run_config = config.with_policy(policy).with_seed(seed)
    try:
        if mode == "naive":
            timeline = fc.run_naive(run_config)
        else:
            timeline = fc.run_forecast(run_config)
    except Exception as e:
        raise CompareError("{0} (seed {1}): {2}".format(policy.value, seed, e))
    return PolicyRun(
        seed,
        index,
        policy.value,
        timeline.time_to_fraction(config.forecast.stop_fraction),
        timeline.complete,
        timeline.simulations,
    )


def _ratio_labels(policies):
    base = policies[0]
    return [base.value] + ["{0}/{1}".format(p.value, base.value) for p in policies[1:]]


def compare(config, out_dir=None, policies=DEFAULT_POLICIES, repeat=1, jobs=1,
            mode=None, quiet=False):
    """
    Runs every policy on the same trace and seeds and compares their time to
    reach the target capacity.

    The baseline is FD when listed, otherwise the first policy.

    :param config: ExperimentConfig.
    :param out_dir: str or None.
    :param policies: sequence of Policy.
    :param repeat: int.
        Consecutive seeds starting at the configured one.
    :param jobs: int.
        Worker processes; 1 runs in this process.
    :param mode: str or None.
        ``naive`` or ``epoch``; the configured mode when None.
    :param quiet: bool.
    :return: CompareResult.
    """
    policies = [Policy.parse(p) for p in policies]
    if not policies:
        raise ValueError("no policy to compare")
    if repeat < 1 or jobs < 1:
        raise ValueError("repeat and jobs must be at least 1")
    if Policy.FD in policies and policies[0] is not Policy.FD:
        policies.remove(Policy.FD)
        policies.insert(0, Policy.FD)
    mode = mode or config.forecast.mode
    out_dir = prepare_output(config, out_dir)
    seeds = list(range(config.seed, config.seed + repeat))
    tasks = [
        (config, index, policy, seed, mode)
        for seed in seeds
        for index, policy in enumerate(policies)
    ]
    if jobs == 1:
        runs = [_run_policy(*task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_policy, *task) for task in tasks]
            runs = [f.result() for f in futures]

    result = CompareResult(_ratio_labels(policies), runs)
    for seed, group in toolz.groupby(lambda r: r.seed, runs).items():
        group = sorted(group, key=lambda r: r.index)
        base = group[0].t_target
        result.ratios[seed] = {
            label: (run.t_target / base if base and run.t_target is not None else None)
            for label, run in zip(result.labels[1:], group[1:])
        }
    write_compare(out_dir, result)
    if not quiet:
        for label, value in result.mean_ratios().items():
            click.echo("{0}: {1}".format(label, _fmt_ratio(value)))
    return result


def _fmt_ratio(value):
    return "n/a" if value is None else fc.FLOAT_FORMAT.format(value)


def write_compare(out_dir, result):
    with open(os.path.join(out_dir, COMPARE_FILE), "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("seed", "policy", "t_target_seconds", "complete", "simulations"))
        for run in sorted(result.runs, key=lambda r: (r.seed, r.index)):
            writer.writerow([
                run.seed,
                run.policy,
                "" if run.t_target is None else fc.FLOAT_FORMAT.format(run.t_target),
                str(run.complete).lower(),
                run.simulations,
            ])
    lines = ["baseline = {0}".format(result.labels[0])]
    for seed in sorted(result.ratios):
        for label, value in result.ratios[seed].items():
            lines.append("seed {0} {1} = {2}".format(seed, label, _fmt_ratio(value)))
    for label, value in result.mean_ratios().items():
        lines.append("mean {0} = {1}".format(label, _fmt_ratio(value)))
    for label, value in sorted(REFERENCE_RATIOS.items()):
        lines.append("reference {0} = {1}".format(label, value))
    with open(os.path.join(out_dir, RATIOS_FILE), "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def gentrace(config, path, quiet=False):
    """
    Generates the configured synthetic trace into a binary trace file.

    :param config: ExperimentConfig.
    :param path: str.
    :param quiet: bool.
    :return: TraceSummary.
    """
    events = list(generate(config.trace))
    write_trace(path, events, config.geometry.block_size)
    summary = summarize(events)
    if not quiet:
        click.echo("{0}: {1} events, {2} writes".format(path, summary.events, summary.writes))
        for name, count in sorted(summary.classes.items(), key=lambda kv: -kv[1]):
            click.echo("  {0}: {1}".format(name, count))
    return summary
