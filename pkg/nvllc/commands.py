# -*- coding: utf-8 -*-
"""
    nvllc
    ~~~~~
    Command line driver of the degradable NV-LLC lifetime experiments.

    :license: BSD, see LICENSE for details.
"""

import contextlib
import logging
import sys

import click

from . import basic
from .config import ConfigError, load_config
from .endurance import Policy
from .trace import TraceFormatError, TraceSpecError

ENVVAR_PREFIX = 'NVLLC'

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_INCOMPLETE = 3


# ==================================
# utility functions

class ValidationError(click.ClickException):
    exit_code = EXIT_VALIDATION


class RunError(click.ClickException):
    exit_code = EXIT_RUNTIME


@contextlib.contextmanager
def _validation_exit():
    try:
        yield
    except click.UsageError as e:
        e.exit_code = EXIT_VALIDATION
        raise


class ExperimentGroup(click.Group):
    """Group whose usage errors exit with the validation code."""

    def make_context(self, info_name, args, parent=None, **extra):
        with _validation_exit():
            return super(ExperimentGroup, self).make_context(info_name, args, parent, **extra)

    def invoke(self, ctx):
        with _validation_exit():
            return super(ExperimentGroup, self).invoke(ctx)


def setup_logging(quiet):
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format='%(levelname)s %(name)s: %(message)s',
    )
    logging.getLogger().setLevel(logging.WARNING if quiet else logging.INFO)


def load(config_path, seed, overrides=None):
    """
    Loads the experiment configuration, turning every input problem into a
    validation error.
    """
    try:
        return load_config(config_path, seed=seed, overrides=overrides)
    except (ConfigError, TraceSpecError, TraceFormatError) as e:
        raise ValidationError(str(e))


def execute(ctx, verb, *args, **kwargs):
    """
    Runs a verb of :mod:`nvllc.basic` and maps its outcome to an exit code.
    """
    try:
        result = verb(*args, **kwargs)
    except (ConfigError, TraceSpecError, TraceFormatError) as e:
        raise ValidationError(str(e))
    except (RuntimeError, ValueError, OSError) as e:
        raise RunError(str(e))
    if getattr(result, 'incomplete', False):
        ctx.exit(EXIT_INCOMPLETE)
    return result


# ==================================
# click options

class PoliciesType(click.ParamType):
    name = 'policies'
    envvar_list_splitter = ','

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            return tuple(Policy.parse(v) for v in value.split(',') if v.strip())
        except ValueError as e:
            self.fail(str(e), param, ctx)


POLICIES = PoliciesType()


option_config = click.option(
    '-c', '--config',
    envvar=ENVVAR_PREFIX + '_CONFIG',
    type=click.Path(exists=False, dir_okay=False),
    default=None, metavar='<FILE>',
    help='Experiment configuration file, read on top of the packaged defaults.')

option_out = click.option(
    '-o', '--out',
    envvar=ENVVAR_PREFIX + '_OUT',
    type=click.Path(exists=False, file_okay=False),
    default=None, metavar='<DIR>',
    help='Output directory. Default is [output] directory of the configuration.')

option_seed = click.option(
    '-s', '--seed',
    envvar=ENVVAR_PREFIX + '_SEED',
    type=int, default=None, metavar='<N>',
    help='Seed of the endurance draw and of the synthetic trace; overrides '
         'the configuration.')

option_quiet = click.option(
    '-q', '--quiet',
    envvar=ENVVAR_PREFIX + '_QUIET',
    is_flag=True, default=False,
    help='Only report warnings and errors.')

CONTEXT_SETTINGS = dict(help_option_names=['-h', '--help'])

# ==================================
# commands


@click.group(cls=ExperimentGroup, context_settings=CONTEXT_SETTINGS)
@click.version_option(package_name='nvllc')
def main():
    """
    Lifetime and performance of a degradable non-volatile last-level cache
    under the FD, FD+6 and CMP disabling policies.

    Environment Variables:
    All command-line options can be set with environment variables using the
    format NVLLC_<UPPER_LONG_NAME> . Dashes (-) have to replaced with
        underscores (_).

    For example, to set the configuration file:

    export NVLLC_CONFIG=experiment.ini
    """
    return


@main.command(context_settings=CONTEXT_SETTINGS)
@option_config
@option_out
@option_seed
@option_quiet
@click.pass_context
def simulate(ctx, config, out, seed, quiet):
    """
    Exact degradation: wear the cache write by write.

    \b
    For examples:
       nvllc simulate -c tiny.ini -o results/naive
    """
    setup_logging(quiet)
    experiment = load(config, seed)
    execute(ctx, basic.simulate, experiment, out, quiet)
    return


@main.command(context_settings=CONTEXT_SETTINGS)
@option_config
@option_out
@option_seed
@option_quiet
@click.option(
    '-k', '--predictions',
    envvar=ENVVAR_PREFIX + '_PREDICTIONS',
    type=click.IntRange(min=1), default=None, metavar='<K>',
    help='Byte deaths predicted per simulated epoch. Default is [forecast] k.')
@click.pass_context
def forecast(ctx, config, out, seed, quiet, predictions):
    """
    Simulation-prediction forecast of the cache lifetime.
    """
    setup_logging(quiet)
    overrides = {'forecast': {'k': predictions}} if predictions else None
    experiment = load(config, seed, overrides)
    execute(ctx, basic.forecast, experiment, out, quiet)
    return


@main.command(context_settings=CONTEXT_SETTINGS)
@option_config
@option_out
@option_seed
@option_quiet
@click.option(
    '-p', '--policy',
    envvar=ENVVAR_PREFIX + '_POLICY',
    type=POLICIES, default=('FD,FD+6,CMP',), metavar='<POLICY>', show_default=True,
    multiple=True,
    help='Policies to compare, comma separated or repeated.')
@click.option(
    '-r', '--repeat',
    envvar=ENVVAR_PREFIX + '_REPEAT',
    type=click.IntRange(min=1), default=1, show_default=True, metavar='<N>',
    help='Number of consecutive seeds.')
@click.option(
    '-j', '--jobs',
    envvar=ENVVAR_PREFIX + '_JOBS',
    type=click.IntRange(min=1), default=1, show_default=True, metavar='<N>',
    help='Worker processes.')
@click.option(
    '-m', '--mode',
    envvar=ENVVAR_PREFIX + '_MODE',
    type=click.Choice(['naive', 'epoch']), default=None,
    help='Degradation mode. Default is [forecast] mode.')
@click.pass_context
def compare(ctx, config, out, seed, quiet, policy, repeat, jobs, mode):
    """
    Time to lose capacity under each policy, and ratios over FD.

    \b
    For examples:
       nvllc compare -c tiny.ini --repeat 5
       nvllc compare -p FD,CMP --jobs 2
    """
    setup_logging(quiet)
    policies = sum(policy, ())  # flatten
    experiment = load(config, seed)
    execute(ctx, basic.compare, experiment, out, policies, repeat, jobs, mode, quiet)
    return


@main.command(context_settings=CONTEXT_SETTINGS)
@click.argument('path', type=click.Path(dir_okay=False))
@option_config
@option_seed
@option_quiet
@click.option(
    '-n', '--length',
    envvar=ENVVAR_PREFIX + '_LENGTH',
    type=click.IntRange(min=0), default=None, metavar='<N>',
    help='Number of events. Default is [trace] length.')
@click.pass_context
def gentrace(ctx, path, config, seed, quiet, length):
    """
    Write the configured synthetic trace to a binary trace file.
    """
    setup_logging(quiet)
    overrides = {'trace': {'length': length}} if length is not None else None
    experiment = load(config, seed, overrides)
    execute(ctx, basic.gentrace, experiment, path, quiet)
    return


if __name__ == '__main__':
    sys.exit(main(auto_envvar_prefix=ENVVAR_PREFIX))
