# -*- coding: utf-8 -*-

"""Top-level package for nvllc."""

__author__ = """nvllc developers"""
__email__ = "nvllc-dev@users.noreply.github.com"
__version__ = "0.1.0"
__copyright__ = "Copyright (c) 2026, nvllc developers"
__credits__ = ("nvllc developers",)
__license__ = "BSD"
__maintainer__ = "nvllc developers"
__status__ = "Development"

import logging

logging.getLogger(__name__).addHandler(logging.NullHandler())

from .cache import Cache, CacheGeometry  # noqa: E402
from .compression import compress, decompress  # noqa: E402
from .config import ExperimentConfig, load_config  # noqa: E402
from .endurance import EnduranceModel, Policy  # noqa: E402
from .forecast import Timeline, run_forecast, run_naive  # noqa: E402
