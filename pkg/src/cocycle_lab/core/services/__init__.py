"""Command handlers, acceptance suites and benchmarks.

Importing this package registers every subcommand in ``HANDLERS``.
"""

from . import bench, reproduce
from .handlers import HANDLERS
from .reproduce import SUITES, run_suite

__all__ = ["HANDLERS", "SUITES", "bench", "reproduce", "run_suite"]
