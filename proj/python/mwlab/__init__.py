"""Matrix-weighted fractional commutator laboratory."""

import json

from ._mwlab import *  # noqa: F401,F403
from ._mwlab import run_suite as _run_suite

__version__ = "0.1.0"


def verify(suite, config=None):
    """Run an experiment suite and return the parsed report."""
    text = json.dumps(config) if config is not None else ""
    return json.loads(_run_suite(suite, text))
