"""Two-block structure inference for directed weighted temporal networks."""

from . import bankstrat, baselines, classify, inference, knockout, netcore, sbm, synth
from .errors import BlockscopeError

__version__ = "0.1.0"

__all__ = [
    "bankstrat",
    "baselines",
    "classify",
    "inference",
    "knockout",
    "netcore",
    "sbm",
    "synth",
    "BlockscopeError",
    "__version__",
]
