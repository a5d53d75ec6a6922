"""Self-similar metric trees coupled to a disk exterior through
Dirichlet-to-Neumann maps."""

__version__ = "0.1.0"

from . import (acceptance, calculus, circle, cli, config, dtn, errors, exterior,
               transmission, tree)

__all__ = ["acceptance", "calculus", "circle", "cli", "config", "dtn", "errors",
           "exterior", "transmission", "tree", "__version__"]
