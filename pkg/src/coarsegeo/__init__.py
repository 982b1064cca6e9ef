"""coarsegeo: coarse geometry of contracting systems in Cayley graphs.

Library + CLI for measuring contraction, quasiconvexity, and bounded
intersection on computable group models, verifying admissible-path
constants, and running amalgam / HNN combination experiments against
independent algebraic oracles.
"""

__version__ = "0.1.0"

from .models import Coset, Element, GroupModel, SubgroupSpec

__all__ = ["GroupModel", "Element", "Coset", "SubgroupSpec", "__version__"]


def run_experiment(config: dict):
    """Run an experiment from a config mapping; see coarsegeo.runner."""
    from .runner import run_experiment as _run

    return _run(config)
