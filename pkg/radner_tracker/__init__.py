"""
Radner equilibria of investors trading with an endogenous noise tracker, compared with the
classical model of an exogenous noise trader.
"""

import importlib.metadata
import logging
from pathlib import Path


__version__: str = importlib.metadata.version("radner-tracker")

# we add this to all modules for pdoc;
# see https://pdoc.dev/docs/pdoc.html#use-numpydoc-or-google-docstrings
__docformat__ = "google"

# we also use __all__ in all modules for pdoc; this lets us control the order
__all__ = (
    "__version__",
    "EquilibriumError",
    "Model",
    "ModelParams",
    "solve",
    "solve_exogenous",
    "verify_all",
    "welfare_difference",
    "cli",
    "coefficients",
    "config",
    "endogenous",
    "error",
    "exogenous",
    "ode",
    "params",
    "simulation",
    "verification",
    "welfare",
)

from .coefficients import Model
from .endogenous import solve
from .error import EquilibriumError
from .exogenous import solve_exogenous
from .params import ModelParams
from .verification import verify_all
from .welfare import welfare_difference


logging.getLogger(__name__).addHandler(logging.NullHandler())

# extend the module's docstring
for filename in ("usage.md", "extras.md"):
    __doc__ += "\n<br>\n"
    __doc__ += (Path(__file__).parent / "doc" / filename).read_text()
