"""frontwave: numerical laboratory for a reaction-diffusion system with a
Stefan free boundary — semi-wave profiles, spreading speeds, front-tracking
simulation, and verification of the sharp front asymptotics."""

from . import analysis, config, errors, fbsolver, model, semiwave

__version__ = "0.1.0"

__all__ = ["analysis", "config", "errors", "fbsolver", "model", "semiwave", "__version__"]
