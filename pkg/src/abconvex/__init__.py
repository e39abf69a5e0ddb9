"""Exact computations in abstract convexity.

Functions live on the real line (continuous piecewise-linear, exact
rationals) or on a finite set of rational points (value tables with
``+-inf``).  On top of that sit support sets and hulls, conjugates and
subdifferentials with their calculus rules, and monotone operators.
"""

from . import calculus, expr, families, hulls, instance, monotone, numerics, plotdata, reports, scenarios, suite
from .calculus import *  # noqa: F401,F403
from .expr import ExprSyntaxError, parse_expr, to_text
from .families import *  # noqa: F401,F403
from .hulls import *  # noqa: F401,F403
from .instance import InstanceError, InstanceFile, load_instance, parse_instance
from .monotone import *  # noqa: F401,F403
from .numerics import *  # noqa: F401,F403
from .plotdata import emit_plot_data
from .reports import *  # noqa: F401,F403
from .scenarios import CATALOG, UnknownScenarioError, run_instance, run_scenario
from .suite import replay_witness, run_property_suite

__version__ = "0.1.0"

__all__ = [
    *numerics.__all__,
    *families.__all__,
    *hulls.__all__,
    *calculus.__all__,
    *monotone.__all__,
    *reports.__all__,
    "ExprSyntaxError",
    "parse_expr",
    "to_text",
    "InstanceError",
    "InstanceFile",
    "load_instance",
    "parse_instance",
    "emit_plot_data",
    "CATALOG",
    "UnknownScenarioError",
    "run_instance",
    "run_scenario",
    "replay_witness",
    "run_property_suite",
]
