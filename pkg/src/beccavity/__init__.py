"""Mean-field simulator of a Bose-Einstein condensate in a pumped optical cavity.

Modules: :mod:`physics` (parameters and units), :mod:`steady_state`
(two-mode bistability theory), :mod:`dynamics` (coupled split-step
integrator), :mod:`measurement` (detection chain and spectral analysis) and
:mod:`harness` (run specifications, recipes, grids and the CLI backend).
"""

from .physics import DerivedParams, PhysicalParams, SimUnits, derive_params, paper_params, validity_report

__all__ = ["DerivedParams", "PhysicalParams", "SimUnits", "derive_params", "paper_params", "validity_report"]
__version__ = "0.1.0"
