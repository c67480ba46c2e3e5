"""Desk-scale simulations of trapped-ion qubit experiments.

Subpackages cover coherent two-level dynamics (bloch), quantum Zeno
measurement statistics (zeno), Bayesian adaptive state estimation
(estimation), affine qubit channels with tomography (channels), and
the spin-spin-coupled ion chain calculator (ionchain).
"""

__version__ = "0.1.0"

from . import bloch, channels, constants, estimation, ionchain, sphere, zeno  # noqa: F401
