"""Simulation toolkit for single atoms coupled to counter-propagating
whispering-gallery modes with non-transversal polarization."""

from . import atom, config, core, fields, spectra, transit  # noqa: F401

__version__ = "0.1.0"
