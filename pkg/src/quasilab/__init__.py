"""Numerical toolkit for quasiperiodic lattice operators.

Continued-fraction arithmetic, arithmetic conditions on frequency vectors,
Monte Carlo measure estimates for potentials, a log-domain periodic
approximation criterion, and finite-box spectra and transport.
"""
__version__ = "0.1.0"

from .contfrac import Frequency, torus_dist  # noqa: E402
from .errors import QuasilabError  # noqa: E402
from .freqcond import FrequencyVector  # noqa: E402
from .gordon import gordon_check, gordon_check_orbit  # noqa: E402
from .montecarlo import MCParams  # noqa: E402
from .potential import PotentialSpec  # noqa: E402

__all__ = ["Frequency", "FrequencyVector", "MCParams", "PotentialSpec", "QuasilabError",
           "gordon_check", "gordon_check_orbit", "torus_dist", "__version__"]
