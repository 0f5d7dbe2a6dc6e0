"""Angular momentum frequencies of N-body relative equilibria and the Horn polytope."""

from . import freqmap, horn, matkit, nbody, p2
from .freqmap import HermitianStructure, InertiaSpectrum, frequency_map, sigma_of
from .horn import conjecture_verify, fflp_split, horn_polytope
from .nbody import Configuration, State, certify

__all__ = [
    "Configuration",
    "HermitianStructure",
    "InertiaSpectrum",
    "State",
    "certify",
    "conjecture_verify",
    "fflp_split",
    "freqmap",
    "frequency_map",
    "horn",
    "horn_polytope",
    "matkit",
    "nbody",
    "p2",
    "sigma_of",
]
__version__ = "0.1.0"
