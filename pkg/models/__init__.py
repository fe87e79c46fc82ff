from .path import PathMatrix
from .iid_model import simulate_iid
from .mma_model import MMASpec, CoeffMode, simulate_mma
from .rcar_model import RCARSpec, simulate_rcar, stationary_spectral_measure
from .scale_law import ScaleLaw, markov_scale_path

__all__ = [
    'PathMatrix',
    'simulate_iid',
    'MMASpec',
    'CoeffMode',
    'simulate_mma',
    'RCARSpec',
    'simulate_rcar',
    'stationary_spectral_measure',
    'ScaleLaw',
    'markov_scale_path',
]
