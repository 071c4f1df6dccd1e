"""Asymptotic solver for wind-driven flow over a sloped western boundary."""
__version__ = "0.1.0"

from .regime import Parameters, DerivedScales, FrequencyRegime, validate, preset, classify_frequency
from .spectral_field import ModeGrid, ModeSet, Profile, ForcingRecipe, ingest_forcing
from .munk_roots import quartic_roots
from .green_kernel import build_kernel, convolve
from .qg_builder import SolveContext, build_order0, build_order1, corrector_rhs
from .cascade import CascadeConfig, assemble, residual
