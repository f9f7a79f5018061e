"""Resonance poles, memory-kernel dynamics and semigroup diagnostics for the
Lee-Friedrichs model of discrete levels coupled to a continuum."""
from .analysis import (cross_pole_orthogonality, fit_decay_rate, markovianity_profile,
                       semigroup_deviation)
from .errors import *  # noqa: F401,F403
from .kernel import CorrelationKernel, QuadratureSpec
from .memory_evolution import (ReducedPropagator, build_resonant_density, solve_markovian,
                               solve_memory_kernel)
from .model import (FlatWindow, LevelSet, Lorentzian, Ohmic, SpectralDensityModel, make_channel,
                    omega_at, omega_continuation)
from .oracle import DiscretizedHamiltonian, discretize, dispersion, exact_reduced_propagator
from .resolvent import PoleRecord, PoleSearch, ReducedGenerator

__version__ = "0.1.0"
