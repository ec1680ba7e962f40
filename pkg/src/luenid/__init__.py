"""Joint state and parameter estimation for SISO LTI systems.

A bank of first-order filters driven by the plant's input and output tracks
a map that is linear in the unknown state and parameters; inverting that map
by least squares (or a gridded McShane infimum at desk scale) identifies the
system online, with a strict Lyapunov certificate for the tracking error.
"""

from .errors import (BoxTooLarge, ConfigError, DegenerateReference,
                     DegenerateWindow, DimensionMismatch, InvalidQuadrature,
                     LuenidError, NotObservable, SingularShift, SpectrumOverlap,
                     Unstable)
from .excitation import (DerivativeStack, Multisine, diff_exciting_order,
                         eval_derivatives, generate_exciting_input, hankel,
                         persistency_gram)
from .ltisys import (CanonicalTheta, StateSpace, canonical_matrices,
                     controllability_matrix, is_controllable,
                     markov_parameters, observability_matrix, spectrum,
                     sylvester_matrix, to_canonical)
from .metrics import (RunReport, eigen_error, fit_decay_rate,
                      injectivity_diagnostic, markov_error, summarize_run)
from .observer import (ObserverSpec, ObserverState, build_observer,
                       estimate_injectivity_modulus, lyapunov_v, m_row,
                       mcshane_inverse, p_matrix, t_map, t_star_explicit)
from .simulate import (SimConfig, Trajectory, calibrate_p_min,
                       default_discard_before, integrate, output_noise, rhs)

__version__ = "0.1.0"

__all__ = [
    "BoxTooLarge", "CanonicalTheta", "ConfigError", "DegenerateReference",
    "DegenerateWindow", "DerivativeStack", "DimensionMismatch",
    "InvalidQuadrature", "LuenidError", "Multisine", "NotObservable",
    "ObserverSpec", "ObserverState", "RunReport", "SimConfig", "SingularShift",
    "SpectrumOverlap", "StateSpace", "Trajectory", "Unstable",
    "build_observer", "calibrate_p_min", "canonical_matrices",
    "controllability_matrix", "default_discard_before", "diff_exciting_order",
    "eigen_error", "estimate_injectivity_modulus", "eval_derivatives",
    "fit_decay_rate", "generate_exciting_input", "hankel",
    "injectivity_diagnostic", "integrate", "is_controllable", "lyapunov_v",
    "m_row", "markov_error", "markov_parameters", "mcshane_inverse",
    "observability_matrix", "output_noise", "p_matrix", "persistency_gram",
    "rhs", "spectrum", "summarize_run", "sylvester_matrix", "t_map",
    "t_star_explicit", "to_canonical",
]
