"""Operator-algebra data assimilation for discrete-state agent-based models."""

from .algebra import OperatorPoly, OperatorTerm, commutator, multiply, normal_order
from .assimilation import (Observation, SeriesConvergenceError,
                           SeriesDiagnostics, WindowRejectedError,
                           ZeroLikelihoodError, assimilate_window,
                           observation_operator, prune_observations,
                           truncation_error, z_series_value)
from .deselby import (DeselbyParams, DeselbyState, apply_creation,
                      binomial_posterior_exact, mean, pmf)
from .experiment import (ExperimentConfig, information_score,
                         reference_score, run_experiment)
from .gridmodel import GridRates, grid_index, predator_prey_spec
from .hamiltonian import (ActionRule, BehaviorSpec, Hamiltonian,
                          InteractionRule, build_action_term,
                          build_hamiltonian, build_interaction_term,
                          commutator_with_H)
from .worldsim import WorldState, advance, observe, sample_initial

__version__ = "0.1.0"
