"""Steering detection for two-qubit states.

The package answers one question two ways: given a two-qubit density
matrix, can Alice steer Bob's conditional states?  The exact route
solves a semidefinite program over all deterministic local-hidden-state
strategies; the fast route evaluates a trained support vector machine
on a feature vector of the state.  The remaining modules generate
labelled datasets, train and select classifiers, and expose everything
through a command-line interface.
"""

from qsteer.errors import NumericalFailure, QuotaExceeded
from qsteer.states import (generalized_werner, random_two_qubit_state,
                           unsteerable_bound_holds, validate_state)
from qsteer.measurements import MeasurementSet, assemblage, sample_directions
from qsteer.steering import (STEERABLE, UNSTEERABLE, canonical_measurements,
                             label_state, lhs_feasible, solve_steering_sdp,
                             steering_threshold_scan)
from qsteer.features import canonical_form, extract
from qsteer.svm import (Hyperparams, cross_validate, decision_function,
                        load_model, predict, save_model, train)
from qsteer.dataset import generate_dataset, load_dataset, save_dataset

__version__ = "0.1.0"

__all__ = [
    "NumericalFailure", "QuotaExceeded",
    "generalized_werner", "random_two_qubit_state",
    "unsteerable_bound_holds", "validate_state",
    "MeasurementSet", "assemblage", "sample_directions",
    "STEERABLE", "UNSTEERABLE", "canonical_measurements", "label_state",
    "lhs_feasible", "solve_steering_sdp", "steering_threshold_scan",
    "canonical_form", "extract",
    "Hyperparams", "cross_validate", "decision_function", "load_model",
    "predict", "save_model", "train",
    "generate_dataset", "load_dataset", "save_dataset",
    "__version__",
]
