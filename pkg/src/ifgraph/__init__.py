"""Passive interference-graph inference for session-synchronized CSMA/CA networks."""

from .direct import estimate_direct_robust, estimate_direct_static, robust_epsilon
from .hidden import estimate_hidden_robust, estimate_hidden_s1, estimate_hidden_static
from .kernels import BACKEND
from .model import (EstimationResult, Feedback, InterferenceGraph, ModelParams, SessionTrace,
                    edit_distance, graph_equal)
from .sim import sample_trace

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "EstimationResult", "Feedback", "InterferenceGraph", "ModelParams", "SessionTrace",
    "edit_distance", "graph_equal", "sample_trace", "estimate_direct_static",
    "estimate_direct_robust", "robust_epsilon", "estimate_hidden_static", "estimate_hidden_s1",
    "estimate_hidden_robust",
]
