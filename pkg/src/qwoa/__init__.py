"""Statevector simulation and analysis of quantum walk optimisation driven by a fixed parameter schedule."""
from .engine import (MAXIMIZE, MINIMIZE, Metrics, OptimizeResult, RunParams, RunTrace, amplified_state,
                     equal_superposition, measure_stats, optimize_params, prepare_amplified, schedule,
                     tune_penalty)
from .instances import brute_force_optimum, generate, load, load_builtin
from .mixers import HammingMixer, HypercubeMixer, TranspositionMixer, apply_mixer, make_mixer
from .problems import CflpInstance, KMeansInstance, MaxcutInstance, MisInstance, QapInstance
from .space import SolutionSpace, distance, index_to_solution, solution_to_index

__all__ = [
    "MAXIMIZE", "MINIMIZE", "Metrics", "OptimizeResult", "RunParams", "RunTrace", "amplified_state",
    "equal_superposition", "measure_stats", "optimize_params", "prepare_amplified", "schedule", "tune_penalty",
    "brute_force_optimum", "generate", "load", "load_builtin",
    "HammingMixer", "HypercubeMixer", "TranspositionMixer", "apply_mixer", "make_mixer",
    "CflpInstance", "KMeansInstance", "MaxcutInstance", "MisInstance", "QapInstance",
    "SolutionSpace", "distance", "index_to_solution", "solution_to_index",
]
