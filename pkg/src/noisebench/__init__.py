"""Trainable noise models for superconducting qubits and a volumetric benchmark.

Core pieces:

* :mod:`noisebench.circuits` builds EfficientSU2 circuits,
* :mod:`noisebench.transpiler` lowers them to {X, SX, Rz, CNOT},
* :mod:`noisebench.noisemodel` turns a circuit plus parameters into a
  channel program and predicts outcome distributions exactly,
* :mod:`noisebench.trainer` fits parameters to counts with SPSA,
* :mod:`noisebench.benchmark` scores a model on a width/depth grid.
"""

__version__ = "0.1.0"

from .circuits import Circuit, Gate, GateKind, efficient_su2, random_circuit_batch
from .densmat import OutcomeDistribution, backend_name, use_backend
from .noisemodel import (
    GateTimes,
    NoiseParams,
    default_theta0,
    n_params,
    pack,
    plausible_device,
    predict_distribution,
    predict_expval,
    unpack,
)
from .transpiler import transpile

__all__ = [
    "Circuit",
    "Gate",
    "GateKind",
    "GateTimes",
    "NoiseParams",
    "OutcomeDistribution",
    "backend_name",
    "default_theta0",
    "efficient_su2",
    "n_params",
    "pack",
    "plausible_device",
    "predict_distribution",
    "predict_expval",
    "random_circuit_batch",
    "transpile",
    "unpack",
    "use_backend",
]
