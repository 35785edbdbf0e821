"""Positive unital circuits over PSD matrices, their special families, and brute-force oracles."""

from punc.d_punc import DProbCircuit, DPunc, embed_sd, is_structured_decomposable
from punc.errors import InvalidCircuitError, PuncError, Violation
from punc.families import NoisePunc, ProbCircuitPT, PsdCircuit
from punc.generate import GeneratorConfig, generate
from punc.partition import MarginalQuery, PartitionCircuit, build
from punc.quantum import DensityMatrix, NoisyPovm, Povm, QuantumOperation
from punc.sd_punc import SdPunc

__version__ = "0.1.0"

__all__ = [
    "DProbCircuit",
    "DPunc",
    "DensityMatrix",
    "GeneratorConfig",
    "InvalidCircuitError",
    "MarginalQuery",
    "NoisePunc",
    "NoisyPovm",
    "PartitionCircuit",
    "Povm",
    "ProbCircuitPT",
    "PsdCircuit",
    "PuncError",
    "QuantumOperation",
    "SdPunc",
    "Violation",
    "build",
    "embed_sd",
    "generate",
    "is_structured_decomposable",
]
