"""Family-generic entry points used by the file format and the CLI."""

from __future__ import annotations

from functools import singledispatch

from punc import d_punc, families, sd_punc
from punc.d_punc import DProbCircuit, DPunc
from punc.errors import Violation
from punc.families import NoisePunc, ProbCircuitPT, PsdCircuit
from punc.linalg import DEFAULT_TOL
from punc.partition import AssignmentLike, MarginalQuery
from punc.sd_punc import SdPunc


@singledispatch
def cardinalities(c) -> tuple[int, ...]:
    raise TypeError(f"{type(c).__name__} is not a circuit")


@cardinalities.register(SdPunc)
@cardinalities.register(PsdCircuit)
@cardinalities.register(ProbCircuitPT)
@cardinalities.register(NoisePunc)
def _(c) -> tuple[int, ...]:
    return c.cardinalities


@cardinalities.register(DPunc)
@cardinalities.register(DProbCircuit)
def _(c) -> tuple[int, ...]:
    return tuple(c.cardinalities)


@singledispatch
def validate(c, tol: float = DEFAULT_TOL) -> list[Violation]:
    raise TypeError(f"{type(c).__name__} is not a circuit")


validate.register(SdPunc, sd_punc.validate)
validate.register(PsdCircuit, families.validate_psd_circuit)
validate.register(ProbCircuitPT, lambda c, tol=DEFAULT_TOL: families.validate_prob_circuit(c, tol))
validate.register(NoisePunc, families.validate_noise_punc)
validate.register(DPunc, d_punc.validate)
validate.register(DProbCircuit, d_punc.validate_dprob)


@singledispatch
def probability(c, x: AssignmentLike, tol: float = DEFAULT_TOL) -> float:
    """Probability of a total assignment; for a NoisePunc, the unnormalized mass."""
    raise TypeError(f"{type(c).__name__} is not a circuit")


probability.register(SdPunc, sd_punc.probability)
probability.register(PsdCircuit, lambda c, x, tol=DEFAULT_TOL: families.eval_psd_circuit(c, x, tol)[1])
probability.register(ProbCircuitPT, lambda c, x, tol=DEFAULT_TOL: families.pc_probability(c, x))
probability.register(NoisePunc, families.noisy_punc_unnormalized)
probability.register(DPunc, d_punc.probability)
probability.register(DProbCircuit, lambda c, x, tol=DEFAULT_TOL: d_punc.eval_dprob_circuit(c, x))


@singledispatch
def marginal(c, q: MarginalQuery, tol: float = DEFAULT_TOL) -> float:
    raise TypeError(f"{type(c).__name__} does not support marginals")


marginal.register(SdPunc, sd_punc.marginal)
marginal.register(PsdCircuit, lambda c, q, tol=DEFAULT_TOL: sd_punc.marginal(families.psd_to_pure_punc(c, tol), q, tol))
marginal.register(ProbCircuitPT, lambda c, q, tol=DEFAULT_TOL: families.pc_marginal(c, q))
marginal.register(NoisePunc, lambda c, q, tol=DEFAULT_TOL: families.noisy_punc_marginal(c, q))
marginal.register(DPunc, d_punc.marginal)
marginal.register(DProbCircuit, lambda c, q, tol=DEFAULT_TOL: d_punc.dprob_marginal(c, q))
