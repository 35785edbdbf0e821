from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from punc import oracle, sd_punc
from punc.errors import AssignmentError
from punc.generate import GeneratorConfig, generate
from punc.linalg import identity, is_psd
from punc.partition import MarginalQuery, build
from punc.quantum import DensityMatrix, Povm, QuantumOperation, identity_operation, maximally_mixed
from punc.sd_punc import SdPunc


def projector_povm(n: int) -> Povm:
    return Povm(tuple(np.diag(np.eye(n)[i]) for i in range(n)))


def two_leaf_projector_circuit() -> SdPunc:
    tree = build((0, 1))
    return SdPunc(tree, {0: projector_povm(2), 1: projector_povm(2)}, {2: identity_operation(4)}, maximally_mixed(4))


def scalar_circuit(p0: float, p1: float) -> SdPunc:
    tree = build((0, 1))
    leaves = {0: Povm(([[p0]], [[1 - p0]])), 1: Povm(([[p1]], [[1 - p1]]))}
    return SdPunc(tree, leaves, {2: identity_operation(1)}, DensityMatrix([[1]]))


def test_random_circuit_is_valid():
    c = generate(GeneratorConfig(seed=42, family="sd_punc"))
    assert sd_punc.validate(c) == []


def test_validate_names_non_unital_node():
    c = generate(GeneratorConfig(seed=42, family="sd_punc"))
    k = c.tree.root
    bad = QuantumOperation(tuple(2 * m for m in c.internal_ops[k].kraus))
    broken = SdPunc(c.tree, c.leaf_povms, {**c.internal_ops, k: bad}, c.rho)
    report = sd_punc.validate(broken)
    assert [(v.kind, v.where) for v in report] == [("non-unital", f"node {k}")]


def test_validate_flags_incomplete_leaf():
    c = two_leaf_projector_circuit()
    leaves = {**c.leaf_povms, 1: Povm((np.diag([1, 0]), np.diag([0, 0.9])))}
    report = sd_punc.validate(SdPunc(c.tree, leaves, c.internal_ops, c.rho))
    assert [v.kind for v in report] == ["povm-sum"]


def test_validate_dimension_problems():
    c = two_leaf_projector_circuit()
    report = sd_punc.validate(SdPunc(c.tree, c.leaf_povms, {2: identity_operation(3)}, c.rho))
    assert "dimension" in {v.kind for v in report}
    report = sd_punc.validate(SdPunc(c.tree, c.leaf_povms, c.internal_ops, maximally_mixed(2)))
    assert [(v.kind, v.where) for v in report] == [("dimension", "rho")]
    report = sd_punc.validate(SdPunc(c.tree, {0: c.leaf_povms[0]}, c.internal_ops, c.rho))
    assert "missing-povm" in {v.kind for v in report}


def test_validate_hadamard_dims():
    tree = build((0, 1), 2, "hadamard")
    leaves = {0: projector_povm(2), 1: Povm((identity(3),) * 1 + (np.zeros((3, 3)),))}
    report = sd_punc.validate(SdPunc(tree, leaves, {2: identity_operation(2)}, maximally_mixed(2)))
    assert "hadamard-dims" in {v.kind for v in report}


def test_scalar_circuit_is_product_of_leaves():
    c = scalar_circuit(0.3, 0.8)
    np.testing.assert_allclose(sd_punc.evaluate(c, (0, 1)), [[0.3 * 0.2]])
    assert sd_punc.probability(c, (1, 0)) == pytest.approx(0.7 * 0.8)


def test_two_leaf_projectors():
    c = two_leaf_projector_circuit()
    for x in oracle.assignments((2, 2)):
        e0, e1 = np.eye(2)[x[0]], np.eye(2)[x[1]]
        np.testing.assert_allclose(sd_punc.evaluate(c, x), np.kron(np.outer(e0, e0), np.outer(e1, e1)))
        assert sd_punc.probability(c, x) == pytest.approx(0.25)


def test_partial_assignment_rejected():
    with pytest.raises(AssignmentError):
        sd_punc.probability(two_leaf_projector_circuit(), (0,))


@pytest.mark.parametrize("seed", range(6))
def test_povm_closure_and_normalization(seed):
    cfg = GeneratorConfig(seed=seed, num_vars=2 + seed % 4, leaf_dim=1 + seed % 3, kraus_count=1 + seed % 3)
    c = generate(cfg)
    total = oracle.operator_sum(lambda x: sd_punc.evaluate(c, x), c.cardinalities)
    np.testing.assert_allclose(total, identity(total.shape[0]), atol=1e-8)
    for x in oracle.assignments(c.cardinalities):
        assert is_psd(sd_punc.evaluate(c, x))
    dist = oracle.enumerate(lambda x: sd_punc.probability(c, x), c.cardinalities)
    assert dist.mass == pytest.approx(1.0, abs=1e-8)


def test_marginal_edge_cases():
    c = generate(GeneratorConfig(seed=3, family="sd_punc"))
    assert sd_punc.marginal(c, MarginalQuery({}, frozenset(range(4)))) == pytest.approx(1.0, abs=1e-10)
    x = (1, 0, 1, 1)
    q = MarginalQuery(dict(enumerate(x)), frozenset())
    assert sd_punc.marginal(c, q) == pytest.approx(sd_punc.probability(c, x), abs=1e-14)
    with pytest.raises(AssignmentError):
        sd_punc.marginal(c, MarginalQuery({0: 1}, frozenset({1})))


def test_marginal_every_partition_matches_oracle():
    c = generate(GeneratorConfig(seed=8, num_vars=5, family="sd_punc"))
    dist = oracle.enumerate(lambda x: sd_punc.probability(c, x), c.cardinalities)
    for mask in range(2**5):
        for x in [(0, 1, 1, 0, 1), (1, 0, 0, 1, 0)]:
            ev = {v: x[v] for v in range(5) if mask >> v & 1}
            m = sd_punc.marginal(c, MarginalQuery.from_evidence(ev, 5))
            assert abs(m - dist.marginal(ev)) <= 1e-9


def test_marginal_is_one_pass(monkeypatch):
    c = generate(GeneratorConfig(seed=1, num_vars=5, family="sd_punc"))
    calls = []
    original = sd_punc.apply_operation
    monkeypatch.setattr(sd_punc, "apply_operation", lambda *a: calls.append(1) or original(*a))
    for ev in ({}, {0: 1}, {0: 1, 2: 0, 4: 1}):
        calls.clear()
        sd_punc.marginal(c, MarginalQuery.from_evidence(ev, 5))
        assert len(calls) == len(list(c.tree.internal()))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**63), st.integers(1, 4), st.sampled_from(["kronecker", "hadamard"]))
def test_random_marginals(seed, num_vars, mode):
    c = generate(GeneratorConfig(seed=seed, num_vars=num_vars, cardinality=3, family="sd_punc", combine_mode=mode))
    dist = oracle.enumerate(lambda x: sd_punc.probability(c, x), c.cardinalities)
    rng = np.random.default_rng(seed)
    ev = {v: int(rng.integers(3)) for v in range(num_vars) if rng.random() < 0.5}
    assert abs(sd_punc.marginal(c, MarginalQuery.from_evidence(ev, num_vars)) - dist.marginal(ev)) <= 1e-9
