from __future__ import annotations

import pytest

from punc.errors import AssignmentError, StructureError
from punc.partition import (
    HADAMARD,
    MarginalQuery,
    PartitionCircuit,
    PartitionNode,
    all_scopes,
    build,
    depths,
    layers,
    node_correspondence,
    normalize_assignment,
    same_vtree,
    scope_of,
)


def test_build_four_variable_tree():
    c = build(((0, 1), (2, 3)))
    assert len(list(c.leaves())) == 4
    assert len(list(c.internal())) == 3
    assert c.root == len(c.nodes) - 1
    assert c.to_spec() == ((0, 1), (2, 3))
    assert layers(c) == [[6], [4, 5], [0, 1, 2, 3]]


def test_build_single_variable():
    c = build(0, 3)
    assert c.root == 0 and c.nodes[0].is_leaf
    assert c.cardinalities == (3,)


def test_build_errors():
    with pytest.raises(StructureError):
        build(((0, 1), (0, 2)))
    with pytest.raises(StructureError):
        build(())
    with pytest.raises(StructureError):
        build((0, 1, 2))
    with pytest.raises(StructureError):
        build((0, 2))
    with pytest.raises(StructureError):
        build((0, 1), [2])


def test_scopes():
    c = build(((0, 1), (2, 3)))
    assert scope_of(c, c.leaf_of(2).id) == {2}
    assert scope_of(c, c.root) == {0, 1, 2, 3}
    assert scope_of(c, c.nodes[c.root].left) == {0, 1}
    for n in c.internal():
        left, right = scope_of(c, n.left), scope_of(c, n.right)
        assert not left & right and left | right == scope_of(c, n.id)
    assert all_scopes(c) == [scope_of(c, i) for i in range(len(c.nodes))]
    with pytest.raises(StructureError):
        scope_of(c, 99)


def test_ragged_layers():
    c = build((0, (1, (2, 3))))
    assert depths(c) == [1, 2, 3, 3, 2, 1, 0]
    assert [len(layer) for layer in layers(c)] == [1, 2, 2, 2]


def test_same_vtree():
    a = build(((0, 1), (2, 3)))
    assert same_vtree(a, a)
    assert not same_vtree(a, build(((0, 2), (1, 3))))
    assert same_vtree(a, build(((3, 2), (1, 0))))
    assert not same_vtree(a, build(((0, 1), (2, 3)), 3))
    b = build(((2, 3), (0, 1)))
    corr = node_correspondence(a, b)
    assert all(scope_of(a, i) == scope_of(b, j) for i, j in corr.items())
    with pytest.raises(StructureError):
        node_correspondence(a, build(((0, 2), (1, 3))))


def test_with_modes():
    c = build((0, (1, 2)))
    h = c.with_modes(HADAMARD)
    assert {n.combine_mode for n in h.internal()} == {HADAMARD}
    mixed = c.with_modes({c.root: HADAMARD})
    assert mixed.nodes[c.root].combine_mode == HADAMARD
    assert mixed.nodes[3].combine_mode == "kronecker"


def test_tree_invariants_checked():
    leaf = PartitionNode(0, "leaf", variable=0, cardinality=2)
    with pytest.raises(StructureError):
        PartitionCircuit((leaf, PartitionNode(1, "leaf", variable=0, cardinality=2)), 1, (2,))
    with pytest.raises(StructureError):
        PartitionCircuit((leaf,), 0, (2, 2))
    with pytest.raises(StructureError):
        PartitionCircuit((leaf, PartitionNode(1, "internal", left=0, right=0)), 1, (2,))
    with pytest.raises(StructureError):
        PartitionCircuit((PartitionNode(0, "leaf", variable=0, cardinality=3),), 0, (2,))


def test_normalize_assignment():
    assert normalize_assignment([1, 0], (2, 3)) == (1, 0)
    assert normalize_assignment({1: 2, 0: 0}, (2, 3)) == (0, 2)
    with pytest.raises(AssignmentError):
        normalize_assignment([1], (2, 3))
    with pytest.raises(AssignmentError):
        normalize_assignment([1, 3], (2, 3))
    with pytest.raises(AssignmentError):
        normalize_assignment({0: 1}, (2, 3))


def test_marginal_query():
    q = MarginalQuery.from_evidence({1: 0}, 3)
    assert q.marginalized == {0, 2}
    q.check((2, 2, 2))
    with pytest.raises(AssignmentError):
        MarginalQuery({0: 1}, frozenset({0, 1, 2})).check((2, 2, 2))
    with pytest.raises(AssignmentError):
        MarginalQuery({0: 1}, frozenset({1})).check((2, 2, 2))
    with pytest.raises(AssignmentError):
        MarginalQuery({0: 5}, frozenset({1})).check((2, 2))
