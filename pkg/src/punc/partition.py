"""
Binary partition trees over discrete variables.

A tree spec is a nested structure of pairs with variable indices at the
leaves, e.g. ``((0, 1), (2, 3))``. Node ids are dense: leaves come first in
left-to-right order, internal nodes follow in post-order, so the root is the
last node and a single forward pass over ``nodes`` evaluates the circuit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence, Union

from punc.errors import AssignmentError, StructureError

KRONECKER = "kronecker"
HADAMARD = "hadamard"
COMBINE_MODES = (KRONECKER, HADAMARD)

TreeSpec = Union[int, Sequence["TreeSpec"]]
AssignmentLike = Union[Sequence[int], Mapping[int, int]]


@dataclass(frozen=True)
class PartitionNode:
    id: int
    kind: str
    variable: Optional[int] = None
    cardinality: Optional[int] = None
    left: Optional[int] = None
    right: Optional[int] = None
    combine_mode: str = KRONECKER

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"


@dataclass(frozen=True)
class PartitionCircuit:
    nodes: tuple[PartitionNode, ...]
    root: int
    cardinalities: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_tree(self)

    @property
    def num_vars(self) -> int:
        return len(self.cardinalities)

    def node(self, node_id: int) -> PartitionNode:
        if not 0 <= node_id < len(self.nodes):
            raise StructureError(f"unknown node id {node_id}")
        return self.nodes[node_id]

    def leaves(self) -> Iterator[PartitionNode]:
        return (n for n in self.nodes if n.is_leaf)

    def internal(self) -> Iterator[PartitionNode]:
        return (n for n in self.nodes if not n.is_leaf)

    def leaf_of(self, variable: int) -> PartitionNode:
        for n in self.leaves():
            if n.variable == variable:
                return n
        raise StructureError(f"no leaf for variable {variable}")

    def parent_map(self) -> dict[int, int]:
        return {c: n.id for n in self.internal() for c in (n.left, n.right)}

    def to_spec(self, node_id: Optional[int] = None) -> TreeSpec:
        n = self.node(self.root if node_id is None else node_id)
        if n.is_leaf:
            return n.variable
        return (self.to_spec(n.left), self.to_spec(n.right))

    def with_modes(self, modes: Union[str, Mapping[int, str]]) -> "PartitionCircuit":
        """Copy with combine modes replaced (one mode for all, or per internal id)."""
        nodes = []
        for n in self.nodes:
            if n.is_leaf:
                nodes.append(n)
                continue
            mode = modes if isinstance(modes, str) else modes.get(n.id, n.combine_mode)
            nodes.append(PartitionNode(n.id, n.kind, left=n.left, right=n.right, combine_mode=mode))
        return PartitionCircuit(tuple(nodes), self.root, self.cardinalities)


def _check_tree(c: PartitionCircuit) -> None:
    if not c.nodes:
        raise StructureError("empty partition circuit")
    if c.root != len(c.nodes) - 1:
        raise StructureError("root must be the last node")
    parents: dict[int, int] = {}
    seen_vars: set[int] = set()
    for i, n in enumerate(c.nodes):
        if n.id != i:
            raise StructureError(f"node ids must be dense and ordered, found {n.id} at {i}")
        if n.is_leaf:
            if n.variable is None or not 0 <= n.variable < len(c.cardinalities):
                raise StructureError(f"leaf {i} has invalid variable {n.variable}")
            if n.variable in seen_vars:
                raise StructureError(f"variable {n.variable} appears in more than one leaf")
            if n.cardinality != c.cardinalities[n.variable]:
                raise StructureError(f"leaf {i} cardinality disagrees with the variable table")
            seen_vars.add(n.variable)
        elif n.kind == "internal":
            if n.combine_mode not in COMBINE_MODES:
                raise StructureError(f"node {i} has unknown combine mode {n.combine_mode!r}")
            for child in (n.left, n.right):
                if child is None or not 0 <= child < i:
                    raise StructureError(f"node {i} has child {child} that is not an earlier node")
                if child in parents:
                    raise StructureError(f"node {child} has more than one parent")
                parents[child] = i
        else:
            raise StructureError(f"node {i} has unknown kind {n.kind!r}")
    if len(parents) != len(c.nodes) - 1:
        raise StructureError("partition circuit is not a single tree")
    if seen_vars != set(range(len(c.cardinalities))):
        missing = sorted(set(range(len(c.cardinalities))) - seen_vars)
        raise StructureError(f"variables {missing} have no leaf")


def _leaf_order(spec: TreeSpec, out: list[int]) -> None:
    if isinstance(spec, int):
        out.append(spec)
        return
    if len(spec) == 1:
        _leaf_order(spec[0], out)
        return
    if len(spec) != 2:
        raise StructureError(f"internal nodes must be binary, got {len(spec)} children")
    _leaf_order(spec[0], out)
    _leaf_order(spec[1], out)


def build(
    spec: TreeSpec,
    cardinalities: Union[int, Sequence[int]] = 2,
    combine_mode: str = KRONECKER,
) -> PartitionCircuit:
    """
    Build a partition circuit from nested pairs of variable indices.

    ``cardinalities`` is either one value shared by all variables or a
    sequence indexed by variable.
    """
    if spec is None or (not isinstance(spec, int) and len(spec) == 0):
        raise StructureError("empty tree spec")
    order: list[int] = []
    _leaf_order(spec, order)
    if len(set(order)) != len(order):
        dup = sorted({v for v in order if order.count(v) > 1})
        raise StructureError(f"duplicate variables {dup} in tree spec")
    num_vars = max(order) + 1
    if sorted(order) != list(range(num_vars)):
        raise StructureError(f"variables must be 0..{num_vars - 1}, got {sorted(order)}")
    if isinstance(cardinalities, int):
        cards = (cardinalities,) * num_vars
    else:
        cards = tuple(int(k) for k in cardinalities)
    if len(cards) != num_vars or any(k < 1 for k in cards):
        raise StructureError(f"need {num_vars} positive cardinalities, got {cards}")

    nodes: list[PartitionNode] = [
        PartitionNode(i, "leaf", variable=v, cardinality=cards[v]) for i, v in enumerate(order)
    ]
    leaf_ids = {v: i for i, v in enumerate(order)}

    def walk(s: TreeSpec) -> int:
        if isinstance(s, int):
            return leaf_ids[s]
        if len(s) == 1:
            return walk(s[0])
        left = walk(s[0])
        right = walk(s[1])
        nodes.append(
            PartitionNode(len(nodes), "internal", left=left, right=right, combine_mode=combine_mode)
        )
        return len(nodes) - 1

    root = walk(spec)
    return PartitionCircuit(tuple(nodes), root, cards)


def scope_of(c: PartitionCircuit, node_id: int) -> frozenset[int]:
    n = c.node(node_id)
    if n.is_leaf:
        return frozenset({n.variable})
    return scope_of(c, n.left) | scope_of(c, n.right)


def all_scopes(c: PartitionCircuit) -> list[frozenset[int]]:
    scopes: list[frozenset[int]] = []
    for n in c.nodes:
        scopes.append(frozenset({n.variable}) if n.is_leaf else scopes[n.left] | scopes[n.right])
    return scopes


def depths(c: PartitionCircuit) -> list[int]:
    """Distance of every node from the root. Layers of unbalanced trees are ragged."""
    d = [0] * len(c.nodes)
    for n in reversed(c.nodes):
        if not n.is_leaf:
            d[n.left] = d[n.right] = d[n.id] + 1
    return d


def layers(c: PartitionCircuit) -> list[list[int]]:
    d = depths(c)
    out: list[list[int]] = [[] for _ in range(max(d) + 1)]
    for i, k in enumerate(d):
        out[k].append(i)
    return out


def _canonical(c: PartitionCircuit, node_id: int) -> tuple:
    n = c.nodes[node_id]
    if n.is_leaf:
        return ("leaf", n.variable, n.cardinality)
    return ("node",) + tuple(sorted([_canonical(c, n.left), _canonical(c, n.right)]))


def same_vtree(a: PartitionCircuit, b: PartitionCircuit) -> bool:
    """Isomorphic trees (children unordered) with the same variables at the leaves."""
    return a.cardinalities == b.cardinalities and _canonical(a, a.root) == _canonical(b, b.root)


def node_correspondence(a: PartitionCircuit, b: PartitionCircuit) -> dict[int, int]:
    """Map each node of ``a`` to the node of ``b`` with the same scope."""
    if not same_vtree(a, b):
        raise StructureError("trees are not the same vtree")
    by_scope = {s: i for i, s in enumerate(all_scopes(b))}
    return {i: by_scope[s] for i, s in enumerate(all_scopes(a))}


def normalize_assignment(x: AssignmentLike, cardinalities: Sequence[int]) -> tuple[int, ...]:
    """Total assignment as a tuple indexed by variable; raises on partial/out-of-range input."""
    n = len(cardinalities)
    if isinstance(x, Mapping):
        if set(x) != set(range(n)):
            raise AssignmentError(f"assignment must cover variables 0..{n - 1}, got {sorted(x)}")
        values = tuple(int(x[i]) for i in range(n))
    else:
        values = tuple(int(v) for v in x)
        if len(values) != n:
            raise AssignmentError(f"assignment has {len(values)} values for {n} variables")
    for i, (v, k) in enumerate(zip(values, cardinalities)):
        if not 0 <= v < k:
            raise AssignmentError(f"value {v} of variable {i} outside [0, {k})")
    return values


@dataclass(frozen=True)
class MarginalQuery:
    evidence: Mapping[int, int]
    marginalized: frozenset[int]

    @classmethod
    def from_evidence(cls, evidence: Mapping[int, int], num_vars: int) -> "MarginalQuery":
        return cls(dict(evidence), frozenset(range(num_vars)) - set(evidence))

    def check(self, cardinalities: Sequence[int]) -> None:
        n = len(cardinalities)
        ev = set(self.evidence)
        if ev & self.marginalized or ev | self.marginalized != set(range(n)):
            raise AssignmentError("evidence and marginalized variables must partition the variables")
        for v, val in self.evidence.items():
            if not 0 <= val < cardinalities[v]:
                raise AssignmentError(f"value {val} of variable {v} outside [0, {cardinalities[v]})")
