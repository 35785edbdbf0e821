"""Seeded random instances of every circuit family, valid by construction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from punc.d_punc import DPunc, LeafUnit, ProductUnit, SumUnit, scalar_shadow
from punc.errors import PuncError
from punc.families import NoisePunc, ProbCircuitPT, PsdCircuit
from punc.linalg import random_semi_unitary
from punc.partition import COMBINE_MODES, HADAMARD, KRONECKER, PartitionCircuit, TreeSpec, build
from punc.quantum import random_density_matrix, random_povm, random_unital_operation
from punc.sd_punc import SdPunc

FAMILIES = ("sd_punc", "psd_circuit", "prob_circuit_pt", "d_punc", "d_prob_circuit", "noise_punc")


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    num_vars: int = 4
    cardinality: int = 2
    leaf_dim: int = 2
    max_internal_dim: int = 4
    kraus_count: int = 2
    family: str = "sd_punc"
    structured: bool = True
    combine_mode: str = KRONECKER

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise PuncError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        for name in ("num_vars", "cardinality", "leaf_dim", "max_internal_dim", "kraus_count"):
            if getattr(self, name) < 1:
                raise PuncError(f"{name} must be positive")
        if self.family not in FAMILIES:
            raise PuncError(f"unknown family {self.family!r}")
        if self.combine_mode not in COMBINE_MODES:
            raise PuncError(f"unknown combine mode {self.combine_mode!r}")


def softmax_rows(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Row-stochastic matrix from normalized exponentials of Gaussian draws."""
    e = np.exp(rng.standard_normal((rows, cols)))
    return e / e.sum(axis=1, keepdims=True)


def random_tree_spec(rng: np.random.Generator, variables: Sequence[int]) -> TreeSpec:
    vs = list(variables)
    if len(vs) == 1:
        return vs[0]
    vs = [vs[i] for i in rng.permutation(len(vs))]
    k = int(rng.integers(1, len(vs)))
    return (random_tree_spec(rng, sorted(vs[:k])), random_tree_spec(rng, sorted(vs[k:])))


def random_tree(rng: np.random.Generator, cfg: GeneratorConfig, mode: Optional[str] = None) -> PartitionCircuit:
    spec = random_tree_spec(rng, range(cfg.num_vars))
    return build(spec, cfg.cardinality, mode or cfg.combine_mode)


def _out_dim(rng: np.random.Generator, cfg: GeneratorConfig, in_dim: int) -> int:
    """Random output dim that a unital map with ``kraus_count`` operators can reach."""
    return int(rng.integers(1, min(cfg.max_internal_dim, cfg.kraus_count * in_dim) + 1))


def random_sd_punc(rng: np.random.Generator, cfg: GeneratorConfig, tree: Optional[PartitionCircuit] = None) -> SdPunc:
    """In Hadamard mode every node keeps ``leaf_dim`` so children always match."""
    tree = tree or random_tree(rng, cfg)
    leaves, ops, dims = {}, {}, {}
    for n in tree.nodes:
        if n.is_leaf:
            leaves[n.id] = random_povm(rng, cfg.leaf_dim, n.cardinality)
            dims[n.id] = cfg.leaf_dim
            continue
        if n.combine_mode == HADAMARD:
            in_dim, out = dims[n.left], cfg.leaf_dim
        else:
            in_dim = dims[n.left] * dims[n.right]
            out = _out_dim(rng, cfg, in_dim)
        ops[n.id] = random_unital_operation(rng, in_dim, out, cfg.kraus_count)
        dims[n.id] = out
    rho = random_density_matrix(rng, dims[tree.root])
    return SdPunc(tree, leaves, ops, rho)


def random_psd_circuit(rng: np.random.Generator, cfg: GeneratorConfig) -> PsdCircuit:
    tree = random_tree(rng, cfg, KRONECKER)
    mats, dims = {}, {}
    for n in tree.nodes:
        if n.is_leaf:
            d = min(cfg.leaf_dim, n.cardinality)
            mats[n.id] = random_semi_unitary(rng, d, n.cardinality)
        else:
            in_dim = dims[n.left] * dims[n.right]
            d = int(rng.integers(1, min(cfg.max_internal_dim, in_dim) + 1))
            mats[n.id] = random_semi_unitary(rng, d, in_dim)
        dims[n.id] = d
    return PsdCircuit(tree, mats, random_density_matrix(rng, dims[tree.root]))


def random_prob_circuit(
    rng: np.random.Generator,
    cfg: GeneratorConfig,
    tree: Optional[PartitionCircuit] = None,
    complete: bool = True,
) -> ProbCircuitPT:
    """
    ``complete=False`` draws a [0, 1]-valued circuit: leaf entries uniform in
    [0, 1] and weight rows scaled to sum to a uniform draw in [0.5, 1].
    """
    tree = tree or random_tree(rng, cfg)
    tables, weights, dims = {}, {}, {}
    for n in tree.nodes:
        if n.is_leaf:
            d = cfg.leaf_dim
            if complete:
                tables[n.id] = softmax_rows(rng, d, n.cardinality).T.copy()
            else:
                tables[n.id] = rng.uniform(0.0, 1.0, (n.cardinality, d))
        else:
            if n.combine_mode == HADAMARD:
                in_dim, d = dims[n.left], cfg.leaf_dim
            else:
                in_dim = dims[n.left] * dims[n.right]
                d = int(rng.integers(1, cfg.max_internal_dim + 1))
            w = softmax_rows(rng, d, in_dim)
            if not complete:
                w = w * rng.uniform(0.5, 1.0, (d, 1))
            weights[n.id] = w
        dims[n.id] = d
    return ProbCircuitPT(tree, tables, weights)


def random_noise_punc(rng: np.random.Generator, cfg: GeneratorConfig) -> NoisePunc:
    """``o`` is a Kronecker-mode circuit; ``q`` shares its tree and uses ``cfg.combine_mode``."""
    tree = random_tree(rng, cfg, KRONECKER)
    o = random_sd_punc(rng, cfg, tree)
    q = random_prob_circuit(rng, cfg, tree.with_modes(cfg.combine_mode), complete=False)
    return NoisePunc(q, o)


# --------------------------------------------------------------------------- DAGs


class _DagBuilder:
    """
    Builds one block of units per scope, caching blocks so they are shared.

    A block over a scope of two or more variables is a sum unit over one
    product per split. Structured circuits use the splits of one fixed tree;
    unstructured ones draw two different splits wherever three or more
    variables allow it.
    """

    def __init__(self, rng: np.random.Generator, cfg: GeneratorConfig):
        self.rng = rng
        self.cfg = cfg
        self.units: dict[int, object] = {}
        self.dims: dict[int, int] = {}
        self.blocks: dict[frozenset[int], int] = {}
        self.vtree: dict[frozenset[int], tuple[frozenset[int], frozenset[int]]] = {}
        if cfg.structured:
            self._record(random_tree_spec(rng, range(cfg.num_vars)))

    def _record(self, spec: TreeSpec) -> frozenset[int]:
        if isinstance(spec, int):
            return frozenset({spec})
        a, b = self._record(spec[0]), self._record(spec[1])
        self.vtree[a | b] = (a, b)
        return a | b

    def _add(self, unit, dim: int) -> int:
        self.units[unit.id] = unit
        self.dims[unit.id] = dim
        return unit.id

    def _splits(self, scope: frozenset[int]) -> list[tuple[frozenset[int], frozenset[int]]]:
        if self.cfg.structured:
            return [self.vtree[scope]]
        vs = sorted(scope)
        count = 2 if len(vs) >= 3 else 1
        seen: list[frozenset[frozenset[int]]] = []
        out = []
        while len(out) < count:
            perm = [vs[i] for i in self.rng.permutation(len(vs))]
            k = int(self.rng.integers(1, len(vs)))
            a, b = frozenset(perm[:k]), frozenset(perm[k:])
            if frozenset({a, b}) in seen:
                continue
            seen.append(frozenset({a, b}))
            out.append((a, b))
        return out

    def block(self, scope: frozenset[int]) -> int:
        if scope in self.blocks:
            return self.blocks[scope]
        cfg = self.cfg
        if len(scope) == 1:
            (v,) = scope
            k = self._add(LeafUnit(len(self.units), v, random_povm(self.rng, cfg.leaf_dim, cfg.cardinality)), cfg.leaf_dim)
        else:
            products = []
            for a, b in self._splits(scope):
                la, lb = self.block(a), self.block(b)
                products.append(self._add(ProductUnit(len(self.units), (la, lb)), self.dims[la] * self.dims[lb]))
            in_min = min(self.dims[p] for p in products)
            out = _out_dim(self.rng, cfg, in_min)
            ops = tuple(random_unital_operation(self.rng, self.dims[p], out, cfg.kraus_count) for p in products)
            weights = tuple(float(w) for w in softmax_rows(self.rng, 1, len(products))[0])
            k = self._add(SumUnit(len(self.units), tuple(products), weights, ops), out)
        self.blocks[scope] = k
        return k


def random_d_punc(rng: np.random.Generator, cfg: GeneratorConfig) -> DPunc:
    b = _DagBuilder(rng, cfg)
    root = b.block(frozenset(range(cfg.num_vars)))
    rho = random_density_matrix(rng, b.dims[root])
    return DPunc(b.units, root, rho, (cfg.cardinality,) * cfg.num_vars)


def generate(cfg: GeneratorConfig):
    rng = np.random.default_rng(cfg.seed)
    if cfg.family == "sd_punc":
        return random_sd_punc(rng, cfg)
    if cfg.family == "psd_circuit":
        return random_psd_circuit(rng, cfg)
    if cfg.family == "prob_circuit_pt":
        return random_prob_circuit(rng, cfg)
    if cfg.family == "noise_punc":
        return random_noise_punc(rng, cfg)
    if cfg.family == "d_punc":
        return random_d_punc(rng, cfg)
    scalar = GeneratorConfig(
        cfg.seed, cfg.num_vars, cfg.cardinality, 1, 1, cfg.kraus_count, "d_punc", cfg.structured
    )
    return scalar_shadow(random_d_punc(rng, scalar))


# --------------------------------------------------------------------------- fixed topologies


def _pair_dag(rng: np.random.Generator, pairs: Sequence[tuple[tuple[int, int], tuple[int, int]]],
              leaf_dim: int = 2, kraus_count: int = 2) -> DPunc:
    """
    Four binary variables; the root mixes one product per entry of ``pairs``,
    each combining two two-variable blocks. Blocks over the same pair of
    variables are shared.
    """
    units: dict[int, object] = {}
    dims: dict[int, int] = {}

    def add(u, d):
        units[u.id] = u
        dims[u.id] = d
        return u.id

    leaves = {v: add(LeafUnit(v, v, random_povm(rng, leaf_dim, 2)), leaf_dim) for v in range(4)}
    blocks: dict[tuple[int, int], int] = {}
    for pair in (p for split in pairs for p in split):
        if pair in blocks:
            continue
        prod = add(ProductUnit(len(units), (leaves[pair[0]], leaves[pair[1]])), leaf_dim**2)
        op = random_unital_operation(rng, leaf_dim**2, leaf_dim, kraus_count)
        blocks[pair] = add(SumUnit(len(units), (prod,), (1.0,), (op,)), leaf_dim)
    products = [add(ProductUnit(len(units), (blocks[a], blocks[b])), leaf_dim**2) for a, b in pairs]
    out = leaf_dim
    ops = tuple(random_unital_operation(rng, leaf_dim**2, out, kraus_count) for _ in products)
    weights = tuple(float(w) for w in softmax_rows(rng, 1, len(products))[0])
    root = add(SumUnit(len(units), tuple(products), weights, ops), out)
    return DPunc(units, root, random_density_matrix(rng, out), (2, 2, 2, 2))


def mixed_split_dpunc(seed: int = 0) -> DPunc:
    """Decomposable but not structured: ``{0,1}x{2,3}`` and ``{0,2}x{1,3}`` under one sum."""
    return _pair_dag(np.random.default_rng(seed), [((0, 1), (2, 3)), ((0, 2), (1, 3))])


def same_split_dpunc(seed: int = 0) -> DPunc:
    """Structured: both root products split ``{0,1,2,3}`` as ``{0,1}x{2,3}``."""
    rng = np.random.default_rng(seed)
    base = _pair_dag(rng, [((0, 1), (2, 3))])
    units = dict(base.units)
    root = units[base.root]
    # second product over fresh blocks with the same split
    nxt = max(units) + 1
    extra = []
    for pair in ((0, 1), (2, 3)):
        prod = ProductUnit(nxt, pair)
        op = random_unital_operation(rng, 4, 2, 2)
        units[nxt] = prod
        units[nxt + 1] = SumUnit(nxt + 1, (nxt,), (1.0,), (op,))
        extra.append(nxt + 1)
        nxt += 2
    units[nxt] = ProductUnit(nxt, tuple(extra))
    ops = (*root.ops, random_unital_operation(rng, 4, 2, 2))
    units[root.id] = SumUnit(root.id, (*root.inputs, nxt), (0.5, 0.5), ops)
    return DPunc(units, root.id, base.rho, base.cardinalities)

