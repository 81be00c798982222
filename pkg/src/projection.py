"""Projections of trees on [n] onto k-leaf trees, and their conditional laws.

Every leaf j of t is collapsed onto the edge B_j ∩ [k] of the shape t ∩ [k],
where B_j is the lowest ancestor edge of {j} (possibly {j} itself) that meets
[k]. Keeping the collapsed label sets gives a ``CollapsedKTree``; keeping only
their sizes gives a ``DecoratedKTree``; recording the fringe-subtree masses
along each internal edge, root first, gives a ``BeadedKTree``.

The subtree collapsed onto an edge, rank-relabelled, is its internal
structure. For an internal edge B the vertex of B itself becomes an extra
leaf labelled 1.
"""

import itertools
import json
import logging
from collections.abc import Callable, Hashable, Iterator, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any, Literal

from .distributions import FinitePmf, RngStream, as_alpha, compositions, dm_pmf, weak_compositions
from .exceptions import ProjectionRangeError, TreeError
from .growth import GrowthConfig, growth_law, sample_tree
from .tree_core import (
    Edge,
    Tree,
    edge_key,
    enumerate_trees,
    label_bit,
    labels_of,
    mask_of,
    parse_edge_key,
    rank_relabel,
)

logger = logging.getLogger(__name__)

ProjectionKind = Literal["mass", "star", "beads"]

HALF = Fraction(1, 2)


def _prefix_mask(k: int) -> Edge:
    return (1 << k) - 1


def _shape_from_json(raw: Any) -> Tree:
    return Tree.from_edges(raw)


@dataclass(frozen=True)
class DecoratedKTree:
    """A k-tree shape with integer masses on its edges.

    Attributes:
        shape: Tree on k labels
        masses: (edge, mass) pairs in canonical edge order; leaf edges carry
            x_j >= 1, internal edges y_B >= 0
    """

    shape: Tree
    masses: tuple[tuple[Edge, int], ...]

    def __post_init__(self) -> None:
        edges = tuple(edge for edge, _ in self.masses)
        if edges != self.shape.sorted_edges:
            raise TreeError("masses must be listed for every edge in canonical order")
        for edge, mass in self.masses:
            floor = 1 if edge.bit_count() == 1 else 0
            if mass < floor:
                raise TreeError(
                    f"edge {edge_key(edge)} has mass {mass} below {floor}",
                    {"edge": edge_key(edge), "mass": mass},
                )

    @classmethod
    def build(cls, shape: Tree, masses: Mapping[Edge, int]) -> "DecoratedKTree":
        try:
            return cls(shape, tuple((edge, masses[edge]) for edge in shape.sorted_edges))
        except KeyError as exc:
            raise TreeError(f"no mass given for edge {edge_key(exc.args[0])}") from None

    @cached_property
    def mass_map(self) -> dict[Edge, int]:
        return dict(self.masses)

    @property
    def k(self) -> int:
        return self.shape.n_leaves

    @cached_property
    def total(self) -> int:
        return sum(mass for _, mass in self.masses)

    def mass(self, edge: Edge) -> int:
        return self.mass_map[edge]

    def x(self, j: int) -> int:
        return self.mass_map[label_bit(j)]

    def y(self, edge: Edge) -> int:
        return self.mass_map[edge]

    def with_masses(self, updates: Mapping[Edge, int]) -> "DecoratedKTree":
        merged = dict(self.mass_map)
        merged.update(updates)
        return DecoratedKTree.build(self.shape, merged)

    def to_json(self) -> dict[str, Any]:
        return {
            "shape": self.shape.to_lists(),
            "x": {str(j): self.x(j) for j in self.shape.label_list},
            "y": {edge_key(e): self.y(e) for e in self.shape.internal_edges},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "DecoratedKTree":
        shape = _shape_from_json(data["shape"])
        masses = {label_bit(int(j)): int(v) for j, v in data["x"].items()}
        masses.update({parse_edge_key(e): int(v) for e, v in data["y"].items()})
        return cls.build(shape, masses)


@dataclass(frozen=True)
class CollapsedKTree:
    """A k-tree shape whose edges carry the label sets collapsed onto them.

    Attributes:
        shape: Tree on [k]
        blocks: (edge, block bitmask) pairs in canonical edge order
    """

    shape: Tree
    blocks: tuple[tuple[Edge, Edge], ...]

    def __post_init__(self) -> None:
        if tuple(edge for edge, _ in self.blocks) != self.shape.sorted_edges:
            raise TreeError("blocks must be listed for every edge in canonical order")
        union = 0
        for edge, block in self.blocks:
            if union & block:
                raise TreeError("blocks must be disjoint", {"edge": edge_key(edge)})
            union |= block
            if edge.bit_count() == 1 and not block & edge:
                raise TreeError(f"leaf {edge_key(edge)} missing from its own block")
        if union != _prefix_mask(union.bit_count()):
            raise TreeError("blocks must partition 1..n", {"labels": list(labels_of(union))})

    @classmethod
    def build(cls, shape: Tree, blocks: Mapping[Edge, Edge]) -> "CollapsedKTree":
        return cls(shape, tuple((edge, blocks.get(edge, 0)) for edge in shape.sorted_edges))

    @cached_property
    def block_map(self) -> dict[Edge, Edge]:
        return dict(self.blocks)

    @property
    def n(self) -> int:
        return sum(block.bit_count() for _, block in self.blocks)

    def block(self, edge: Edge) -> Edge:
        return self.block_map[edge]

    def sizes(self) -> DecoratedKTree:
        """Forget block contents, keeping their sizes."""
        return DecoratedKTree(
            self.shape, tuple((edge, block.bit_count()) for edge, block in self.blocks)
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "shape": self.shape.to_lists(),
            "x": {str(j): list(labels_of(self.block(label_bit(j)))) for j in self.shape.label_list},
            "y": {edge_key(e): list(labels_of(self.block(e))) for e in self.shape.internal_edges},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "CollapsedKTree":
        shape = _shape_from_json(data["shape"])
        blocks = {label_bit(int(j)): mask_of(v) for j, v in data["x"].items()}
        blocks.update({parse_edge_key(e): mask_of(v) for e, v in data["y"].items()})
        return cls.build(shape, blocks)


@dataclass(frozen=True)
class BeadedKTree:
    """A k-tree shape with leaf masses and a string of beads on each internal edge.

    Attributes:
        shape: Tree on [k]
        x: Leaf masses in label order
        beads: (internal edge, composition) pairs in canonical edge order,
            beads listed root first
    """

    shape: Tree
    x: tuple[int, ...]
    beads: tuple[tuple[Edge, tuple[int, ...]], ...]

    def __post_init__(self) -> None:
        if len(self.x) != self.shape.n_leaves or any(v < 1 for v in self.x):
            raise TreeError("leaf masses must be positive, one per leaf")
        if tuple(edge for edge, _ in self.beads) != self.shape.internal_edges:
            raise TreeError("beads must be listed for every internal edge in canonical order")
        if any(b < 1 for _, string in self.beads for b in string):
            raise TreeError("bead masses must be positive")

    @property
    def n(self) -> int:
        return sum(self.x) + sum(sum(string) for _, string in self.beads)

    @cached_property
    def bead_map(self) -> dict[Edge, tuple[int, ...]]:
        return dict(self.beads)

    def collapse(self) -> DecoratedKTree:
        """Sum each string of beads into the mass of its edge."""
        masses = {label_bit(j): v for j, v in zip(self.shape.label_list, self.x, strict=True)}
        masses.update({edge: sum(string) for edge, string in self.beads})
        return DecoratedKTree.build(self.shape, masses)

    def to_json(self) -> dict[str, Any]:
        return {
            "shape": self.shape.to_lists(),
            "x": {str(j): v for j, v in zip(self.shape.label_list, self.x, strict=True)},
            "y": {edge_key(e): list(string) for e, string in self.beads},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "BeadedKTree":
        shape = _shape_from_json(data["shape"])
        x = tuple(int(data["x"][str(j)]) for j in shape.label_list)
        strings = {parse_edge_key(e): tuple(v) for e, v in data["y"].items()}
        return cls(shape, x, tuple((e, strings.get(e, ())) for e in shape.internal_edges))


@dataclass(frozen=True)
class InternalStructure:
    """Rank-relabelled subtree collapsed onto one edge of the k-tree."""

    tree: Tree
    external: bool

    @property
    def edge_kind(self) -> str:
        return "external" if self.external else "internal"


KTree = DecoratedKTree | CollapsedKTree | BeadedKTree


def state_to_json(state: Tree | KTree) -> str:
    """Compact JSON text for any chain state (trees use their edge list)."""
    payload: Any = state.to_lists() if isinstance(state, Tree) else state.to_json()
    return json.dumps(payload, separators=(",", ":"))


def _check_k(t: Tree, k: int) -> Edge:
    if not 1 <= k <= t.n_leaves:
        raise ProjectionRangeError(f"k={k} outside 1..{t.n_leaves}", {"k": k, "n": t.n_leaves})
    return _prefix_mask(k)


def _collapse(t: Tree, keep: Edge) -> tuple[Tree, dict[Edge, Edge]]:
    shape = t.restrict(keep)
    blocks = dict.fromkeys(shape.edges, 0)
    for j in t.label_list:
        edge = label_bit(j)
        while not edge & keep:
            edge = t.parent(edge)
        blocks[edge & keep] |= label_bit(j)
    return shape, blocks


def _chains(t: Tree, keep: Edge) -> dict[Edge, list[Edge]]:
    """Edges of t grouped by their trace on ``keep``, smallest first."""
    chains: dict[Edge, list[Edge]] = {}
    for edge in t.edges:
        trace = edge & keep
        if trace:
            chains.setdefault(trace, []).append(edge)
    for chain in chains.values():
        chain.sort(key=int.bit_count)
    return chains


def project_mass_onto(t: Tree, keep: Edge) -> DecoratedKTree:
    """Decorated projection onto an arbitrary nonempty label subset, labels kept."""
    if not keep or keep & ~t.labels:
        raise ProjectionRangeError("projection labels must be a nonempty subset of the leaves")
    shape, blocks = _collapse(t, keep)
    return DecoratedKTree.build(shape, {edge: block.bit_count() for edge, block in blocks.items()})


def project_mass(t: Tree, k: int) -> DecoratedKTree:
    """Decorated k-tree of t: the shape t ∩ [k] with collapsed leaf counts."""
    return project_mass_onto(t, _check_k(t, k))


def project_collapsed(t: Tree, k: int) -> CollapsedKTree:
    """Collapsed k-tree of t: the shape t ∩ [k] with the collapsed label sets."""
    shape, blocks = _collapse(t, _check_k(t, k))
    return CollapsedKTree.build(shape, blocks)


def project_beads(t: Tree, k: int) -> BeadedKTree:
    """Bead-string k-tree of t.

    Along an internal edge B of the shape, the edges S of t with S ∩ [k] = B
    form a chain S_1 ⊂ ... ⊂ S_L; S_i ∖ S_{i-1} is the fringe subtree at the
    i-th spine vertex and its size is a bead.
    """
    keep = _check_k(t, k)
    shape = t.restrict(keep)
    chains = _chains(t, keep)
    x = tuple(chains[label_bit(j)][-1].bit_count() for j in shape.label_list)
    beads = []
    for edge in shape.internal_edges:
        chain = chains[edge]
        fringe = [chain[i].bit_count() - chain[i - 1].bit_count() for i in range(1, len(chain))]
        beads.append((edge, tuple(reversed(fringe))))
    return BeadedKTree(shape, x, tuple(beads))


def internal_structures(t: Tree, k: int) -> dict[Edge, InternalStructure]:
    """Internal structure of the decorated k-tree on each of its edges."""
    keep = _check_k(t, k)
    structures = {}
    for trace, chain in _chains(t, keep).items():
        bottom, top = chain[0], chain[-1]
        external = trace.bit_count() == 1
        anchor = trace if external else label_bit(1)
        edges = set()
        for edge in t.edges:
            if edge & ~top:
                continue
            overlap = edge & bottom
            if not overlap:
                edges.add(edge)
            elif overlap == bottom:
                edges.add((edge & ~bottom) | anchor)
        labels = (top & ~bottom) | anchor
        structures[trace] = InternalStructure(rank_relabel(Tree(labels, frozenset(edges))), external)
    return structures


def reassemble(c: CollapsedKTree, structures: Mapping[Edge, InternalStructure | Tree]) -> Tree:
    """Glue internal structures back onto a collapsed k-tree.

    Inverse of ``(project_collapsed, internal_structures)``.

    Raises:
        TreeError: If a structure has the wrong number of leaves
    """
    shape = c.shape
    edges: set[Edge] = set()
    for edge in shape.sorted_edges:
        entry = structures[edge]
        structure = entry.tree if isinstance(entry, InternalStructure) else entry
        block_labels = labels_of(c.block(edge))
        external = edge.bit_count() == 1
        expected = len(block_labels) if external else len(block_labels) + 1
        if structure.n_leaves != expected or structure.labels != _prefix_mask(expected):
            raise TreeError(
                f"structure on {edge_key(edge)} needs leaves 1..{expected}",
                {"edge": edge_key(edge), "leaves": structure.n_leaves},
            )
        if external:
            targets = [label_bit(j) for j in block_labels]
        else:
            below = 0
            for other, block in c.blocks:
                if other != edge and other & edge == other:
                    below |= block
            targets = [below] + [label_bit(j) for j in block_labels]
        for part in structure.edges:
            glued = 0
            for rank in labels_of(part):
                glued |= targets[rank - 1]
            edges.add(glued)
    return Tree.from_masks(edges)


_PROJECTORS: dict[str, Callable[[Tree, int], Hashable]] = {
    "mass": project_mass,
    "star": project_collapsed,
    "beads": project_beads,
}


def projector(kind: ProjectionKind) -> Callable[[Tree, int], Hashable]:
    try:
        return _PROJECTORS[kind]
    except KeyError:
        raise ProjectionRangeError(f"unknown projection {kind!r}") from None


@lru_cache(maxsize=32)
def lambda_rows(kind: ProjectionKind, n: int, k: int, alpha: Fraction = HALF) -> dict[Hashable, FinitePmf[Tree]]:
    """Conditional laws q_{n,α}(· | projection = y) for every reachable y."""
    project = projector(kind)
    law = growth_law(n, GrowthConfig(alpha))
    rows = law.fibers(lambda t: project(t, k))
    logger.info("Built %s conditional laws: n=%d k=%d, %d states", kind, n, k, len(rows))
    return rows


def _lambda(kind: ProjectionKind, state: KTree, n: int, k: int, alpha: Fraction) -> FinitePmf[Tree]:
    rows = lambda_rows(kind, n, k, Fraction(alpha))
    try:
        return rows[state]
    except KeyError:
        raise ProjectionRangeError("state has no preimage of positive probability") from None


def lambda_star(c: CollapsedKTree, alpha: Fraction = HALF) -> FinitePmf[Tree]:
    """q_{n,α} conditioned on the collapsed projection."""
    return _lambda("star", c, c.n, c.shape.n_leaves, alpha)


def lambda_bullet(d: DecoratedKTree, alpha: Fraction = HALF) -> FinitePmf[Tree]:
    """q_{n,α} conditioned on the decorated projection."""
    return _lambda("mass", d, d.total, d.k, alpha)


def lambda_beads(b: BeadedKTree, alpha: Fraction = HALF) -> FinitePmf[Tree]:
    """q_{n,α} conditioned on the bead-string projection."""
    return _lambda("beads", b, b.n, b.shape.n_leaves, alpha)


def sample_lambda_star(c: CollapsedKTree, alpha: Fraction, rng: RngStream) -> Tree:
    """Draw from lambda_star by growing each internal structure independently.

    External edges get a q_{μ,α} tree, internal edges a modified q̃_{μ+1,α} tree.
    """
    plain = GrowthConfig(alpha)
    modified = GrowthConfig(alpha, modified=True)
    structures = {}
    for edge, block in c.blocks:
        size = block.bit_count()
        if edge.bit_count() == 1:
            structures[edge] = sample_tree(size, plain, rng)
        else:
            structures[edge] = sample_tree(size + 1, modified, rng)
    return reassemble(c, structures)


def enumerate_decorated(n: int, k: int) -> Iterator[DecoratedKTree]:
    """All decorated k-trees of mass n: shapes × weak compositions, canonical order."""
    if not 1 <= k <= n:
        raise ProjectionRangeError(f"k={k} outside 1..{n}", {"k": k, "n": n})
    for shape in enumerate_trees(range(1, k + 1)):
        edges = shape.sorted_edges
        for extra in weak_compositions(n - k, len(edges)):
            yield DecoratedKTree(
                shape,
                tuple(
                    (edge, extra[idx] + (1 if edge.bit_count() == 1 else 0))
                    for idx, edge in enumerate(edges)
                ),
            )


def enumerate_collapsed(n: int, k: int) -> Iterator[CollapsedKTree]:
    """All collapsed k-trees on [n]: each label above k lands on some edge."""
    if not 1 <= k <= n:
        raise ProjectionRangeError(f"k={k} outside 1..{n}", {"k": k, "n": n})
    for shape in enumerate_trees(range(1, k + 1)):
        edges = shape.sorted_edges
        for placement in itertools.product(range(len(edges)), repeat=n - k):
            blocks = {edge: (edge if edge.bit_count() == 1 else 0) for edge in edges}
            for offset, idx in enumerate(placement):
                blocks[edges[idx]] |= label_bit(k + 1 + offset)
            yield CollapsedKTree.build(shape, blocks)


def enumerate_beaded(n: int, k: int) -> Iterator[BeadedKTree]:
    """All bead-string k-trees of mass n."""
    for decorated in enumerate_decorated(n, k):
        shape = decorated.shape
        x = tuple(decorated.x(j) for j in shape.label_list)
        internal = shape.internal_edges
        options = [list(compositions(decorated.y(edge))) for edge in internal]
        for strings in itertools.product(*options):
            yield BeadedKTree(shape, x, tuple(zip(internal, strings, strict=True)))


def enumerate_states(kind: ProjectionKind, n: int, k: int) -> list[Hashable]:
    if kind == "mass":
        return list(enumerate_decorated(n, k))
    if kind == "star":
        return list(enumerate_collapsed(n, k))
    if kind == "beads":
        return list(enumerate_beaded(n, k))
    raise ProjectionRangeError(f"unknown projection {kind!r}")


def decorated_marginal_pmf(n: int, k: int, alpha: Fraction = HALF) -> FinitePmf[DecoratedKTree]:
    """Law of the decorated projection of a q_{n,α} tree, built compositionally.

    The shape follows q_{k,α}; the n-k extra units are split over the 2k-1
    edges by a Dirichlet-multinomial with weight 1-α per leaf edge and α per
    internal edge, and each leaf edge gets one more unit.
    """
    alpha = as_alpha(alpha, open_interval=True)
    if not 1 <= k <= n:
        raise ProjectionRangeError(f"k={k} outside 1..{n}", {"k": k, "n": n})
    outcomes = []
    for shape, q in growth_law(k, GrowthConfig(alpha)).items():
        edges = shape.sorted_edges
        leaf = [edge.bit_count() == 1 for edge in edges]
        weights = [1 - alpha if is_leaf else alpha for is_leaf in leaf]
        for counts, p in dm_pmf(n - k, weights).items():
            masses = tuple(
                (edge, count + int(is_leaf)) for edge, count, is_leaf in zip(edges, counts, leaf, strict=True)
            )
            outcomes.append((DecoratedKTree(shape, masses), q * p))
    return FinitePmf.from_weights(outcomes)
