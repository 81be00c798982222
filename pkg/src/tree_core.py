"""Rooted binary trees with labelled leaves.

A tree on the label set A is stored as the collection of its edges, each edge
being the set of leaf labels below it. Edges are bitmasks over the label
universe 1..64 (label j is bit j-1), so nesting and disjointness tests are a
single ``&``. The root edge is A itself and every singleton {j} is an
external edge.

Canonical edge order is (cardinality, then sorted labels); it drives
enumeration order, the JSON encoding and every "first counterexample" in the
verification reports.
"""

import json
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import prod
from typing import NamedTuple

from .config import get_settings
from .constants import MAX_LABEL
from .exceptions import (
    DuplicateLabelError,
    InvalidTreeError,
    LabelUniverseError,
    StateSpaceTooLargeError,
    TreeError,
    TreeFormatError,
    UnknownEdgeError,
    UnknownLabelError,
)

logger = logging.getLogger(__name__)

Edge = int
UnlabeledShape = tuple["UnlabeledShape", ...]


def label_bit(j: int) -> int:
    """Return the bitmask of the singleton edge {j}.

    Raises:
        LabelUniverseError: If j is outside 1..64
    """
    if not 1 <= j <= MAX_LABEL:
        raise LabelUniverseError(j, MAX_LABEL)
    return 1 << (j - 1)


def mask_of(labels: Iterable[int]) -> Edge:
    """Pack labels into an edge bitmask."""
    mask = 0
    for j in labels:
        mask |= label_bit(j)
    return mask


def labels_of(mask: Edge) -> tuple[int, ...]:
    """Unpack an edge bitmask into its sorted labels."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length())
        mask ^= low
    return tuple(out)


def min_label(mask: Edge) -> int:
    return (mask & -mask).bit_length()


def edge_sort_key(mask: Edge) -> tuple[int, tuple[int, ...]]:
    return (mask.bit_count(), labels_of(mask))


def edge_key(mask: Edge) -> str:
    """Serialize an edge as its sorted labels joined by "-"."""
    return "-".join(str(j) for j in labels_of(mask))


def parse_edge_key(text: str) -> Edge:
    """Inverse of edge_key.

    Raises:
        TreeFormatError: If the key is not a dash-separated list of labels
    """
    try:
        labels = [int(part) for part in text.split("-")]
    except ValueError:
        raise TreeFormatError(f"bad edge key {text!r}") from None
    return mask_of(labels)


def shift_down(mask: Edge, removed: int) -> Edge:
    """Relabel j -> j-1 for every label j > removed (label ``removed`` must be absent)."""
    below = mask & ((1 << (removed - 1)) - 1)
    above = (mask >> removed) << (removed - 1)
    return below | above


def relabel_mask(mask: Edge, mapping: Mapping[int, int]) -> Edge:
    return mask_of(mapping.get(j, j) for j in labels_of(mask))


class SpinalSubtree(NamedTuple):
    """A subtree hanging off the ancestral path of a leaf."""

    root_edge: Edge
    labels: frozenset[int]


@dataclass(frozen=True)
class SwapTarget:
    """Outcome of the label comparison that picks the leaf to resample.

    ``a`` is the least label of the sibling subtree of leaf i, ``b`` the least
    label of the sibling subtree of its parent, or 0 when that parent is the
    root edge.
    """

    i: int
    a: int
    b: int
    i_tilde: int

    def __post_init__(self) -> None:
        if self.i_tilde != max(self.i, self.a, self.b):
            raise TreeError(
                "i_tilde must be the maximum of i, a and b",
                {"i": self.i, "a": self.a, "b": self.b, "i_tilde": self.i_tilde},
            )


@dataclass(frozen=True)
class Tree:
    """Rooted binary tree with labelled leaves, as a laminar family of label sets.

    Instances are immutable. The plain constructor does not validate; use
    ``from_edges``/``from_masks`` (or ``decode``) for untrusted input.

    Attributes:
        labels: Bitmask of the leaf labels, which is also the root edge
        edges: All edges as bitmasks
    """

    labels: Edge
    edges: frozenset[Edge]

    @classmethod
    def from_edges(cls, edges: Iterable[Iterable[int]]) -> "Tree":
        """Build and validate a tree from label collections.

        Raises:
            InvalidTreeError: If the collection is not a binary tree
        """
        masks = []
        for edge in edges:
            mask = mask_of(edge)
            if not mask:
                raise InvalidTreeError("edges must be nonempty")
            masks.append(mask)
        return cls.from_masks(masks)

    @classmethod
    def from_masks(cls, masks: Iterable[Edge]) -> "Tree":
        """Build and validate a tree from edge bitmasks."""
        edge_set = frozenset(masks)
        if not edge_set:
            raise InvalidTreeError("a tree needs at least one edge")
        labels = 0
        for edge in edge_set:
            labels |= edge
        tree = cls(labels, edge_set)
        tree.validate()
        return tree

    @classmethod
    def leaf(cls, j: int = 1) -> "Tree":
        bit = label_bit(j)
        return cls(bit, frozenset({bit}))

    def validate(self) -> None:
        """Check every tree invariant.

        Raises:
            InvalidTreeError: Naming the first violated invariant
        """
        listing = [list(labels_of(e)) for e in sorted(self.edges, key=edge_sort_key)]
        if 0 in self.edges:
            raise InvalidTreeError("edges must be nonempty", listing)
        if self.labels not in self.edges:
            raise InvalidTreeError(f"root edge {list(self.label_list)} missing", listing)
        for j in self.label_list:
            if label_bit(j) not in self.edges:
                raise InvalidTreeError(f"external edge {{{j}}} missing", listing)
        if len(self.edges) != 2 * self.n_leaves - 1:
            raise InvalidTreeError(
                f"expected {2 * self.n_leaves - 1} edges, found {len(self.edges)}", listing
            )
        ordered = self.sorted_edges
        for idx, first in enumerate(ordered):
            for second in ordered[idx + 1 :]:
                common = first & second
                if common and common != first:
                    raise InvalidTreeError(
                        f"edges {list(labels_of(first))} and {list(labels_of(second))} overlap",
                        listing,
                    )
        for edge in ordered:
            if edge == self.labels:
                continue
            parent = self._parents[edge]
            if parent & ~edge not in self.edges:
                raise InvalidTreeError(
                    f"edge {list(labels_of(edge))} has no sibling", listing
                )

    @property
    def n_leaves(self) -> int:
        return self.labels.bit_count()

    @cached_property
    def label_list(self) -> tuple[int, ...]:
        return labels_of(self.labels)

    @cached_property
    def sorted_edges(self) -> tuple[Edge, ...]:
        """Edges in canonical order."""
        return tuple(sorted(self.edges, key=edge_sort_key))

    @cached_property
    def internal_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.sorted_edges if e.bit_count() >= 2)

    @cached_property
    def _parents(self) -> dict[Edge, Edge]:
        by_size = sorted(self.edges, key=int.bit_count)
        parents: dict[Edge, Edge] = {}
        for idx, edge in enumerate(by_size):
            for candidate in by_size[idx + 1 :]:
                if candidate & edge == edge and candidate != edge:
                    parents[edge] = candidate
                    break
        return parents

    @cached_property
    def _children(self) -> dict[Edge, tuple[Edge, Edge]]:
        grouped: dict[Edge, list[Edge]] = {}
        for child, parent in self._parents.items():
            grouped.setdefault(parent, []).append(child)
        return {
            parent: tuple(sorted(kids, key=min_label))  # type: ignore[misc]
            for parent, kids in grouped.items()
        }

    def _require_edge(self, edge: Edge) -> None:
        if edge not in self.edges:
            raise UnknownEdgeError(list(labels_of(edge)))

    def parent(self, edge: Edge) -> Edge:
        """Return the parent edge of a non-root edge."""
        self._require_edge(edge)
        if edge == self.labels:
            raise TreeError("the root edge has no parent", {"edge": list(labels_of(edge))})
        return self._parents[edge]

    def sibling(self, edge: Edge) -> Edge:
        return self.parent(edge) & ~edge

    def children(self, edge: Edge) -> tuple[Edge, Edge] | tuple[()]:
        """Children ordered by least label; empty for external edges."""
        self._require_edge(edge)
        return self._children.get(edge, ())

    def ancestors(self, edge: Edge) -> tuple[Edge, ...]:
        """Strict ancestors from the parent up to the root edge."""
        self._require_edge(edge)
        out = []
        while edge != self.labels:
            edge = self._parents[edge]
            out.append(edge)
        return tuple(out)

    def restrict(self, keep: Edge) -> "Tree":
        """Return t ∩ C for a label set C meeting the tree."""
        labels = self.labels & keep
        return Tree(labels, frozenset(e & keep for e in self.edges if e & keep))

    def relabel(self, mapping: Mapping[int, int]) -> "Tree":
        """Apply an injective relabelling (labels missing from mapping are kept)."""
        return Tree(
            relabel_mask(self.labels, mapping),
            frozenset(relabel_mask(e, mapping) for e in self.edges),
        )

    def to_lists(self) -> list[list[int]]:
        return [list(labels_of(e)) for e in self.sorted_edges]

    def __str__(self) -> str:
        body = ",".join("{" + ",".join(map(str, labels_of(e))) + "}" for e in self.sorted_edges)
        return "{" + body + "}"


def delete_leaf(t: Tree, j: int) -> Tree:
    """Delete leaf j: the parent and sibling of {j} merge into one edge.

    Args:
        t: Tree with at least two leaves
        j: Leaf label to delete

    Returns:
        t ∩ (A∖{j}) with the empty set removed

    Raises:
        UnknownLabelError: If j is not a leaf of t
        TreeError: If t has a single leaf
    """
    bit = label_bit(j)
    if not t.labels & bit:
        raise UnknownLabelError(j)
    if t.n_leaves < 2:
        raise TreeError("cannot delete the only leaf of a tree", {"label": j})
    return t.restrict(t.labels & ~bit)


def insert_leaf(s: Tree, edge: Edge, j: int) -> Tree:
    """Insert leaf j on an edge S of s.

    S is split into S and S∪{j}, j joins every ancestor of S and {j} is added.

    Raises:
        DuplicateLabelError: If j is already a leaf
        UnknownEdgeError: If S is not an edge of s
    """
    bit = label_bit(j)
    if s.labels & bit:
        raise DuplicateLabelError(j)
    if edge not in s.edges:
        raise UnknownEdgeError(list(labels_of(edge)))
    new_edges = {bit}
    for other in s.edges:
        common = other & edge
        if common in (0, other):
            new_edges.add(other)
        if common == edge:
            new_edges.add(other | bit)
    return Tree(s.labels | bit, frozenset(new_edges))


def swap_labels(t: Tree, i: int, j: int) -> Tree:
    """Exchange labels i and j."""
    for label in (i, j):
        if not t.labels & label_bit(label):
            raise UnknownLabelError(label)
    if i == j:
        return t
    return t.relabel({i: j, j: i})


def remove_and_compact(t: Tree, j: int) -> Tree:
    """Delete leaf j and relabel the leaves above j down by one."""
    reduced = delete_leaf(t, j)
    return Tree(
        shift_down(reduced.labels, j), frozenset(shift_down(e, j) for e in reduced.edges)
    )


def swap_target(t: Tree, i: int) -> SwapTarget:
    """Compare leaf i with the least labels of the first two subtrees on its ancestral path.

    Raises:
        UnknownLabelError: If i is not a leaf of t
        TreeError: If t has a single leaf
    """
    leaf = label_bit(i)
    if not t.labels & leaf:
        raise UnknownLabelError(i)
    if t.n_leaves < 2:
        raise TreeError("swap target needs at least two leaves", {"label": i})
    parent = t.parent(leaf)
    a = min_label(parent & ~leaf)
    if parent == t.labels:
        b = 0
    else:
        b = min_label(t.parent(parent) & ~parent)
    return SwapTarget(i=i, a=a, b=b, i_tilde=max(i, a, b))


def spinal_subtrees(t: Tree, j: int) -> list[SpinalSubtree]:
    """Subtrees hanging off the path from leaf j to the root, leaf side first."""
    edge = label_bit(j)
    if not t.labels & edge:
        raise UnknownLabelError(j)
    out = []
    while edge != t.labels:
        sibling = t.sibling(edge)
        out.append(SpinalSubtree(sibling, frozenset(labels_of(sibling))))
        edge = t.parent(edge)
    return out


def subtree(t: Tree, edge: Edge) -> Tree:
    """The subtree formed by the edges below and including ``edge``."""
    if edge not in t.edges:
        raise UnknownEdgeError(list(labels_of(edge)))
    return Tree(edge, frozenset(e for e in t.edges if e & edge == e))


def rank_relabel(t: Tree) -> Tree:
    """Relabel leaves 1..k by increasing original label."""
    mapping = {label: rank for rank, label in enumerate(t.label_list, start=1)}
    if all(label == rank for label, rank in mapping.items()):
        return t
    return t.relabel(mapping)


def count_trees(n: int) -> int:
    """Number of rooted binary trees with n labelled leaves, ∏_{i<n} (2i−1)."""
    if n < 1:
        raise TreeError("a tree has at least one leaf", {"n": n})
    return prod(2 * i - 1 for i in range(1, n))


@lru_cache(maxsize=16)
def _enumerate(labels: tuple[int, ...]) -> tuple[Tree, ...]:
    trees = [Tree.leaf(labels[0])]
    for j in labels[1:]:
        trees = [insert_leaf(s, edge, j) for s in trees for edge in s.sorted_edges]
    logger.debug("Enumerated %d trees on %d labels", len(trees), len(labels))
    return tuple(trees)


def enumerate_trees(labels: Iterable[int], max_leaves: int | None = None) -> list[Tree]:
    """Every tree on a label set, exactly once, in canonical order.

    Trees are produced by inserting labels in increasing order, trying the
    edges of each smaller tree in canonical order.

    Args:
        labels: The label set A
        max_leaves: Enumeration bound; defaults to DOWNUP_MAX_ENUM_LEAVES

    Raises:
        StateSpaceTooLargeError: If #A exceeds the bound
    """
    ordered = tuple(sorted(set(labels)))
    if not ordered:
        raise TreeError("cannot enumerate trees on an empty label set")
    for j in ordered:
        label_bit(j)
    bound = max_leaves if max_leaves is not None else get_settings().max_enum_leaves
    if len(ordered) > bound:
        raise StateSpaceTooLargeError("tree enumeration", len(ordered), bound)
    return list(_enumerate(ordered))


def unlabeled_shape(t: Tree) -> UnlabeledShape:
    """Label-free canonical form: nested tuples with sorted children."""

    def walk(edge: Edge) -> UnlabeledShape:
        kids = t.children(edge)
        if not kids:
            return ()
        return tuple(sorted(walk(kid) for kid in kids))

    return walk(t.labels)


def to_newick(t: Tree) -> str:
    """Newick export, children ordered by least label, e.g. "((1,2),3);"."""

    def walk(edge: Edge) -> str:
        kids = t.children(edge)
        if not kids:
            return str(min_label(edge))
        return "(" + ",".join(walk(kid) for kid in kids) + ")"

    return walk(t.labels) + ";"


def encode(t: Tree) -> bytes:
    """Canonical JSON edge list, e.g. b"[[1],[2],[1,2]]"."""
    return json.dumps(t.to_lists(), separators=(",", ":")).encode("ascii")


def decode(data: bytes | str) -> Tree:
    """Parse and validate the canonical JSON edge list.

    The reported position is the character offset for JSON syntax errors and
    the edge index for grammar errors.

    Raises:
        TreeFormatError: If the text does not follow the grammar
        InvalidTreeError: If the edges do not form a tree
    """
    try:
        text = data.decode("utf-8") if isinstance(data, bytes) else data
        raw = json.loads(text)
    except UnicodeDecodeError as exc:
        raise TreeFormatError(exc.reason, exc.start) from exc
    except json.JSONDecodeError as exc:
        raise TreeFormatError(exc.msg, exc.pos) from exc
    if not isinstance(raw, list) or not raw:
        raise TreeFormatError("expected a non-empty array of edges", 0)

    masks = []
    for index, entry in enumerate(raw):
        if (
            not isinstance(entry, list)
            or not entry
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in entry)
        ):
            raise TreeFormatError(f"edge {index} must be a non-empty array of integers", index)
        if any(left >= right for left, right in zip(entry, entry[1:])):
            raise TreeFormatError(f"edge {index} is not strictly increasing", index)
        masks.append(mask_of(entry))

    keys = [edge_sort_key(mask) for mask in masks]
    for index in range(1, len(keys)):
        if keys[index - 1] >= keys[index]:
            raise TreeFormatError("edges are not in canonical order", index)
    return Tree.from_masks(masks)
