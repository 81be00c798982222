"""Tree growth processes: Rémy, Ford alpha growth and its modified variant.

Leaf m+1 attaches to an edge of the current tree on [m] chosen with weight
1−α for external edges and α for internal edges. The modified variant gives
edge {1} weight α as well. α=1/2 is Rémy's uniform growth; the modified and
plain laws agree there.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .constants import MAX_LABEL
from .distributions import FinitePmf, RngStream, as_alpha
from .exceptions import LabelUniverseError, TreeError
from .tree_core import Edge, Tree, delete_leaf, enumerate_trees, insert_leaf, label_bit

logger = logging.getLogger(__name__)

_LEAF_ONE = label_bit(1)


@dataclass(frozen=True)
class GrowthConfig:
    """Parameters of a growth process.

    Attributes:
        alpha: Internal-edge weight, in [0, 1] (in (0, 1) when modified)
        modified: Give edge {1} weight alpha instead of 1 - alpha
    """

    alpha: Fraction = Fraction(1, 2)
    modified: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_alpha(self.alpha, open_interval=self.modified))


REMY = GrowthConfig()


def _require_prefix_labels(t: Tree) -> int:
    m = t.n_leaves
    if t.labels != (1 << m) - 1:
        raise TreeError("growth operates on trees labelled 1..m", {"labels": list(t.label_list)})
    return m


def _edge_weight(edge: Edge, cfg: GrowthConfig) -> Fraction:
    if cfg.modified and edge == _LEAF_ONE:
        return cfg.alpha
    if edge.bit_count() == 1:
        return 1 - cfg.alpha
    return cfg.alpha


def _total_weight(m: int, cfg: GrowthConfig) -> Fraction:
    if cfg.modified:
        return m - 1 + cfg.alpha
    return m - cfg.alpha


def edge_weights(t: Tree, cfg: GrowthConfig) -> list[tuple[Edge, Fraction]]:
    """Unnormalized attachment weights in canonical edge order."""
    if t.n_leaves == 1:
        return [(t.labels, Fraction(1))]
    return [(edge, _edge_weight(edge, cfg)) for edge in t.sorted_edges]


def attachment_pmf(t: Tree, cfg: GrowthConfig) -> FinitePmf[Edge]:
    """Exact law of the edge receiving the next leaf."""
    return FinitePmf.from_weights(edge_weights(t, cfg))


def attachment_probability(t: Tree, edge: Edge, cfg: GrowthConfig) -> Fraction:
    m = t.n_leaves
    if m == 1:
        return Fraction(1)
    return _edge_weight(edge, cfg) / _total_weight(m, cfg)


def grow_step(t: Tree, cfg: GrowthConfig, rng: RngStream) -> Tree:
    """Attach leaf m+1 to a tree on [m].

    Raises:
        LabelUniverseError: If m+1 exceeds the label universe
    """
    m = _require_prefix_labels(t)
    if m + 1 > MAX_LABEL:
        raise LabelUniverseError(m + 1, MAX_LABEL)
    weights = edge_weights(t, cfg)
    edge = weights[rng.choice_index([w for _, w in weights])][0]
    return insert_leaf(t, edge, m + 1)


def sample_tree(n: int, cfg: GrowthConfig, rng: RngStream) -> Tree:
    """Grow a tree on [n] from the single leaf 1."""
    if n < 1:
        raise TreeError("a tree has at least one leaf", {"n": n})
    if n > MAX_LABEL:
        raise LabelUniverseError(n, MAX_LABEL)
    tree = Tree.leaf(1)
    for _ in range(n - 1):
        tree = grow_step(tree, cfg, rng)
    return tree


def growth_pmf(t: Tree, cfg: GrowthConfig) -> Fraction:
    """Exact probability that the growth process produces t.

    The insertion history is unique: leaf j was attached to the edge that is
    the sibling of {j} in t ∩ [j].
    """
    n = _require_prefix_labels(t)
    probability = Fraction(1)
    current = t
    for j in range(n, 1, -1):
        attached_to = current.sibling(label_bit(j))
        previous = delete_leaf(current, j)
        probability *= attachment_probability(previous, attached_to, cfg)
        if not probability:
            break
        current = previous
    return probability


@lru_cache(maxsize=64)
def growth_law(n: int, cfg: GrowthConfig = REMY) -> FinitePmf[Tree]:
    """The law q_{n,α} (or its modified variant) over all trees on [n], in canonical order."""
    trees = enumerate_trees(range(1, n + 1))
    law = FinitePmf(tuple(trees), tuple(growth_pmf(t, cfg) for t in trees))
    logger.info("Built growth law on %d trees (alpha=%s, modified=%s)", len(trees), cfg.alpha, cfg.modified)
    return law
