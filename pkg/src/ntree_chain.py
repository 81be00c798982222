"""Down-up chains on trees with n labelled leaves.

Both chains pick a leaf i uniformly, swap labels i and ĩ (see
``tree_core.swap_target``) and remove leaf ĩ. The uniform chain then puts
leaf ĩ back on a uniformly chosen edge. The alpha chain instead relabels the
leaves above ĩ down by one and attaches leaf n by one alpha growth step.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, NamedTuple

from .config import get_settings
from .distributions import FinitePmf, RngStream, as_alpha
from .exceptions import ChainError, ChainSizeError, StateSpaceTooLargeError
from .growth import GrowthConfig, attachment_pmf, grow_step
from .tree_core import (
    Tree,
    UnlabeledShape,
    delete_leaf,
    insert_leaf,
    remove_and_compact,
    swap_labels,
    swap_target,
    unlabeled_shape,
)

logger = logging.getLogger(__name__)

Variant = Literal["uniform", "alpha"]


@dataclass(frozen=True)
class NTreeChainConfig:
    """Which down-up chain to run on trees with n leaves.

    The uniform variant takes no alpha; the alpha variant needs alpha in [0, 1].
    """

    variant: Variant
    n: int
    alpha: Fraction | None = None

    def __post_init__(self) -> None:
        if self.variant not in ("uniform", "alpha"):
            raise ChainError(f"unknown chain variant {self.variant!r}", {"variant": self.variant})
        if self.n < 3:
            raise ChainSizeError(self.n, 3)
        if self.variant == "uniform":
            if self.alpha is not None:
                raise ChainError("the uniform chain has no alpha parameter")
        else:
            if self.alpha is None:
                raise ChainError("the alpha chain needs alpha")
            object.__setattr__(self, "alpha", as_alpha(self.alpha))

    @property
    def growth(self) -> GrowthConfig:
        return GrowthConfig(self.alpha if self.alpha is not None else Fraction(1, 2))


class DownOutcome(NamedTuple):
    """One of the n equally likely results of a down-move."""

    i: int
    i_tilde: int
    reduced: Tree


def _check_size(t: Tree) -> int:
    n = t.n_leaves
    if n < 3:
        raise ChainSizeError(n, 3)
    return n


def _down(t: Tree, i: int, compact: bool) -> DownOutcome:
    target = swap_target(t, i)
    swapped = swap_labels(t, i, target.i_tilde)
    if compact:
        reduced = remove_and_compact(swapped, target.i_tilde)
    else:
        reduced = delete_leaf(swapped, target.i_tilde)
    return DownOutcome(i, target.i_tilde, reduced)


def down_outcomes(t: Tree, compact: bool) -> list[DownOutcome]:
    """The down-move result for every choice of i.

    Args:
        t: Tree on [n]
        compact: Relabel leaves above ĩ down by one (alpha chain)
    """
    return [_down(t, i, compact) for i in t.label_list]


def uniform_step(t: Tree, rng: RngStream) -> Tree:
    """One transition of the uniform chain.

    Raises:
        ChainSizeError: If t has fewer than three leaves
    """
    n = _check_size(t)
    outcome = _down(t, rng.integers(1, n + 1), compact=False)
    edges = outcome.reduced.sorted_edges
    return insert_leaf(outcome.reduced, edges[rng.integers(0, len(edges))], outcome.i_tilde)


def alpha_step(t: Tree, alpha: Fraction, rng: RngStream) -> Tree:
    """One transition of the alpha chain."""
    n = _check_size(t)
    cfg = GrowthConfig(alpha)
    outcome = _down(t, rng.integers(1, n + 1), compact=True)
    return grow_step(outcome.reduced, cfg, rng)


def step(t: Tree, cfg: NTreeChainConfig, rng: RngStream) -> Tree:
    if cfg.variant == "uniform":
        return uniform_step(t, rng)
    return alpha_step(t, cfg.growth.alpha, rng)


def kernel_row(t: Tree, cfg: NTreeChainConfig) -> FinitePmf[Tree]:
    """Exact one-step law from t.

    Raises:
        ChainError: If t does not have cfg.n leaves
        StateSpaceTooLargeError: If n exceeds the enumeration bound
    """
    n = _check_size(t)
    if n != cfg.n:
        raise ChainError("tree size does not match the chain", {"tree": n, "chain": cfg.n})
    bound = get_settings().max_enum_leaves
    if n > bound:
        raise StateSpaceTooLargeError("kernel row", n, bound)

    weights: list[tuple[Tree, Fraction]] = []
    if cfg.variant == "uniform":
        p = Fraction(1, n * (2 * n - 3))
        for outcome in down_outcomes(t, compact=False):
            for edge in outcome.reduced.sorted_edges:
                weights.append((insert_leaf(outcome.reduced, edge, outcome.i_tilde), p))
    else:
        growth = cfg.growth
        for outcome in down_outcomes(t, compact=True):
            for edge, q in attachment_pmf(outcome.reduced, growth).items():
                weights.append((insert_leaf(outcome.reduced, edge, n), q / n))
    return FinitePmf.from_weights(weights)


def resampled_label_pmf(n: int, alpha: Fraction) -> FinitePmf[int]:
    """Stationary law of the resampled label ĩ.

    P(ĩ=j) = (2j−2−α)/(n(n−1−α)) for 3 ≤ j ≤ n, and ĩ=2 takes the remaining
    mass 2(1−α)/(n(n−1−α)), which is 1/(n(n−1−α)) at α=1/2.
    """
    alpha = as_alpha(alpha, open_interval=True)
    if n < 3:
        raise ChainSizeError(n, 3)
    return label_law(n, alpha)


def label_law(size: int, alpha: Fraction) -> FinitePmf[int]:
    """The law of the first resampled label among ``size`` labels."""
    denominator = size * (size - 1 - alpha)
    probs = [2 * (1 - alpha) / denominator]
    probs += [(2 * j - 2 - alpha) / denominator for j in range(3, size + 1)]
    return FinitePmf(tuple(range(2, size + 1)), tuple(probs))


def aldous_shadow_row(t: Tree) -> FinitePmf[UnlabeledShape]:
    """Exact one-step law of the label-free Aldous down-up move from t's shape."""
    n = _check_size(t)
    p = Fraction(1, n * (2 * n - 3))
    weights = []
    for j in t.label_list:
        reduced = delete_leaf(t, j)
        for edge in reduced.sorted_edges:
            weights.append((unlabeled_shape(insert_leaf(reduced, edge, j)), p))
    return FinitePmf.from_weights(weights)
