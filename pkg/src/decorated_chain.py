"""Down-up chains on decorated k-trees.

A transition selects an edge with probability mass/n and then, by case:

  A  internal edge, or leaf edge with mass >= 2: remove one unit of mass, then up-move.
  B  leaf edge with mass 1 whose parent carries mass: the leaf takes m units
     from its parent, m drawn from the decrement law, then up-move.
  C  leaf edge with mass 1 whose parent is empty: swap i with ĩ as in the
     tree chains. The uniform chain resamples ĩ; the alpha chain drops ĩ,
     inserts label k and performs an up-move.

Every move has an exact law (``*_pmf``) and a sampled version running the
Pólya urns; tests check that they agree.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Literal, NamedTuple

from .distributions import FinitePmf, RngStream, as_alpha, decrement_pmf, dm_pmf, dm_sample
from .exceptions import ChainError, ChainSizeError, MassConservationError, MovePreconditionError
from .projection import DecoratedKTree
from .tree_core import (
    Edge,
    Tree,
    delete_leaf,
    edge_key,
    insert_leaf,
    label_bit,
    min_label,
    relabel_mask,
    shift_down,
    swap_target,
)

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


class Case(str, Enum):
    """Which branch of the transition applies to the selected edge."""

    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class DecoratedMove:
    """Record of the random choices behind one transition.

    Attributes:
        case: Branch taken
        selected_edge: Edge picked with probability mass/n
        decrement: Mass m moved from the parent in case B
        dropped: Label ĩ dropped or resampled in case C
    """

    case: Case
    selected_edge: Edge
    decrement: int | None = None
    dropped: int | None = None


class Transition(NamedTuple):
    probability: Fraction
    state: DecoratedKTree
    move: DecoratedMove


@dataclass(frozen=True)
class DecoratedChainConfig:
    """Uniform (alpha fixed at 1/2) or alpha decorated chain."""

    variant: Literal["uniform", "alpha"]
    alpha: Fraction | None = None

    def __post_init__(self) -> None:
        if self.variant not in ("uniform", "alpha"):
            raise ChainError(f"unknown chain variant {self.variant!r}", {"variant": self.variant})
        if self.variant == "uniform":
            if self.alpha not in (None, HALF):
                raise ChainError("the uniform decorated chain runs at alpha = 1/2")
            object.__setattr__(self, "alpha", HALF)
        else:
            if self.alpha is None:
                raise ChainError("the alpha decorated chain needs alpha")
            object.__setattr__(self, "alpha", as_alpha(self.alpha, open_interval=True))

    @property
    def move_alpha(self) -> Fraction:
        assert self.alpha is not None
        return self.alpha


def _check_mass(d: DecoratedKTree, expected: int, step: str) -> DecoratedKTree:
    if d.total != expected:
        raise MassConservationError(expected, d.total, step)
    return d


def _leaf_parent(d: DecoratedKTree, i: int) -> Edge:
    leaf = label_bit(i)
    if leaf not in d.mass_map:
        raise MovePreconditionError(f"label {i} is not a leaf", {"label": i})
    if d.k < 2:
        raise MovePreconditionError("a single-leaf tree has no parent edge", {"label": i})
    return d.shape.parent(leaf)


def _require_detachable(d: DecoratedKTree, i: int) -> None:
    parent = _leaf_parent(d, i)
    if d.x(i) != 1 or d.y(parent) != 0:
        raise MovePreconditionError(
            f"label {i} needs leaf mass 1 and an empty parent edge",
            {"label": i, "x": d.x(i), "y_parent": d.y(parent)},
        )


def _detach(d: DecoratedKTree, i: int) -> DecoratedKTree:
    """Remove leaf i together with its mass-1 leaf edge and empty parent; labels kept."""
    _require_detachable(d, i)
    leaf = label_bit(i)
    parent = d.shape.parent(leaf)
    masses = {edge & ~leaf: mass for edge, mass in d.masses if edge not in (leaf, parent)}
    return DecoratedKTree.build(delete_leaf(d.shape, i), masses)


def _attach(
    d: DecoratedKTree, edge: Edge, label: int, lower: int, leaf: int, upper: int
) -> DecoratedKTree:
    """Insert ``label`` on ``edge``, splitting its mass into lower part, new leaf and upper part."""
    bit = label_bit(label)
    masses = {}
    for other, mass in d.masses:
        if other == edge:
            continue
        masses[other | bit if other & edge == edge else other] = mass
    masses[edge] = lower
    masses[edge | bit] = upper
    masses[bit] = leaf
    return DecoratedKTree.build(insert_leaf(d.shape, edge, label), masses)


def swap_decorated(d: DecoratedKTree, i: int, j: int) -> DecoratedKTree:
    """Exchange labels i and j; masses stay on their edges."""
    if i == j:
        return d
    mapping = {i: j, j: i}
    shape = d.shape.relabel(mapping)
    return DecoratedKTree.build(shape, {relabel_mask(e, mapping): m for e, m in d.masses})


def classify(d: DecoratedKTree, edge: Edge) -> Case:
    """Case of the transition once ``edge`` has been selected.

    Raises:
        MovePreconditionError: If the edge carries no mass
    """
    mass = d.mass(edge)
    if mass == 0:
        raise MovePreconditionError(f"edge {edge_key(edge)} has no mass to select")
    if edge.bit_count() >= 2 or mass >= 2:
        return Case.A
    if d.k == 1:
        raise MovePreconditionError("single-leaf state with mass 1 has no transition")
    return Case.B if d.y(d.shape.parent(edge)) > 0 else Case.C


def selection_pmf(d: DecoratedKTree) -> FinitePmf[Edge]:
    return FinitePmf.from_weights(d.masses)


def drop_label(d: DecoratedKTree, i: int) -> DecoratedKTree:
    """Drop leaf i (mass 1, empty parent) and relabel the leaves above i down by one.

    Raises:
        MovePreconditionError: If x_i != 1 or the parent edge carries mass
    """
    detached = _detach(d, i)
    shape = detached.shape
    relabelled = Tree(shift_down(shape.labels, i), frozenset(shift_down(e, i) for e in shape.edges))
    return DecoratedKTree.build(relabelled, {shift_down(e, i): m for e, m in detached.masses})


def _insert_weights(d: DecoratedKTree) -> list[tuple[Edge, int]]:
    weights = [
        (edge, mass - 1 if edge.bit_count() == 1 else mass) for edge, mass in d.masses
    ]
    if not any(w for _, w in weights):
        raise MovePreconditionError("no mass available to insert a new label", {"mass": d.total})
    return weights


def _split_edge(
    d: DecoratedKTree, edge: Edge, label: int, counts: tuple[int, ...]
) -> DecoratedKTree:
    """Attach ``label`` on ``edge`` with the three urn counts of its mass."""
    j1, j2, j3 = counts
    if edge.bit_count() == 1:
        return _attach(d, edge, label, lower=j1 + 1, leaf=j2 + 1, upper=j3)
    return _attach(d, edge, label, lower=j2, leaf=j3 + 1, upper=j1)


def _insert_dm(d: DecoratedKTree, edge: Edge, alpha: Fraction) -> tuple[int, tuple[Fraction, ...]]:
    mass = d.mass(edge)
    if edge.bit_count() == 1:
        return mass - 2, (1 - alpha, 1 - alpha, alpha)
    return mass - 1, (alpha, alpha, 1 - alpha)


def insert_label_pmf(d: DecoratedKTree, alpha: Fraction) -> FinitePmf[DecoratedKTree]:
    """Exact law of inserting label k+1 into a decorated tree on [k].

    The edge is chosen with weight x_i - 1 (leaf edges) or y_B (internal
    edges). A leaf edge splits as (x_i, x_new, y) = (J1+1, J2+1, J3) with J
    from DM(x_i - 2; 1-α, 1-α, α); an internal edge splits as
    (y_upper, y_B, x_new) = (J1, J2, J3+1) with J from DM(y_B - 1; α, α, 1-α).
    """
    alpha = as_alpha(alpha, open_interval=True)
    label = d.k + 1
    weights = _insert_weights(d)
    total = sum(w for _, w in weights)
    outcomes = []
    for edge, weight in weights:
        if not weight:
            continue
        draws, dm_weights = _insert_dm(d, edge, alpha)
        for counts, p in dm_pmf(draws, dm_weights).items():
            outcomes.append((_split_edge(d, edge, label, counts), Fraction(weight, total) * p))
    return FinitePmf.from_weights(outcomes)


def insert_label(d: DecoratedKTree, alpha: Fraction, rng: RngStream) -> DecoratedKTree:
    """Sample from insert_label_pmf by running the urns."""
    alpha = as_alpha(alpha, open_interval=True)
    weights = _insert_weights(d)
    edge = weights[rng.choice_index([w for _, w in weights])][0]
    draws, dm_weights = _insert_dm(d, edge, alpha)
    return _split_edge(d, edge, d.k + 1, dm_sample(draws, dm_weights, rng))


def _up_weights(d: DecoratedKTree, alpha: Fraction) -> list[tuple[Edge, Fraction]]:
    return [
        (edge, mass - alpha if edge.bit_count() == 1 else mass + alpha) for edge, mass in d.masses
    ]


def up_move_pmf(d: DecoratedKTree, alpha: Fraction) -> FinitePmf[DecoratedKTree]:
    """Exact law of adding one unit of mass: weight x_i - α on leaf edges, y_B + α on internal edges."""
    alpha = as_alpha(alpha, open_interval=True)
    return FinitePmf.from_weights(
        (d.with_masses({edge: d.mass(edge) + 1}), w) for edge, w in _up_weights(d, alpha)
    )


def up_move(d: DecoratedKTree, alpha: Fraction, rng: RngStream) -> DecoratedKTree:
    alpha = as_alpha(alpha, open_interval=True)
    weights = _up_weights(d, alpha)
    edge = weights[rng.choice_index([w for _, w in weights])][0]
    return d.with_masses({edge: d.mass(edge) + 1})


def _reattach_weights(d: DecoratedKTree) -> list[tuple[Edge, Fraction]]:
    return [
        (edge, mass - HALF if edge.bit_count() == 1 else mass + HALF) for edge, mass in d.masses
    ]


def _reattach_draws(d: DecoratedKTree, edge: Edge) -> int:
    return d.mass(edge) - 1 if edge.bit_count() == 1 else d.mass(edge)


def reattach_label_pmf(d: DecoratedKTree, i: int) -> FinitePmf[DecoratedKTree]:
    """Exact law of putting label i back, with one extra unit of mass.

    The edge is chosen with weight x_j - 1/2 or y_B + 1/2; its mass plus one
    is split three ways by DM(·; 1/2, 1/2, 1/2).
    """
    if d.shape.labels & label_bit(i):
        raise MovePreconditionError(f"label {i} is already present", {"label": i})
    outcomes = []
    weights = _reattach_weights(d)
    total = sum(w for _, w in weights)
    for edge, weight in weights:
        for counts, p in dm_pmf(_reattach_draws(d, edge), (HALF, HALF, HALF)).items():
            outcomes.append((_split_edge(d, edge, i, counts), weight / total * p))
    return FinitePmf.from_weights(outcomes)


def resample_label_pmf(d: DecoratedKTree, i: int) -> FinitePmf[DecoratedKTree]:
    """Exact law of resampling label i: detach it, then reattach it."""
    return reattach_label_pmf(_detach(d, i), i)


def resample_label(d: DecoratedKTree, i: int, rng: RngStream) -> DecoratedKTree:
    """Sample from resample_label_pmf.

    Raises:
        MovePreconditionError: If x_i != 1 or the parent edge carries mass
    """
    detached = _detach(d, i)
    weights = _reattach_weights(detached)
    edge = weights[rng.choice_index([w for _, w in weights])][0]
    counts = dm_sample(_reattach_draws(detached, edge), (HALF, HALF, HALF), rng)
    return _check_mass(_split_edge(detached, edge, i, counts), d.total, "resample")


def _swap_for(d: DecoratedKTree, edge: Edge) -> tuple[int, DecoratedKTree]:
    i = min_label(edge)
    i_tilde = swap_target(d.shape, i).i_tilde
    return i_tilde, swap_decorated(d, i, i_tilde)


def decorated_transitions(d: DecoratedKTree, cfg: DecoratedChainConfig) -> list[Transition]:
    """Every (probability, next state, move) of one transition, exactly.

    Raises:
        ChainSizeError: If the total mass is below 3
    """
    n = d.total
    if n < 3:
        raise ChainSizeError(n, 3)
    alpha = cfg.move_alpha
    out: list[Transition] = []
    for edge, mass in d.masses:
        if not mass:
            continue
        p = Fraction(mass, n)
        case = classify(d, edge)
        if case is Case.A:
            mid = d.with_masses({edge: mass - 1})
            move = DecoratedMove(case, edge)
            out.extend(Transition(p * q, nxt, move) for nxt, q in up_move_pmf(mid, alpha).items())
        elif case is Case.B:
            parent = d.shape.parent(edge)
            y = d.y(parent)
            for m, r in decrement_pmf(y, alpha).items():
                mid = _check_mass(d.with_masses({edge: m, parent: y - m}), n - 1, "case B")
                move = DecoratedMove(case, edge, decrement=m)
                out.extend(
                    Transition(p * r * q, nxt, move) for nxt, q in up_move_pmf(mid, alpha).items()
                )
        else:
            i_tilde, swapped = _swap_for(d, edge)
            move = DecoratedMove(case, edge, dropped=i_tilde)
            if cfg.variant == "uniform":
                out.extend(
                    Transition(p * q, nxt, move)
                    for nxt, q in resample_label_pmf(swapped, i_tilde).items()
                )
            else:
                reduced = drop_label(swapped, i_tilde)
                for mid, q in insert_label_pmf(reduced, alpha).items():
                    out.extend(
                        Transition(p * q * r, nxt, move)
                        for nxt, r in up_move_pmf(mid, alpha).items()
                    )
    return out


def decorated_kernel_row(d: DecoratedKTree, cfg: DecoratedChainConfig) -> FinitePmf[DecoratedKTree]:
    """Exact one-step law from d."""
    row = FinitePmf.from_weights((t.state, t.probability) for t in decorated_transitions(d, cfg))
    for state in row.support:
        _check_mass(state, d.total, "kernel row")
    return row


def decorated_step(d: DecoratedKTree, cfg: DecoratedChainConfig, rng: RngStream) -> DecoratedKTree:
    """One sampled transition of either decorated chain."""
    n = d.total
    if n < 3:
        raise ChainSizeError(n, 3)
    alpha = cfg.move_alpha
    edge = d.masses[rng.choice_index([m for _, m in d.masses])][0]
    case = classify(d, edge)
    if case is Case.A:
        mid = d.with_masses({edge: d.mass(edge) - 1})
    elif case is Case.B:
        parent = d.shape.parent(edge)
        y = d.y(parent)
        m = rng.sample(decrement_pmf(y, alpha))
        mid = _check_mass(d.with_masses({edge: m, parent: y - m}), n - 1, "case B")
    else:
        i_tilde, swapped = _swap_for(d, edge)
        if cfg.variant == "uniform":
            return resample_label(swapped, i_tilde, rng)
        mid = insert_label(drop_label(swapped, i_tilde), alpha, rng)
    return _check_mass(up_move(mid, alpha, rng), n, "up-move")


def uniform_decorated_step(d: DecoratedKTree, rng: RngStream) -> DecoratedKTree:
    return decorated_step(d, DecoratedChainConfig("uniform"), rng)


def alpha_decorated_step(d: DecoratedKTree, alpha: Fraction, rng: RngStream) -> DecoratedKTree:
    return decorated_step(d, DecoratedChainConfig("alpha", alpha), rng)
