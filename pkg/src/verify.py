"""Exact verification of stationarity, lumpability and intertwining identities.

Every check enumerates its state spaces, builds the kernels it needs with
rational entries and compares both sides exactly. A failed comparison is not
an exception: it yields a ``VerificationReport`` with ``passed=False`` and
the first counterexample in canonical order.
"""

import json
import logging
import time
from collections.abc import Callable, Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal, NamedTuple

import numpy as np

from .config import get_settings
from .decorated_chain import (
    DecoratedChainConfig,
    decorated_kernel_row,
    decorated_transitions,
    insert_label_pmf,
    reattach_label_pmf,
)
from .distributions import FinitePmf, as_alpha, bridge_return_pmf, decrement_pmf
from .exceptions import ChainSizeError, ConfigurationError, ProjectionRangeError, ShapeMismatchError
from .growth import GrowthConfig, growth_law, growth_pmf
from .kernels import (
    StateSpace,
    StochasticKernel,
    build_kernel,
    check_size,
    describe,
    deterministic_kernel,
    first_row_difference,
    identity_matrix,
    solve_linear_system,
)
from .ntree_chain import NTreeChainConfig, down_outcomes, kernel_row, label_law, resampled_label_pmf
from .projection import (
    CollapsedKTree,
    InternalStructure,
    ProjectionKind,
    decorated_marginal_pmf,
    enumerate_decorated,
    enumerate_states,
    internal_structures,
    lambda_rows,
    project_collapsed,
    project_mass,
    project_mass_onto,
    projector,
    reassemble,
)
from .tree_core import (
    Tree,
    delete_leaf,
    enumerate_trees,
    insert_leaf,
    mask_of,
    rank_relabel,
    spinal_subtrees,
    subtree,
)

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, Tree):
        return value.to_lists()
    if hasattr(value, "to_json"):
        return value.to_json()
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class VerificationReport:
    """Outcome of one exact check.

    Attributes:
        check: Check name
        parameters: n, k, alpha and other inputs
        passed: Whether the identity holds exactly
        counterexample: First mismatch in canonical order (failures only)
        details: Sizes and auxiliary results
        elapsed: Wall time in seconds
    """

    check: str
    parameters: dict[str, Any]
    passed: bool
    counterexample: dict[str, Any] | None = None
    details: dict[str, Any] = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "parameters": _jsonable(self.parameters),
            "verdict": self.verdict,
            "counterexample": _jsonable(self.counterexample),
            "details": _jsonable(self.details),
            "elapsed_seconds": round(self.elapsed, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


class LumpingResult(NamedTuple):
    """Kemeny–Snell verdict plus the lumped kernel when the criterion holds."""

    report: VerificationReport
    induced: StochasticKernel[Any] | None


def _finish(
    check: str,
    parameters: dict[str, Any],
    started: float,
    passed: bool,
    counterexample: dict[str, Any] | None = None,
    **details: Any,
) -> VerificationReport:
    report = VerificationReport(
        check, parameters, passed, counterexample, details, time.perf_counter() - started
    )
    logger.info("Check %s %s: %s in %.3fs", check, _jsonable(parameters), report.verdict, report.elapsed)
    return report


def _pmf_difference(actual: FinitePmf[Any], expected: FinitePmf[Any]) -> dict[str, Any] | None:
    """First outcome (expected support first) where two laws disagree."""
    keys = list(expected.support) + [s for s in actual.support if s not in expected.as_dict]
    for key in keys:
        a, e = actual.prob(key), expected.prob(key)
        if a != e:
            return {"outcome": describe(key), "actual": a, "expected": e}
    return None


def _open_alpha(alpha: Fraction | str | int) -> Fraction:
    return as_alpha(alpha, open_interval=True)


def _require(condition: bool, message: str, **details: Any) -> None:
    if not condition:
        raise ProjectionRangeError(message, details)


def tree_space(n: int) -> StateSpace[Tree]:
    return StateSpace(tuple(enumerate_trees(range(1, n + 1), get_settings().max_enum_leaves)))


def ntree_kernel(n: int, alpha: Fraction | None = None) -> StochasticKernel[Tree]:
    """Exact kernel of the uniform chain (alpha None) or the alpha chain on 𝕋_[n]."""
    cfg = NTreeChainConfig("uniform", n) if alpha is None else NTreeChainConfig("alpha", n, alpha)
    return build_kernel(tree_space(n), lambda t: kernel_row(t, cfg), name=f"P[{cfg.variant}, n={n}]")


@dataclass(frozen=True)
class ProjectionSetup:
    """Trees on [n], directly enumerated k-states, the projection g and its link Λ."""

    kind: ProjectionKind
    k: int
    trees: StateSpace[Tree]
    states: StateSpace[Any]
    g: StochasticKernel[Tree]
    link: StochasticKernel[Any]


def projection_setup(kind: ProjectionKind, n: int, k: int, alpha: Fraction = HALF) -> ProjectionSetup:
    """Build g = ρ and Λ = q_{n,α}(· | ρ) as kernels."""
    _require(1 <= k <= n, f"k={k} outside 1..{n}", k=k, n=n)
    trees = tree_space(n)
    states = StateSpace.of(enumerate_states(kind, n, k))
    project = projector(kind)
    g = deterministic_kernel(trees, states, lambda t: project(t, k), name=f"rho[{kind}]")
    rows = lambda_rows(kind, n, k, _open_alpha(alpha))

    def link_row(state: Hashable) -> FinitePmf[Tree]:
        try:
            return rows[state]
        except KeyError:
            raise ProjectionRangeError(
                "state has no preimage of positive probability", {"state": describe(state)}
            ) from None

    link = build_kernel(states, link_row, codomain=trees, name=f"Lambda[{kind}]")
    return ProjectionSetup(kind, k, trees, states, g, link)


def check_stationary(
    pi: FinitePmf[Any],
    kernel: StochasticKernel[Any],
    check: str = "stationarity",
    parameters: dict[str, Any] | None = None,
) -> VerificationReport:
    """Whether πK = π exactly.

    Raises:
        ShapeMismatchError: If π charges states outside the kernel's domain
    """
    started = time.perf_counter()
    if any(state not in kernel.domain for state in pi.support):
        raise ShapeMismatchError("pi is not a law on the kernel's domain")
    image = kernel.left_apply(pi)
    for state in kernel.domain:
        moved, original = image.prob(state), pi.prob(state)
        if moved != original:
            return _finish(
                check,
                parameters or {},
                started,
                False,
                {"state": describe(state), "pi_K": moved, "pi": original},
            )
    return _finish(check, parameters or {}, started, True, states=len(kernel.domain))


def check_ntree_stationarity(n: int, alpha: Fraction | None = None) -> VerificationReport:
    """q_{n,α} (uniform law when alpha is None) is invariant for the tree chain."""
    pi = growth_law(n, GrowthConfig(alpha if alpha is not None else HALF))
    kernel = ntree_kernel(n, alpha)
    params = {"n": n, "variant": "uniform" if alpha is None else "alpha", "alpha": alpha}
    report = check_stationary(pi, kernel, "stationarity", params)
    report.details["kernel_entries"] = kernel.n_entries
    return report


def check_kemeny_snell(
    kernel: StochasticKernel[Any],
    g: StochasticKernel[Any],
    parameters: dict[str, Any] | None = None,
) -> LumpingResult:
    """Kemeny–Snell criterion: rows of Kg agree exactly within every fiber of g.

    Raises:
        ShapeMismatchError: If g does not act on K's states or is not onto
    """
    started = time.perf_counter()
    lumped = kernel.compose(g)
    fibers: dict[int, list[int]] = {}
    for x, row in enumerate(g.rows):
        (y,) = row
        fibers.setdefault(y, []).append(x)
    for y, members in sorted(fibers.items()):
        reference = lumped.rows[members[0]]
        for other in members[1:]:
            diff = first_row_difference([reference], [lumped.rows[other]])
            if diff is not None:
                counterexample = {
                    "x1": describe(kernel.domain.states[members[0]]),
                    "x2": describe(kernel.domain.states[other]),
                    "y": describe(g.codomain.states[diff.column]),
                    "Kg_x1": diff.left,
                    "Kg_x2": diff.right,
                }
                rows = {
                    name: {describe(s): p for s, p in lumped.row_pmf(kernel.domain.states[idx]).items()}
                    for name, idx in (("Kg_row_x1", members[0]), ("Kg_row_x2", other))
                }
                report = _finish(
                    "kemeny-snell", parameters or {}, started, False, counterexample, **rows
                )
                return LumpingResult(report, None)
    if len(fibers) != len(g.codomain):
        raise ShapeMismatchError("g is not onto its codomain", {"image": len(fibers), "codomain": len(g.codomain)})
    induced = StochasticKernel(
        g.codomain,
        g.codomain,
        tuple(lumped.rows[fibers[y][0]] for y in range(len(g.codomain))),
        name=f"{kernel.name} lumped",
    )
    report = _finish(
        "kemeny-snell", parameters or {}, started, True, fibers=len(fibers), states=len(kernel.domain)
    )
    return LumpingResult(report, induced)


def check_intertwining(
    link: StochasticKernel[Any],
    p: StochasticKernel[Any],
    q: StochasticKernel[Any],
    parameters: dict[str, Any] | None = None,
) -> VerificationReport:
    """Whether ΛP = QΛ exactly; a failure names the (y, x) entry."""
    started = time.perf_counter()
    left = link.compose(p, name="Lambda P")
    right = q.compose(link, name="Q Lambda")
    diff = left.first_difference(right)
    if diff is not None:
        counterexample = {
            "y": describe(link.domain.states[diff.row]),
            "x": describe(p.codomain.states[diff.column]),
            "Lambda_P": diff.left,
            "Q_Lambda": diff.right,
        }
        return _finish("intertwining", parameters or {}, started, False, counterexample)
    return _finish("intertwining", parameters or {}, started, True, entries=left.n_entries)


def check_intertwining_power(
    link: StochasticKernel[Any],
    p: StochasticKernel[Any],
    g: StochasticKernel[Any],
    parameters: dict[str, Any] | None = None,
) -> VerificationReport:
    """Two-step consequence of intertwining: ΛP²g = (ΛPg)²."""
    started = time.perf_counter()
    q = link.compose(p).compose(g)
    left = link.compose(p).compose(p).compose(g)
    diff = left.first_difference(q.compose(q))
    if diff is not None:
        counterexample = {
            "y0": describe(link.domain.states[diff.row]),
            "y2": describe(g.codomain.states[diff.column]),
            "Lambda_P2_g": diff.left,
            "Q2": diff.right,
        }
        return _finish("intertwining-power", parameters or {}, started, False, counterexample)
    return _finish("intertwining-power", parameters or {}, started, True)


def check_collapsed_kemeny_snell(n: int, k: int) -> LumpingResult:
    """The collapsed chain ΛPρ⋆ lumps onto decorated trees by forgetting block contents."""
    setup = projection_setup("star", n, k)
    collapsed = setup.link.compose(ntree_kernel(n)).compose(setup.g, name="Q[star]")
    decorated = StateSpace.of(enumerate_decorated(n, k))
    sizes = deterministic_kernel(setup.states, decorated, CollapsedKTree.sizes, name="sizes")
    return check_kemeny_snell(collapsed, sizes, {"n": n, "k": k, "kernel": "Lambda P rho*", "g": "sizes"})


def check_direct_kemeny_snell(n: int, k: int) -> LumpingResult:
    """Kemeny–Snell for the uniform chain itself under ρ•; this pair is not lumpable."""
    setup = projection_setup("mass", n, k)
    return check_kemeny_snell(ntree_kernel(n), setup.g, {"n": n, "k": k, "kernel": "P", "g": "rho"})


def check_collapsed_intertwining(n: int, k: int) -> VerificationReport:
    """Λ⋆P = QΛ⋆ with Q = Λ⋆Pρ⋆, together with the two-step identity."""
    setup = projection_setup("star", n, k)
    p = ntree_kernel(n)
    q = setup.link.compose(p).compose(setup.g, name="Q[star]")
    params = {"n": n, "k": k, "projection": "star"}
    report = check_intertwining(setup.link, p, q, params)
    power = check_intertwining_power(setup.link, p, setup.g, params)
    report.details["two_step"] = power.verdict
    if report.passed and not power.passed:
        report.passed = False
        report.counterexample = power.counterexample
    return report


def check_consistency(n: int, k: int, cfg: DecoratedChainConfig) -> VerificationReport:
    """The decorated chain's kernel equals Λ•Pρ•, and the projected law is invariant."""
    started = time.perf_counter()
    alpha = cfg.move_alpha
    params = {"n": n, "k": k, "variant": cfg.variant, "alpha": alpha}
    setup = projection_setup("mass", n, k, alpha)
    p = ntree_kernel(n, None if cfg.variant == "uniform" else alpha)
    induced = setup.link.compose(p).compose(setup.g, name="Lambda P rho")
    direct = build_kernel(setup.states, lambda d: decorated_kernel_row(d, cfg), name="R")
    diff = direct.first_difference(induced)
    if diff is not None:
        counterexample = {
            "state": describe(setup.states.states[diff.row]),
            "next": describe(setup.states.states[diff.column]),
            "direct": diff.left,
            "induced": diff.right,
        }
        return _finish("consistency", params, started, False, counterexample)

    pi = growth_law(n, GrowthConfig(alpha)).pushforward(lambda t: project_mass(t, k))
    mismatch = _pmf_difference(direct.left_apply(pi), pi)
    if mismatch is not None:
        return _finish("consistency", params, started, False, {"stationarity": mismatch})
    return _finish("consistency", params, started, True, states=len(setup.states), entries=direct.n_entries)


def _projected_rows(
    p: StochasticKernel[Tree], images: list[Hashable]
) -> list[dict[Hashable, Fraction]]:
    rows = []
    for row in p.rows:
        acc: dict[Hashable, Fraction] = {}
        for x, prob in row.items():
            acc[images[x]] = acc.get(images[x], Fraction(0)) + prob
        rows.append(acc)
    return rows


def _three_slice(
    p: StochasticKernel[Tree],
    pg: list[dict[Hashable, Fraction]],
    images: list[Hashable],
    start: Mapping[int, Fraction],
) -> dict[tuple[Hashable, Hashable, Hashable], Fraction]:
    joint: dict[tuple[Hashable, Hashable, Hashable], Fraction] = {}
    for x0, p0 in start.items():
        for x1, p1 in p.rows[x0].items():
            for y2, p2 in pg[x1].items():
                key = (images[x0], images[x1], y2)
                joint[key] = joint.get(key, Fraction(0)) + p0 * p1 * p2
    return joint


def _point_mass_start(n: int, k: int) -> Tree:
    """Leaf 1 beside a comb on k+1..n, with 2..k joined above; ((1,(3,4)),2) at (4, 2)."""
    if k == n:
        t = Tree.leaf(1)
    else:
        t = Tree.leaf(k + 1)
        for j in range(k + 2, n + 1):
            t = insert_leaf(t, t.labels, j)
        t = insert_leaf(t, t.labels, 1)
    for j in range(2, k + 1):
        t = insert_leaf(t, t.labels, j)
    return t


def _first_mismatch(
    actual: Mapping[Any, Fraction],
    expected: Mapping[Any, Fraction],
    order: Mapping[Hashable, int],
) -> tuple[tuple[Hashable, ...], Fraction, Fraction] | None:
    for key in sorted(actual.keys() | expected.keys(), key=lambda ys: [order[y] for y in ys]):
        left, right = actual.get(key, Fraction(0)), expected.get(key, Fraction(0))
        if left != right:
            return key, left, right
    return None


def check_projective_chain_markov(
    n: int,
    k: int,
    projection: Literal["star", "beads"] = "beads",
    start: Tree | Literal["stationary", "point-mass"] = "stationary",
) -> VerificationReport:
    """Whether (Y0, Y1, Y2) = ρ(T0, T1, T2) moves by the stationary kernel R.

    R is the exact stationary two-slice kernel of the projected uniform chain.
    Slice 1 compares the law of (Y0, Y1) with μ(y0)R(y0,y1); slice 2 compares
    the law of (Y0, Y1, Y2) with P(y0,y1)R(y1,y2). ``start="point-mass"`` starts
    from one fixed tree (leaf 1 beside a comb on the labels above k); a Tree
    starts from that tree. The counterexample names the last slice that breaks.
    """
    started = time.perf_counter()
    if projection not in ("star", "beads"):
        raise ConfigurationError(f"markov-slices needs star or beads, got {projection!r}")
    _require(1 <= k <= n, f"k={k} outside 1..{n}", k=k, n=n)
    if start == "point-mass":
        start = _point_mass_start(n, k)
    elif not isinstance(start, Tree) and start != "stationary":
        raise ConfigurationError(f"unknown start {start!r}")
    name = start if isinstance(start, str) else describe(start)
    params = {"n": n, "k": k, "projection": projection, "start": name}

    p = ntree_kernel(n)
    project = projector(projection)
    images = [project(t, k) for t in p.domain]
    order = {state: idx for idx, state in enumerate(enumerate_states(projection, n, k))}
    pg = _projected_rows(p, images)

    pi = growth_law(n)
    stationary = {p.domain.position(t): q for t, q in pi.items() if q}
    marginal: dict[Hashable, Fraction] = {}
    two_slice: dict[Hashable, dict[Hashable, Fraction]] = {}
    for x0, p0 in stationary.items():
        y0 = images[x0]
        marginal[y0] = marginal.get(y0, Fraction(0)) + p0
        row = two_slice.setdefault(y0, {})
        for y1, q in pg[x0].items():
            row[y1] = row.get(y1, Fraction(0)) + p0 * q
    r = {y0: {y1: v / marginal[y0] for y1, v in row.items()} for y0, row in two_slice.items()}

    mu = stationary if start == "stationary" else {p.domain.position(start): Fraction(1)}
    joint = _three_slice(p, pg, images, mu)
    pair: dict[tuple[Hashable, ...], Fraction] = {}
    for (y0, y1, _), v in joint.items():
        pair[(y0, y1)] = pair.get((y0, y1), Fraction(0)) + v
    first: dict[Hashable, Fraction] = {}
    for x0, p0 in mu.items():
        first[images[x0]] = first.get(images[x0], Fraction(0)) + p0
    expected_pair = {(y0, y1): m * q for y0, m in first.items() for y1, q in r[y0].items()}
    expected_joint = {
        (*key, y2): v * q for key, v in pair.items() for y2, q in r[key[1]].items()
    }

    broken: dict[int, tuple[tuple[Hashable, ...], Fraction, Fraction]] = {}
    for slice_index, actual, expected in ((1, pair, expected_pair), (2, joint, expected_joint)):
        mismatch = _first_mismatch(actual, expected, order)
        if mismatch is not None:
            broken[slice_index] = mismatch
    if broken:
        slice_index = max(broken)
        key, left, right = broken[slice_index]
        counterexample = {
            "start": name,
            "breaks_at_slice": slice_index,
            "slices": [describe(y) for y in key],
            "joint": left,
            "factorized": right,
        }
        return _finish(
            "markov-slices", params, started, False, counterexample, breaks_at=sorted(broken)
        )
    return _finish("markov-slices", params, started, True, projected_states=len(r))


def _structure_probability(structure: InternalStructure, alpha: Fraction) -> Fraction:
    cfg = GrowthConfig(alpha, modified=not structure.external)
    return growth_pmf(structure.tree, cfg)


def check_spatial_markov(n: int, k: int, alpha: Fraction = HALF) -> VerificationReport:
    """Check internal structures are independent given the collapsed tree.

    Leaf edges carry q and internal edges carry q̃.
    """
    started = time.perf_counter()
    alpha = _open_alpha(alpha)
    params = {"n": n, "k": k, "alpha": alpha}
    _require(1 <= k <= n, f"k={k} outside 1..{n}", k=k, n=n)
    law = growth_law(n, GrowthConfig(alpha))
    fibers = law.fibers(lambda t: project_collapsed(t, k))
    for c, conditional in fibers.items():
        total = Fraction(0)
        for t, q in conditional.items():
            structures = internal_structures(t, k)
            product = Fraction(1)
            for structure in structures.values():
                product *= _structure_probability(structure, alpha)
            total += product
            if product != q or reassemble(c, structures) != t:
                counterexample = {"collapsed": describe(c), "tree": describe(t), "conditional": q, "product": product}
                return _finish("spatial-markov", params, started, False, counterexample)
        if total != 1:
            return _finish(
                "spatial-markov", params, started, False, {"collapsed": describe(c), "product_mass": total}
            )
    return _finish("spatial-markov", params, started, True, collapsed_states=len(fibers))


def _spine_split(t: Tree) -> tuple[int, Tree, Tree]:
    """(mass of the first spinal subtree of leaf 1, its rank-relabelled tree, the rest)."""
    first = spinal_subtrees(t, 1)[0]
    rest = t
    for label in sorted(first.labels):
        rest = delete_leaf(rest, label)
    return len(first.labels), rank_relabel(subtree(t, first.root_edge)), rank_relabel(rest)


def check_decrement(n: int, alpha: Fraction = HALF) -> VerificationReport:
    """Spinal decomposition of q̃_{n+1,α} at leaf 1.

    The first subtree has mass M ~ δ_α(n:·); given M = m its shape follows
    q_{m,α} and the remaining tree follows q̃_{n+1-m,α}, independently.
    """
    started = time.perf_counter()
    alpha = _open_alpha(alpha)
    params = {"n": n, "alpha": alpha}
    if n < 1:
        raise ChainSizeError(n, 1)
    law = growth_law(n + 1, GrowthConfig(alpha, modified=True))
    split = law.pushforward(_spine_split)
    masses = split.pushforward(lambda s: s[0])
    mismatch = _pmf_difference(masses, decrement_pmf(n, alpha))
    if mismatch is not None:
        return _finish("decrement", params, started, False, {"first_mass": mismatch})
    for m, conditional in split.fibers(lambda s: s[0]).items():
        pairs = conditional.pushforward(lambda s: (s[1], s[2]))
        upper = growth_law(m, GrowthConfig(alpha))
        lower = growth_law(n + 1 - m, GrowthConfig(alpha, modified=True))
        expected = FinitePmf.from_weights(
            ((u, v), pu * pv) for u, pu in upper.items() for v, pv in lower.items()
        )
        mismatch = _pmf_difference(pairs, expected)
        if mismatch is not None:
            return _finish("decrement", params, started, False, {"m": m, **mismatch})
    details: dict[str, Any] = {}
    if alpha == HALF:
        bridge = _pmf_difference(decrement_pmf(n, alpha), bridge_return_pmf(n))
        if bridge is not None:
            return _finish("decrement", params, started, False, {"bridge_form": bridge})
        details["bridge_form"] = "pass"
    return _finish("decrement", params, started, True, **details)


def _down_joint(n: int, alpha: Fraction, compact: bool) -> FinitePmf[Any]:
    law = growth_law(n, GrowthConfig(alpha))
    return FinitePmf.from_weights(
        (outcome, q / n) for t, q in law.items() if q for outcome in down_outcomes(t, compact)
    )


def check_resample_law(n: int, alpha: Fraction = HALF) -> VerificationReport:
    """Law of ĩ under stationarity against its closed form."""
    started = time.perf_counter()
    alpha = _open_alpha(alpha)
    params = {"n": n, "alpha": alpha}
    if n < 3:
        raise ChainSizeError(n, 3)
    tally = _down_joint(n, alpha, compact=True).pushforward(lambda o: o.i_tilde)
    mismatch = _pmf_difference(tally, resampled_label_pmf(n, alpha))
    return _finish("resample-law", params, started, mismatch is None, mismatch)


def check_down_invariance(n: int, alpha: Fraction = HALF) -> VerificationReport:
    """Given (i, ĩ), the tree after the down-move and relabelling follows q_{n-1,α}."""
    started = time.perf_counter()
    alpha = as_alpha(alpha)
    params = {"n": n, "alpha": alpha}
    if n < 3:
        raise ChainSizeError(n, 3)
    target = growth_law(n - 1, GrowthConfig(alpha))
    fibers = _down_joint(n, alpha, compact=True).fibers(lambda o: (o.i, o.i_tilde))
    for (i, i_tilde), conditional in sorted(fibers.items()):
        mismatch = _pmf_difference(conditional.pushforward(lambda o: o.reduced), target)
        if mismatch is not None:
            return _finish("down-invariance", params, started, False, {"i": i, "i_tilde": i_tilde, **mismatch})
    return _finish("down-invariance", params, started, True, pairs=len(fibers))


def check_marginal_law(n: int, k: int, alpha: Fraction = HALF) -> VerificationReport:
    """ρ•-pushforward of q_{n,α} against q_{k,α} × Dirichlet-multinomial masses."""
    started = time.perf_counter()
    alpha = _open_alpha(alpha)
    params = {"n": n, "k": k, "alpha": alpha}
    pushed = growth_law(n, GrowthConfig(alpha)).pushforward(lambda t: project_mass(t, k))
    mismatch = _pmf_difference(pushed, decorated_marginal_pmf(n, k, alpha))
    return _finish("marginal-law", params, started, mismatch is None, mismatch, states=len(pushed))


def check_insertion_law(m: int, k: int, alpha: Fraction = HALF) -> VerificationReport:
    """Under q_{m,α}, the k-projection given the (k-1)-projection is the label-insertion law."""
    started = time.perf_counter()
    alpha = _open_alpha(alpha)
    params = {"n": m, "k": k, "alpha": alpha}
    _require(2 <= k <= m, f"k={k} outside 2..{m}", k=k, n=m)
    fibers = growth_law(m, GrowthConfig(alpha)).fibers(lambda t: project_mass(t, k - 1))
    for d, conditional in fibers.items():
        mismatch = _pmf_difference(
            conditional.pushforward(lambda t: project_mass(t, k)), insert_label_pmf(d, alpha)
        )
        if mismatch is not None:
            return _finish("insertion-law", params, started, False, {"given": describe(d), **mismatch})
    return _finish("insertion-law", params, started, True, conditioning_states=len(fibers))


def check_resampling_law(n: int, k: int, i: int) -> VerificationReport:
    """Uniform trees: ρ_k(T) given the projection of T ∩ [n-1] onto [k]∖{i} is the reattachment law."""
    started = time.perf_counter()
    params = {"n": n, "k": k, "label": i}
    _require(2 <= k < n, f"k={k} outside 2..{n - 1}", k=k, n=n)
    _require(1 <= i <= k, f"label {i} outside 1..{k}", label=i, k=k)
    keep = mask_of(j for j in range(1, k + 1) if j != i)
    fibers = growth_law(n).fibers(lambda t: project_mass_onto(delete_leaf(t, n), keep))
    for d, conditional in fibers.items():
        mismatch = _pmf_difference(
            conditional.pushforward(lambda t: project_mass(t, k)), reattach_label_pmf(d, i)
        )
        if mismatch is not None:
            return _finish("resampling-law", params, started, False, {"given": describe(d), **mismatch})
    return _finish("resampling-law", params, started, True, conditioning_states=len(fibers))


def first_drop_pmf(n: int, k: int, cfg: DecoratedChainConfig) -> FinitePmf[int]:
    """Law of the first label dropped in case C, started from the stationary decorated law.

    With N the case-A/B part of the kernel and B[x, j] the probability of a
    case-C move dropping j, the absorption probabilities solve (I - N) H = B.
    """
    alpha = cfg.move_alpha
    states = StateSpace.of(enumerate_decorated(n, k))
    labels = list(range(2, k + 1))
    size = len(states)
    check_size(f"first-drop system over {size} states", size * size)
    keep = np.full((size, size), Fraction(0), dtype=object)
    absorb = np.full((size, len(labels)), Fraction(0), dtype=object)
    for x, d in enumerate(states):
        for transition in decorated_transitions(d, cfg):
            dropped = transition.move.dropped
            if dropped is None:
                keep[x, states.position(transition.state)] += transition.probability
            else:
                absorb[x, dropped - 2] += transition.probability
    h = solve_linear_system(identity_matrix(size) - keep, absorb)
    pi = decorated_marginal_pmf(n, k, alpha)
    weights = [
        (label, sum((p * h[states.position(d), col] for d, p in pi.items()), Fraction(0)))
        for col, label in enumerate(labels)
    ]
    return FinitePmf.from_weights(weights)


def check_first_drop_law(
    n: int, k: int, alpha: Fraction = HALF, variant: Literal["uniform", "alpha"] = "alpha"
) -> VerificationReport:
    """First case-C label of the stationary decorated chain against the resampled-label law on [k]."""
    started = time.perf_counter()
    cfg = DecoratedChainConfig("uniform") if variant == "uniform" else DecoratedChainConfig("alpha", alpha)
    params = {"n": n, "k": k, "alpha": cfg.move_alpha, "variant": variant}
    _require(2 <= k <= n, f"k={k} outside 2..{n}", k=k, n=n)
    mismatch = _pmf_difference(first_drop_pmf(n, k, cfg), label_law(k, cfg.move_alpha))
    return _finish("first-drop-law", params, started, mismatch is None, mismatch)


def check_state_space(n: int, k: int, kind: ProjectionKind = "mass") -> VerificationReport:
    """Directly enumerated k-states are exactly the projection images of 𝕋_[n]."""
    started = time.perf_counter()
    params = {"n": n, "k": k, "projection": kind}
    direct = enumerate_states(kind, n, k)
    project = projector(kind)
    images = {project(t, k) for t in tree_space(n)}
    if len(set(direct)) != len(direct):
        return _finish("state-space", params, started, False, {"reason": "duplicate enumerated state"})
    missing = [s for s in direct if s not in images]
    if missing:
        return _finish("state-space", params, started, False, {"unreachable": describe(missing[0])})
    extra = images - set(direct)
    if extra:
        return _finish("state-space", params, started, False, {"not_enumerated": describe(next(iter(extra)))})
    return _finish("state-space", params, started, True, states=len(direct))


def run_named_check(
    name: str,
    n: int,
    k: int | None = None,
    alpha: Fraction | None = None,
    projection: str | None = None,
    start: str = "stationary",
    label: int = 1,
) -> list[VerificationReport]:
    """Dispatch a check by its command-line name.

    For kemeny-snell, projection "mass" selects the uniform chain paired
    directly with ρ•, which is not lumpable; the default is the collapsed
    chain under ρ⋆.

    Returns the reports of the check (currently always one).

    Raises:
        ConfigurationError: For unknown names or missing k
    """

    def need_k() -> int:
        if k is None:
            raise ConfigurationError(f"check {name} needs --k")
        return k

    a = alpha if alpha is not None else HALF
    dispatch: dict[str, Callable[[], list[VerificationReport]]] = {
        "stationarity": lambda: [check_ntree_stationarity(n, alpha)],
        "kemeny-snell": lambda: [
            check_direct_kemeny_snell(n, need_k()).report
            if projection == "mass"
            else check_collapsed_kemeny_snell(n, need_k()).report
        ],
        "intertwining": lambda: [check_collapsed_intertwining(n, need_k())],
        "consistency": lambda: [
            check_consistency(
                n,
                need_k(),
                DecoratedChainConfig("uniform") if alpha is None else DecoratedChainConfig("alpha", alpha),
            )
        ],
        "spatial-markov": lambda: [check_spatial_markov(n, need_k(), a)],
        "decrement": lambda: [check_decrement(n, a)],
        "markov-slices": lambda: [
            check_projective_chain_markov(n, need_k(), projection or "beads", start)  # type: ignore[arg-type]
        ],
        "resample-law": lambda: [check_resample_law(n, a)],
        "first-drop-law": lambda: [
            check_first_drop_law(n, need_k(), a, "uniform" if alpha is None else "alpha")
        ],
        "down-invariance": lambda: [check_down_invariance(n, a)],
        "marginal-law": lambda: [check_marginal_law(n, need_k(), a)],
        "insertion-law": lambda: [check_insertion_law(n, need_k(), a)],
        "resampling-law": lambda: [check_resampling_law(n, need_k(), label)],
        "state-space": lambda: [check_state_space(n, need_k(), projection or "mass")],  # type: ignore[arg-type]
    }
    try:
        runner = dispatch[name]
    except KeyError:
        raise ConfigurationError(f"unknown check {name!r}", {"known": sorted(dispatch)}) from None
    return runner()


def summarize(reports: Iterable[VerificationReport]) -> dict[str, Any]:
    reports = list(reports)
    return {
        "passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
