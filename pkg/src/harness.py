"""Monte Carlo replication and goodness-of-fit against exact laws.

Replicas start from exact stationary samplers, so every recorded state is a
stationary draw. Replica r uses RNG stream r under the run seed; summaries
merge by adding counters, so the merged result does not depend on the order
in which replicas finish.
"""

import csv
import logging
import math
import time
from collections import Counter
from collections.abc import Callable, Hashable, Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_serializer,
    field_validator,
    model_validator,
)
from scipy.stats import chi2

from .config import get_settings
from .constants import GOF_MIN_EXPECTED, GOF_PASS_THRESHOLD
from .decorated_chain import DecoratedChainConfig, decorated_step
from .distributions import FinitePmf, RngStream, as_alpha, dm_sample
from .exceptions import DistributionError, DownUpError, InvalidPmfError, SimSpecError
from .growth import GrowthConfig, growth_law, sample_tree
from .ntree_chain import alpha_step, uniform_step
from .projection import DecoratedKTree, decorated_marginal_pmf, projector, state_to_json

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)
_UINT64 = 2**64

ChainName = Literal["uniform", "alpha", "dec-uniform", "dec-alpha"]
ProjectionName = Literal["none", "mass", "star", "beads"]


class SimSpec(BaseModel):
    """Validated description of a simulation run."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    chain: ChainName
    n: int = Field(ge=3)
    k: int | None = Field(default=None, ge=1)
    alpha: Fraction | None = None
    steps: int = Field(ge=1)
    replicas: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=_UINT64)
    projection: ProjectionName = "none"
    thin: int = Field(default=1, ge=1)
    burn_in: int = Field(default=0, ge=0)

    @field_validator("alpha", mode="before")
    @classmethod
    def _parse_alpha(cls, value: Any) -> Fraction | None:
        if value is None:
            return None
        try:
            return as_alpha(value)
        except DownUpError as exc:
            raise ValueError(exc.message) from exc

    @field_serializer("alpha")
    def _dump_alpha(self, value: Fraction | None) -> str | None:
        return None if value is None else str(value)

    @model_validator(mode="after")
    def _check_combination(self) -> "SimSpec":
        decorated = self.chain.startswith("dec-")
        if self.chain in ("alpha", "dec-alpha"):
            if self.alpha is None:
                raise ValueError(f"chain {self.chain} needs alpha")
            if self.chain == "dec-alpha" and not 0 < self.alpha < 1:
                raise ValueError("dec-alpha needs 0 < alpha < 1")
        elif self.alpha is not None:
            raise ValueError(f"chain {self.chain} takes no alpha")
        if decorated and self.projection != "none":
            raise ValueError("decorated chains are already projected; use projection none")
        if (decorated or self.projection != "none") and self.k is None:
            raise ValueError("k is required for decorated chains and projections")
        if self.k is not None and self.k > self.n:
            raise ValueError(f"k={self.k} exceeds n={self.n}")
        if self.projection != "none" and self.alpha is not None and not 0 < self.alpha < 1:
            raise ValueError("projected runs need 0 < alpha < 1")
        return self

    @classmethod
    def build(cls, **fields: Any) -> "SimSpec":
        """Validate fields, raising SimSpecError instead of pydantic's error."""
        try:
            return cls(**fields)
        except ValidationError as exc:
            errors = [
                {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
                for err in exc.errors()
            ]
            raise SimSpecError("invalid simulation spec", {"errors": errors}) from None

    @property
    def decorated(self) -> bool:
        return self.chain.startswith("dec-")

    @property
    def law_alpha(self) -> Fraction:
        return self.alpha if self.alpha is not None else HALF


@dataclass
class SimSummary:
    """Counts of recorded states and of transitions between consecutive recorded states.

    States are keyed by their compact JSON text.
    """

    occupancy: Counter[str] = field(default_factory=Counter)
    transitions: Counter[tuple[str, str]] = field(default_factory=Counter)
    trajectory: list[str] = field(default_factory=list)
    replicas: int = 0

    @property
    def total(self) -> int:
        return sum(self.occupancy.values())

    def merge(self, other: "SimSummary") -> "SimSummary":
        return SimSummary(
            self.occupancy + other.occupancy,
            self.transitions + other.transitions,
            self.trajectory or other.trajectory,
            self.replicas + other.replicas,
        )

    def write_counts_csv(self, path: Path | str) -> None:
        """Occupancy counts with columns state, count, in decreasing count order."""
        with Path(path).open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["state", "count"])
            for state, count in sorted(self.occupancy.items(), key=lambda kv: (-kv[1], kv[0])):
                writer.writerow([state, count])

    def write_transitions_csv(self, path: Path | str) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["state", "next", "count"])
            for (state, nxt), count in sorted(self.transitions.items()):
                writer.writerow([state, nxt, count])

    def write_trajectory(self, path: Path | str) -> None:
        Path(path).write_text("".join(line + "\n" for line in self.trajectory), encoding="utf-8")


def read_counts_csv(path: Path | str) -> dict[str, int]:
    """Read counts written by SimSummary.write_counts_csv."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        try:
            return {row["state"]: int(row["count"]) for row in csv.DictReader(handle)}
        except (KeyError, ValueError) as exc:
            raise InvalidPmfError(f"cannot read counts from {path}: {exc}") from exc


def stationary_pushforward_sampler(
    n: int, k: int | None, alpha: Fraction, projection: ProjectionName, rng: RngStream
) -> Any:
    """One draw from the projection of q_{n,α}.

    The decorated projection is drawn compositionally: a q_{k,α} shape, then
    the n-k extra units split by a Pólya urn with weights 1-α per leaf edge
    and α per internal edge, plus one unit on each leaf edge.
    """
    if projection == "none":
        return sample_tree(n, GrowthConfig(alpha), rng)
    if k is None or not 1 <= k <= n:
        raise SimSpecError("projection needs 1 <= k <= n", {"n": n, "k": k})
    if projection == "mass":
        alpha = as_alpha(alpha, open_interval=True)
        shape = sample_tree(k, GrowthConfig(alpha), rng)
        edges = shape.sorted_edges
        weights = [1 - alpha if e.bit_count() == 1 else alpha for e in edges]
        counts = dm_sample(n - k, weights, rng)
        return DecoratedKTree(
            shape,
            tuple((e, c + (e.bit_count() == 1)) for e, c in zip(edges, counts, strict=True)),
        )
    return projector(projection)(sample_tree(n, GrowthConfig(alpha), rng), k)


def stationary_pushforward_pmf(
    n: int, k: int | None, alpha: Fraction, projection: ProjectionName = "mass"
) -> FinitePmf[Any]:
    """Exact law targeted by stationary_pushforward_sampler."""
    if projection == "none":
        return growth_law(n, GrowthConfig(alpha))
    if k is None:
        raise SimSpecError("projection needs k", {"n": n})
    if projection == "mass":
        return decorated_marginal_pmf(n, k, alpha)
    project = projector(projection)
    return growth_law(n, GrowthConfig(alpha)).pushforward(lambda t: project(t, k))


def expected_occupancy(spec: SimSpec) -> FinitePmf[str]:
    """Exact stationary law of the recorded states, keyed like SimSummary."""
    projection: ProjectionName = "mass" if spec.decorated else spec.projection
    law = stationary_pushforward_pmf(spec.n, spec.k, spec.law_alpha, projection)
    return law.pushforward(state_to_json)


def _initial_state(spec: SimSpec, rng: RngStream) -> Any:
    if spec.decorated:
        return stationary_pushforward_sampler(spec.n, spec.k, spec.law_alpha, "mass", rng)
    return sample_tree(spec.n, GrowthConfig(spec.law_alpha), rng)


def _stepper(spec: SimSpec) -> Callable[[Any, RngStream], Any]:
    if spec.chain == "uniform":
        return uniform_step
    if spec.chain == "alpha":
        alpha = spec.law_alpha
        return lambda t, rng: alpha_step(t, alpha, rng)
    if spec.chain == "dec-uniform":
        cfg = DecoratedChainConfig("uniform")
    else:
        cfg = DecoratedChainConfig("alpha", spec.alpha)
    return lambda d, rng: decorated_step(d, cfg, rng)


def _observer(spec: SimSpec) -> Callable[[Any], str]:
    if spec.projection == "none":
        return state_to_json
    project = projector(spec.projection)
    k = spec.k
    return lambda t: state_to_json(project(t, k))


def run_replica(spec: SimSpec, stream_id: int, keep_trajectory: bool = False) -> SimSummary:
    """Run one replica on its own stream."""
    rng = RngStream(spec.seed, stream_id)
    step = _stepper(spec)
    observe = _observer(spec)
    state = _initial_state(spec, rng)
    for _ in range(spec.burn_in):
        state = step(state, rng)

    summary = SimSummary(replicas=1)
    previous = observe(state)
    if keep_trajectory:
        summary.trajectory.append(previous)
    for t in range(1, spec.steps + 1):
        state = step(state, rng)
        if t % spec.thin:
            continue
        current = observe(state)
        summary.occupancy[current] += 1
        summary.transitions[(previous, current)] += 1
        if keep_trajectory:
            summary.trajectory.append(current)
        previous = current
    return summary


def run_sim(spec: SimSpec, workers: int | None = None, trajectory: bool = False) -> SimSummary:
    """Run every replica and merge their counts.

    Args:
        spec: Validated run description
        workers: Process count; defaults to DOWNUP_WORKERS
        trajectory: Keep the recorded states of replica 0

    Returns:
        Summary whose occupancy total is (steps // thin) * replicas
    """
    started = time.perf_counter()
    workers = workers if workers is not None else get_settings().workers
    keep = [trajectory and r == 0 for r in range(spec.replicas)]
    if workers > 1 and spec.replicas > 1:
        with ProcessPoolExecutor(max_workers=min(workers, spec.replicas)) as pool:
            parts = list(pool.map(run_replica, [spec] * spec.replicas, range(spec.replicas), keep))
    else:
        parts = [run_replica(spec, r, keep[r]) for r in range(spec.replicas)]

    merged = SimSummary()
    for part in parts:
        merged = merged.merge(part)
    logger.info(
        "Ran %s: %d replicas x %d steps, %d recorded states in %.2fs",
        spec.chain,
        spec.replicas,
        spec.steps,
        merged.total,
        time.perf_counter() - started,
    )
    return merged


@dataclass(frozen=True)
class GofResult:
    """Pearson chi-square test plus total-variation distance."""

    statistic: float
    dof: int
    p_value: float
    tv: float
    sample_size: int
    cells: int

    @property
    def passed(self) -> bool:
        return self.p_value > GOF_PASS_THRESHOLD

    def to_dict(self) -> dict[str, Any]:
        return {
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "tv": self.tv,
            "sample_size": self.sample_size,
            "cells": self.cells,
            "verdict": "pass" if self.passed else "fail",
        }


def _pool(cells: list[tuple[float, int]], minimum: float) -> list[tuple[float, int]]:
    """Merge consecutive cells until each expected count reaches ``minimum``."""
    pooled: list[tuple[float, int]] = []
    expected, observed = 0.0, 0
    for e, o in cells:
        expected += e
        observed += o
        if expected >= minimum:
            pooled.append((expected, observed))
            expected, observed = 0.0, 0
    if expected or observed:
        if pooled:
            last_e, last_o = pooled.pop()
            pooled.append((last_e + expected, last_o + observed))
        else:
            pooled.append((expected, observed))
    return pooled


def gof_test(
    observed: Mapping[Hashable, int],
    expected: FinitePmf[Any],
    min_expected: float = GOF_MIN_EXPECTED,
) -> GofResult:
    """Pearson chi-square of observed counts against an exact law.

    Cells are taken in the law's support order and pooled left to right until
    each has expected count at least ``min_expected``. Observations outside
    the support make the statistic infinite.

    Raises:
        DistributionError: If there are no observations
    """
    size = sum(observed.values())
    if size <= 0:
        raise DistributionError("goodness-of-fit needs at least one observation")
    outside = {key: c for key, c in observed.items() if c and expected.prob(key) == 0}
    if outside:
        logger.warning("%d observed cells lie outside the expected support", len(outside))

    tv = 0.5 * sum(abs(observed.get(key, 0) / size - float(p)) for key, p in expected.items())
    tv += 0.5 * sum(outside.values()) / size

    cells = [(size * float(p), observed.get(key, 0)) for key, p in expected.items() if p]
    pooled = _pool(cells, min_expected)
    logger.debug("Pooled %d cells into %d", len(cells), len(pooled))
    dof = len(pooled) - 1
    if outside:
        statistic, p_value = math.inf, 0.0
    elif dof == 0:
        statistic, p_value = 0.0, 1.0
    else:
        statistic = sum((o - e) ** 2 / e for e, o in pooled)
        p_value = float(chi2.sf(statistic, dof))
    return GofResult(statistic, dof, p_value, min(tv, 1.0), size, len(pooled))


def empirical_row_tv(
    summary: SimSummary,
    exact_row_fn: Callable[[Any], FinitePmf[Any]],
    state: Any,
) -> float:
    """Total variation between the observed transitions out of ``state`` and its exact row.

    Meaningful for runs recorded with thin = 1.

    Raises:
        DistributionError: If the state was never left in the recorded run
    """
    key = state_to_json(state)
    row = Counter({nxt: c for (src, nxt), c in summary.transitions.items() if src == key})
    visits = sum(row.values())
    if not visits:
        raise DistributionError("state never visited", {"state": key})
    exact = exact_row_fn(state).pushforward(state_to_json)
    keys = set(row) | set(exact.support)
    return 0.5 * sum(abs(row.get(k, 0) / visits - float(exact.prob(k))) for k in keys)
