"""Exact and sampled probability kernels shared by every chain.

Exact laws are ``FinitePmf`` values with ``fractions.Fraction`` probabilities.
Random draws go through ``RngStream``, a Philox counter-based generator
addressed by (seed, stream id). Dirichlet-multinomial draws run the Pólya urn
step by step rather than sampling a Dirichlet vector.
"""

import csv
import logging
import re
from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import comb, factorial
from pathlib import Path
from typing import Generic, TypeVar

import numpy as np

from .exceptions import (
    AlphaFormatError,
    EmptyUrnError,
    InvalidAlphaError,
    InvalidDrawCountError,
    InvalidPmfError,
    InvalidWeightError,
)

logger = logging.getLogger(__name__)

Rational = Fraction
T = TypeVar("T", bound=Hashable)
U = TypeVar("U", bound=Hashable)

_ALPHA_PATTERN = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")
_UINT64 = 2**64


def parse_alpha(text: str) -> Fraction:
    """Parse an exact "p/q" string.

    Raises:
        AlphaFormatError: If the text is not two non-negative integers separated by "/"
    """
    match = _ALPHA_PATTERN.match(text)
    if match is None or int(match.group(2)) == 0:
        raise AlphaFormatError(text)
    return Fraction(int(match.group(1)), int(match.group(2)))


def as_alpha(value: Fraction | int | str, *, open_interval: bool = False) -> Fraction:
    """Coerce and range-check alpha.

    Args:
        value: A Fraction, an int, or a "p/q" string (floats are rejected)
        open_interval: Require 0 < alpha < 1 instead of 0 <= alpha <= 1

    Raises:
        AlphaFormatError: For strings not in p/q form
        InvalidAlphaError: For floats or values out of range
    """
    if isinstance(value, str):
        alpha = parse_alpha(value)
    elif isinstance(value, Fraction | int) and not isinstance(value, bool):
        alpha = Fraction(value)
    else:
        raise InvalidAlphaError(value, "rational numbers")
    if open_interval and not 0 < alpha < 1:
        raise InvalidAlphaError(alpha, "(0, 1)")
    if not 0 <= alpha <= 1:
        raise InvalidAlphaError(alpha, "[0, 1]")
    return alpha


def rising(x: Fraction, k: int) -> Fraction:
    """Rising factorial x (x+1) ... (x+k-1); equals Γ(x+k)/Γ(x)."""
    out = Fraction(1)
    for step in range(k):
        out *= x + step
    return out


@dataclass(frozen=True)
class FinitePmf(Generic[T]):
    """A probability mass function with exact rational probabilities.

    Attributes:
        support: Distinct outcomes, in a caller-chosen (usually canonical) order
        probs: Matching probabilities, summing to exactly one
    """

    support: tuple[T, ...]
    probs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probs):
            raise InvalidPmfError(
                "support and probabilities differ in length",
                {"support": len(self.support), "probs": len(self.probs)},
            )
        if not self.support:
            raise InvalidPmfError("empty support")
        if len(set(self.support)) != len(self.support):
            raise InvalidPmfError("support entries must be distinct")
        if any(p < 0 for p in self.probs):
            raise InvalidPmfError("negative probability")
        total = sum(self.probs, Fraction(0))
        if total != 1:
            raise InvalidPmfError(f"probabilities sum to {total}", {"total": str(total)})

    @classmethod
    def from_weights(
        cls, weights: Mapping[T, Fraction | int] | Iterable[tuple[T, Fraction | int]]
    ) -> "FinitePmf[T]":
        """Normalize nonnegative weights; repeated outcomes accumulate, zeros are dropped."""
        pairs = weights.items() if isinstance(weights, Mapping) else weights
        acc: dict[T, Fraction] = {}
        for outcome, weight in pairs:
            if weight < 0:
                raise InvalidPmfError("negative weight", {"outcome": str(outcome)})
            acc[outcome] = acc.get(outcome, Fraction(0)) + weight
        total = sum(acc.values(), Fraction(0))
        if total <= 0:
            raise InvalidPmfError("weights sum to zero")
        kept = [(o, Fraction(w) / total) for o, w in acc.items() if w]
        return cls(tuple(o for o, _ in kept), tuple(p for _, p in kept))

    @classmethod
    def point_mass(cls, outcome: T) -> "FinitePmf[T]":
        return cls((outcome,), (Fraction(1),))

    @cached_property
    def as_dict(self) -> dict[T, Fraction]:
        return dict(zip(self.support, self.probs, strict=True))

    def prob(self, outcome: T) -> Fraction:
        return self.as_dict.get(outcome, Fraction(0))

    def items(self) -> Iterator[tuple[T, Fraction]]:
        return zip(self.support, self.probs, strict=True)

    def __len__(self) -> int:
        return len(self.support)

    def pushforward(self, fn: Callable[[T], U]) -> "FinitePmf[U]":
        """Law of fn(X) for X with this law."""
        return FinitePmf.from_weights((fn(o), p) for o, p in self.items())

    def fibers(self, fn: Callable[[T], U]) -> dict[U, "FinitePmf[T]"]:
        """Conditional laws given fn(X), keyed by the value of fn."""
        grouped: dict[U, list[tuple[T, Fraction]]] = {}
        for outcome, p in self.items():
            if p:
                grouped.setdefault(fn(outcome), []).append((outcome, p))
        return {key: FinitePmf.from_weights(pairs) for key, pairs in grouped.items()}

    def sorted_by(self, key: Callable[[T], object]) -> "FinitePmf[T]":
        order = sorted(range(len(self.support)), key=lambda idx: key(self.support[idx]))  # type: ignore[arg-type,return-value]
        return FinitePmf(
            tuple(self.support[idx] for idx in order), tuple(self.probs[idx] for idx in order)
        )

    def total_variation(self, other: "FinitePmf[T]") -> Fraction:
        keys = set(self.support) | set(other.support)
        return sum((abs(self.prob(k) - other.prob(k)) for k in keys), Fraction(0)) / 2


def mixture(components: Iterable[tuple[Fraction, FinitePmf[T]]]) -> FinitePmf[T]:
    """Mix laws with the given mixing weights (which must sum to one)."""
    return FinitePmf.from_weights(
        (outcome, weight * p) for weight, pmf in components for outcome, p in pmf.items()
    )


class RngStream:
    """Random stream addressed by (seed, stream id).

    Streams with the same address reproduce the same draws; streams with
    different ids are independent. Each replica owns its stream.
    """

    def __init__(self, seed: int, stream_id: int = 0) -> None:
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if not 0 <= value < _UINT64:
                raise InvalidWeightError(
                    f"{name} must be an unsigned 64-bit integer", {name: value}
                )
        self.seed = seed
        self.stream_id = stream_id
        sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def random(self) -> float:
        return float(self._generator.random())

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)."""
        return int(self._generator.integers(low, high))

    def choice_index(self, weights: Sequence[Fraction | float | int]) -> int:
        """Index drawn with probability proportional to nonnegative weights."""
        floats = [float(w) for w in weights]
        total = sum(floats)
        if total <= 0:
            raise InvalidWeightError("selection weights sum to zero")
        target = self.random() * total
        running = 0.0
        last = 0
        for idx, weight in enumerate(floats):
            if weight <= 0:
                continue
            running += weight
            last = idx
            if target < running:
                return idx
        return last

    def sample(self, pmf: FinitePmf[T]) -> T:
        return pmf.support[self.choice_index(pmf.probs)]


def weak_compositions(m: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All ways to write m as an ordered sum of ``parts`` nonnegative integers, lexicographically."""
    if parts == 0:
        if m == 0:
            yield ()
        return
    if parts == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in weak_compositions(m - first, parts - 1):
            yield (first, *rest)


def compositions(m: int) -> Iterator[tuple[int, ...]]:
    """All compositions of m into positive parts (the empty one for m=0), lexicographically."""
    if m == 0:
        yield ()
        return
    for first in range(1, m + 1):
        for rest in compositions(m - first):
            yield (first, *rest)


def _check_weights(weights: Sequence[Fraction | int]) -> tuple[Fraction, ...]:
    if not weights:
        raise EmptyUrnError("an urn needs at least one color")
    checked = tuple(Fraction(w) for w in weights)
    if any(w <= 0 for w in checked):
        raise InvalidWeightError(
            "weights must be positive", {"weights": [str(w) for w in checked]}
        )
    return checked


@lru_cache(maxsize=4096)
def _dm_pmf(m: int, weights: tuple[Fraction, ...]) -> FinitePmf[tuple[int, ...]]:
    denominator = rising(sum(weights, Fraction(0)), m)
    support = []
    probs = []
    for counts in weak_compositions(m, len(weights)):
        p = Fraction(factorial(m))
        for weight, count in zip(weights, counts, strict=True):
            p *= rising(weight, count) / factorial(count)
        support.append(counts)
        probs.append(p / denominator)
    return FinitePmf(tuple(support), tuple(probs))


def dm_pmf(m: int, weights: Sequence[Fraction | int]) -> FinitePmf[tuple[int, ...]]:
    """Dirichlet-multinomial law of the color counts after m Pólya-urn draws.

    Args:
        m: Number of draws (m=0 gives the point mass at the zero vector)
        weights: Positive initial weights, one per color

    Raises:
        InvalidWeightError: If a weight is not positive
        InvalidDrawCountError: If m is negative
    """
    if m < 0:
        raise InvalidDrawCountError(m)
    return _dm_pmf(m, _check_weights(weights))


@dataclass(frozen=True)
class UrnState:
    """A generalized Pólya urn: initial weights plus the counts drawn so far."""

    weights: tuple[Fraction, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_weights(self.weights)
        if len(self.counts) != len(self.weights):
            raise InvalidWeightError("counts and weights differ in length")
        if any(c < 0 for c in self.counts):
            raise InvalidWeightError("counts must be nonnegative")

    @classmethod
    def fresh(cls, weights: Sequence[Fraction | int]) -> "UrnState":
        checked = _check_weights(weights)
        return cls(checked, (0,) * len(checked))

    def selection_weights(self) -> tuple[Fraction, ...]:
        return tuple(w + c for w, c in zip(self.weights, self.counts, strict=True))

    def incremented(self, color: int) -> "UrnState":
        counts = list(self.counts)
        counts[color] += 1
        return UrnState(self.weights, tuple(counts))


def urn_selection_pmf(u: UrnState) -> FinitePmf[int]:
    """Exact law of the color chosen by the next urn draw."""
    return FinitePmf.from_weights(enumerate(u.selection_weights()))


def urn_step(u: UrnState, rng: RngStream) -> UrnState:
    """Draw one ball: color c with probability (w_c + counts_c) / Σ(w + counts)."""
    return u.incremented(rng.choice_index(u.selection_weights()))


def dm_sample(m: int, weights: Sequence[Fraction | int], rng: RngStream) -> tuple[int, ...]:
    """Draw from dm_pmf(m, weights) by running the urn for m steps."""
    if m < 0:
        raise InvalidDrawCountError(m)
    urn = UrnState.fresh(weights)
    for _ in range(m):
        urn = urn_step(urn, rng)
    return urn.counts


@lru_cache(maxsize=1024)
def decrement_pmf(n: int, alpha: Fraction) -> FinitePmf[int]:
    """Law of the first block of an (alpha, alpha) regenerative composition of n.

    δ_α(n:m) = α C(n,m) Γ(m−α) Γ(n−m+α) / (Γ(1−α) Γ(n+α)), m = 1..n, with the
    gamma ratios evaluated as rising factorials.

    Raises:
        InvalidAlphaError: If alpha is not in (0, 1)
    """
    alpha = as_alpha(alpha, open_interval=True)
    if n < 1:
        raise InvalidPmfError("decrement law needs n >= 1", {"n": n})
    probs = tuple(
        alpha * comb(n, m) * rising(1 - alpha, m - 1) / rising(n - m + alpha, m)
        for m in range(1, n + 1)
    )
    return FinitePmf(tuple(range(1, n + 1)), probs)


def bridge_return_pmf(n: int) -> FinitePmf[int]:
    """First return time (halved) of a simple random walk bridge of length 2n."""
    probs = tuple(
        Fraction(comb(2 * m, m) * comb(2 * n - 2 * m, n - m), (2 * m - 1) * comb(2 * n, n))
        for m in range(1, n + 1)
    )
    return FinitePmf(tuple(range(1, n + 1)), probs)


def write_pmf_csv(
    pmf: FinitePmf[T], path: Path | str, outcome_format: Callable[[T], str] = str
) -> None:
    """Write a pmf with columns outcome, prob_num, prob_den, prob_float."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["outcome", "prob_num", "prob_den", "prob_float"])
        for outcome, p in pmf.items():
            writer.writerow([outcome_format(outcome), p.numerator, p.denominator, float(p)])


def read_pmf_csv(path: Path | str) -> FinitePmf[str]:
    """Read a pmf written by write_pmf_csv; outcomes stay strings."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    try:
        return FinitePmf(
            tuple(row["outcome"] for row in rows),
            tuple(Fraction(int(row["prob_num"]), int(row["prob_den"])) for row in rows),
        )
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise InvalidPmfError(f"cannot read pmf from {path}: {exc}") from exc
