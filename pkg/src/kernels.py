"""Exact stochastic kernels over enumerated state spaces.

Rows are sparse ``{column index: Fraction}`` maps. Kernels compose as
matrices (``P.compose(Q)`` is PQ); a deterministic map g becomes the 0/1
kernel ``deterministic_kernel``.
"""

import logging
import time
from collections.abc import Callable, Hashable, Iterable, Iterator
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Generic, NamedTuple, TypeVar

import numpy as np

from .config import get_settings
from .distributions import FinitePmf
from .exceptions import (
    NonStochasticRowError,
    ShapeMismatchError,
    StateSpaceTooLargeError,
    VerificationError,
)

logger = logging.getLogger(__name__)

S = TypeVar("S", bound=Hashable)
Row = dict[int, Fraction]


def describe(state: object) -> str:
    """Short printable form of a state for reports and errors."""
    to_json = getattr(state, "to_json", None)
    if callable(to_json):
        return str(to_json())
    return str(state)


@dataclass(frozen=True)
class StateSpace(Generic[S]):
    """Canonically ordered states with an index bijection."""

    states: tuple[S, ...]

    def __post_init__(self) -> None:
        if len(set(self.states)) != len(self.states):
            raise VerificationError("state space contains duplicate states")

    @classmethod
    def of(cls, states: Iterable[S]) -> "StateSpace[S]":
        return cls(tuple(states))

    @cached_property
    def index(self) -> dict[S, int]:
        return {state: idx for idx, state in enumerate(self.states)}

    def position(self, state: S) -> int:
        try:
            return self.index[state]
        except KeyError:
            raise ShapeMismatchError(
                "state outside the state space", {"state": describe(state)}
            ) from None

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[S]:
        return iter(self.states)

    def __contains__(self, state: object) -> bool:
        return state in self.index


class EntryDifference(NamedTuple):
    """First entry, in canonical order, where two matrices differ."""

    row: int
    column: int
    left: Fraction
    right: Fraction


def first_row_difference(rows_a: Iterable[Row], rows_b: Iterable[Row]) -> EntryDifference | None:
    for r, (a, b) in enumerate(zip(rows_a, rows_b, strict=True)):
        if a == b:
            continue
        for c in sorted(a.keys() | b.keys()):
            left, right = a.get(c, Fraction(0)), b.get(c, Fraction(0))
            if left != right:
                return EntryDifference(r, c, left, right)
    return None


@dataclass(frozen=True)
class StochasticKernel(Generic[S]):
    """Row-stochastic matrix from ``domain`` to ``codomain`` with exact entries.

    Attributes:
        domain: Row states
        codomain: Column states
        rows: One sparse row per domain state; zero entries are not stored
        name: Label used in logs and reports
    """

    domain: StateSpace[Any]
    codomain: StateSpace[Any]
    rows: tuple[Row, ...]
    name: str = "kernel"

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.domain):
            raise ShapeMismatchError(
                f"{self.name} has {len(self.rows)} rows for {len(self.domain)} states"
            )
        width = len(self.codomain)
        for idx, row in enumerate(self.rows):
            total = sum(row.values(), Fraction(0))
            if total != 1 or any(v <= 0 or not 0 <= c < width for c, v in row.items()):
                raise NonStochasticRowError(describe(self.domain.states[idx]), total)

    @property
    def n_entries(self) -> int:
        return sum(len(row) for row in self.rows)

    @property
    def max_support(self) -> int:
        return max((len(row) for row in self.rows), default=0)

    def entry(self, row: int, column: int) -> Fraction:
        return self.rows[row].get(column, Fraction(0))

    def row_pmf(self, state: Any) -> FinitePmf[Any]:
        row = self.rows[self.domain.position(state)]
        return FinitePmf(
            tuple(self.codomain.states[c] for c in row), tuple(row.values())
        )

    def compose(self, other: "StochasticKernel[Any]", name: str | None = None) -> "StochasticKernel[Any]":
        """The product self · other.

        Raises:
            ShapeMismatchError: If self's codomain is not other's domain
        """
        if self.codomain.states != other.domain.states:
            raise ShapeMismatchError(
                f"cannot compose {self.name} with {other.name}",
                {"left_codomain": len(self.codomain), "right_domain": len(other.domain)},
            )
        rows = []
        for row in self.rows:
            acc: Row = {}
            for mid, p in row.items():
                for c, q in other.rows[mid].items():
                    acc[c] = acc.get(c, Fraction(0)) + p * q
            rows.append({c: acc[c] for c in sorted(acc) if acc[c]})
        return StochasticKernel(
            self.domain, other.codomain, tuple(rows), name or f"{self.name}·{other.name}"
        )

    def left_apply(self, pi: FinitePmf[Any]) -> FinitePmf[Any]:
        """The law πK, for π a law on the domain."""
        acc: Row = {}
        for state, p in pi.items():
            for c, q in self.rows[self.domain.position(state)].items():
                acc[c] = acc.get(c, Fraction(0)) + p * q
        return FinitePmf.from_weights(
            (self.codomain.states[c], acc[c]) for c in sorted(acc)
        )

    def first_difference(self, other: "StochasticKernel[Any]") -> EntryDifference | None:
        if (self.domain.states, self.codomain.states) != (other.domain.states, other.codomain.states):
            raise ShapeMismatchError(f"{self.name} and {other.name} act on different spaces")
        return first_row_difference(self.rows, other.rows)


def check_size(what: str, size: int, bound: int | None = None) -> None:
    """Refuse exact computations above the configured entry bound."""
    limit = bound if bound is not None else get_settings().max_kernel_entries
    if size > limit:
        raise StateSpaceTooLargeError(what, size, limit)
    if size > limit // 2:
        logger.warning("%s uses %d of %d allowed kernel entries", what, size, limit)


def build_kernel(
    space: StateSpace[S],
    row_fn: Callable[[S], FinitePmf[Any]],
    codomain: StateSpace[Any] | None = None,
    name: str = "kernel",
) -> StochasticKernel[S]:
    """Evaluate ``row_fn`` on every state and assemble the kernel.

    Raises:
        StateSpaceTooLargeError: If |X| times the widest row exceeds the bound
        ShapeMismatchError: If a row puts mass outside the codomain
        NonStochasticRowError: If a row does not sum to one
    """
    target = codomain if codomain is not None else space
    bound = get_settings().max_kernel_entries
    started = time.perf_counter()
    rows = []
    widest = 0
    for state in space:
        pmf = row_fn(state)
        widest = max(widest, len(pmf))
        check_size(f"{name} over {len(space)} states", len(space) * widest, bound)
        row = {target.position(outcome): p for outcome, p in pmf.items() if p}
        rows.append({c: row[c] for c in sorted(row)})
    kernel = StochasticKernel(space, target, tuple(rows), name)
    logger.info(
        "Built %s: %d x %d, %d entries in %.3fs",
        name,
        len(space),
        len(target),
        kernel.n_entries,
        time.perf_counter() - started,
    )
    return kernel


def deterministic_kernel(
    domain: StateSpace[S], codomain: StateSpace[Any], fn: Callable[[S], Any], name: str = "g"
) -> StochasticKernel[S]:
    """The 0/1 kernel of a map: entry (x, fn(x)) is one."""
    rows = tuple({codomain.position(fn(state)): Fraction(1)} for state in domain)
    return StochasticKernel(domain, codomain, rows, name)


def solve_linear_system(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b exactly by Gauss–Jordan elimination over Fractions.

    Args:
        a: Square object array of Fractions
        b: Object array with one or more right-hand-side columns

    Raises:
        ShapeMismatchError: If a is not square or b has the wrong height
        VerificationError: If a is singular
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatchError("matrix is not square", {"shape": list(a.shape)})
    rhs = b.reshape(b.shape[0], -1)
    n = a.shape[0]
    if rhs.shape[0] != n:
        raise ShapeMismatchError("right-hand side has the wrong height", {"rows": rhs.shape[0], "n": n})

    aug = np.hstack((a.astype(object), rhs.astype(object)))
    for i in range(n):
        for j in range(i, n):
            if aug[j, i] != 0:
                if i != j:
                    aug[[i, j]] = aug[[j, i]]
                break
        else:
            raise VerificationError("linear system is singular", {"column": i})
        aug[i, :] /= aug[i, i]
        for j in range(n):
            if j != i and aug[j, i] != 0:
                aug[j, :] -= aug[j, i] * aug[i, :]
    solution = aug[:, n:]
    return solution.reshape(b.shape)


def identity_matrix(n: int) -> np.ndarray:
    return np.array([[Fraction(int(i == j)) for j in range(n)] for i in range(n)], dtype=object)

