"""Probing sequences, the structured measurement matrix, and spark checks."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import SupportSet, _is_prime

#: Relative singular-value threshold below which a column set counts as
#: linearly dependent.  Far below the conditioning observed for Alltop and
#: random-disc matrices at L <= 31.
RANK_TOL = 1e-10

#: Hard cap on the number of column subsets an exhaustive search may visit.
ENUMERATION_BUDGET = 10**7


class EnumerationBudgetError(RuntimeError):
    """Raised when an exhaustive subset search would exceed the budget."""


@dataclass(frozen=True)
class ProbingSequence:
    """Length-L coefficient vector of the periodic probing impulse train.

    The sequence extends L-periodically: index arithmetic is modulo L.
    """

    c: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        arr = np.asarray(self.c, dtype=complex).ravel()
        if arr.size < 1:
            raise ValueError("probing sequence must have length >= 1")
        if not np.any(arr != 0):
            raise ValueError("probing sequence must be nonzero")
        if self.kind == "alltop":
            L = arr.size
            if not np.allclose(np.abs(arr), 1 / np.sqrt(L), rtol=0, atol=1e-12):
                raise ValueError("alltop entries must have magnitude 1/sqrt(L)")
        arr.flags.writeable = False
        object.__setattr__(self, "c", arr)

    @property
    def L(self) -> int:
        return self.c.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.c))


@dataclass(frozen=True)
class MeasurementMatrix:
    """L x L^2 matrix with entry (p, k*L + m) = c[(k - p) mod L] * exp(j*2*pi*p*m/L).

    Column block k is the diagonal matrix diag(c_k, c_{k-1}, ..., c_{k-L+1})
    times the conjugate-transposed DFT matrix, so every column has norm
    ||c||_2.
    """

    A: np.ndarray
    source: ProbingSequence

    def __post_init__(self):
        L = self.source.L
        arr = np.asarray(self.A, dtype=complex)
        if arr.shape != (L, L * L):
            raise ValueError(f"A must have shape {(L, L * L)}, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "A", arr)

    @property
    def L(self) -> int:
        return self.source.L


@dataclass(frozen=True)
class RowSubset:
    """Ordered subset of row indices {0, ..., L-1}."""

    L: int
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if not 1 <= len(idx) <= self.L:
            raise ValueError(f"row subset must have 1..{self.L} entries")
        if len(set(idx)) != len(idx):
            raise ValueError("row indices must be distinct")
        for i in idx:
            if not 0 <= i < self.L:
                raise ValueError(f"row index {i} out of range for L={self.L}")

    @property
    def P(self) -> int:
        return len(self.indices)

    @classmethod
    def prefix(cls, L: int, P: int) -> "RowSubset":
        return cls(L, tuple(range(P)))


def alltop(L: int) -> ProbingSequence:
    """Unimodular cubic-phase sequence (1/sqrt(L)) * exp(j*2*pi*i^3/L)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if L < 5 or not _is_prime(L):
        warnings.warn(
            f"alltop sequence with L={L}: Welch-bound optimality requires prime L >= 5",
            stacklevel=2,
        )
    i = np.arange(L, dtype=np.int64)
    phases = (i**3) % L
    c = np.exp(2j * np.pi * phases / L) / np.sqrt(L)
    return ProbingSequence(c=c, kind="alltop")


def random_disc(L: int, rng: np.random.Generator) -> ProbingSequence:
    """Entries i.i.d. uniform on the closed complex unit disc."""
    if L < 1:
        raise ValueError("L must be >= 1")
    radius = np.sqrt(rng.uniform(0.0, 1.0, size=L))
    angle = rng.uniform(0.0, 2 * np.pi, size=L)
    return ProbingSequence(c=radius * np.exp(1j * angle), kind="random-disc")


def build_matrix(c: ProbingSequence) -> MeasurementMatrix:
    """Materialize the L x L^2 measurement matrix of a probing sequence.

    Dense construction is fine at the problem sizes of interest (L^2
    columns is 361 at L = 19).
    """
    L = c.L
    p = np.arange(L)
    k = np.arange(L)
    m = np.arange(L)
    shifts = c.c[(k[None, :] - p[:, None]) % L]                 # (p, k)
    tones = np.exp(2j * np.pi * p[:, None] * m[None, :] / L)    # (p, m)
    A = (shifts[:, :, None] * tones[:, None, :]).reshape(L, L * L)
    return MeasurementMatrix(A=A, source=c)


def column_submatrix(A: MeasurementMatrix, support: SupportSet) -> np.ndarray:
    """Columns of A at the support's cell indices, ascending k*L + m order."""
    if support.L != A.L:
        raise ValueError("support and matrix disagree on L")
    return A.A[:, support.indices()]


def row_submatrix(A: MeasurementMatrix, omega: RowSubset) -> np.ndarray:
    """Rows of A in the order listed in omega."""
    if omega.L != A.L:
        raise ValueError("row subset and matrix disagree on L")
    return A.A[list(omega.indices), :]


def _dependent_mask(M: np.ndarray, idx: np.ndarray, eps: float) -> np.ndarray:
    """For each column subset (row of idx) decide linear dependence."""
    rows = M.shape[0]
    card = idx.shape[1]
    if card > rows:
        return np.ones(idx.shape[0], dtype=bool)
    sub = M[:, idx]                       # (rows, n_subsets, card)
    sub = np.ascontiguousarray(sub.transpose(1, 0, 2))
    s = np.linalg.svd(sub, compute_uv=False)
    return s[:, -1] <= eps * s[:, 0]


def spark_exhaustive(
    M: np.ndarray,
    max_cardinality: int,
    eps_rank: float = RANK_TOL,
    chunk: int = 8192,
) -> int | None:
    """Exact spark of M by exhaustive enumeration, up to `max_cardinality`.

    Returns the cardinality of the smallest linearly dependent column set,
    or None when every subset of size <= max_cardinality is independent
    ("exceeds max").  Dependence uses the relative singular-value threshold
    `eps_rank`.  Raises :class:`EnumerationBudgetError` instead of silently
    truncating when the search is too large.
    """
    M = np.asarray(M, dtype=complex)
    n_cols = M.shape[1]
    if not 1 <= max_cardinality <= n_cols:
        raise ValueError("max_cardinality must lie in [1, number of columns]")
    if math.comb(n_cols, max_cardinality) > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(
            f"C({n_cols}, {max_cardinality}) exceeds the enumeration budget"
        )
    for card in range(1, max_cardinality + 1):
        combos = itertools.combinations(range(n_cols), card)
        while True:
            block = np.array(list(itertools.islice(combos, chunk)), dtype=int)
            if block.size == 0:
                break
            if np.any(_dependent_mask(M, block, eps_rank)):
                return card
    return None
