"""Discretization geometry, cell-indexed supports, and spreading-sample packing.

The delay-Doppler plane is tiled into L x L cells of width T (delay) and
1/(T*L) (Doppler).  Each cell carries E x D samples, so the sample grid is
(E*L) x (D*L) and the total number of received samples is B*V = E*D*L with
bandwidth B = E/T and observation window V = D*T*L.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class GridParams:
    """Cell geometry of the delay-Doppler discretization.

    Parameters
    ----------
    L : int
        Number of cells per axis (L >= 2).  Prime values guarantee that
        every L x L column submatrix of the measurement matrix has full
        rank; set ``require_prime_L=False`` to explore composite L.
    T : float
        Cell width in the delay direction, seconds.
    E, D : int
        Samples per cell in the delay and Doppler directions.
    """

    L: int
    T: float = 1.0
    E: int = 1
    D: int = 1
    require_prime_L: bool = True

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"L must be >= 2, got {self.L}")
        if self.E < 1 or self.D < 1:
            raise ValueError(f"E and D must be >= 1, got E={self.E}, D={self.D}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.require_prime_L and not _is_prime(self.L):
            raise ValueError(
                f"L={self.L} is not prime; pass require_prime_L=False to allow it"
            )

    @property
    def bandwidth(self) -> float:
        """B = E/T, Hz."""
        return self.E / self.T

    @property
    def window(self) -> float:
        """V = D*T*L, seconds."""
        return self.D * self.T * self.L

    @property
    def samples_total(self) -> int:
        """B*V = E*D*L (exact integer identity)."""
        return self.E * self.D * self.L

    @property
    def delay_grid(self) -> int:
        return self.E * self.L

    @property
    def doppler_grid(self) -> int:
        return self.D * self.L

    @property
    def ed(self) -> int:
        """Samples per cell, equal to the number of measurement vectors."""
        return self.E * self.D

    @property
    def tau_max(self) -> float:
        return self.T * self.L

    @property
    def nu_max(self) -> float:
        return 1.0 / self.T


@dataclass(frozen=True)
class SupportSet:
    """Set of active cell indices (k, m) with 0 <= k, m < L."""

    L: int
    cells: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        cells = frozenset((int(k), int(m)) for k, m in self.cells)
        object.__setattr__(self, "cells", cells)
        for k, m in cells:
            if not (0 <= k < self.L and 0 <= m < self.L):
                raise ValueError(f"cell ({k}, {m}) out of range for L={self.L}")

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell) -> bool:
        return tuple(cell) in self.cells

    def __iter__(self):
        return iter(self.sorted_cells())

    def sorted_cells(self) -> list[tuple[int, int]]:
        """Cells in ascending k*L + m order."""
        return sorted(self.cells)

    def indices(self) -> np.ndarray:
        """Flat column indices k*L + m, ascending."""
        return np.array([k * self.L + m for k, m in self.sorted_cells()], dtype=int)

    @classmethod
    def from_indices(cls, L: int, indices) -> "SupportSet":
        return cls(L, frozenset(divmod(int(i), L) for i in indices))

    @classmethod
    def full(cls, L: int) -> "SupportSet":
        return cls(L, frozenset((k, m) for k in range(L) for m in range(L)))


@dataclass(frozen=True)
class DiscreteSpreadingFunction:
    """Complex samples on the (E*L) x (D*L) delay-Doppler grid.

    ``samples[r, l]`` sits in cell ``(r // E, l // D)`` and must be zero
    whenever that cell is not in ``support``.
    """

    grid: GridParams
    samples: np.ndarray
    support: SupportSet

    def __post_init__(self):
        g = self.grid
        if self.support.L != g.L:
            raise ValueError("support and grid disagree on L")
        arr = np.asarray(self.samples, dtype=complex)
        if arr.shape != (g.delay_grid, g.doppler_grid):
            raise ValueError(
                f"samples must have shape {(g.delay_grid, g.doppler_grid)}, "
                f"got {arr.shape}"
            )
        mask = np.zeros((g.L, g.L), dtype=bool)
        for k, m in self.support.cells:
            mask[k, m] = True
        # Exact-zero check outside the active cells.
        cellwise = arr.reshape(g.L, g.E, g.L, g.D)
        inactive = ~mask[:, None, :, None] & np.ones((1, g.E, 1, g.D), dtype=bool)
        if np.any(cellwise[inactive] != 0):
            raise ValueError("nonzero sample outside the active cells")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)


@dataclass(frozen=True)
class UnknownMatrix:
    """Row-sparse unknown matrix S, L^2 rows by E*D columns.

    Row k*L + m holds the phase-adjusted samples of cell (k, m); column
    n*D + r holds within-cell sample (n, r).
    """

    grid: GridParams
    S: np.ndarray

    def __post_init__(self):
        g = self.grid
        arr = np.asarray(self.S, dtype=complex)
        if arr.shape != (g.L * g.L, g.ed):
            raise ValueError(f"S must have shape {(g.L * g.L, g.ed)}, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "S", arr)


def random_support(grid: GridParams, cardinality: int, rng: np.random.Generator) -> SupportSet:
    """Draw a uniformly random support of exactly `cardinality` cells."""
    n = grid.L * grid.L
    if not 0 <= cardinality <= n:
        raise ValueError(f"cardinality must lie in [0, {n}], got {cardinality}")
    idx = rng.choice(n, size=cardinality, replace=False)
    return SupportSet.from_indices(grid.L, idx)


def random_spreading(
    grid: GridParams, support: SupportSet, rng: np.random.Generator
) -> DiscreteSpreadingFunction:
    """Fill every active cell with i.i.d. unit-variance complex Gaussians.

    Real and imaginary parts are independent N(0, 1/2), so each sample has
    total variance one.  Samples outside active cells are exactly zero.
    Cells are filled in ascending k*L + m order, so the draw is
    reproducible for a given seeded generator.
    """
    g = grid
    samples = np.zeros((g.delay_grid, g.doppler_grid), dtype=complex)
    cells = support.sorted_cells()
    if cells:
        w = rng.standard_normal((2, len(cells), g.E, g.D)) * np.sqrt(0.5)
        vals = w[0] + 1j * w[1]
        for i, (k, m) in enumerate(cells):
            samples[g.E * k:g.E * (k + 1), g.D * m:g.D * (m + 1)] = vals[i]
    return DiscreteSpreadingFunction(grid=grid, samples=samples, support=support)


def _cell_phase(grid: GridParams) -> np.ndarray:
    """Phase factor exp(j*2*pi*n*(r + D*m) / (E*D*L)), indexed (m, n, r)."""
    g = grid
    m = np.arange(g.L)[:, None, None]
    n = np.arange(g.E)[None, :, None]
    r = np.arange(g.D)[None, None, :]
    return np.exp(2j * np.pi * n * (r + g.D * m) / g.samples_total)


def pack_unknowns(sf: DiscreteSpreadingFunction) -> UnknownMatrix:
    """Arrange spreading samples into the unknown matrix S.

    Entry (k*L + m, n*D + r) equals samples[n + E*k, r + D*m] multiplied by
    the within-cell phase factor exp(j*2*pi*n*(r + D*m) / (E*D*L)).
    """
    g = sf.grid
    cellwise = sf.samples.reshape(g.L, g.E, g.L, g.D).transpose(0, 2, 1, 3)  # (k, m, n, r)
    packed = cellwise * _cell_phase(g)[None, :, :, :]
    return UnknownMatrix(grid=g, S=packed.reshape(g.L * g.L, g.ed))


def unpack_unknowns(
    unknowns: UnknownMatrix, support: SupportSet | None = None
) -> DiscreteSpreadingFunction:
    """Invert :func:`pack_unknowns`; exact round trip up to float rounding.

    When `support` is omitted it is inferred from the nonzero rows of S.
    """
    g = unknowns.grid
    S4 = unknowns.S.reshape(g.L, g.L, g.E, g.D) / _cell_phase(g)[None, :, :, :]
    samples = S4.transpose(0, 2, 1, 3).reshape(g.delay_grid, g.doppler_grid)
    if support is None:
        nonzero_rows = np.flatnonzero(np.any(unknowns.S != 0, axis=1))
        support = SupportSet.from_indices(g.L, nonzero_rows)
    # Force exact zeros outside the support (phase division leaves -0.0 etc.).
    mask = np.zeros((g.L, g.L), dtype=bool)
    for k, m in support.cells:
        mask[k, m] = True
    full_mask = np.kron(mask, np.ones((g.E, g.D), dtype=bool))
    samples = np.where(full_mask, samples, 0.0)
    return DiscreteSpreadingFunction(grid=g, samples=samples, support=support)
