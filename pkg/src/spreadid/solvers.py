"""Joint-sparse recovery of the support and unknown matrix from Z = A_c @ S.

Three solvers share the RecoveryResult contract: a subspace method
(mmv_music), a greedy pursuit (mmv_omp), and an exhaustive minimal-support
oracle (p0_oracle) for small L.  compressive_recover runs any of them on a
row-restricted system.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .model import DiscreteSpreadingFunction, GridParams, SupportSet, unpack_unknowns, UnknownMatrix
from .probing import ENUMERATION_BUDGET, EnumerationBudgetError, MeasurementMatrix, RowSubset
from .pipeline import MeasurementEnsemble


@dataclass(frozen=True)
class SolverOptions:
    """Numerical knobs shared by the solvers.

    rank_tol is the relative singular-value threshold for the rank estimate
    (noiseless default 1e-8).  With noise_floor_rank=True the signal
    subspace is instead cut at ten times the eigenvalue noise floor,
    estimated as the median of the trailing half of the spectrum; that
    estimate degrades once most eigenvalues carry signal, so when the
    support size is known, signal_rank pins the subspace split directly
    (known-model-order MUSIC).
    """

    rank_tol: float = 1e-8
    noise_floor_rank: bool = False
    signal_rank: int | None = None
    music_mode: str = "threshold"          # "threshold" or "top_k"
    music_threshold: float = 1e-6
    music_top_k: int | None = None
    omp_residual_tol: float = 1e-10
    omp_max_support: int | None = None
    reconstruction_tol: float = 1e-10

    def __post_init__(self):
        for name in ("rank_tol", "music_threshold", "omp_residual_tol", "reconstruction_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.music_mode not in ("threshold", "top_k"):
            raise ValueError(f"unknown music_mode {self.music_mode!r}")
        if self.music_mode == "top_k" and self.music_top_k is None:
            raise ValueError("music_mode='top_k' requires music_top_k")


@dataclass(frozen=True)
class Diagnostics:
    singular_values: np.ndarray
    column_scores: np.ndarray | None
    residual_fro: float
    unique: bool | None = None
    failure: str | None = None
    warnings: tuple = ()
    consumed_zak_rows: tuple | None = None
    residual_history: tuple | None = None    # per-iteration Frobenius norms (greedy solver)


@dataclass(frozen=True)
class RecoveryResult:
    """Estimated support, reconstructed rows (ascending k*L + m), and rank."""

    support_hat: SupportSet
    S_hat: np.ndarray
    rank_hat: int
    diagnostics: Diagnostics

    def __post_init__(self):
        if self.S_hat.shape[0] != len(self.support_hat):
            raise ValueError("S_hat row count must match the support cardinality")


# ---------------------------------------------------------------------------
# rank estimation


def _singulars(Zarr: np.ndarray) -> np.ndarray:
    return np.linalg.svd(Zarr, compute_uv=False)


def _rank_from_singulars(s: np.ndarray, rows: int, opts: SolverOptions) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    if opts.noise_floor_rank:
        lam = np.zeros(rows)
        lam[: s.size] = s**2
        floor = float(np.median(lam[rows // 2:]))
        if floor > 0:
            return int(np.count_nonzero(lam > 10.0 * floor))
    return int(np.count_nonzero(s > opts.rank_tol * s[0]))


def estimate_rank(Z: MeasurementEnsemble | np.ndarray, rank_tol: float = 1e-8) -> int:
    """Number of singular values of Z above rank_tol times the largest."""
    Zarr = Z.Z if isinstance(Z, MeasurementEnsemble) else np.asarray(Z, dtype=complex)
    s = _singulars(Zarr)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


# ---------------------------------------------------------------------------
# array-level solver cores (shared with the row-restricted path)


def _lstsq(Acols: np.ndarray, Zarr: np.ndarray, rcond: float) -> np.ndarray:
    sol, *_ = np.linalg.lstsq(Acols, Zarr, rcond=rcond)
    return sol


def _music_core(Zarr, Aarr, opts: SolverOptions):
    """Return (selected indices ascending, scores, singulars, K, failure, warns)."""
    rows = Zarr.shape[0]
    warns = []
    U, s, _ = np.linalg.svd(Zarr, full_matrices=True)
    if opts.signal_rank is not None:
        K = int(opts.signal_rank)
    else:
        K = _rank_from_singulars(s, rows, opts)
    if K >= rows:
        return None, None, s, K, "no noise subspace (estimated rank equals row count)", ()
    Un = U[:, K:]
    col_norms = np.linalg.norm(Aarr, axis=0)
    scores = np.linalg.norm(Un.conj().T @ Aarr, axis=0) / col_norms
    if opts.music_mode == "threshold":
        sel = np.flatnonzero(scores <= opts.music_threshold)
    else:
        k = int(opts.music_top_k)
        if k > Aarr.shape[1]:
            raise ValueError("music_top_k exceeds the number of columns")
        if k > rows:
            warns.append("top_k exceeds the row count: selection beyond identifiability")
        order = np.argsort(scores, kind="stable")
        sel = np.sort(order[:k])
    return sel, scores, s, K, None, tuple(warns)


def _omp_core(Zarr, Aarr, opts: SolverOptions):
    """Greedy selection; returns (selected ascending, final correlations, warns)."""
    rows = Zarr.shape[0]
    warns = []
    max_support = opts.omp_max_support if opts.omp_max_support is not None else rows
    if max_support > rows:
        warns.append("max_support exceeds the row count: beyond the guarantee regime")
    norm_Z = np.linalg.norm(Zarr)
    col_norms = np.linalg.norm(Aarr, axis=0)
    selected: list[int] = []
    R = Zarr
    history = [float(norm_Z)]
    while len(selected) < max_support and np.linalg.norm(R) > opts.omp_residual_tol * norm_Z:
        corr = np.linalg.norm(Aarr.conj().T @ R, axis=1) / col_norms
        j = int(np.argmax(corr))            # argmax keeps the smallest index on ties
        assert j not in selected, "OMP re-selected a column; projection lost accuracy"
        selected.append(j)
        cols = sorted(selected)
        S = _lstsq(Aarr[:, cols], Zarr, opts.reconstruction_tol)
        R = Zarr - Aarr[:, cols] @ S
        history.append(float(np.linalg.norm(R)))
    final_corr = np.linalg.norm(Aarr.conj().T @ R, axis=1) / col_norms
    return sorted(selected), final_corr, tuple(warns), tuple(history)


def _oracle_core(Zarr, Aarr, max_cardinality: int, tol: float, chunk: int = 4096):
    """Minimal-cardinality consistent support search.

    Enumerates supports in increasing cardinality, lexicographically within
    each cardinality, and returns (support or None, unique, residual).
    """
    n_cols = Aarr.shape[1]
    if not 1 <= max_cardinality <= n_cols:
        raise ValueError("max_cardinality must lie in [1, number of columns]")
    if math.comb(n_cols, max_cardinality) > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(
            f"C({n_cols}, {max_cardinality}) exceeds the enumeration budget"
        )
    norm_Z = np.linalg.norm(Zarr)
    if norm_Z == 0:
        return (), True, 0.0
    for card in range(1, max_cardinality + 1):
        combos = itertools.combinations(range(n_cols), card)
        first = None
        first_res = 0.0
        count = 0
        while True:
            block = np.array(list(itertools.islice(combos, chunk)), dtype=int)
            if block.size == 0:
                break
            Asub = np.ascontiguousarray(Aarr[:, block].transpose(1, 0, 2))
            S = np.linalg.pinv(Asub) @ Zarr
            res = np.linalg.norm(Zarr[None, :, :] - Asub @ S, axis=(1, 2))
            mask = res <= tol * norm_Z
            hits = np.flatnonzero(mask)
            if hits.size and first is None:
                first = tuple(int(i) for i in block[hits[0]])
                first_res = float(res[hits[0]])
            count += int(hits.size)
        if first is not None:
            return first, count == 1, first_res
    return None, None, float(norm_Z)


# ---------------------------------------------------------------------------
# public solvers


def _empty_result(L: int, ed: int, s, rank: int, failure: str, scores=None) -> RecoveryResult:
    return RecoveryResult(
        support_hat=SupportSet(L, frozenset()),
        S_hat=np.zeros((0, ed), dtype=complex),
        rank_hat=rank,
        diagnostics=Diagnostics(
            singular_values=np.asarray(s, dtype=float),
            column_scores=scores,
            residual_fro=float("nan"),
            failure=failure,
        ),
    )


def _check_shared_L(Z: MeasurementEnsemble, A: MeasurementMatrix):
    if Z.grid.L != A.L:
        raise ValueError("measurement ensemble and matrix disagree on L")


def mmv_music(
    Z: MeasurementEnsemble, A: MeasurementMatrix, opts: SolverOptions = SolverOptions()
) -> RecoveryResult:
    """Subspace support recovery.

    The noise subspace U_n collects the left singular directions of Z below
    the rank threshold; column j is scored by ||U_n^H a_j|| / ||a_j||, which
    is zero exactly on the true support in the noiseless full-rank case.
    Support selection is by score threshold or by the k smallest scores,
    after which the unknown rows are refit by least squares.
    """
    _check_shared_L(Z, A)
    g = Z.grid
    sel, scores, s, K, failure, warns = _music_core(Z.Z, A.A, opts)
    if failure is not None:
        return _empty_result(A.L, g.ed, s, K, failure)
    support = SupportSet.from_indices(A.L, sel)
    idx = support.indices()
    if idx.size:
        S_hat = _lstsq(A.A[:, idx], Z.Z, opts.reconstruction_tol)
        residual = float(np.linalg.norm(Z.Z - A.A[:, idx] @ S_hat))
    else:
        S_hat = np.zeros((0, g.ed), dtype=complex)
        residual = float(np.linalg.norm(Z.Z))
    return RecoveryResult(
        support_hat=support,
        S_hat=S_hat,
        rank_hat=K,
        diagnostics=Diagnostics(
            singular_values=s,
            column_scores=scores,
            residual_fro=residual,
            warnings=warns,
        ),
    )


def mmv_omp(
    Z: MeasurementEnsemble, A: MeasurementMatrix, opts: SolverOptions = SolverOptions()
) -> RecoveryResult:
    """Greedy joint-sparse pursuit.

    Repeatedly picks the column with the largest aggregate correlation
    against the residual (ties broken toward the smallest index), refits all
    selected columns by least squares, and stops on a small relative
    residual or at max_support columns.
    """
    _check_shared_L(Z, A)
    g = Z.grid
    selected, final_corr, warns, history = _omp_core(Z.Z, A.A, opts)
    support = SupportSet.from_indices(A.L, selected)
    idx = support.indices()
    if idx.size:
        S_hat = _lstsq(A.A[:, idx], Z.Z, opts.reconstruction_tol)
        residual = float(np.linalg.norm(Z.Z - A.A[:, idx] @ S_hat))
    else:
        S_hat = np.zeros((0, g.ed), dtype=complex)
        residual = float(np.linalg.norm(Z.Z))
    return RecoveryResult(
        support_hat=support,
        S_hat=S_hat,
        rank_hat=estimate_rank(Z.Z, opts.rank_tol),
        diagnostics=Diagnostics(
            singular_values=_singulars(Z.Z),
            column_scores=final_corr,
            residual_fro=residual,
            warnings=warns,
            residual_history=history,
        ),
    )


def p0_oracle(
    Z: MeasurementEnsemble,
    A: MeasurementMatrix,
    max_cardinality: int,
    tol: float = 1e-9,
) -> RecoveryResult:
    """Exhaustive minimal-support search (small L only).

    A support is consistent when the least-squares fit leaves a relative
    residual of at most `tol`; the first consistent support of minimal
    cardinality (lexicographic order) is returned, with diagnostics.unique
    reporting whether it was the only one at that cardinality.
    """
    _check_shared_L(Z, A)
    g = Z.grid
    s = _singulars(Z.Z)
    best, unique, residual = _oracle_core(Z.Z, A.A, max_cardinality, tol)
    if best is None:
        return _empty_result(A.L, g.ed, s, estimate_rank(Z.Z), "no consistent support within max_cardinality")
    support = SupportSet.from_indices(A.L, best)
    idx = support.indices()
    if idx.size:
        S_hat = _lstsq(A.A[:, idx], Z.Z, 1e-12)
    else:
        S_hat = np.zeros((0, g.ed), dtype=complex)
    return RecoveryResult(
        support_hat=support,
        S_hat=S_hat,
        rank_hat=estimate_rank(Z.Z),
        diagnostics=Diagnostics(
            singular_values=s,
            column_scores=None,
            residual_fro=residual,
            unique=unique,
        ),
    )


def reconstruct(
    Z: MeasurementEnsemble,
    A: MeasurementMatrix,
    support: SupportSet,
    rcond: float = 1e-10,
) -> np.ndarray:
    """Least-squares fit of the unknown rows on a fixed support.

    With |support| <= L and a full-spark matrix the solution is the unique
    exact one on consistent data; with |support| > L the system is
    underdetermined and the minimum-norm solution is returned (with a
    warning).
    """
    _check_shared_L(Z, A)
    if len(support) == 0:
        raise ValueError("support must be nonempty")
    if len(support) > A.L:
        warnings.warn(
            "support larger than the row count: underdetermined, returning the "
            "minimum-norm solution",
            stacklevel=2,
        )
    idx = support.indices()
    return _lstsq(A.A[:, idx], Z.Z, rcond)


def spreading_from_result(result: RecoveryResult, grid: GridParams) -> DiscreteSpreadingFunction:
    """Scatter recovered rows back onto the sample grid, stripping the packing phase."""
    S_full = np.zeros((grid.L * grid.L, grid.ed), dtype=complex)
    idx = result.support_hat.indices()
    if idx.size:
        S_full[idx] = result.S_hat
    return unpack_unknowns(UnknownMatrix(grid=grid, S=S_full), support=result.support_hat)


def compressive_recover(
    Z: MeasurementEnsemble,
    A: MeasurementMatrix,
    omega: RowSubset,
    solver: str = "omp",
    opts: SolverOptions = SolverOptions(),
    oracle_max_cardinality: int | None = None,
    oracle_tol: float = 1e-9,
) -> RecoveryResult:
    """Recover from the P-row restriction Z^Omega = A^Omega @ S.

    The chosen solver runs on the row-restricted system; once the support is
    fixed, the unknown rows are refit against the full-row system (better
    conditioning).  Diagnostics list the Zak delay rows {n + E*p : p in
    Omega, 0 <= n < E} the restricted data depends on.
    """
    _check_shared_L(Z, A)
    if omega.L != A.L:
        raise ValueError("row subset and matrix disagree on L")
    g = Z.grid
    rows = list(omega.indices)
    Zr = Z.Z[rows, :]
    Ar = A.A[rows, :]
    consumed = tuple(sorted(n + g.E * p for p in omega.indices for n in range(g.E)))

    unique = None
    warns: tuple = ()
    if solver == "omp":
        selected, scores, warns, _ = _omp_core(Zr, Ar, opts)
        s = _singulars(Zr)
        K = _rank_from_singulars(s, len(rows), opts)
    elif solver == "oracle":
        max_card = oracle_max_cardinality if oracle_max_cardinality is not None else omega.P
        best, unique, _ = _oracle_core(Zr, Ar, max_card, oracle_tol)
        s = _singulars(Zr)
        K = _rank_from_singulars(s, len(rows), opts)
        if best is None:
            res = _empty_result(A.L, g.ed, s, K, "no consistent support within max_cardinality")
            return replace(res, diagnostics=replace(res.diagnostics, consumed_zak_rows=consumed))
        selected, scores = list(best), None
    elif solver == "music":
        s = _singulars(Zr)
        K = _rank_from_singulars(s, len(rows), opts)
        if omega.P < K + 1:
            raise ValueError("insufficient rows for subspace method (need P >= rank + 1)")
        selected, scores, s, K, failure, warns = _music_core(Zr, Ar, opts)
        if failure is not None:
            res = _empty_result(A.L, g.ed, s, K, failure)
            return replace(res, diagnostics=replace(res.diagnostics, consumed_zak_rows=consumed))
    else:
        raise ValueError(f"unknown solver {solver!r}")

    support = SupportSet.from_indices(A.L, selected)
    idx = support.indices()
    if idx.size:
        S_hat = _lstsq(A.A[:, idx], Z.Z, opts.reconstruction_tol)
        residual = float(np.linalg.norm(Z.Z - A.A[:, idx] @ S_hat))
    else:
        S_hat = np.zeros((0, g.ed), dtype=complex)
        residual = float(np.linalg.norm(Z.Z))
    return RecoveryResult(
        support_hat=support,
        S_hat=S_hat,
        rank_hat=K,
        diagnostics=Diagnostics(
            singular_values=s,
            column_scores=scores,
            residual_fro=residual,
            unique=unique,
            warnings=warns,
            consumed_zak_rows=consumed,
        ),
    )
