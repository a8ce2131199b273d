"""Stability bounds, the uniqueness threshold, ambiguity witnesses, and scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GridParams, SupportSet
from .probing import RANK_TOL, MeasurementMatrix, column_submatrix


@dataclass(frozen=True)
class StabilityBounds:
    """Extremal gains alpha <= beta of the support-restricted system.

    Computed from the singular values of A_Gamma scaled by 1/sqrt(T*L); a
    discrete proxy for the stability constants of the identification map.
    alpha > 0 exactly when A_Gamma has full column rank.
    """

    alpha: float
    beta: float
    gamma_card: int


@dataclass(frozen=True)
class AmbiguityWitness:
    """Two disjoint supports with coefficient matrices producing identical data.

    A_Gamma @ B_gamma equals A_Gamma' @ B_gamma_prime, witnessing that the
    minimal-support program cannot distinguish the two supports.  When L + K
    is odd the split is ceil/floor: |gamma_prime| = ceil((L+K)/2) >= |gamma|.
    """

    gamma: SupportSet
    B_gamma: np.ndarray
    gamma_prime: SupportSet
    B_gamma_prime: np.ndarray
    K: int


def stability_bounds(
    A: MeasurementMatrix, support: SupportSet, grid: GridParams
) -> StabilityBounds:
    """Singular-value bounds of A_Gamma, normalized by 1/sqrt(T*L).

    For |support| > L the columns are necessarily dependent and alpha = 0.
    """
    if len(support) == 0:
        raise ValueError("support must be nonempty")
    sub = column_submatrix(A, support)
    s = np.linalg.svd(sub, compute_uv=False)
    scale = 1.0 / np.sqrt(grid.T * grid.L)
    beta = float(s[0]) * scale
    alpha = float(s[-1]) * scale if len(support) <= A.L else 0.0
    return StabilityBounds(alpha=alpha, beta=beta, gamma_card=len(support))


def uniqueness_guaranteed(gamma_card: int, L: int, K: int) -> bool:
    """Exact integer test of the recovery threshold 2*|Gamma| < L + K.

    K is the rank of the unknown matrix restricted to the support; below the
    threshold every consistent instance has a unique minimal support.
    """
    if not 1 <= K <= min(gamma_card, L):
        raise ValueError(f"K must lie in [1, min(|Gamma|, L)], got K={K}")
    return 2 * gamma_card < L + K


def _independent_rows(B: np.ndarray, K: int) -> list[int]:
    """Greedy smallest-index selection of K linearly independent rows."""
    chosen: list[int] = []
    for i in range(B.shape[0]):
        cand = B[chosen + [i], :]
        s = np.linalg.svd(cand, compute_uv=False)
        if s[-1] > RANK_TOL * s[0]:
            chosen.append(i)
            if len(chosen) == K:
                break
    return chosen


def ambiguous_instance(
    A: MeasurementMatrix, K: int, rng: np.random.Generator
) -> AmbiguityWitness:
    """Construct a boundary non-uniqueness witness at cardinality ceil((L+K)/2).

    Draws Phi with |Phi| = L + K (seeded), takes a rank-K basis of the null
    space of A_Phi (dimension exactly K when every L columns of A are
    independent), picks K independent rows of the basis plus the smallest-
    index extra rows as gamma_prime, and sets gamma = Phi \\ gamma_prime.
    Splitting the null-space basis across the two row groups then gives
    A_gamma' @ B_gamma' = A_gamma @ B_gamma by construction.
    """
    L = A.L
    if not 1 <= K <= L:
        raise ValueError(f"K must lie in [1, L], got {K}")
    if L * L < L + K:
        raise ValueError("grid too small for |Phi| = L + K")
    phi_idx = np.sort(rng.choice(L * L, size=L + K, replace=False))
    A_phi = A.A[:, phi_idx]
    _, s, Vh = np.linalg.svd(A_phi)
    null_dim = A_phi.shape[1] - int(np.count_nonzero(s > RANK_TOL * s[0]))
    if null_dim != K:
        raise ValueError(
            f"null space of A_Phi has dimension {null_dim}, expected {K}; "
            "the matrix is not full-spark"
        )
    B_phi = Vh[L:, :].conj().T                     # (L+K, K), rows follow phi_idx
    target = (L + K + 1) // 2                      # ceil((L+K)/2)
    prime_rows = _independent_rows(B_phi, K)
    for i in range(B_phi.shape[0]):
        if len(prime_rows) == target:
            break
        if i not in prime_rows:
            prime_rows.append(i)
    prime_rows = sorted(prime_rows)
    other_rows = [i for i in range(L + K) if i not in prime_rows]
    gamma_prime = SupportSet.from_indices(L, phi_idx[prime_rows])
    gamma = SupportSet.from_indices(L, phi_idx[other_rows])
    # Rows of each B block follow ascending cell index, matching indices().
    return AmbiguityWitness(
        gamma=gamma,
        B_gamma=-B_phi[other_rows, :],
        gamma_prime=gamma_prime,
        B_gamma_prime=B_phi[prime_rows, :],
        K=K,
    )


def relative_sq_error(S_hat_full: np.ndarray, S_true_full: np.ndarray) -> float:
    """||S_hat - S_true||_F^2 / ||S_true||_F^2 on full L^2-row layouts.

    Both arguments must be expanded to all L^2 rows (zeros off-support), so
    support mismatches are penalized automatically.
    """
    S_hat_full = np.asarray(S_hat_full)
    S_true_full = np.asarray(S_true_full)
    if S_hat_full.shape != S_true_full.shape:
        raise ValueError("layouts must have identical shapes")
    denom = np.linalg.norm(S_true_full) ** 2
    if denom == 0:
        raise ValueError("true unknown matrix is zero; relative error undefined")
    return float(np.linalg.norm(S_hat_full - S_true_full) ** 2 / denom)
