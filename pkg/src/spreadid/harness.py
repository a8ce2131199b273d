"""Monte Carlo experiment driver: per-trial streams, sweeps, CSV emission.

Every trial derives its own random stream from (seed, delta, trial_index),
so results are identical across reruns and parallelism levels; sweeps only
assemble per-trial records in a deterministic order.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import relative_sq_error
from .model import (
    DiscreteSpreadingFunction,
    GridParams,
    SupportSet,
    pack_unknowns,
    random_spreading,
    random_support,
)
from .pipeline import add_noise, assemble_Z, discrete_zak, simulate
from .probing import (
    EnumerationBudgetError,
    MeasurementMatrix,
    ProbingSequence,
    RowSubset,
    alltop,
    build_matrix,
    random_disc,
)
from .solvers import (
    RecoveryResult,
    SolverOptions,
    compressive_recover,
    mmv_music,
    mmv_omp,
    p0_oracle,
)

PROBING_STREAM_KEY = 1  # entropy tag of the frozen-probing stream (fix_probing)


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: requested (or cpu count), capped by SPREADID_THREADS."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("SPREADID_THREADS")
    if cap:
        n = min(n, int(cap))
    return max(1, n)


@dataclass(frozen=True)
class CompressiveConfig:
    """Row-restriction settings for compressive identification runs.

    omega is either "prefix" (rows 0..P-1) or an explicit index list.  With
    phi="sqrt-box" the support is drawn inside the floor(sqrt(L))-by-
    floor(sqrt(L)) cell box at the origin; "full" draws from all cells.
    """

    P: int
    omega: str | tuple = "prefix"
    phi: str = "sqrt-box"

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("P must be >= 1")
        if isinstance(self.omega, str):
            if self.omega != "prefix":
                raise ValueError("omega must be 'prefix' or an index list")
        else:
            object.__setattr__(self, "omega", tuple(int(i) for i in self.omega))
        if self.phi not in ("sqrt-box", "full"):
            raise ValueError("phi must be 'sqrt-box' or 'full'")

    def row_subset(self, L: int) -> RowSubset:
        if self.omega == "prefix":
            return RowSubset.prefix(L, self.P)
        if len(self.omega) != self.P:
            raise ValueError("explicit omega must list exactly P rows")
        return RowSubset(L, self.omega)


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep description; JSON configs mirror these field names."""

    L: int
    delta_grid: tuple
    E: int = 1
    D: int = 1
    ed_pairs: tuple | None = None          # list of (E, D); overrides E/D
    T: float = 1.0
    probing: str = "random-disc"           # "alltop" or "random-disc"
    solver: str = "music"                  # "music", "omp", or "oracle"
    snr_db: float = float("inf")
    trials: int = 1000
    seed: int = 0
    success_threshold: float = 1e-5
    compressive: CompressiveConfig | None = None
    fix_probing: bool = False
    sparsity_protocol: str = "known"       # "known" (|Gamma| given) or "blind"
    music_threshold: float = 1e-6
    rank_tol: float = 1e-8
    omp_residual_tol: float = 1e-10
    oracle_tol: float = 1e-9
    oracle_max_cardinality: int | None = None
    require_prime_L: bool = True

    def __post_init__(self):
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        if self.ed_pairs is not None:
            pairs = tuple((int(e), int(d)) for e, d in self.ed_pairs)
            object.__setattr__(self, "ed_pairs", pairs)
        if not self.delta_grid:
            raise ValueError("delta_grid must be nonempty")
        for d in self.delta_grid:
            if not 0 < d <= 1:
                raise ValueError(f"delta values must lie in (0, 1], got {d}")
            if round(d * self.L) > self.L * self.L:
                raise ValueError(f"delta {d} maps beyond the L^2 cells")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.probing not in ("alltop", "random-disc"):
            raise ValueError(f"unknown probing family {self.probing!r}")
        if self.solver not in ("music", "omp", "oracle"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.sparsity_protocol not in ("known", "blind"):
            raise ValueError("sparsity_protocol must be 'known' or 'blind'")

    def ed_cells(self) -> tuple:
        if self.ed_pairs is not None:
            return self.ed_pairs
        return ((self.E, self.D),)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        comp = doc.pop("compressive", None)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "snr_db" in doc:
            # JSON has no infinity literal: null or "inf" mean noiseless.
            doc["snr_db"] = float("inf") if doc["snr_db"] is None else float(doc["snr_db"])
        cfg_kwargs = dict(doc)
        if comp is not None:
            comp_kwargs = dict(comp)
            extra = set(comp_kwargs) - {f for f in CompressiveConfig.__dataclass_fields__}
            if extra:
                raise ValueError(f"unknown compressive fields: {sorted(extra)}")
            cfg_kwargs["compressive"] = CompressiveConfig(**comp_kwargs)
        return cls(**cfg_kwargs)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: str
    delta: float
    gamma_card: int
    ed: int
    solver: str
    snr_db: float
    rel_sq_error: float
    success: bool
    support_exact: bool
    runtime_ms: float
    unique: bool | None = None
    error: str = ""

    @property
    def anomaly(self) -> bool:
        """Success with a wrong support in a noiseless run."""
        return self.success and not self.support_exact and math.isinf(self.snr_db)


def _delta_bits(delta: float) -> int:
    return int(np.float64(delta).view(np.uint64))


def trial_rng(seed: int, delta: float, trial_index: int) -> np.random.Generator:
    """Per-trial stream derived from (seed, delta, trial_index)."""
    ss = np.random.SeedSequence((int(seed), _delta_bits(delta), int(trial_index)))
    return np.random.default_rng(ss)


def frozen_probing(cfg: ExperimentConfig) -> ProbingSequence | None:
    """The single probing draw used when fix_probing is set."""
    if cfg.probing == "alltop":
        return alltop(cfg.L)
    if cfg.fix_probing:
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, PROBING_STREAM_KEY)))
        return random_disc(cfg.L, rng)
    return None


def _sqrt_box_cells(L: int) -> list[int]:
    side = int(math.isqrt(L))
    return [k * L + m for k in range(side) for m in range(side)]


def _solver_options(cfg: ExperimentConfig, gamma_card: int) -> SolverOptions:
    noisy = not math.isinf(cfg.snr_db)
    if cfg.sparsity_protocol == "known":
        # In noise, the known support size also pins the subspace split;
        # the eigenvalue floor rule underestimates it once most of the
        # spectrum carries signal.
        return SolverOptions(
            rank_tol=cfg.rank_tol,
            noise_floor_rank=noisy,
            signal_rank=gamma_card if noisy else None,
            music_mode="top_k",
            music_top_k=gamma_card,
            omp_residual_tol=cfg.omp_residual_tol,
            omp_max_support=gamma_card,
        )
    return SolverOptions(
        rank_tol=cfg.rank_tol,
        noise_floor_rank=noisy,
        music_mode="threshold",
        music_threshold=cfg.music_threshold,
        omp_residual_tol=cfg.omp_residual_tol,
    )


def _run_solver(
    cfg: ExperimentConfig,
    Z,
    A: MeasurementMatrix,
    opts: SolverOptions,
    gamma_card: int,
) -> RecoveryResult:
    if cfg.compressive is not None:
        omega = cfg.compressive.row_subset(cfg.L)
        max_card = cfg.oracle_max_cardinality or gamma_card
        return compressive_recover(
            Z, A, omega, solver=cfg.solver, opts=opts,
            oracle_max_cardinality=max_card, oracle_tol=cfg.oracle_tol,
        )
    if cfg.solver == "music":
        return mmv_music(Z, A, opts)
    if cfg.solver == "omp":
        return mmv_omp(Z, A, opts)
    max_card = cfg.oracle_max_cardinality or gamma_card
    return p0_oracle(Z, A, max_card, tol=cfg.oracle_tol)


def _expand_full(result: RecoveryResult, grid: GridParams) -> np.ndarray:
    full = np.zeros((grid.L * grid.L, grid.ed), dtype=complex)
    idx = result.support_hat.indices()
    if idx.size:
        full[idx] = result.S_hat
    return full


def run_trial(
    cfg: ExperimentConfig,
    delta: float,
    trial_index: int,
    e: int | None = None,
    d: int | None = None,
    probing_fixed: ProbingSequence | None = None,
) -> TrialRecord:
    """One full-pipeline trial: draw, simulate, transform, solve, score.

    The received signal goes through the Zak path; the measurement ensemble
    is never shortcut via A_c @ S.
    """
    e = cfg.E if e is None else e
    d = cfg.D if d is None else d
    t0 = time.perf_counter()
    gamma_card = int(round(delta * cfg.L))
    trial_id = f"{cfg.seed}-{_delta_bits(delta):x}-{e}x{d}-{trial_index}"

    def _record(rel, success, exact, unique=None, error=""):
        return TrialRecord(
            trial_id=trial_id,
            delta=float(delta),
            gamma_card=gamma_card,
            ed=e * d,
            solver=cfg.solver,
            snr_db=cfg.snr_db,
            rel_sq_error=rel,
            success=success,
            support_exact=exact,
            runtime_ms=(time.perf_counter() - t0) * 1e3,
            unique=unique,
            error=error,
        )

    if gamma_card == 0:
        return _record(float("nan"), False, False, error="validation: zero support (empty truth)")

    rng = trial_rng(cfg.seed, delta, trial_index)
    grid = GridParams(L=cfg.L, T=cfg.T, E=e, D=d, require_prime_L=cfg.require_prime_L)

    if cfg.compressive is not None and cfg.compressive.phi == "sqrt-box":
        box = _sqrt_box_cells(cfg.L)
        if gamma_card > len(box):
            return _record(
                float("nan"), False, False,
                error="validation: support exceeds the sqrt-box",
            )
        chosen = rng.choice(len(box), size=gamma_card, replace=False)
        support = SupportSet.from_indices(cfg.L, [box[i] for i in chosen])
    else:
        support = random_support(grid, gamma_card, rng)

    sf = random_spreading(grid, support, rng)
    if probing_fixed is not None:
        c = probing_fixed
    elif cfg.probing == "alltop":
        c = alltop(cfg.L)
    else:
        c = random_disc(cfg.L, rng)
    A = build_matrix(c)

    y = simulate(sf, c)
    if not math.isinf(cfg.snr_db):
        y = add_noise(y, cfg.snr_db, rng)
    Z = assemble_Z(discrete_zak(y), grid)

    opts = _solver_options(cfg, gamma_card)
    try:
        result = _run_solver(cfg, Z, A, opts, gamma_card)
    except (ValueError, EnumerationBudgetError, np.linalg.LinAlgError) as exc:
        return _record(float("nan"), False, False, error=f"{type(exc).__name__}: {exc}")

    S_true = pack_unknowns(sf).S
    rel = relative_sq_error(_expand_full(result, grid), S_true)
    exact = result.support_hat.cells == support.cells
    success = rel <= cfg.success_threshold
    return _record(rel, success, exact, unique=result.diagnostics.unique)


@dataclass(frozen=True)
class SweepRow:
    delta: float
    ed: int
    snr_db: float
    solver: str
    probing: str
    recovery_prob: float
    ere: float
    trials: int
    anomalies: int


def run_sweep(cfg: ExperimentConfig, threads: int | None = None):
    """Run all (delta, (E,D)) cells; returns (summary rows, trial records).

    Trials execute concurrently with per-trial derived seeds; the output
    order is fixed by (delta index, ed index, trial index) regardless of
    schedule.
    """
    n_workers = resolve_threads(threads)
    fixed = frozen_probing(cfg)
    cells = cfg.ed_cells()
    tasks = [
        (di, ci, ti)
        for di in range(len(cfg.delta_grid))
        for ci in range(len(cells))
        for ti in range(cfg.trials)
    ]

    def work(key):
        di, ci, ti = key
        e, d = cells[ci]
        return key, run_trial(cfg, cfg.delta_grid[di], ti, e=e, d=d, probing_fixed=fixed)

    results: dict = {}
    if n_workers == 1:
        for key in tasks:
            k, rec = work(key)
            results[k] = rec
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for k, rec in pool.map(work, tasks):
                results[k] = rec

    records = [results[k] for k in sorted(results)]
    rows = []
    for di, delta in enumerate(cfg.delta_grid):
        for ci, (e, d) in enumerate(cells):
            cell = [results[(di, ci, ti)] for ti in range(cfg.trials)]
            scored = [r.rel_sq_error for r in cell if not r.error and not math.isnan(r.rel_sq_error)]
            rows.append(
                SweepRow(
                    delta=float(delta),
                    ed=e * d,
                    snr_db=cfg.snr_db,
                    solver=cfg.solver,
                    probing=cfg.probing,
                    recovery_prob=float(np.mean([r.success for r in cell])),
                    ere=float(np.mean(scored)) if scored else float("nan"),
                    trials=len(cell),
                    anomalies=sum(r.anomaly for r in cell),
                )
            )
    return rows, records


# ---------------------------------------------------------------------------
# CSV emission: 17 significant digits, LF endings, fully deterministic.
# runtime_ms is intentionally left out of the per-trial file so reruns are
# byte-identical.

SUMMARY_HEADER = "delta,ed,snr_db,solver,probing,recovery_prob,ere,trials,anomalies"
TRIAL_HEADER = (
    "trial_id,delta,gamma_card,ed,solver,snr_db,rel_sq_error,success,"
    "support_exact,unique,error"
)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".16e")


def _fmt_bool(b) -> str:
    if b is None:
        return ""
    return "true" if b else "false"


def summary_csv(rows) -> str:
    lines = [SUMMARY_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    _fmt_float(r.delta),
                    str(r.ed),
                    _fmt_float(r.snr_db),
                    r.solver,
                    r.probing,
                    _fmt_float(r.recovery_prob),
                    _fmt_float(r.ere),
                    str(r.trials),
                    str(r.anomalies),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def trials_csv(records) -> str:
    lines = [TRIAL_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    r.trial_id,
                    _fmt_float(r.delta),
                    str(r.gamma_card),
                    str(r.ed),
                    r.solver,
                    _fmt_float(r.snr_db),
                    _fmt_float(r.rel_sq_error),
                    _fmt_bool(r.success),
                    _fmt_bool(r.support_exact),
                    _fmt_bool(r.unique),
                    r.error.replace(",", ";"),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(text: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
