"""Command-line interface: gen-matrix, simulate, recover, sweep, stability,
counterexample, spark.

Exit codes: 0 on success, 1 on validation errors (bad arguments, malformed
configs, enumeration budgets), 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import fileio
from .analysis import ambiguous_instance, stability_bounds
from .harness import (
    ExperimentConfig,
    frozen_probing,
    run_sweep,
    summary_csv,
    trials_csv,
    write_csv,
)
from .model import GridParams, SupportSet, random_spreading, random_support
from .pipeline import (
    MeasurementEnsemble,
    ReceivedSignal,
    add_noise,
    assemble_Z,
    discrete_zak,
    simulate,
)
from .probing import (
    EnumerationBudgetError,
    RowSubset,
    alltop,
    build_matrix,
    random_disc,
    row_submatrix,
    spark_exhaustive,
)
from .solvers import SolverOptions, compressive_recover, mmv_music, mmv_omp, p0_oracle


def _probing_sequence(kind: str, L: int, seed: int):
    if kind == "alltop":
        return alltop(L)
    return random_disc(L, np.random.default_rng(seed))


def _parse_gamma(text: str, L: int) -> SupportSet:
    """Parse 'k,m;k,m;...' into a support set."""
    cells = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        k, m = part.split(",")
        cells.append((int(k), int(m)))
    return SupportSet(L, frozenset(cells))


def _cmd_gen_matrix(args) -> int:
    c = _probing_sequence(args.probing, args.L, args.seed)
    A = build_matrix(c)
    fileio.write_complex_matrix(args.out, A.A)
    print(f"wrote {args.L}x{args.L * args.L} measurement matrix to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    if args.spreading:
        sf = fileio.read_spreading(args.spreading)
    else:
        grid = GridParams(L=args.L, T=args.T, E=args.E, D=args.D,
                          require_prime_L=not args.allow_composite_L)
        rng = np.random.default_rng(args.seed)
        support = random_support(grid, args.gamma_card, rng)
        sf = random_spreading(grid, support, rng)
        if args.emit_spreading:
            fileio.write_spreading(args.emit_spreading, sf)
    c = _probing_sequence(args.probing, sf.grid.L, args.probing_seed)
    y = simulate(sf, c)
    if args.snr_db is not None:
        y = add_noise(y, args.snr_db, np.random.default_rng(args.noise_seed), seed=args.noise_seed)
    fileio.write_complex_matrix(args.out, y.y.reshape(-1, 1))
    print(f"wrote received signal ({y.y.size} samples) to {args.out}")
    return 0


def _cmd_recover(args) -> int:
    grid = GridParams(L=args.L, T=args.T, E=args.E, D=args.D,
                      require_prime_L=not args.allow_composite_L)
    c = _probing_sequence(args.probing, args.L, args.probing_seed)
    A = build_matrix(c)
    if args.y:
        y_arr = fileio.read_complex_matrix(args.y).ravel()
        Z = assemble_Z(discrete_zak(ReceivedSignal(grid=grid, y=y_arr)), grid)
    else:
        Z = MeasurementEnsemble(grid=grid, Z=fileio.read_complex_matrix(args.z))

    if args.top_k is not None:
        opts = SolverOptions(music_mode="top_k", music_top_k=args.top_k,
                             omp_max_support=args.top_k,
                             noise_floor_rank=args.noisy)
    else:
        opts = SolverOptions(music_mode="threshold", music_threshold=args.threshold,
                             noise_floor_rank=args.noisy)

    if args.omega:
        omega = RowSubset(args.L, tuple(int(i) for i in args.omega.split(",")))
        result = compressive_recover(
            Z, A, omega, solver=args.solver, opts=opts,
            oracle_max_cardinality=args.oracle_max_cardinality,
        )
    elif args.solver == "music":
        result = mmv_music(Z, A, opts)
    elif args.solver == "omp":
        result = mmv_omp(Z, A, opts)
    else:
        result = p0_oracle(Z, A, args.oracle_max_cardinality or args.L)
    fileio.write_recovery_result(args.out, result, args.L)
    print(
        f"recovered support of size {len(result.support_hat)} "
        f"(rank_hat={result.rank_hat}); wrote {args.out}"
    )
    return 0


def _cmd_sweep(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{args.config}: line {exc.lineno}: {exc.msg}") from exc
    cfg = ExperimentConfig.from_dict(doc)
    rows, records = run_sweep(cfg, threads=args.threads)
    write_csv(summary_csv(rows), args.out)
    print(f"wrote {len(rows)} summary rows to {args.out}")
    if args.emit_trials:
        write_csv(trials_csv(records), args.emit_trials)
        print(f"wrote {len(records)} trial rows to {args.emit_trials}")
    return 0


def _cmd_stability(args) -> int:
    grid = GridParams(L=args.L, T=args.T, E=1, D=1,
                      require_prime_L=not args.allow_composite_L)
    c = _probing_sequence(args.probing, args.L, args.seed)
    A = build_matrix(c)
    support = _parse_gamma(args.gamma, args.L)
    b = stability_bounds(A, support, grid)
    print(f"alpha = {b.alpha:.12e}")
    print(f"beta  = {b.beta:.12e}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(
                {"alpha": b.alpha, "beta": b.beta, "gamma_card": b.gamma_card},
                fh, sort_keys=True,
            )
            fh.write("\n")
    return 0


def _cmd_counterexample(args) -> int:
    c = _probing_sequence(args.probing, args.L, args.seed)
    A = build_matrix(c)
    w = ambiguous_instance(A, args.K, np.random.default_rng(args.seed))
    fileio.write_witness(args.out, w, args.L, seed=args.seed)
    print(
        f"wrote witness with |gamma|={len(w.gamma)}, |gamma_prime|={len(w.gamma_prime)} "
        f"to {args.out}"
    )
    return 0


def _cmd_spark(args) -> int:
    c = _probing_sequence(args.probing, args.L, args.seed)
    A = build_matrix(c)
    if args.P is not None:
        M = row_submatrix(A, RowSubset.prefix(args.L, args.P))
    else:
        M = A.A
    rows = M.shape[0]
    max_card = args.max_cardinality or rows
    found = spark_exhaustive(M, max_card)
    if found is not None:
        print(f"spark = {found}")
    elif max_card >= rows:
        # Every subset of up to `rows` columns is independent, and any
        # rows+1 columns are dependent, so the spark is pinned exactly.
        print(f"spark = {rows + 1}")
    else:
        print(f"spark exceeds {max_card}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spreadid",
        description="Delay-Doppler spreading-function identification toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_probing(p, seed_flag="--seed"):
        p.add_argument("--probing", choices=["alltop", "random-disc"], default="random-disc")
        p.add_argument(seed_flag, type=int, default=0)

    p = sub.add_parser("gen-matrix", help="emit the measurement matrix for a probing sequence")
    p.add_argument("--L", type=int, required=True)
    add_probing(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_matrix)

    p = sub.add_parser("simulate", help="spreading spec in, received-signal file out")
    p.add_argument("--spreading", help="spreading JSON file (omit to generate randomly)")
    p.add_argument("--L", type=int, default=5)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--E", type=int, default=1)
    p.add_argument("--D", type=int, default=1)
    p.add_argument("--gamma-card", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-spreading", help="write the generated spreading truth here")
    p.add_argument("--probing", choices=["alltop", "random-disc"], default="random-disc")
    p.add_argument("--probing-seed", type=int, default=0)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--allow-composite-L", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("recover", help="measurements in, recovery result out")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--z", help="measurement-ensemble container file")
    src.add_argument("--y", help="received-signal container file (Zak path applied)")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--E", type=int, default=1)
    p.add_argument("--D", type=int, default=1)
    p.add_argument("--probing", choices=["alltop", "random-disc"], default="random-disc")
    p.add_argument("--probing-seed", type=int, default=0)
    p.add_argument("--solver", choices=["music", "omp", "oracle"], default="music")
    p.add_argument("--top-k", type=int, default=None, help="known support size")
    p.add_argument("--threshold", type=float, default=1e-6)
    p.add_argument("--noisy", action="store_true", help="noise-floor rank rule")
    p.add_argument("--omega", help="comma-separated row indices for compressive recovery")
    p.add_argument("--oracle-max-cardinality", type=int, default=None)
    p.add_argument("--allow-composite-L", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_recover)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--emit-trials", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("stability", help="extremal gains of a support-restricted system")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--T", type=float, default=1.0)
    add_probing(p)
    p.add_argument("--gamma", required=True, help="cells as 'k,m;k,m;...'")
    p.add_argument("--allow-composite-L", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("counterexample", help="construct a non-uniqueness witness")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    add_probing(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_counterexample)

    p = sub.add_parser("spark", help="exhaustive spark verification at small L")
    p.add_argument("--L", type=int, required=True)
    add_probing(p)
    p.add_argument("--P", type=int, default=None, help="check the first P rows only")
    p.add_argument("--max-cardinality", type=int, default=None)
    p.set_defaults(func=_cmd_spark)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ValueError, EnumerationBudgetError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (np.linalg.LinAlgError, FloatingPointError, AssertionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
