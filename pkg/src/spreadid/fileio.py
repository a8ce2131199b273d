"""Stable on-disk formats: complex-matrix containers and JSON records.

The matrix container is a plain-text format with a shape header followed by
row-major complex pairs:

    # spreadid complex-matrix v1
    <rows> <cols>
    <re> <im> <re> <im> ...     (one line per row, 17 significant digits)

Vectors (received signals) are stored as single-column matrices.  JSON
records (spreading functions, recovery results, ambiguity witnesses) are
written with sorted keys so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import json

import numpy as np

from .analysis import AmbiguityWitness
from .model import DiscreteSpreadingFunction, GridParams, SupportSet
from .solvers import RecoveryResult

MAGIC = "# spreadid complex-matrix v1"


def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def write_complex_matrix(path, arr: np.ndarray) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=complex))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MAGIC + "\n")
        fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            parts = []
            for v in row:
                parts.append(_fmt(v.real))
                parts.append(_fmt(v.imag))
            fh.write(" ".join(parts) + "\n")


def read_complex_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != MAGIC:
            raise ValueError(f"{path}: line 1: expected header {MAGIC!r}")
        shape_line = fh.readline().split()
        if len(shape_line) != 2:
            raise ValueError(f"{path}: line 2: expected '<rows> <cols>'")
        rows, cols = int(shape_line[0]), int(shape_line[1])
        out = np.empty((rows, cols), dtype=complex)
        for i in range(rows):
            vals = fh.readline().split()
            if len(vals) != 2 * cols:
                raise ValueError(f"{path}: line {3 + i}: expected {2 * cols} numbers")
            flat = np.array(vals, dtype=float)
            out[i] = flat[0::2] + 1j * flat[1::2]
    return out


def _complex_array_to_json(arr: np.ndarray):
    arr = np.asarray(arr, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.atleast_2d(arr)]


def _complex_array_from_json(obj) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in obj], dtype=complex)


def write_spreading(path, sf: DiscreteSpreadingFunction) -> None:
    g = sf.grid
    doc = {
        "grid": {"L": g.L, "T": g.T, "E": g.E, "D": g.D},
        "support": [[k, m] for k, m in sf.support.sorted_cells()],
        "samples": _complex_array_to_json(sf.samples),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def read_spreading(path) -> DiscreteSpreadingFunction:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    gd = doc["grid"]
    grid = GridParams(
        L=int(gd["L"]), T=float(gd["T"]), E=int(gd["E"]), D=int(gd["D"]),
        require_prime_L=False,
    )
    support = SupportSet(grid.L, frozenset((int(k), int(m)) for k, m in doc["support"]))
    return DiscreteSpreadingFunction(
        grid=grid, samples=_complex_array_from_json(doc["samples"]), support=support
    )


def write_recovery_result(path, result: RecoveryResult, L: int) -> None:
    d = result.diagnostics
    doc = {
        "support_hat": [[k, m] for k, m in result.support_hat.sorted_cells()],
        "S_hat": _complex_array_to_json(result.S_hat) if result.S_hat.size else [],
        "rank_hat": result.rank_hat,
        "diagnostics": {
            "singular_values": [float(v) for v in d.singular_values],
            "column_scores": (
                [float(v) for v in d.column_scores] if d.column_scores is not None else None
            ),
            "residual_fro": float(d.residual_fro),
            "unique": d.unique,
            "failure": d.failure,
            "warnings": list(d.warnings),
            "consumed_zak_rows": (
                list(d.consumed_zak_rows) if d.consumed_zak_rows is not None else None
            ),
        },
        "L": L,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def write_witness(path, w: AmbiguityWitness, L: int, seed: int | None = None) -> None:
    doc = {
        "L": L,
        "K": w.K,
        "seed": seed,
        "gamma": [[k, m] for k, m in w.gamma.sorted_cells()],
        "gamma_prime": [[k, m] for k, m in w.gamma_prime.sorted_cells()],
        "B_gamma": _complex_array_to_json(w.B_gamma),
        "B_gamma_prime": _complex_array_to_json(w.B_gamma_prime),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def read_witness(path) -> AmbiguityWitness:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    L = int(doc["L"])
    return AmbiguityWitness(
        gamma=SupportSet(L, frozenset((int(k), int(m)) for k, m in doc["gamma"])),
        B_gamma=_complex_array_from_json(doc["B_gamma"]),
        gamma_prime=SupportSet(L, frozenset((int(k), int(m)) for k, m in doc["gamma_prime"])),
        B_gamma_prime=_complex_array_from_json(doc["B_gamma_prime"]),
        K=int(doc["K"]),
    )
