"""Sampled probing response, noise injection, and Zak-domain measurement assembly.

The chain simulate -> discrete_zak -> assemble_Z turns a spreading function
and probing sequence into the L x (E*D) measurement ensemble Z satisfying
Z = A_c @ S exactly (up to rounding), where S = pack_unknowns(sf).S.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import DiscreteSpreadingFunction, GridParams
from .probing import ProbingSequence


@dataclass(frozen=True)
class NoiseMeta:
    snr_db: float
    noise_power: float
    seed: int | None = None


@dataclass(frozen=True)
class ReceivedSignal:
    """Samples y[n], n = 0..B*V-1, of the operator response at rate B."""

    grid: GridParams
    y: np.ndarray
    noise_meta: NoiseMeta | None = None

    def __post_init__(self):
        arr = np.asarray(self.y, dtype=complex).ravel()
        if arr.size != self.grid.samples_total:
            raise ValueError(
                f"y must have length {self.grid.samples_total}, got {arr.size}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "y", arr)


@dataclass(frozen=True)
class MeasurementEnsemble:
    """L x (E*D) matrix of Zak-domain measurement vectors.

    Column n*D + r is the length-L measurement vector of within-cell sample
    (n, r); in the noiseless case Z = A_c @ S to numerical precision.
    """

    grid: GridParams
    Z: np.ndarray

    def __post_init__(self):
        g = self.grid
        arr = np.asarray(self.Z, dtype=complex)
        if arr.shape != (g.L, g.ed):
            raise ValueError(f"Z must have shape {(g.L, g.ed)}, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "Z", arr)


def probe_samples(c: ProbingSequence, grid: GridParams) -> np.ndarray:
    """One period (length E*L) of the sampled probing signal.

    x[m] = c[(-k) mod L] at the cell strides m = E*k and zero elsewhere;
    callers index m modulo E*L for the periodic extension.
    """
    if c.L != grid.L:
        raise ValueError("probing sequence and grid disagree on L")
    g = grid
    x = np.zeros(g.delay_grid, dtype=complex)
    k = np.arange(g.L)
    x[g.E * k] = c.c[(-k) % g.L]
    return x


def simulate(sf: DiscreteSpreadingFunction, c: ProbingSequence) -> ReceivedSignal:
    """Sampled response y[n] of the spreading function to the probing train.

    Evaluates, for n = 0..E*D*L-1,

        y[n] = (1/(B*V)) * sum_{r,l} samples[r, l] * x[(n - r) mod E*L]
                          * exp(j*2*pi*l*n/(B*V))

    with x the E*L-periodic sampled probing signal.  The evaluation is
    exact: x is nonzero only at the E-strides, so delay row rho = eta + E*k
    contributes only to outputs n = eta + E*q, where its Doppler sum is a
    D*L-point inverse DFT of the row twisted by exp(j*2*pi*l*eta/(E*D*L)).
    """
    g = sf.grid
    if c.L != g.L:
        raise ValueError("spreading function and probing sequence disagree on L")
    E, DL, EDL = g.E, g.doppler_grid, g.samples_total

    active_rows = np.flatnonzero(np.any(sf.samples != 0, axis=1))
    y = np.zeros((DL, E), dtype=complex)          # y[q, eta] = y[eta + E*q]
    if active_rows.size:
        l = np.arange(DL)
        eta = active_rows % E
        twiddle = np.exp(2j * np.pi * np.outer(eta, l) / EDL)
        # row rho at outputs eta + E*q:
        #   (1/EDL) * sum_l samples[rho, l] exp(j 2 pi l (eta + E q) / EDL)
        G = np.fft.ifft(sf.samples[active_rows] * twiddle, axis=1) / E
        q = np.arange(DL)
        for row, G_row in zip(active_rows, G):
            kappa = row // E
            y[:, row % E] += c.c[(kappa - q) % g.L] * G_row
    return ReceivedSignal(grid=g, y=y.reshape(EDL))


def add_noise(
    y: ReceivedSignal,
    snr_db: float,
    rng: np.random.Generator,
    seed: int | None = None,
) -> ReceivedSignal:
    """Add circularly-symmetric complex Gaussian noise at the given SNR.

    The per-sample noise variance is set from the empirical power of the
    realized signal, sigma^2 = (||y||^2 / len(y)) * 10^(-snr_db/10), so the
    reported SNR is exact per trial.  snr_db = +inf returns the signal
    unchanged (with zero noise power recorded).
    """
    if np.isposinf(snr_db):
        return replace(y, noise_meta=NoiseMeta(snr_db=float("inf"), noise_power=0.0, seed=seed))
    signal_power = float(np.mean(np.abs(y.y) ** 2))
    if signal_power == 0.0:
        raise ValueError("cannot set a finite SNR on an all-zero signal")
    sigma2 = signal_power * 10.0 ** (-snr_db / 10.0)
    w = rng.standard_normal((2, y.y.size))
    noise = (w[0] + 1j * w[1]) * np.sqrt(sigma2 / 2.0)
    return ReceivedSignal(
        grid=y.grid,
        y=y.y + noise,
        noise_meta=NoiseMeta(snr_db=float(snr_db), noise_power=sigma2, seed=seed),
    )


def discrete_zak(y: ReceivedSignal) -> np.ndarray:
    """Discrete Zak transform with parameters (E*L, D), indexed (n, r).

    Z[n, r] = (1/D) * sum_q y[n + E*L*q] * exp(-j*2*pi*q*r/D) for
    0 <= n < E*L, 0 <= r < D.  For D = 1 this is the identity on one
    period, and D * sum |Z|^2 = ||y||^2 (isometry).
    """
    g = y.grid
    folded = y.y.reshape(g.D, g.delay_grid)        # row q holds y[E*L*q + n]
    return (np.fft.fft(folded, axis=0) / g.D).T    # (E*L, D)


def assemble_Z(zak: np.ndarray, grid: GridParams) -> MeasurementEnsemble:
    """Assemble the measurement ensemble from the Zak array.

    Row p of column n*D + r reads the Zak value at delay index n + E*p,
    corrected by the phase exp(-j*2*pi*r*p/(D*L)) and scaled by B*V = E*D*L.
    The scale makes the ensemble satisfy Z = A_c @ S exactly, cancelling the
    1/(B*V) normalization of the sampled response.
    """
    g = grid
    zak = np.asarray(zak, dtype=complex)
    if zak.shape != (g.delay_grid, g.D):
        raise ValueError(f"zak array must have shape {(g.delay_grid, g.D)}, got {zak.shape}")
    strided = zak.reshape(g.L, g.E, g.D)           # (p, n, r)
    p = np.arange(g.L)[:, None]
    r = np.arange(g.D)[None, :]
    phase = np.exp(-2j * np.pi * r * p / (g.D * g.L))
    Z = (strided * phase[:, None, :]).reshape(g.L, g.ed) * g.samples_total
    return MeasurementEnsemble(grid=g, Z=Z)
