"""Periodic dyadic grids, signals, and exact discrete Fourier calculus.

Everything downstream (multiplier families, tile decompositions, windowed
expansions) lives on a circle of dyadic length L = 2**length_log2 sampled at
M = 2**samples_log2 equispaced points.  Keeping both exponents explicit lets
us do all interval arithmetic in exact powers of two, so containment checks
and block averages never see rounding error.

Conventions:

  * A signal is a read-only complex128 vector attached to its grid.
  * dft multiplies the raw FFT by the sample spacing, so it approximates the
    continuum Fourier integral and Parseval holds exactly in the discrete
    l2 norms (same floating point values on both sides).
  * The dual of a grid has length M/L and the same number of samples; taking
    the dual twice returns the original grid.  Frequency-side signals are
    stored in FFT slot order, and signed_points() gives the signed coordinate
    of each slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DyadicGrid:
    """Equispaced samples of the circle R / (2**length_log2) Z."""

    length_log2: int
    samples_log2: int

    def __post_init__(self):
        if self.samples_log2 < 0:
            raise ValueError("samples_log2 must be nonnegative")
        if self.samples_log2 < self.length_log2:
            raise ValueError("need at least one sample per unit cell")

    @property
    def length(self) -> float:
        return 2.0 ** self.length_log2

    @property
    def num_samples(self) -> int:
        return 1 << self.samples_log2

    @property
    def spacing(self) -> float:
        return 2.0 ** (self.length_log2 - self.samples_log2)

    def points(self) -> np.ndarray:
        return np.arange(self.num_samples) * self.spacing

    def signed_points(self) -> np.ndarray:
        """Coordinates of the FFT slots, negative half mapped to [-L/2, 0)."""
        m = self.num_samples
        slots = np.arange(m)
        signed = np.where(slots < m // 2 + m % 2, slots, slots - m)
        return signed * self.spacing

    def dual(self) -> "DyadicGrid":
        return DyadicGrid(self.samples_log2 - self.length_log2, self.samples_log2)


@dataclass(frozen=True)
class Signal:
    """Immutable sample vector on a DyadicGrid."""

    grid: DyadicGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.num_samples,):
            raise ValueError(
                f"expected {self.grid.num_samples} samples, got shape {vals.shape}"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def map_values(self, new_values) -> "Signal":
        return Signal(self.grid, new_values)


def dft(signal: Signal) -> Signal:
    """Forward transform, normalized as a Riemann sum of the Fourier integral."""
    hat = np.fft.fft(signal.values) * signal.grid.spacing
    return Signal(signal.grid.dual(), hat)


def idft(signal: Signal) -> Signal:
    """Inverse of dft; the input is interpreted as frequency-side data."""
    out_grid = signal.grid.dual()
    vals = np.fft.ifft(signal.values) / out_grid.spacing
    return Signal(out_grid, vals)


def fourier_project(signal: Signal, multiplier: np.ndarray) -> Signal:
    """Apply a Fourier multiplier given by its samples in FFT slot order.

    The dft/idft normalizations cancel, so this is just ifft(m * fft(f)).
    """
    m = np.asarray(multiplier)
    if m.shape != (signal.grid.num_samples,):
        raise ValueError("multiplier must have one sample per FFT slot")
    return Signal(signal.grid, np.fft.ifft(m * np.fft.fft(signal.values)))


def lp_norm(signal: Signal, p: float) -> float:
    """Discrete L^p norm with the grid spacing as quadrature weight."""
    mags = np.abs(signal.values)
    if p == np.inf:
        return float(mags.max(initial=0.0))
    if p < 1:
        raise ValueError("p must be at least 1 (or inf)")
    return float((np.sum(mags ** p) * signal.grid.spacing) ** (1.0 / p))


def martingale_avg(signal: Signal, k: int) -> Signal:
    """Replace the signal by its average over each dyadic cell of length 2**-k.

    The cell length must lie between one sample spacing and the full period.
    Averaging at scale k and then at a coarser scale j equals averaging at j
    directly; the composition is exact for integer-valued data.
    """
    g = signal.grid
    per_cell_log2 = g.samples_log2 - g.length_log2 - k
    if per_cell_log2 < 0 or per_cell_log2 > g.samples_log2:
        raise ValueError(
            f"cell scale k={k} not resolvable on grid "
            f"({g.length_log2}, {g.samples_log2})"
        )
    per_cell = 1 << per_cell_log2
    cells = g.num_samples >> per_cell_log2
    means = signal.values.reshape(cells, per_cell).mean(axis=1)
    return Signal(g, np.repeat(means, per_cell))


def hl_maximal(signal: Signal) -> Signal:
    """Maximal function over centred windows of 2*r samples, r a power of two.

    Window radii run from one sample up to half the circle, so every dyadic
    cell average is dominated by twice the value here.  Computed with one
    cumulative sum over a tripled copy of |f|, which keeps the periodic
    wraparound exact.
    """
    mags = np.abs(signal.values)
    m = mags.size
    tiled = np.concatenate([mags, mags, mags])
    csum = np.concatenate([[0.0], np.cumsum(tiled)])
    idx = np.arange(m)
    best = np.zeros(m)
    r = 1
    while 2 * r <= m:
        window = (csum[m + idx + r] - csum[m + idx - r]) / (2 * r)
        np.maximum(best, window, out=best)
        r *= 2
    return Signal(signal.grid, best)


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """Half-open dyadic interval [index * 2**-k, (index + 1) * 2**-k).

    Negative k gives intervals longer than one; index is the position within
    the generation, so the pair is a node of the infinite dyadic tree.
    """

    k: int
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("index must be nonnegative")

    @property
    def length(self) -> float:
        return 2.0 ** (-self.k)

    @property
    def left(self) -> float:
        return self.index * self.length

    @property
    def right(self) -> float:
        return (self.index + 1) * self.length

    @property
    def center(self) -> float:
        return (self.index + 0.5) * self.length

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.k - 1, self.index >> 1)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (
            DyadicInterval(self.k + 1, 2 * self.index),
            DyadicInterval(self.k + 1, 2 * self.index + 1),
        )

    def contains(self, other: "DyadicInterval") -> bool:
        """Tree containment: other is a descendant of (or equal to) self."""
        if other.k < self.k:
            return False
        return (other.index >> (other.k - self.k)) == self.index


def containing_interval(x: float, k: int) -> DyadicInterval:
    """The unique dyadic interval of length 2**-k whose half-open span holds x."""
    if x < 0:
        raise ValueError("points live on [0, length)")
    return DyadicInterval(k, int(np.floor(x * 2.0 ** k)))


def periodic_distance(x, y, length: float):
    """Distance on the circle of the given circumference; broadcasts."""
    d = np.abs(np.asarray(x) - np.asarray(y)) % length
    return np.minimum(d, length - d)


def interval_sample_range(grid: DyadicGrid, interval: DyadicInterval) -> tuple[int, int]:
    """Half-open sample index range covered by a dyadic interval.

    Requires the interval to be at least one sample wide and to fit in the
    period, both automatic for intervals produced on this grid.
    """
    per_log2 = grid.samples_log2 - grid.length_log2 - interval.k
    if per_log2 < 0:
        raise ValueError("interval is finer than the sample spacing")
    start = interval.index << per_log2
    stop = (interval.index + 1) << per_log2
    if stop > grid.num_samples:
        raise ValueError("interval extends past the period")
    return start, stop


def save_signal(signal: Signal, csv_path: str) -> None:
    """Write samples as index,re,im rows plus a .json sidecar with the grid.

    Floats are written with repr, so reloading reproduces the exact bits and
    repeated saves of the same signal are byte-identical.
    """
    with open(csv_path, "w") as fh:
        fh.write("index,re,im\n")
        for i, v in enumerate(signal.values):
            fh.write(f"{i},{float(v.real)!r},{float(v.imag)!r}\n")
    meta = {
        "length_log2": signal.grid.length_log2,
        "samples_log2": signal.grid.samples_log2,
    }
    with open(_sidecar_path(csv_path), "w") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def load_signal(csv_path: str) -> Signal:
    with open(_sidecar_path(csv_path)) as fh:
        meta = json.load(fh)
    grid = DyadicGrid(meta["length_log2"], meta["samples_log2"])
    values = np.zeros(grid.num_samples, dtype=np.complex128)
    with open(csv_path) as fh:
        header = fh.readline()
        if header.strip() != "index,re,im":
            raise ValueError(f"unrecognized signal file header: {header!r}")
        for line in fh:
            idx_s, re_s, im_s = line.strip().split(",")
            values[int(idx_s)] = complex(float(re_s), float(im_s))
    return Signal(grid, values)


def _sidecar_path(csv_path: str) -> str:
    if csv_path.endswith(".csv"):
        return csv_path[:-4] + ".json"
    return csv_path + ".json"
