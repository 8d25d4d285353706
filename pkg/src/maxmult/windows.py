"""Windowed Fourier expansions of band multipliers on the dyadic circle.

For a scale k the system tiles the circle by dyadic intervals I of length
2^-k and attaches to each a modulated window

    phi_{I,n}(x) = |I|^{-1} phi((x - c(I)) / |I|) exp(2 pi i lambda_n x),

whose Fourier transform is the bump profile squeezed onto the band of
width 2^k around lambda_n and carrying the phase of the center c(I).  The
coefficient of I is the inner product <f, phi_{I,n}>; on the discrete
circle it equals a short frequency-side sum over the band, which is how
everything here computes it (no time-domain quadrature, no windowing
error).

The coefficients at one scale are critically spaced samples of the
demodulated band part of f.  Summing C_I exp(-2 pi i o c(I)) therefore
reproduces that band function plus alias images shifted by multiples of
the bandwidth, with alternating signs because the centers sit at
half-integer multiples of the spacing.  The reconstruction cutoff decides
which images survive:

  * "sharp" keeps exactly the central band.  With the cos2 profile the
    band endpoints carry zero weight, the alias images vanish there too,
    and the expansion reproduces the multiplier projection to machine
    precision.
  * "trapezoid" (kept for comparison) rolls off smoothly between half the
    bandwidth and the full bandwidth.  The rolloff region lies inside the
    first alias image, so at critical spacing the expansion picks up an
    order-one ghost there.  It still satisfies the stated cutoff support
    and plateau properties; it just fails the reconstruction identity.

Everything downstream (variation fields, local reductions, exponential
sums) consumes the coefficient fields computed here.
"""

import math
from dataclasses import dataclass

import numpy as np

from .grid import (DyadicGrid, DyadicInterval, Signal, idft, lp_norm,
                   martingale_avg, interval_sample_range)
from .multipliers import (FrequencySystem, MultiplierFamily, profile_samples,
                          maximal_projection, weight_scale_variation)
from .variation import rvar_norm, rvar_norm_batch

CUTOFF_KINDS = ("sharp", "trapezoid")


def cutoff_samples(t, kind: str = "sharp") -> np.ndarray:
    """Reconstruction cutoff profile: exactly 1 on |t| <= 1/2, 0 outside [-1, 1]."""
    t = np.asarray(t, dtype=np.float64)
    if kind == "sharp":
        return (np.abs(t) <= 0.5).astype(np.float64)
    if kind == "trapezoid":
        out = np.zeros(t.shape)
        a = np.abs(t)
        out[a <= 0.5] = 1.0
        ramp = (a > 0.5) & (a < 1.0)
        out[ramp] = np.cos(np.pi * (a[ramp] - 0.5)) ** 2
        return out
    raise ValueError(f"unknown cutoff kind {kind!r}")


@dataclass(frozen=True)
class WindowSystem:
    """Window profile and reconstruction cutoff over a frequency system."""

    system: FrequencySystem
    profile: str = "cos2"
    strict_adapted: bool = True
    cutoff: str = "sharp"

    def __post_init__(self):
        if self.cutoff not in CUTOFF_KINDS:
            raise ValueError(f"unknown cutoff kind {self.cutoff!r}")
        profile_samples(np.zeros(1), self.profile)  # validates the name

    @property
    def amplitude(self) -> float:
        if self.profile == "cos2" and self.strict_adapted:
            return 1.0 / np.pi
        return 1.0

    def profile_values(self, t) -> np.ndarray:
        return self.amplitude * profile_samples(t, self.profile)

    def center_budget(self, r: float) -> float:
        """Variation norm of the window transforms evaluated at band center.

        The center value is the amplitude at every scale, so the chain is
        constant and the norm is its sup part.  Stays below 1 by the
        amplitude normalization.
        """
        chain = np.full(len(self.system.scales), self.amplitude,
                        dtype=np.complex128)
        return rvar_norm(chain, r)

    def num_windows(self, k: int) -> int:
        """Dyadic intervals of length 2^-k tiling the circle."""
        count = self.system.grid.length * 2.0 ** k
        if count != round(count) or count < 1:
            raise ValueError(f"scale {k} does not tile the circle evenly")
        return int(round(count))


def _band_offsets(wsys: WindowSystem, k: int):
    """Slot offsets and profile weights across the band at scale k."""
    dual = wsys.system.grid.dual()
    width = 2.0 ** k
    h = int(math.floor((width / 2) / dual.spacing))
    rel = np.arange(-h, h + 1)
    offsets = rel * dual.spacing
    weights = wsys.profile_values(offsets / width)
    return rel, offsets, weights


def _check_scale(wsys: WindowSystem, interval: DyadicInterval) -> None:
    if interval.k not in wsys.system.scales:
        raise ValueError(
            f"interval scale {interval.k} is not an admissible window scale")


def window_coeff(f: Signal, wsys: WindowSystem, n: int,
                 interval: DyadicInterval) -> complex:
    """Inner product of f with the window at one interval and frequency."""
    _check_scale(wsys, interval)
    field = coefficient_field(f, wsys, n, interval.k)
    return complex(field[interval.index % len(field)])


def coefficient_field(f: Signal, wsys: WindowSystem, n: int, k: int) -> np.ndarray:
    """All window coefficients at scale k for frequency n, by interval index.

    Evaluated on the frequency side: the coefficient of I is a short sum
    of f-hat over the band around lambda_n, weighted by the profile and
    carrying the center phase of I.  Exact on the grid by Parseval; the
    sum has bandwidth * length + 1 terms regardless of the sample count.
    """
    system = wsys.system
    if k not in system.scales:
        raise ValueError(f"scale {k} is not admissible")
    grid = f.grid
    if grid != system.grid:
        raise ValueError("signal grid does not match the window system grid")
    dual = grid.dual()
    m = dual.num_samples
    lam = system.lambdas[n]
    j0 = int(round(lam / dual.spacing)) % m
    rel, offsets, weights = _band_offsets(wsys, k)
    fhat = np.fft.fft(f.values) * grid.spacing
    band = fhat[(j0 + rel) % m] * weights
    n_w = wsys.num_windows(k)
    centers = (np.arange(n_w) + 0.5) * 2.0 ** -k
    phases = np.exp(2j * np.pi * np.outer(centers, offsets))
    return phases @ band / grid.length


def window_signal(wsys: WindowSystem, n: int, interval: DyadicInterval) -> Signal:
    """The window phi_{I,n} itself as a time-domain signal."""
    _check_scale(wsys, interval)
    system = wsys.system
    dual = system.grid.dual()
    m = dual.num_samples
    lam = system.lambdas[n]
    j0 = int(round(lam / dual.spacing)) % m
    rel, offsets, weights = _band_offsets(wsys, interval.k)
    hat = np.zeros(m, dtype=np.complex128)
    hat[(j0 + rel) % m] = weights * np.exp(-2j * np.pi * offsets * interval.center)
    return idft(Signal(dual, hat))


def windowed_expand(f: Signal, wsys: WindowSystem, n: int, k: int) -> Signal:
    """Reconstruct the band projection from the window coefficients.

    Builds the coefficient exponential sum on the frequency grid, applies
    the cutoff scaled to the band, and inverts once.  With the sharp
    cutoff and the cos2 profile this reproduces
    fourier_project(f, weighted band bump) exactly up to roundoff.
    """
    system = wsys.system
    coeffs = coefficient_field(f, wsys, n, k)
    dual = system.grid.dual()
    m = dual.num_samples
    width = 2.0 ** k
    lam = system.lambdas[n]
    j0 = int(round(lam / dual.spacing)) % m
    reach = width if wsys.cutoff == "trapezoid" else width / 2
    h = int(math.floor(reach / dual.spacing))
    rel = np.arange(-h, h + 1)
    offsets = rel * dual.spacing
    cut = cutoff_samples(offsets / width, wsys.cutoff)
    n_w = len(coeffs)
    centers = (np.arange(n_w) + 0.5) * 2.0 ** -k
    expsum = np.exp(-2j * np.pi * np.outer(offsets, centers)) @ coeffs
    hat = np.zeros(m, dtype=np.complex128)
    hat[(j0 + rel) % m] = cut * expsum / width
    return idft(Signal(dual, hat))


def max_exp_sum(coeffs, lambdas, oversample: int = 8) -> float:
    """L2 norm over the unit period of the k-sup of exponential sums.

    coeffs has one row per k and one column per frequency.  The sup is
    taken over a uniform sample of [0, 1) dense relative to the largest
    frequency; for a fixed k and integer frequencies the quadrature is
    exact once the sampling beats twice the bandwidth, which the default
    oversampling factor does comfortably.
    """
    c = np.asarray(getattr(coeffs, "values", coeffs), dtype=np.complex128)
    if c.ndim == 1:
        c = c[:, None]
    if c.ndim != 2 or c.shape[0] == 0:
        raise ValueError("need a nonempty (scales x frequencies) array")
    lams = np.asarray(lambdas, dtype=np.float64)
    if lams.shape != (c.shape[1],):
        raise ValueError("one frequency per coefficient column")
    top = max(float(np.max(np.abs(lams))), 1.0)
    period = 1 << max(int(np.ceil(np.log2(top))), 0)
    num = oversample * period
    y = np.arange(num) / num
    waves = np.exp(2j * np.pi * np.outer(lams, y))
    sums = np.abs(c @ waves)
    sup = np.max(sums, axis=0)
    return float(np.sqrt(np.mean(sup ** 2)))


def variation_square_field(f: Signal, wsys: WindowSystem, r: float) -> Signal:
    """Pointwise l2-over-frequencies of the scale variation of coefficients.

    For each x and each frequency, the chain is the coefficient of the
    interval containing x, indexed by scale from the coarsest window down.
    The chain is constant on every finest-scale interval, so the work is
    one batched variation per frequency over those regions, then an
    expansion back to samples.
    """
    if r <= 2:
        raise ValueError("square variation field needs r > 2")
    system = wsys.system
    scales = system.scales
    k_fine = scales[-1]
    n_rows = wsys.num_windows(k_fine)
    rows = np.arange(n_rows)
    acc = np.zeros(n_rows)
    for n in range(system.size):
        chains = np.empty((n_rows, len(scales)), dtype=np.complex128)
        for j, k in enumerate(scales):
            field = coefficient_field(f, wsys, n, k)
            chains[:, j] = field[rows >> (k_fine - k)]
        acc += rvar_norm_batch(chains, r) ** 2
    per_row = np.sqrt(acc)
    reps = f.grid.num_samples // n_rows
    return Signal(f.grid, np.repeat(per_row, reps))


@dataclass(frozen=True)
class LocalReduceResult:
    """Both sides of the local maximal-vs-variation inequality on one cell.

    left is the L^p norm of the maximal projection over the cell, right
    the variation bound from the aligned windows, tail the contribution of
    shifted window families with their rapidly decaying weights.
    """

    left: float
    right: float
    tail: float

    @property
    def ratio(self) -> float:
        denom = self.right + self.tail
        if denom == 0.0:
            return 0.0 if self.left == 0.0 else math.inf
        return self.left / denom


def local_reduce(f: Signal, fam: MultiplierFamily, wsys: WindowSystem,
                 cell: DyadicInterval, r: float, p: float = 1.5,
                 max_shift: int = 8) -> LocalReduceResult:
    """Compare the local maximal projection with its variation bound.

    The cell must be a unit dyadic interval and every window scale must be
    at least unit length, so each window chain is well defined by taking
    the interval of that scale containing (or shifted against) the cell.
    The shifted families carry weight 2^(-100|shift|), so the reported
    tail is dominated by the first shift and is effectively zero; it is
    computed honestly rather than assumed.
    """
    system = fam.system
    if cell.k != 0:
        raise ValueError("reduction cell must have unit length")
    scales = system.scales
    if scales[-1] > 0:
        raise ValueError("window scales must be unit length or coarser")
    lo, hi = interval_sample_range(f.grid, cell)
    seg = Signal(DyadicGrid(0, f.grid.samples_log2 - f.grid.length_log2),
                 maximal_projection(f, fam).values[lo:hi])
    left = lp_norm(seg, p)

    fields = [[coefficient_field(f, wsys, n, k) for k in scales]
              for n in range(system.size)]

    def chain_norm(shift: int) -> float:
        total = 0.0
        for n in range(system.size):
            chain = np.empty(len(scales), dtype=np.complex128)
            for j, k in enumerate(scales):
                field = fields[n][j]
                idx = (cell.index >> -k) - shift
                chain[j] = field[idx % len(field)]
            total += rvar_norm(chain, r) ** 2
        return math.sqrt(total)

    scale_factor = system.size ** (0.5 - 1.0 / r) * weight_scale_variation(fam, r)
    right = scale_factor * chain_norm(0)
    tail = 0.0
    for shift in range(1, max_shift + 1):
        decay = 2.0 ** (-100 * shift)
        tail += decay * scale_factor * (chain_norm(shift) + chain_norm(-shift))
    return LocalReduceResult(left, right, tail)


def martingale_variation_report(f: Signal, wsys: WindowSystem, r: float,
                                p: float) -> dict:
    """Ratio report for the pointwise scale variation of local means.

    Two variants: the window-coefficient chains of the system (aggregated
    by variation_square_field) against (1 + center budget) times the
    signal norm, and the plain dyadic conditional means against the
    signal norm.  Both ratios should stay of order one as the grid
    refines; the harness tracks them across refinements.
    """
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    field = variation_square_field(f, wsys, r)
    denom = (1.0 + wsys.center_budget(r)) * lp_norm(f, p)
    window_ratio = lp_norm(field, p) / denom if denom > 0 else 0.0

    grid = f.grid
    ks = range(0, grid.samples_log2 - grid.length_log2 + 1)
    means = np.stack([martingale_avg(f, k).values for k in ks], axis=1)
    mart = rvar_norm_batch(means, r)
    mart_norm = lp_norm(Signal(grid, mart), p)
    fnorm = lp_norm(f, p)
    martingale_ratio = mart_norm / fnorm if fnorm > 0 else 0.0
    return {
        "window_ratio": float(window_ratio),
        "martingale_ratio": float(martingale_ratio),
        "r": float(r),
        "p": float(p),
    }


def coefficient_map(f: Signal, wsys: WindowSystem) -> list:
    """All coefficients as (k, n, interval index, value) rows."""
    rows = []
    for k in wsys.system.scales:
        for n in range(wsys.system.size):
            field = coefficient_field(f, wsys, n, k)
            for idx, val in enumerate(field):
                rows.append((k, n, idx, complex(val)))
    return rows


def save_coefficient_csv(rows, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("k,n,I_index,re,im\n")
        for k, n, idx, val in rows:
            fh.write(f"{k},{n},{idx},{val.real!r},{val.imag!r}\n")
