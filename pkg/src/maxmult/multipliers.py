"""Separated frequency systems and modulated bump multipliers.

A frequency system is a finite set of points on the frequency grid with a
separation constant (the smallest circular gap between two of them).  For
every admissible dyadic scale k the system carries one interval of length
2^k around each frequency; these intervals stay pairwise disjoint because
admissibility requires 2^k to be two orders of magnitude below the
separation.  A multiplier family decorates each interval with a bump
profile and a complex weight, and the operators built here are

  * the single-scale projection: sum of the weighted bump multipliers at
    one scale, applied as one Fourier multiplier,
  * the maximal projection: pointwise sup over admissible scales,
  * the sharp band projection onto a tenth of the separation around one
    frequency, and the square function aggregating all bands.

Scale chains (one weight or one bump value per scale, at a fixed
frequency) feed the variation norms from `variation`; those enter the
operator bounds the harness measures.

Bump profiles are assembled slot-wise around the center frequency, so
supports are exact: a sample outside the support interval is identically
zero, not merely tiny.  The cosine-squared profile in strict mode is
scaled by 1/pi, which keeps the finite-difference slope of the sampled
multiplier below the reciprocal interval length.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import DyadicGrid, Signal, fourier_project, hl_maximal
from .variation import DEFAULT_ORDER, rvar_norm

BUMP_KINDS = ("cos2", "indicator")
WEIGHT_MODES = ("ones", "random_unimodular", "file")

# Admissible scales need 2^k below this multiple of the separation.
SCALE_MARGIN = 1e-2


def profile_samples(t, kind: str = "cos2") -> np.ndarray:
    """Unit-width bump profile sampled at t.

    cos2 is cos(pi t)^2 for |t| < 1/2 and exactly zero elsewhere (open
    support mask, so the endpoint samples are 0.0 rather than rounding
    noise).  indicator is 1 on the closed interval |t| <= 1/2.
    """
    t = np.asarray(t, dtype=np.float64)
    if kind == "cos2":
        out = np.zeros(t.shape)
        inside = np.abs(t) < 0.5
        out[inside] = np.cos(np.pi * t[inside]) ** 2
        return out
    if kind == "indicator":
        return (np.abs(t) <= 0.5).astype(np.float64)
    raise ValueError(f"unknown bump kind {kind!r}")


def _freq_slot(freq_grid: DyadicGrid, value: float) -> int:
    """FFT slot index of an on-grid frequency; raises if off-grid."""
    ratio = value / freq_grid.spacing
    if ratio != round(ratio):
        raise ValueError(f"frequency {value} is not on the frequency grid")
    return int(round(ratio)) % freq_grid.num_samples


@dataclass(frozen=True)
class FrequencySystem:
    """Finite frequency set on a dyadic grid, with its admissible scales.

    `grid` is the spatial grid; frequencies live on its dual.  The
    separation is recomputed on every access (it is the smallest circular
    gap, infinite for a single frequency).  `single_scale_cap_log2` only
    matters in the single-frequency case, where every scale would be
    admissible: it caps the scale set at that exponent.
    """

    grid: DyadicGrid
    lambdas: tuple
    single_scale_cap_log2: int = 0

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        if len(lams) == 0:
            raise ValueError("need at least one frequency")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError("frequencies must be strictly increasing (no duplicates)")
        dual = self.grid.dual()
        half = dual.length / 2
        for lam in lams:
            if not (-half <= lam < half):
                raise ValueError(f"frequency {lam} outside the signed band [{-half}, {half})")
            _freq_slot(dual, lam)

    @property
    def size(self) -> int:
        return len(self.lambdas)

    @property
    def separation(self) -> float:
        if self.size == 1:
            return math.inf
        lams = np.asarray(self.lambdas)
        gaps = np.diff(lams)
        wrap = self.grid.dual().length - (lams[-1] - lams[0])
        return float(min(gaps.min(), wrap))

    @property
    def scales(self) -> tuple:
        """Admissible scale exponents, coarsest frequency width last."""
        k_min = -self.grid.length_log2
        if self.size == 1:
            k_max = self.single_scale_cap_log2
        else:
            bound = SCALE_MARGIN * self.separation
            k_max = math.floor(math.log2(bound))
            while 2.0 ** k_max >= bound:
                k_max -= 1
            while 2.0 ** (k_max + 1) < bound:
                k_max += 1
        if k_max < k_min:
            raise ValueError("no admissible scales: grid too coarse for the separation")
        return tuple(range(k_min, k_max + 1))


def build_system(lambdas, grid: DyadicGrid, single_scale_cap_log2: int = 0) -> FrequencySystem:
    """Sort, validate, and wrap a frequency list.

    Raises on duplicates, off-grid points, and when no scale is
    admissible.
    """
    lams = sorted(float(x) for x in lambdas)
    if len(set(lams)) != len(lams):
        raise ValueError("duplicate frequencies")
    system = FrequencySystem(grid, tuple(lams), single_scale_cap_log2)
    system.scales  # force the empty-scale check at build time
    return system


def _bump_half_slots(freq_grid: DyadicGrid, width: float) -> int:
    """Number of slots on each side of the center with |offset| <= width/2."""
    return int(math.floor((width / 2) / freq_grid.spacing))


def canonical_bump(freq_grid: DyadicGrid, center: float, width: float,
                   kind: str = "cos2", strict_adapted: bool = True) -> np.ndarray:
    """Sampled bump multiplier on the full frequency grid, FFT slot order.

    The profile is evaluated at exact slot offsets from the center, so the
    support is exact and periodic wrap-around is handled by slot
    arithmetic rather than float modulus.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    j0 = _freq_slot(freq_grid, center)
    m = freq_grid.num_samples
    h = _bump_half_slots(freq_grid, width)
    if 2 * h + 1 > m:
        raise ValueError("bump wider than the frequency grid")
    rel = np.arange(-h, h + 1)
    vals = profile_samples(rel * freq_grid.spacing / width, kind)
    if kind == "cos2" and strict_adapted:
        vals = vals / np.pi
    out = np.zeros(m)
    out[(j0 + rel) % m] = vals
    return out


@dataclass(frozen=True)
class MultiplierFamily:
    """Weights and bump choice over an entire frequency system.

    `weights` has one row per admissible scale (ascending) and one column
    per frequency.  The array is copied and frozen so a family can be
    shared between operators without defensive copies.
    """

    system: FrequencySystem
    weights: np.ndarray
    bump_kind: str = "cos2"
    strict_adapted: bool = True
    weight_mode: str = field(default="custom", compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.complex128)
        expected = (len(self.system.scales), self.system.size)
        if w.shape != expected:
            raise ValueError(f"weights must have shape {expected}, got {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.bump_kind not in BUMP_KINDS:
            raise ValueError(f"unknown bump kind {self.bump_kind!r}")

    @property
    def amplitude(self) -> float:
        """Peak value of each bump after the adaptedness normalization."""
        if self.bump_kind == "cos2" and self.strict_adapted:
            return 1.0 / np.pi
        return 1.0

    def scale_index(self, k: int) -> int:
        scales = self.system.scales
        if k not in scales:
            raise ValueError(f"scale {k} not admissible (have {scales[0]}..{scales[-1]})")
        return k - scales[0]

    def scale_multiplier(self, k: int) -> np.ndarray:
        """Sum of the weighted bumps at scale k, on the frequency grid.

        The per-frequency supports are pairwise disjoint at any admissible
        scale, so the summed multiplier applied once equals applying each
        bump separately and adding.
        """
        ik = self.scale_index(k)
        dual = self.system.grid.dual()
        m = dual.num_samples
        width = 2.0 ** k
        h = _bump_half_slots(dual, width)
        rel = np.arange(-h, h + 1)
        vals = self.amplitude * profile_samples(rel * dual.spacing / width, self.bump_kind)
        out = np.zeros(m, dtype=np.complex128)
        for n, lam in enumerate(self.system.lambdas):
            j0 = _freq_slot(dual, lam)
            out[(j0 + rel) % m] += self.weights[ik, n] * vals
        return out

    def bump_samples(self, k: int, n: int) -> np.ndarray:
        """Single unweighted bump for scale k around frequency n."""
        self.scale_index(k)
        dual = self.system.grid.dual()
        return canonical_bump(dual, self.system.lambdas[n], 2.0 ** k,
                              self.bump_kind, self.strict_adapted)


def build_family(system: FrequencySystem, weight_mode: str = "ones",
                 bump_kind: str = "cos2", strict_adapted: bool = True,
                 seed: int = 0) -> MultiplierFamily:
    shape = (len(system.scales), system.size)
    if weight_mode == "ones":
        weights = np.ones(shape, dtype=np.complex128)
    elif weight_mode == "random_unimodular":
        rng = np.random.Generator(np.random.Philox(seed))
        weights = np.exp(2j * np.pi * rng.uniform(size=shape))
    else:
        raise ValueError(f"weight mode {weight_mode!r} needs explicit weights")
    return MultiplierFamily(system, weights, bump_kind, strict_adapted, weight_mode)


def family_from_json(source, grid: DyadicGrid) -> MultiplierFamily:
    """Build a family from a spec dict or a path to a JSON file.

    Keys: lambdas (required), weight_mode, bump, strict_adapted, seed, and
    for weight_mode "file" a weights array of [re, im] pairs shaped like
    (num_scales, num_frequencies).
    """
    if isinstance(source, (str, bytes)):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = dict(source)
    system = build_system(data["lambdas"], grid,
                          int(data.get("single_scale_cap_log2", 0)))
    mode = data.get("weight_mode", "ones")
    if mode not in WEIGHT_MODES:
        raise ValueError(f"unknown weight mode {mode!r}")
    bump_kind = data.get("bump", "cos2")
    strict = bool(data.get("strict_adapted", True))
    seed = int(data.get("seed", 0))
    if mode == "file":
        raw = np.asarray(data["weights"], dtype=np.float64)
        if raw.ndim != 3 or raw.shape[2] != 2:
            raise ValueError("file weights must be an array of [re, im] pairs")
        weights = raw[..., 0] + 1j * raw[..., 1]
        return MultiplierFamily(system, weights, bump_kind, strict, mode)
    return build_family(system, mode, bump_kind, strict, seed)


def family_to_json(fam: MultiplierFamily) -> dict:
    data = {
        "lambdas": list(fam.system.lambdas),
        "weight_mode": fam.weight_mode,
        "bump": fam.bump_kind,
        "strict_adapted": fam.strict_adapted,
        "single_scale_cap_log2": fam.system.single_scale_cap_log2,
    }
    if fam.weight_mode == "random_unimodular":
        raise ValueError("seeded weights should be serialized with their seed by the caller")
    if fam.weight_mode not in ("ones",):
        data["weight_mode"] = "file"
        stacked = np.stack([fam.weights.real, fam.weights.imag], axis=-1)
        data["weights"] = stacked.tolist()
    return data


def scale_projection(f: Signal, fam: MultiplierFamily, k: int) -> Signal:
    """Weighted multiplier sum at one scale, applied to f."""
    return fourier_project(f, fam.scale_multiplier(k))


def maximal_projection(f: Signal, fam: MultiplierFamily) -> Signal:
    """Pointwise sup over admissible scales of |scale_projection|."""
    best = np.zeros(f.grid.num_samples)
    for k in fam.system.scales:
        np.maximum(best, np.abs(scale_projection(f, fam, k).values), out=best)
    return Signal(f.grid, best)


def weight_scale_variation(fam: MultiplierFamily, r: float = DEFAULT_ORDER) -> float:
    """Max over frequencies of the variation norm of the weight scale chain."""
    return max(rvar_norm(fam.weights[:, n], r) for n in range(fam.system.size))


def bump_scale_variation(fam: MultiplierFamily, r: float = DEFAULT_ORDER) -> float:
    """Max over frequencies of the variation norm of the bump center values.

    Every bump takes the value amplitude * profile(0) at its own center,
    independent of the scale, so each chain is constant and the variation
    norm reduces to its sup part.
    """
    center = fam.amplitude * float(profile_samples(np.zeros(1), fam.bump_kind)[0])
    chains = np.full((len(fam.system.scales),), center, dtype=np.complex128)
    return rvar_norm(chains, r)


def band_project(f: Signal, fam: MultiplierFamily, n: int) -> Signal:
    """Sharp projection onto the band of radius separation/10 around one frequency.

    With a single frequency the separation is infinite and the band is the
    whole line, so the projection is the identity.
    """
    system = fam.system if isinstance(fam, MultiplierFamily) else fam
    if not 0 <= n < system.size:
        raise ValueError(f"frequency index {n} out of range")
    dual = system.grid.dual()
    m = dual.num_samples
    if math.isinf(system.separation):
        return Signal(f.grid, f.values)
    radius = system.separation / 10
    h = int(math.floor(radius / dual.spacing))
    if h * dual.spacing == radius:
        h -= 1  # strict inequality at the band edge
    mask = np.zeros(m)
    j0 = _freq_slot(dual, system.lambdas[n])
    mask[(j0 + np.arange(-h, h + 1)) % m] = 1.0
    return fourier_project(f, mask)


def sq_function(f: Signal, fam: MultiplierFamily) -> Signal:
    """Pointwise l2 aggregate of all band projections."""
    system = fam.system if isinstance(fam, MultiplierFamily) else fam
    acc = np.zeros(f.grid.num_samples)
    for n in range(system.size):
        acc += np.abs(band_project(f, fam, n).values) ** 2
    return Signal(f.grid, np.sqrt(acc))


def crude_control_field(f: Signal, fam: MultiplierFamily,
                        r: float = DEFAULT_ORDER) -> Signal:
    """sqrt(N) * weight variation * l2 of the maximal functions of the bands.

    Cauchy-Schwarz across frequencies dominates the maximal projection by
    this field, up to the factor-two slack the discrete maximal function
    convention carries.
    """
    system = fam.system
    vstar = weight_scale_variation(fam, r)
    acc = np.zeros(f.grid.num_samples)
    for n in range(system.size):
        acc += np.abs(hl_maximal(band_project(f, fam, n)).values) ** 2
    vals = math.sqrt(system.size) * vstar * np.sqrt(acc)
    return Signal(f.grid, vals)


def dilate_system(system: FrequencySystem, j: int) -> FrequencySystem:
    """Scale frequencies by 2^j and the spatial length by 2^-j together."""
    grid = DyadicGrid(system.grid.length_log2 - j, system.grid.samples_log2)
    lams = tuple(lam * 2.0 ** j for lam in system.lambdas)
    return FrequencySystem(grid, lams, system.single_scale_cap_log2 + j)


def dilate_family(fam: MultiplierFamily, j: int) -> MultiplierFamily:
    """Same weights on the dilated system; scale rows stay aligned."""
    return MultiplierFamily(dilate_system(fam.system, j), fam.weights,
                            fam.bump_kind, fam.strict_adapted, fam.weight_mode)


def normalized_copy(system: FrequencySystem) -> FrequencySystem:
    """Dilated copy with separation exactly 1.

    Only defined when the separation is a finite power of two, which keeps
    the rescaled frequencies on a dyadic grid.
    """
    sep = system.separation
    if math.isinf(sep):
        raise ValueError("single-frequency system has no finite separation")
    mant, exp = math.frexp(sep)
    if mant != 0.5:
        raise ValueError(f"separation {sep} is not a power of two")
    return dilate_system(system, -(exp - 1))
