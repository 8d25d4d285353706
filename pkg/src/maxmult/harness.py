"""Experiment drivers: scaling sweeps, extremal constructions, and audits.

Every driver is deterministic given its seed.  Randomness comes from a
counter-based Philox generator keyed by the pair (seed, hash of a short
label), so trials and sweep points can run in any order without changing
a single draw, and aggregation uses order-independent reductions (max and
median of the finished per-trial list).  Reports serialize with repr
floats in CSV and sorted keys in JSON, which makes identical configs
produce byte-identical outputs.

The four experiments:

* lower-bound sweep: the explicit sign-pattern construction on a flat
  frequency block, best of a fixed number of Khintchine draws per N.
  The ratio should grow like N^(1/p - 1/2).
* upper-bound sweep: separated integer frequencies, canonical bumps,
  unit-variation weights (constant-in-scale sign patterns), maximized
  over random in-band inputs and the adapted block-extremal inputs.  The
  fitted slope is checked one-sidedly against 1/p - 1/r plus slack.
* entropy sweep: maximal exponential sums of normalized coefficient
  paths, checked against the square-root entropy exponent 1/2 - 1/r.
* decomposition audit: random convex tile sets, size decomposition with
  every postcondition recomputed from scratch and all artifacts
  round-tripped through their serialized forms.
"""

import hashlib
import json
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .grid import DyadicGrid, Signal, fourier_project, idft, lp_norm
from .multipliers import (MultiplierFamily, build_system, crude_control_field,
                          maximal_projection, scale_projection)
from .variation import rvar_norm_vec
from .windows import max_exp_sum
from . import tiles as tile_ops

RNG_ALGORITHM = "philox"

LOWER_SIZES = (8, 16, 32, 64, 128, 256)
UPPER_SIZES = (8, 16, 32, 64, 128)
ENTROPY_SIZES = (4, 8, 16, 32, 64, 128, 256)
AUDIT_LAMBDAS = (-2.0, -1.0, 1.0, 2.0)


def subseed_rng(seed: int, label: str) -> np.random.Generator:
    """Philox stream keyed by the run seed and a hashed label.

    The label hash fills the second key word, so streams for different
    labels are independent and reproducible regardless of draw order
    elsewhere.
    """
    digest = hashlib.blake2s(label.encode(), digest_size=8).digest()
    words = np.array([seed % 2 ** 64, int.from_bytes(digest, "big")],
                     dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=words))


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat bundle of every knob the drivers accept.

    Unused fields are ignored by each driver; the config file parser fills
    whichever keys appear and leaves the rest at their defaults.
    """

    experiment: str = "scaling"
    length_log2: int = 9
    samples_log2: int = 18
    sizes: tuple = ()
    p: float = 1.5
    r: float = 2.5
    eps: float = 0.1
    seed: int = 0
    trials: int = 8
    k_scales: int = 16
    tile_count: int = 200
    lambdas: tuple = ()
    weight_mode: str = "ones"
    bump: str = "cos2"
    scale: int | None = None
    rng: str = RNG_ALGORITHM

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def parse_config_file(path: str) -> dict:
    """Flat key=value text; '#' starts a comment, blank lines are skipped.

    Values are coerced in order int, float, comma-list (for the sizes and
    lambdas keys), bare string.
    """
    out: dict = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected key=value, got {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key in ("sizes",):
                out[key] = tuple(int(x) for x in val.split(",") if x.strip())
            elif key in ("lambdas",):
                out[key] = tuple(float(x) for x in val.split(",") if x.strip())
            else:
                out[key] = _coerce(val)
    return out


def _coerce(val: str):
    for cast in (int, float):
        try:
            return cast(val)
        except ValueError:
            pass
    if val.lower() in ("true", "false"):
        return val.lower() == "true"
    return val


@dataclass
class ScalingReport:
    experiment: str
    p: float
    r: float
    seed: int
    sizes: tuple
    values: tuple
    slope: float
    stderr: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = {
            "experiment": self.experiment,
            "p": self.p,
            "r": self.r,
            "rng": RNG_ALGORITHM,
            "seed": self.seed,
            "sizes": list(self.sizes),
            "values": list(self.values),
            "slope": self.slope,
            "stderr": self.stderr,
        }
        data.update(self.extras)
        return data

    def rows(self) -> list:
        return list(zip(self.sizes, self.values))


def fit_slope(points) -> tuple:
    """Least-squares slope of log2(value) against log2(N), with its stderr.

    Two points give an exact line and stderr 0 by convention.
    """
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("need at least two points to fit a slope")
    if any(v <= 0 for _, v in pts):
        raise ValueError("slope fit needs positive values")
    x = np.log2([float(n) for n, _ in pts])
    y = np.log2([float(v) for _, v in pts])
    xc = x - x.mean()
    slope = float(np.dot(xc, y) / np.dot(xc, xc))
    inter = float(y.mean() - slope * x.mean())
    if len(pts) == 2:
        return slope, 0.0
    resid = y - (slope * x + inter)
    var = float(np.dot(resid, resid)) / (len(pts) - 2)
    return slope, math.sqrt(var / float(np.dot(xc, xc)))


def _check_sweep(n_list) -> tuple:
    sizes = tuple(int(n) for n in n_list)
    if len(sizes) < 4:
        raise ValueError("scaling sweeps need at least 4 N-points")
    return sizes


# ---------------------------------------------------------------------------
# Lower-bound sweep


def run_lower_bound(p: float = 1.5, n_list=LOWER_SIZES, trials: int = 32,
                    seed: int = 0, length_log2: int = 6,
                    samples_log2: int = 15) -> ScalingReport:
    """Best-of-trials sign-pattern ratio on the flat block input.

    The input spectrum is the indicator of [0, N) and the multiplier takes
    a random sign on each unit frequency block; for a good draw the ratio
    grows like N^(1/p - 1/2).
    """
    if not 1 < p < 2:
        raise ValueError("lower-bound sweep needs 1 < p < 2")
    sizes = _check_sweep(n_list)
    grid = DyadicGrid(length_log2, samples_log2)
    dual = grid.dual()
    theta = dual.signed_points()
    if max(sizes) > dual.length / 2:
        raise ValueError("largest N does not fit in the frequency band")
    values = []
    fnorms = []
    for n_pts in sizes:
        rng = subseed_rng(seed, f"lower/N={n_pts}")
        support = (theta >= 0) & (theta < n_pts)
        f = idft(Signal(dual, support.astype(np.complex128)))
        fp = lp_norm(f, p)
        fnorms.append(fp)
        best = 0.0
        for _ in range(trials):
            eps = rng.integers(0, 2, size=n_pts) * 2.0 - 1.0
            mult = np.zeros(dual.num_samples)
            blocks = np.floor(theta[support]).astype(int)
            mult[support] = eps[blocks]
            best = max(best, lp_norm(fourier_project(f, mult), p) / fp)
        values.append(best)
    slope, err = fit_slope(zip(sizes, values))
    fslope, _ = fit_slope(zip(sizes, fnorms))
    return ScalingReport("lower_bound", p, math.nan, seed, sizes,
                         tuple(values), slope, err,
                         {"fnorm_slope": fslope, "fnorm_target": 1 - 1 / p,
                          "trials": trials})


# ---------------------------------------------------------------------------
# Upper-bound sweep


def _band_slots(system, theta: np.ndarray) -> np.ndarray:
    """Boolean mask of the frequency slots in the widest admissible bands."""
    width = 2.0 ** system.scales[-1]
    mask = np.zeros(theta.shape, dtype=bool)
    for lam in system.lambdas:
        mask |= np.abs(theta - lam) <= width / 2
    return mask


def run_upper_scaling(p: float = 1.5, r: float = 2.5, n_list=UPPER_SIZES,
                      trials: int = 8, seed: int = 0, length_log2: int = 9,
                      samples_log2: int = 18,
                      verify_chain: bool = False) -> ScalingReport:
    """Empirical maximal-projection ratio over separated integer frequencies.

    Each trial draws a constant-in-scale sign weight pattern (variation
    norm exactly one) and runs it over two inputs: complex Gaussian
    spectrum on the union of the widest bands, and the block-extremal
    spectrum with one random sign per band.  verify_chain additionally
    asserts, per trial, the pointwise chain single-scale <= maximal <=
    crude control field; it is off by default because the crude field
    costs one band projection per frequency.
    """
    if not 1 < p <= 2:
        raise ValueError("upper sweep needs 1 < p <= 2")
    if r <= 2:
        raise ValueError("upper sweep needs r > 2")
    sizes = _check_sweep(n_list)
    grid = DyadicGrid(length_log2, samples_log2)
    dual = grid.dual()
    theta = dual.signed_points()
    values = []
    for n_pts in sizes:
        system = build_system([float(n + 2) for n in range(n_pts)], grid)
        num_scales = len(system.scales)
        band = _band_slots(system, theta)
        idx = np.where(band)[0]
        rng = subseed_rng(seed, f"upper/N={n_pts}")
        best = 0.0
        for _ in range(trials):
            signs = rng.integers(0, 2, size=n_pts) * 2.0 - 1.0
            fam = MultiplierFamily(system, np.tile(signs, (num_scales, 1)))
            gauss = np.zeros(dual.num_samples, dtype=np.complex128)
            gauss[idx] = rng.normal(size=idx.size) + 1j * rng.normal(size=idx.size)
            block = np.zeros(dual.num_samples, dtype=np.complex128)
            eta = rng.integers(0, 2, size=n_pts) * 2.0 - 1.0
            for n, lam in enumerate(system.lambdas):
                sel = np.abs(theta - lam) <= 2.0 ** system.scales[-1] / 2
                block[sel] = eta[n]
            for hat in (gauss, block):
                f = idft(Signal(dual, hat))
                maximal = maximal_projection(f, fam)
                best = max(best, lp_norm(maximal, p) / lp_norm(f, p))
                if verify_chain:
                    single = np.abs(scale_projection(f, fam, system.scales[-1]).values)
                    crude = crude_control_field(f, fam, r).values.real
                    peak = maximal.values.real
                    slack = 1e-12 * max(1.0, float(peak.max()))
                    if not (single <= peak + slack).all():
                        raise AssertionError("single scale exceeded the maximal field")
                    if not (peak <= crude + slack).all():
                        raise AssertionError("maximal field exceeded the crude control")
        values.append(best)
    slope, err = fit_slope(zip(sizes, values))
    return ScalingReport("upper_scaling", p, r, seed, sizes, tuple(values),
                         slope, err,
                         {"slope_bound": 1 / p - 1 / r + 0.15, "trials": trials})


# ---------------------------------------------------------------------------
# Entropy sweep


def _entropy_instances(rng, k_scales: int, n_pts: int, trials: int) -> list:
    """Gaussian, random-walk, and one-hot-path coefficient arrays."""
    out = []
    for _ in range(trials):
        gauss = (rng.normal(size=(k_scales, n_pts))
                 + 1j * rng.normal(size=(k_scales, n_pts)))
        steps = (rng.normal(size=(k_scales, n_pts))
                 + 1j * rng.normal(size=(k_scales, n_pts)))
        walk = np.cumsum(steps, axis=0) / math.sqrt(k_scales)
        path = np.zeros((k_scales, n_pts), dtype=np.complex128)
        col = int(rng.integers(n_pts))
        for row in range(k_scales):
            if rng.uniform() < 0.3:
                col = int(rng.integers(n_pts))
            path[row, col] = 1.0
        out.extend((gauss, walk, path))
    return out


def run_entropy_scaling(r: float = 2.5, n_list=ENTROPY_SIZES,
                        k_scales: int = 16, trials: int = 4,
                        seed: int = 0) -> ScalingReport:
    """Maximal exponential sums of variation-normalized coefficient paths.

    Every instance is scaled to vector variation norm one, so the
    statistic should grow no faster than N^(1/2 - 1/r); the report also
    carries the worst per-instance ratio against that envelope.
    """
    if r <= 2:
        raise ValueError("entropy sweep needs r > 2")
    sizes = _check_sweep(n_list)
    values = []
    worst_ratio = 0.0
    for n_pts in sizes:
        rng = subseed_rng(seed, f"entropy/N={n_pts}")
        lambdas = np.arange(n_pts, dtype=np.float64)
        best = 0.0
        for coeffs in _entropy_instances(rng, k_scales, n_pts, trials):
            norm = rvar_norm_vec(coeffs, r)
            stat = max_exp_sum(coeffs / norm, lambdas)
            best = max(best, stat)
            worst_ratio = max(worst_ratio, stat / n_pts ** (0.5 - 1 / r))
        values.append(best)
    slope, err = fit_slope(zip(sizes, values))
    return ScalingReport("entropy_scaling", math.nan, r, seed, sizes,
                         tuple(values), slope, err,
                         {"slope_bound": 0.5 - 1 / r + 0.15,
                          "max_instance_ratio": worst_ratio,
                          "k_scales": k_scales, "trials": trials})


# ---------------------------------------------------------------------------
# Decomposition audit


def _audit_one(rng, system, tile_count: int) -> dict:
    grid = system.grid
    ts = tile_ops.random_convex_tileset(rng, system, tile_count)
    hat = 0.05 * (rng.normal(size=grid.num_samples)
                  + 1j * rng.normal(size=grid.num_samples))
    f = idft(Signal(grid.dual(), hat))
    decomp = tile_ops.size_decompose(ts.tiles, f, system)
    problems = []
    if decomp.tiles != ts.tiles:
        problems.append("strata do not partition the input")
    fresh = tile_ops.tile_sizes(ts.tiles, f, system)
    worst_bessel = 0.0
    for st in decomp.strata:
        if not st.convex or not tile_ops.check_convex(st.tiles):
            problems.append(f"stratum m={st.m} not convex")
        if not tile_ops.top_rectangles_disjoint(st.forest, system):
            problems.append(f"stratum m={st.m} top rectangles overlap")
        worst_bessel = max(worst_bessel, st.bessel_ratio)
        if st.m is None:
            continue
        if st.threshold != 2.0 ** -(st.m + 1):
            problems.append(f"stratum m={st.m} threshold off the halving grid")
        for tree in st.forest:
            if fresh[tree.top] <= st.threshold:
                problems.append(f"top {tree.top} does not clear its threshold")
        if any(fresh[s] > 2.0 ** -st.m for s in st.tiles):
            problems.append(f"stratum m={st.m} holds a tile above its level")
    round_trip = tile_ops.tileset_from_json(tile_ops.tileset_to_json(ts))
    if round_trip != ts:
        problems.append("tile set JSON round trip changed the set")
    for st in decomp.strata:
        if tile_ops.forest_from_json(tile_ops.forest_to_json(st.forest)) != st.forest:
            problems.append(f"stratum m={st.m} forest JSON round trip failed")
    return {"num_tiles": len(ts.tiles), "num_strata": len(decomp.strata),
            "sigma0": decomp.sigma0, "worst_bessel": worst_bessel,
            "problems": problems}


def run_decomposition_audit(tile_count: int = 200, lambdas=AUDIT_LAMBDAS,
                            trials: int = 50, seed: int = 0,
                            length_log2: int = 11,
                            samples_log2: int = 14) -> dict:
    """Randomized end-to-end audit of the size decomposition.

    Every postcondition is recomputed from scratch (sizes from the raw
    signal, convexity from the raw tile tuples) and every serialized
    artifact is parsed back and compared, so the audit never trusts a
    value the decomposition itself produced.
    """
    grid = DyadicGrid(length_log2, samples_log2)
    system = build_system(lambdas, grid)
    rows = []
    problems = []
    for t in range(trials):
        rng = subseed_rng(seed, f"audit/set={t}")
        row = _audit_one(rng, system, tile_count)
        problems.extend(f"set {t}: {msg}" for msg in row.pop("problems"))
        rows.append(row)
    return {
        "experiment": "decomposition_audit",
        "rng": RNG_ALGORITHM,
        "seed": seed,
        "trials": trials,
        "tile_budget": tile_count,
        "max_tiles": max(r["num_tiles"] for r in rows),
        "worst_bessel": max(r["worst_bessel"] for r in rows),
        "problems": problems,
        "ok": not problems,
        "sets": rows,
    }


# ---------------------------------------------------------------------------
# Output writers


def save_report_csv(report: ScalingReport, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("N,value\n")
        for n_pts, val in report.rows():
            fh.write(f"{n_pts},{val!r}\n")


def save_json(data, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(data, sort_keys=True, indent=1))
        fh.write("\n")
