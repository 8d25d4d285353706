"""The ten go/no-go checks behind the `check` subcommand.

Each criterion function runs standalone and returns a result record; the
suite runner collects criteria one through nine into a summary dict, then
the tenth criterion reruns the whole battery from the same seed and
compares the serialized bytes, so determinism is itself gated.  Timing
budgets are enforced but only the boolean verdict enters the summary
(wall-clock numbers would break the byte comparison).
"""

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .grid import DyadicGrid, Signal, fourier_project, idft, lp_norm
from .multipliers import build_system, canonical_bump
from .variation import (aggregation_norm_ratio, aggregation_seminorm_gap,
                        aggregation_sup_gap, block_split_gap,
                        increment_domination_gap, rvar_norm,
                        rvar_norm_bruteforce, rvar_norm_vec)
from .windows import WindowSystem, windowed_expand
from . import harness
from . import tiles as tile_ops

DEFAULT_SEED = 42
GAP_TOL = 1e-12


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    details: dict

    def to_dict(self) -> dict:
        return {"id": self.cid, "name": self.name, "passed": self.passed,
                "details": self.details}

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
        return f"{verdict} criterion {self.cid} ({self.name}): {parts}"


def criterion_1(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Dynamic-programming variation norms equal exhaustive enumeration."""
    start = time.monotonic()
    rng = harness.subseed_rng(seed, "accept/oracle")
    worst = 0.0
    for trial in range(1000):
        m = int(rng.integers(1, 13))
        r = float(rng.uniform(1.0, 4.0))
        if trial % 2 == 0:
            chain = rng.normal(size=m) + 1j * rng.normal(size=m)
            fast = rvar_norm(chain, r)
        else:
            d = int(rng.integers(1, 4))
            chain = rng.normal(size=(m, d)) + 1j * rng.normal(size=(m, d))
            fast = rvar_norm_vec(chain, r)
        worst = max(worst, abs(fast - rvar_norm_bruteforce(chain, r)))
    elapsed = time.monotonic() - start
    passed = worst <= 1e-12 and elapsed < 10.0
    return CriterionResult(1, "variation_oracle", passed,
                           {"max_abs_gap": worst, "runtime_ok": elapsed < 10.0})


def criterion_2(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Exact variation inequalities on random chains, plus the lossy ratio."""
    rng = harness.subseed_rng(seed, "accept/lemmas")
    worst_gap = 0.0
    worst_ratio = 0.0
    for _ in range(10000):
        m = int(rng.integers(2, 16))
        r = float(rng.uniform(1.0, 4.0))
        chain = rng.normal(size=m) + 1j * rng.normal(size=m)
        cuts = {0, m - 1}
        if m > 2:
            cuts |= set(int(v) for v in rng.integers(1, m - 1, size=2))
        worst_gap = max(worst_gap, -block_split_gap(chain, sorted(cuts), r))
        worst_gap = max(worst_gap, -increment_domination_gap(chain, r))
        rows = int(rng.integers(1, 5))
        comps = rng.normal(size=(rows, m)) + 1j * rng.normal(size=(rows, m))
        r_agg = float(rng.uniform(2.0, 4.0))
        worst_gap = max(worst_gap, -aggregation_seminorm_gap(comps, r_agg))
        worst_gap = max(worst_gap, -aggregation_sup_gap(comps))
        worst_ratio = max(worst_ratio, aggregation_norm_ratio(comps, r_agg))
    passed = worst_gap <= GAP_TOL and worst_ratio <= 4.0
    return CriterionResult(2, "variation_lemmas", passed,
                           {"max_violation": worst_gap,
                            "max_aggregation_ratio": worst_ratio})


def criterion_3(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Windowed expansion reproduces the band multiplier exactly."""
    rng = harness.subseed_rng(seed, "accept/windowed")
    grid = DyadicGrid(8, 13)
    dual = grid.dual()
    worst = 0.0
    for _ in range(100):
        n_freqs = int(rng.integers(1, 7))
        lams = rng.choice(np.arange(-15, 16), size=n_freqs, replace=False)
        system = build_system([float(v) for v in lams], grid)
        wsys = WindowSystem(system)
        hat = rng.normal(size=grid.num_samples) + 1j * rng.normal(size=grid.num_samples)
        f = idft(Signal(dual, hat))
        n = int(rng.integers(system.size))
        k = int(rng.choice(system.scales))
        mult = canonical_bump(dual, system.lambdas[n], 2.0 ** k,
                              wsys.profile, wsys.strict_adapted)
        direct = fourier_project(f, mult)
        expanded = windowed_expand(f, wsys, n, k)
        err = lp_norm(Signal(grid, expanded.values - direct.values), 2)
        ref = lp_norm(direct, 2)
        worst = max(worst, err / ref if ref > 0 else err)
    passed = worst <= 1e-6
    return CriterionResult(3, "windowed_expansion", passed,
                           {"max_rel_l2": worst})


def criterion_4(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Sign-pattern lower-bound growth at p = 1.5."""
    start = time.monotonic()
    rep = harness.run_lower_bound(p=1.5, seed=seed)
    elapsed = time.monotonic() - start
    slope_ok = rep.slope >= 1 / 1.5 - 0.5 - 0.05
    fnorm_ok = abs(rep.extras["fnorm_slope"] - (1 - 1 / 1.5)) <= 0.05
    passed = slope_ok and fnorm_ok and elapsed < 120.0
    return CriterionResult(4, "lower_bound_scaling", passed,
                           {"slope": rep.slope, "slope_floor": 1 / 1.5 - 0.55,
                            "fnorm_slope": rep.extras["fnorm_slope"],
                            "runtime_ok": elapsed < 120.0})


def criterion_5(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Maximal-projection growth stays under the variational exponent."""
    rep = harness.run_upper_scaling(p=1.5, r=2.5, seed=seed)
    control = harness.run_upper_scaling(p=2.0, r=2.5, seed=seed)
    bound = 1 / 1.5 - 1 / 2.5 + 0.15
    control_bound = 0.5 - 1 / 2.5 + 0.15
    passed = rep.slope <= bound and control.slope <= control_bound
    return CriterionResult(5, "upper_bound_scaling", passed,
                           {"slope": rep.slope, "slope_bound": bound,
                            "control_slope": control.slope,
                            "control_bound": control_bound})


def criterion_6(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Maximal exponential sums of normalized paths grow at most like sqrt N."""
    rep = harness.run_entropy_scaling(r=2.5, seed=seed)
    passed = rep.slope <= 0.25 and rep.extras["max_instance_ratio"] <= 8.0
    return CriterionResult(6, "entropy_scaling", passed,
                           {"slope": rep.slope,
                            "max_instance_ratio": rep.extras["max_instance_ratio"]})


def criterion_7(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Greedy size decomposition postconditions over 50 random convex sets."""
    audit = harness.run_decomposition_audit(seed=seed)
    passed = audit["ok"] and math.isfinite(audit["worst_bessel"])
    return CriterionResult(7, "decomposition_audit", passed,
                           {"sets": audit["trials"],
                            "max_tiles": audit["max_tiles"],
                            "worst_bessel": audit["worst_bessel"],
                            "problems": len(audit["problems"])})


def _random_tree_suite(seed: int, count: int = 12) -> list:
    grid = DyadicGrid(11, 14)
    system = build_system(harness.AUDIT_LAMBDAS, grid)
    trees = []
    trial = 0
    while len(trees) < count:
        rng = harness.subseed_rng(seed, f"accept/trees/{trial}")
        trial += 1
        ts = tile_ops.random_convex_tileset(rng, system, 60)
        for tree in tile_ops._threshold_free_cover(ts.tiles):
            if len(tree.tiles) >= 2:
                trees.append((tree, grid))
            if len(trees) == count:
                break
    return trees


def criterion_8(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Flank disjointness plus bounded counting and BMO constants."""
    disjoint = True
    max_count_ratio = 0.0
    max_bmo = 0.0
    for tree, grid in _random_tree_suite(seed):
        csets = tile_ops.counting_sets(tree)
        disjoint = disjoint and tile_ops.flanks_disjoint(csets)
        max_count_ratio = max(max_count_ratio, csets.counting_ratio())
        weight = tile_ops.tree_weight(tree, grid, csets)
        max_bmo = max(max_bmo, tile_ops.dyadic_bmo(weight))
    passed = disjoint and max_count_ratio < 1e3 and max_bmo < 1e3
    return CriterionResult(8, "counting_bmo", passed,
                           {"flanks_disjoint": disjoint,
                            "max_counting_ratio": max_count_ratio,
                            "max_weight_bmo": max_bmo})


def criterion_9(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Pointwise variation bound off the exceptional sets, both thresholds."""
    grid = DyadicGrid(11, 14)
    system = build_system(harness.AUDIT_LAMBDAS, grid)
    wsys = WindowSystem(system)
    rng = harness.subseed_rng(seed, "accept/exceptional")
    ts = tile_ops.random_convex_tileset(rng, system, 200)
    details = {}
    passed = True
    per_unit = int(round(1 / grid.spacing))
    for lam in (0.25, 0.0625):
        mask = np.zeros(grid.num_samples, dtype=bool)
        piece = int(grid.length * lam / 64 / 4 * per_unit)
        for _ in range(4):
            start = int(rng.integers(grid.num_samples - piece))
            mask[start:start + piece] = True
        rep = tile_ops.exceptional_analysis(ts.tiles, mask, lam, 0.1,
                                            system, wsys, 2.5)
        ok = rep.off_max <= rep.off_bound and rep.measure_e <= rep.measure_e_bound
        passed = passed and ok and rep.identity_exact
        key = f"lam_{lam}"
        details[key + "_off_max"] = rep.off_max
        details[key + "_off_bound"] = rep.off_bound
        details[key + "_measure_e"] = rep.measure_e
        details[key + "_identity"] = rep.identity_exact
    return CriterionResult(9, "exceptional_sets", passed, details)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9)


def _summary_core(seed: int) -> dict:
    results = [fn(seed) for fn in CRITERIA]
    return {
        "seed": seed,
        "rng": harness.RNG_ALGORITHM,
        "criteria": [res.to_dict() for res in results],
    }


def summary_json_bytes(summary: dict) -> bytes:
    return (json.dumps(summary, sort_keys=True, indent=1) + "\n").encode()


def run_all(seed: int = DEFAULT_SEED) -> dict:
    """Criteria one through nine, then the byte-level determinism gate.

    The tenth criterion reruns everything from the same seed and compares
    serialized bytes, so its cost equals the rest of the suite.
    """
    summary = _summary_core(seed)
    first = summary_json_bytes(summary)
    second = summary_json_bytes(_summary_core(seed))
    det = CriterionResult(10, "determinism", first == second,
                          {"bytes": len(first), "identical": first == second})
    summary["criteria"].append(det.to_dict())
    summary["all_pass"] = all(c["passed"] for c in summary["criteria"])
    return summary


def summary_lines(summary: dict) -> list:
    lines = []
    for crit in summary["criteria"]:
        verdict = "PASS" if crit["passed"] else "FAIL"
        parts = ", ".join(f"{k}={v}" for k, v in sorted(crit["details"].items()))
        lines.append(f"{verdict} criterion {crit['id']} ({crit['name']}): {parts}")
    return lines
